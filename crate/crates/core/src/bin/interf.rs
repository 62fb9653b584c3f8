//! The `interf` command-line tool; see `interf --help`.

fn main() {
    std::process::exit(interf::cli::run(std::env::args_os()));
}
