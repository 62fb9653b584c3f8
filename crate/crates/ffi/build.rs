//! Generates `include/interf.h` from the crate's `extern "C"` items.

fn main() {
    let dir = std::env::var("CARGO_MANIFEST_DIR").expect("set by cargo");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(format!("{dir}/cbindgen.toml")).expect("valid cbindgen.toml");
    match cbindgen::generate_with_config(&dir, config) {
        Ok(bindings) => {
            bindings.write_to_file(format!("{dir}/include/interf.h"));
        }
        // Keep building (e.g. on toolchains cbindgen cannot parse) with the checked-in header.
        Err(e) => println!("cargo:warning=cbindgen failed, keeping existing header: {e}"),
    }
}
