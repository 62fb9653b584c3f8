/* Build: cargo build -p interf-ffi --release
 *        cc crates/ffi/examples/smoke.c -Icrates/ffi/include target/release/libinterf_ffi.a -lm -lpthread -ldl -o smoke */
#include <stdio.h>
#include "interf.h"

int main(void) {
    InterfMatrix *u = NULL, *back = NULL;
    InterfPlan *plan = NULL;
    if (interf_haar_unitary(4, 7, &u) != INTERF_STATUS_OK) return 1;
    InterfStatus s = interf_decompose(u, 2, 2, 1e-9, &plan);
    if (s != INTERF_STATUS_OK) {
        fprintf(stderr, "%s: %s\n", interf_status_name(s), interf_last_error());
        return 1;
    }
    size_t n = 0;
    interf_plan_len(plan, &n);
    interf_reconstruct(plan, &back);
    double re, im;
    interf_permanent(back, &re, &im);
    printf("elements=%zu per=%.6f%+.6fi\n", n, re, im);
    interf_plan_free(plan);
    interf_matrix_free(u);
    interf_matrix_free(back);
    return 0;
}
