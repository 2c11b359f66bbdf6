/* Solve uniform flow in a straight channel through the C API.
 *
 *   cargo build --release -p nozzleflow-ffi
 *   cc -std=c99 -I crates/ffi/include crates/ffi/examples/demo.c \
 *      target/release/libnozzleflow_ffi.a -lpthread -ldl -lm -o demo
 */
#include <stdio.h>
#include <stdlib.h>

#include "nozzleflow.h"

int main(void) {
    NfProblem problem = {
        .gamma = 1.4,
        .delta0 = 0.0,
        .dim = 2,
        .kind = NF_PROFILE_KIND_TANH_EXPANSION,
        .p1 = 0.5, .p2 = 1.0, .p3 = 1.0,
        .half_length = 4.0,
        .transverse_cells = 8,
        .axial_cells = 64,
    };
    NfSolver *solver = NULL;
    char message[256];
    if (nf_solver_new(&problem, &solver) != NF_STATUS_OK) {
        nf_last_error(message, sizeof message);
        fprintf(stderr, "setup failed: %s\n", message);
        return 1;
    }
    NfSolveSummary summary;
    if (nf_solver_solve(solver, 0.3, &summary) != NF_STATUS_OK) {
        nf_last_error(message, sizeof message);
        fprintf(stderr, "solve failed: %s\n", message);
        nf_solver_free(solver);
        return 1;
    }
    size_t n = 0;
    nf_solver_node_count(solver, &n);
    double *phi = malloc(n * sizeof *phi);
    nf_solver_copy_potential(solver, phi, n);
    printf("nozzleflow %s: %u iterations, Q = %.6f, certified = %d, phi(outlet) = %.6f\n",
           nf_version(), summary.iterations, summary.max_speed, summary.certified, phi[n - 1]);
    free(phi);
    nf_solver_free(solver);
    return summary.certified ? 0 : 2;
}
