/* Minimal C consumer of the polidna ABI.
 *
 * Build (from the repository root, after `cargo build --release`):
 *   cc examples/demo.c -Icrates/ffi/include \
 *      -Ltarget/release -lpolidna_ffi -lm -o demo
 *   LD_LIBRARY_PATH=target/release ./demo votes.csv voters.csv bills.csv
 */
#include <stdio.h>
#include <stdlib.h>

#include "polidna.h"

static void die(const char *what) {
    char msg[256];
    pdna_last_error(msg, sizeof msg);
    fprintf(stderr, "%s: %s\n", what, msg);
    exit(1);
}

int main(int argc, char **argv) {
    if (argc != 4) {
        fprintf(stderr, "usage: %s votes.csv voters.csv bills.csv\n", argv[0]);
        return 2;
    }

    PdnaDataset *dataset = NULL;
    if (pdna_dataset_load_csv(argv[1], argv[2], argv[3], &dataset) != PDNA_STATUS_OK)
        die("load");

    PdnaResult *result = NULL;
    if (pdna_analyze(dataset, PDNA_METHOD_PCA, 2, 0, 0, PDNA_LAMBDA_AUTO, 0.0, false,
                     &result) != PDNA_STATUS_OK)
        die("analyze");

    size_t voters = pdna_result_n_voters(result);
    size_t groups = pdna_result_n_groups(result);
    printf("voters=%zu groups=%zu E-Var=%.4f\n", voters, groups,
           pdna_result_expressed_variance(result));

    double *probs = malloc(groups * sizeof *probs);
    char name[64];
    for (size_t v = 0; v < voters && v < 5; v++) {
        pdna_result_voter_id(result, v, name, sizeof name);
        pdna_result_affinity(result, v, probs, groups);
        printf("%s:", name);
        for (size_t g = 0; g < groups; g++)
            printf(" %.3f", probs[g]);
        printf("\n");
    }

    free(probs);
    pdna_result_free(result);
    pdna_dataset_free(dataset);
    return 0;
}
