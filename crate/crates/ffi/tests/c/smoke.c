#include <math.h>
#include <stdio.h>
#include "gazeforge.h"

static double sphere(const double *x, size_t n, void *user_data) {
    int *calls = (int *)user_data;
    double s = 0.0;
    (*calls)++;
    for (size_t i = 0; i < n; i++) s += (x[i] - 1.0) * (x[i] - 1.0);
    return s;
}

int main(void) {
    double fused = 0.0;
    if (gf_fuse(0.2, 0.8, 0.25, &fused) != GF_STATUS_OK || fabs(fused - 0.65) > 1e-12) return 1;
    if (gf_fuse(0.2, 0.8, 1.5, &fused) != GF_STATUS_INVALID_ARGUMENT) return 2;
    if (gf_last_error_message() == NULL) return 3;

    double x0[2] = {0.0, 0.0}, x[2], f;
    size_t iters;
    int calls = 0;
    if (gf_nelder_mead(sphere, &calls, x0, 2, 500, x, &f, &iters) != GF_STATUS_OK) return 4;
    if (fabs(x[0] - 1.0) > 1e-3 || fabs(x[1] - 1.0) > 1e-3 || calls == 0) return 5;

    GfCohort *cohort = NULL;
    if (gf_cohort_load("/nonexistent/cohort.csv", 250.0, 120000.0, &cohort) != GF_STATUS_IO) return 6;
    if (cohort != NULL) return 7;
    if (gf_cohort_len(NULL, &iters) != GF_STATUS_NULL_POINTER) return 8;
    printf("ok %s\n", gf_version());
    return 0;
}
