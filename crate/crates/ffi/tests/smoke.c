/* Links against libegue_strengths_ffi and exercises the documented ABI:
 * handle lifecycle, status codes, and agreement between the closed-form
 * and Wick-contraction routes through the C surface. */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "egue_strengths.h"

static int check(int cond, const char *what) {
    if (!cond) {
        fprintf(stderr, "FAIL: %s\n", what);
        return 1;
    }
    return 0;
}

int main(void) {
    int bad = 0;

    EgueParams *params = NULL;
    bad += check(egue_params_new(6, 3, 2, 1, 1.0, 1.0, &params) == EGUE_STATUS_OK,
                 "params_new succeeds");
    bad += check(params != NULL, "handle is set");

    EgueMoments mm;
    bad += check(egue_exact_moments(params, 0, &mm) == EGUE_STATUS_OK, "exact moments");
    bad += check(mm.m00 == 3.0, "M00 = C(3,1) at unit couplings");

    double wick = 0.0;
    bad += check(egue_wick_moment(params, 0, 1, 1, &wick) == EGUE_STATUS_OK, "wick M11");
    bad += check(fabs(wick - mm.m11) <= 1e-10 * fabs(mm.m11), "routes agree");

    EgueCumulants asymp;
    bad += check(egue_asymp_cumulants(10, 2, 1, &asymp) == EGUE_STATUS_OK, "asymp");
    bad += check(fabs(asymp.xi - 0.894427) < 1e-5, "asymptotic correlation");

    bad += check(egue_exact_moments(NULL, 0, &mm) == EGUE_STATUS_NULL_POINTER,
                 "null handle detected");
    bad += check(egue_exact_moments(params, 9, &mm) == EGUE_STATUS_INVALID,
                 "bad mode flag detected");
    bad += check(strcmp(egue_error_message(EGUE_STATUS_OK), "ok") == 0, "status string");

    egue_params_free(params);
    egue_params_free(NULL); /* documented no-op */

    if (bad) return 1;
    puts("c smoke: ok");
    return 0;
}
