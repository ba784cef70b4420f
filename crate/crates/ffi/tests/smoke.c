#include <math.h>
#include <stdio.h>
#include "kellygrowth.h"

int main(void) {
    const double mu[2] = {0.079, 0.031};
    const double cov[4] = {0.0396, -0.0093, -0.0093, 0.0152};
    KgParams *p = NULL;
    if (kg_params_from_covariance(2, mu, cov, &p) != KG_STATUS_OK) {
        fprintf(stderr, "%s\n", kg_last_error_message());
        return 1;
    }
    double k[2];
    double s;
    if (kg_full_kelly(p, 0.0, k) != KG_STATUS_OK || kg_sharpe_ratio(p, 0.0, &s) != KG_STATUS_OK) {
        return 2;
    }
    printf("%.17g %.17g %.17g\n", k[0], k[1], s);

    const double bad[4] = {1.0, 2.0, 2.0, 1.0};
    KgParams *q = NULL;
    KgStatus st = kg_params_from_covariance(2, mu, bad, &q);
    if (st == KG_STATUS_OK || q != NULL || kg_last_error_message()[0] == '\0') {
        return 3;
    }
    kg_params_free(p);
    return 0;
}
