#include <stdio.h>
#include "omc.h"

int main(void) {
    OmcCavity *c = NULL;
    if (omc_cavity_new(193.1e12, 5.365e9, 1.41e9, 600e6, 6.32e6, 0.5e6, &c) != OMC_STATUS_OK) {
        fprintf(stderr, "%s\n", omc_last_error_message());
        return 1;
    }
    double c0 = 0.0, n = 0.0, p = 0.0;
    omc_cavity_cooperativity(c, &c0);
    omc_cavity_lasing_threshold(c, 1550e-9, &n, &p);
    printf("C0 = %.4e, threshold = %.4e photons (%.4e W)\n", c0, n, p);
    omc_cavity_free(c);
    return 0;
}
