#include <stdio.h>
#include <string.h>
#include "mctsurv.h"

int main(void) {
    double times[] = {1.0, 3.0, 2.0, 4.0, 2.5, 5.0};
    int32_t status[] = {1, 1, 1, 1, 1, 0};
    uint32_t groups[] = {1, 1, 2, 2, 3, 3};
    MctSample *sample = NULL;
    if (mct_sample_new(times, status, groups, 6, &sample) != MCT_STATUS_OK) {
        fprintf(stderr, "%s\n", mct_last_error_message());
        return 1;
    }
    MctConfig cfg = mct_config_default();
    cfg.mc_samples = 5000;
    MctReport *report = NULL;
    if (mct_run_test(sample, MCT_METHOD_MAX_WEIGHTED_LR, "tukey", NULL, cfg, &report) != MCT_STATUS_OK) {
        fprintf(stderr, "%s\n", mct_last_error_message());
        return 1;
    }
    size_t n = mct_report_num_contrasts(report);
    for (size_t i = 0; i < n; i++) {
        MctContrastResult c;
        mct_report_contrast(report, i, &c);
        printf("%zu-%zu %.6f %.4f %d\n", c.second, c.first, c.statistic, c.p_adjusted, c.rejected);
    }
    char *json = mct_report_to_json(report);
    int ok = json != NULL && strstr(json, "maxwlr") != NULL;
    mct_string_free(json);
    mct_report_free(report);
    mct_sample_free(sample);
    if (mct_run_test(NULL, MCT_METHOD_LOG_RANK, NULL, NULL, cfg, &report) != MCT_STATUS_NULL_POINTER) return 1;
    return (ok && n == 3) ? 0 : 1;
}
