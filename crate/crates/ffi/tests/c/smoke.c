#include <math.h>
#include <stdio.h>
#include <string.h>

#include "copydraw.h"

#define CHECK(cond)                                                  \
    do {                                                             \
        if (!(cond)) {                                               \
            fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
            return 1;                                                \
        }                                                            \
    } while (0)

int main(int argc, char **argv) {
    double template_xy[40];
    double trace_xy[20];
    for (int i = 0; i < 20; i++) {
        template_xy[2 * i] = i;
        template_xy[2 * i + 1] = 0.0;
    }
    for (int i = 0; i < 10; i++) {
        trace_xy[2 * i] = i;
        trace_xy[2 * i + 1] = 1.0;
    }
    CdTaskPerformance perf;
    CHECK(cd_task_performance(trace_xy, 10, template_xy, 20, &perf) == CD_STATUS_OK);
    CHECK(perf.n_matched == 10);
    CHECK(fabs(perf.value - 0.5) < 1e-9);

    CHECK(cd_task_performance(NULL, 10, template_xy, 20, &perf) == CD_STATUS_NULL_POINTER);
    CHECK(cd_last_error_message() != NULL);

    CdSession *session = NULL;
    CHECK(cd_session_load("/nonexistent/session.json", &session) == CD_STATUS_VALIDATION);
    CHECK(session == NULL);

    if (argc > 1) {
        CHECK(cd_session_load(argv[1], &session) == CD_STATUS_OK);
        size_t blocks = 0, trials = 0, written = 0;
        CHECK(cd_session_counts(session, &blocks, &trials) == CD_STATUS_OK);
        CHECK(cd_copydraw_scores(session, CD_FEATURE_SET_STANDARD, NULL, 0, &written) == CD_STATUS_OK);
        CHECK(written == trials);
        double scores[1024];
        CHECK(trials <= 1024);
        CHECK(cd_copydraw_scores(session, CD_FEATURE_SET_STANDARD, scores, 1024, &written) == CD_STATUS_OK);
        printf("blocks=%zu trials=%zu first_score=%.6f\n", blocks, trials, scores[0]);
        cd_session_free(session);
    }
    printf("version %s ok\n", cd_version());
    return 0;
}
