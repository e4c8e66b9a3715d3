#include <math.h>
#include <stdio.h>
#include <string.h>

#include "qoco.h"

static double quadratic(const double *x, size_t n, void *user_data) {
    const double *center = user_data;
    double s = 0.0;
    for (size_t i = 0; i < n; i++) {
        s += (x[i] - center[i]) * (x[i] - center[i]);
    }
    return 0.5 * s;
}

#define CHECK(cond)                                                        \
    do {                                                                   \
        if (!(cond)) {                                                     \
            const char *e = qoco_last_error();                             \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,         \
                    e ? e : "no error");                                   \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    CHECK(qoco_version() != NULL && strlen(qoco_version()) > 0);

    double center[2] = {0.3, -0.2};
    double x[2] = {0.5, 0.5};
    double z[2], grad[2];
    uint64_t queries = 0;
    CHECK(qoco_classical_estimate(quadratic, center, x, 2, 0.1, 0.01, 7, z, grad, &queries) == QOCO_STATUS_OK);
    CHECK(queries == 4);
    for (int i = 0; i < 2; i++) {
        CHECK(fabs(grad[i] - (z[i] - center[i])) < 1e-9);
    }

    QocoQuantumEstimator *est = NULL;
    CHECK(qoco_quantum_estimator_new(1.0, 0.1, 0.1, 1u << 20, &est) == QOCO_STATUS_OK);
    QocoParams params;
    CHECK(qoco_quantum_estimate(est, quadratic, center, x, 2, 0.2, 1e-6, 3, z, grad, &params) == QOCO_STATUS_OK);
    CHECK(params.amplitudes == ((uint64_t)1 << (2 * params.b)));
    qoco_quantum_estimator_free(est);

    QocoExperiment *exp = NULL;
    CHECK(qoco_experiment_from_json("{", &exp) == QOCO_STATUS_CONFIG);
    CHECK(qoco_last_error() != NULL);
    const char *json =
        "{\"geometry\": {\"kind\": \"cube\", \"n\": 2, \"lower\": 0.0, \"upper\": 1.0},"
        " \"adversary\": {\"power\": \"oblivious\", \"family\": \"quadratic\", \"params\": {\"curvature\": 0.4}},"
        " \"schedule\": {\"variant\": \"general_classical\", \"G\": 1.0, \"T\": 10, \"delta\": 0.1}}";
    CHECK(qoco_experiment_from_json(json, &exp) == QOCO_STATUS_OK);
    CHECK(qoco_experiment_dim(exp) == 2 && qoco_experiment_horizon(exp) == 10);
    QocoRun *run = NULL;
    CHECK(qoco_experiment_run(exp, 5, &run) == QOCO_STATUS_OK);
    QocoRunSummary s;
    CHECK(qoco_run_summary(run, &s) == QOCO_STATUS_OK);
    CHECK(s.total_queries == 40 && s.rounds == 10 && s.dim == 2);
    double xs[20];
    CHECK(qoco_run_decisions(run, xs, 20) == QOCO_STATUS_OK);
    for (int i = 0; i < 20; i++) {
        CHECK(xs[i] >= 0.0 && xs[i] <= 1.0);
    }
    CHECK(strncmp(qoco_run_transcript_csv(run), "t,", 2) == 0);
    qoco_run_free(run);
    qoco_experiment_free(exp);
    puts("ok");
    return 0;
}
