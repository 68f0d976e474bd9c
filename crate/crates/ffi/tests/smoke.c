/* Compile-and-run smoke test for the generated header. */
#include "hintbid.h"
#include <stdio.h>
#include <string.h>

int main(void) {
    HbStream *stream = NULL;
    HbTrajectory *traj = NULL;
    const char *spec =
        "family = \"sparse\"\n"
        "horizon = 50\n"
        "supports = [0.3, 0.6]\n"
        "hint_noise = 0.01\n"
        "q = \"inf\"\n"
        "seed = 3\n";
    if (hb_stream_generate(spec, &stream) != HB_STATUS_OK) {
        fprintf(stderr, "generate: %s\n", hb_last_error());
        return 1;
    }
    size_t len = 0;
    if (hb_stream_len(stream, &len) != HB_STATUS_OK || len != 50) {
        return 2;
    }
    if (hb_run(stream, "kind = \"bid_hint_only\"", 1, &traj) != HB_STATUS_OK) {
        fprintf(stderr, "run: %s\n", hb_last_error());
        return 3;
    }
    double cum = -1.0;
    if (hb_trajectory_cumulative_reward(traj, &cum) != HB_STATUS_OK || cum < 0.0) {
        return 4;
    }
    double regret = 0.0;
    if (hb_regret(stream, traj, HB_ORACLE_SPARSE, &regret) != HB_STATUS_OK) {
        return 5;
    }
    hb_trajectory_free(traj);
    hb_stream_free(stream);
    printf("ok cum=%f regret=%f\n", cum, regret);
    return 0;
}
