#ifndef BCR_H
#define BCR_H

/*
 * C interface to the Bayesian-control-rule simulation library.
 *
 * Conventions:
 *  - Every fallible call returns a bcr_code; BCR_OK is 0.
 *  - On failure, bcr_last_error() returns a thread-local description of the
 *    most recent error on the calling thread.
 *  - Functions returning char* hand ownership to the caller; release the
 *    buffer with bcr_string_free(). They return NULL on failure.
 *  - Handles are opaque; destroy functions accept NULL.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bcr_code {
    BCR_OK = 0,
    BCR_ERR_INVALID_ARGUMENT = 1,
    BCR_ERR_PARSE = 2,
    BCR_ERR_IO = 3,
    BCR_ERR_MODEL_CLASS_EXHAUSTED = 4,
    BCR_ERR_RUNTIME = 5
} bcr_code;

const char* bcr_version(void);
const char* bcr_last_error(void);
void bcr_string_free(char* s);

/* ------------------------------------------------------------------------- */
/* Experiments: kind is "bandit", "gridworld", "exp_gap", or "converge";     */
/* config_json is a JSON object (may be "{}" for defaults). If the config    */
/* contains "out_dir", running the experiment writes CSV/SVG/JSON artifacts  */
/* there.                                                                    */
/* ------------------------------------------------------------------------- */

typedef struct bcr_experiment bcr_experiment;

bcr_code bcr_experiment_create(const char* kind, const char* config_json,
                               bcr_experiment** out);
bcr_code bcr_experiment_run(bcr_experiment* experiment);
/* Available after a successful run. */
char* bcr_experiment_summary_json(bcr_experiment* experiment);
char* bcr_experiment_metrics_csv(bcr_experiment* experiment);
void bcr_experiment_destroy(bcr_experiment* experiment);

/* ------------------------------------------------------------------------- */
/* Stand-alone bandit agent. policy is "bcr" (posterior sampling),           */
/* "egreedy", or "gittins". options_json may be NULL or "{}"; recognised     */
/* keys: epsilon, epsilon_decay, gittins_horizon, gittins_discount,          */
/* gittins_tolerance, gittins_cache_dir.                                     */
/* ------------------------------------------------------------------------- */

typedef struct bcr_bandit_agent bcr_bandit_agent;

bcr_code bcr_bandit_agent_create(const char* policy, int levers, uint64_t seed,
                                 const char* options_json, bcr_bandit_agent** out);
bcr_code bcr_bandit_agent_act(bcr_bandit_agent* agent, int* lever_out);
/* reward must be 0 or 1. */
bcr_code bcr_bandit_agent_update(bcr_bandit_agent* agent, int lever, int reward);
void bcr_bandit_agent_destroy(bcr_bandit_agent* agent);

/* ------------------------------------------------------------------------- */
/* Gittins index table. Build computes (or loads from cache_dir when it      */
/* holds a matching file) the triangular index table for the given horizon,  */
/* discount, and bisection tolerance. Pass cache_dir = NULL or "" to skip    */
/* caching.                                                                  */
/* ------------------------------------------------------------------------- */

typedef struct bcr_gittins_table bcr_gittins_table;

bcr_code bcr_gittins_table_build(int horizon, double discount, double tolerance,
                                 const char* cache_dir, bcr_gittins_table** out);
bcr_code bcr_gittins_table_index(const bcr_gittins_table* table, int successes,
                                 int failures, double* index_out);
bcr_code bcr_gittins_table_save(const bcr_gittins_table* table, const char* path);
void bcr_gittins_table_destroy(bcr_gittins_table* table);

/* ------------------------------------------------------------------------- */
/* Grid-world simulator over a map text (see the map format in the README).  */
/* Actions: 0 = north, 1 = east, 2 = south, 3 = west.                        */
/* ------------------------------------------------------------------------- */

typedef struct bcr_gridworld bcr_gridworld;

bcr_code bcr_gridworld_create(const char* map_text, uint64_t seed,
                              bcr_gridworld** out);
bcr_code bcr_gridworld_size(const bcr_gridworld* sim, int* width_out,
                            int* height_out);
bcr_code bcr_gridworld_state(const bcr_gridworld* sim, int* cell_out);
bcr_code bcr_gridworld_step(bcr_gridworld* sim, int action, double* reward_out,
                            int* next_cell_out);
void bcr_gridworld_destroy(bcr_gridworld* sim);

#ifdef __cplusplus
}
#endif

#endif /* BCR_H */
