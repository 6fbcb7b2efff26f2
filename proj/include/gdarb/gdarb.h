#ifndef GDARB_H
#define GDARB_H

/* C interface to the diffusion arbitrage toolkit. All strings returned
   through char** are heap-allocated and must be released with
   gd_string_free. On failure a function returns a nonzero status and
   gd_last_error() describes the problem (per thread). */

#include <stddef.h>
#include <stdint.h>

#if defined(GDARB_BUILDING)
#define GDARB_API __attribute__((visibility("default")))
#else
#define GDARB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gd_status {
    GD_OK = 0,
    GD_ERR_DOMAIN = 1,
    GD_ERR_QUADRATURE = 2,
    GD_ERR_RANGE = 3,
    GD_ERR_VALIDATION = 4,
    GD_ERR_PARSE = 5,
    GD_ERR_UNKNOWN_MODEL = 6,
    GD_ERR_NUMERIC = 7,
    GD_ERR_INVALID_ARGUMENT = 8,
    GD_ERR_INTERNAL = 9
} gd_status;

typedef enum gd_tri { GD_HOLDS = 0, GD_FAILS = 1, GD_INCONCLUSIVE = 2 } gd_tri;

typedef struct gd_model gd_model;
typedef struct gd_tolerances gd_tolerances;
typedef struct gd_verdict gd_verdict;
typedef struct gd_sim_report gd_sim_report;

typedef struct gd_sim_config {
    int grid;                /* N, target number of cells */
    uint64_t n_paths;
    int levels;              /* refinement ladder depth */
    uint64_t seed;
    uint64_t tradeoff_paths; /* 0 means min(n_paths, 2000) */
    int keep_paths;          /* nonzero keeps per-path rows for CSV output */
} gd_sim_config;

GDARB_API const char* gd_version(void);
GDARB_API const char* gd_last_error(void);
GDARB_API void gd_string_free(char* s);

/* Models */
GDARB_API gd_status gd_model_from_json(const char* json, gd_model** out);
/* params: "k=v,k=v" (may be NULL or empty) */
GDARB_API gd_status gd_model_from_catalog(const char* name, const char* params, gd_model** out);
GDARB_API gd_status gd_model_to_json(const gd_model* m, char** out);
GDARB_API gd_status gd_model_id(const gd_model* m, char** out);
GDARB_API void gd_model_free(gd_model* m);

/* Tolerances */
GDARB_API gd_status gd_tolerances_new(gd_tolerances** out);
GDARB_API gd_status gd_tolerances_set(gd_tolerances* t, const char* key, const char* value);
GDARB_API void gd_tolerances_free(gd_tolerances* t);

/* Classification; tol may be NULL for defaults */
GDARB_API gd_status gd_classify(const gd_model* m, const gd_tolerances* tol, gd_verdict** out);
GDARB_API gd_status gd_verdict_notions(const gd_verdict* v, gd_tri* nip, gd_tri* nsa, gd_tri* nupbr, gd_tri* rp);
GDARB_API gd_status gd_verdict_to_json(const gd_verdict* v, char** out);
GDARB_API void gd_verdict_free(gd_verdict* v);

/* Simulation */
GDARB_API void gd_sim_config_default(gd_sim_config* cfg);
GDARB_API gd_status gd_simulate(const gd_model* m, const gd_sim_config* cfg, gd_sim_report** out);
GDARB_API gd_status gd_sim_report_to_json(const gd_sim_report* r, char** out);
GDARB_API gd_status gd_sim_report_k_ladder_csv(const gd_sim_report* r, char** out);
GDARB_API gd_status gd_sim_report_payoff_histogram_csv(const gd_sim_report* r, char** out);
GDARB_API gd_status gd_sim_report_paths_csv(const gd_sim_report* r, char** out);
GDARB_API void gd_sim_report_free(gd_sim_report* r);

/* Catalog */
GDARB_API gd_status gd_catalog_list_json(char** out);
GDARB_API gd_status gd_catalog_show_json(const char* name, char** out);
GDARB_API gd_status gd_catalog_expected_json(const char* name, const char* params, char** out);

#ifdef __cplusplus
}
#endif

#endif /* GDARB_H */
