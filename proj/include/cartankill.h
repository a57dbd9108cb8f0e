#ifndef CARTANKILL_H
#define CARTANKILL_H

/* C interface to the cartan-kill core. All strings returned through out
 * parameters are heap-allocated; release them with ck_string_free. Entry
 * points return CK_OK on success; on failure *err (when non-NULL) receives
 * a message and the other out parameters are left untouched. */

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ck_geometry ck_geometry;

enum ck_status {
  CK_OK = 0,
  CK_ERR_INVALID = 2, /* bad input: unknown geometry, malformed config... */
  CK_ERR_NUMERIC = 3  /* solver failure: domain exit, divergence, rank... */
};

const char* ck_version(void);

/* Builtin geometries: flat2, sphere2, hyperbolic2, revolution[:f],
 * bump[:eps], klein:{r2,se2,so3,heis3,sl2}. NULL on failure. */
ck_geometry* ck_geometry_builtin(const char* name, char** err);

/* Geometry from a metric description (same JSON schema as the metric
 * files accepted by the CLI). NULL on failure. */
ck_geometry* ck_geometry_from_metric_json(const char* text, char** err);

void ck_geometry_free(ck_geometry* g);

/* Base dimension and full bundle dimension of the chart. */
int ck_geometry_base_dim(const ck_geometry* g);
int ck_geometry_dim(const ck_geometry* g);

/* Killing generators / stabilization / integration report at a point. */
int ck_run_killing(const ck_geometry* g, const char* config_json,
                   char** out_json, char** err);

/* Grid scan of the local-symmetry dimension; out_csv may be NULL. */
int ck_run_strata(const ck_geometry* g, const char* config_json,
                  char** out_json, char** out_csv, char** err);

/* Symbolic BCH table and/or the numeric check; g may be NULL for the
 * purely symbolic table. */
int ck_run_bch(const ck_geometry* g, const char* config_json,
               char** out_json, char** err);

/* Self-check battery on a geometry. */
int ck_run_verify(const ck_geometry* g, const char* config_json,
                  char** out_json, char** err);

void ck_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CARTANKILL_H */
