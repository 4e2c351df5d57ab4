#ifndef EPINN_EPINN_C_H
#define EPINN_EPINN_C_H

/* C interface to the uncertainty-aware PINN experiment runner.
 *
 * All functions return a status code; on failure epinn_last_error() holds a
 * human-readable message for the calling thread. Strings returned through
 * out-parameters are heap-allocated JSON documents owned by the caller and
 * must be released with epinn_free_string().
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum epinn_status {
    EPINN_OK = 0,
    EPINN_ERR_INVALID_ARGUMENT = 1,
    EPINN_ERR_CONFIG = 2,
    EPINN_ERR_USAGE = 3,
    EPINN_ERR_DIVERGED = 4,
    EPINN_ERR_IO = 5,
    EPINN_ERR_INTERNAL = 6
} epinn_status;

/* An experiment configuration: a JSON document whose keys mirror the config
 * file schema (problem, method, rho, schedule fields, hmc block, seed,
 * out_dir, optional sweep block). */
typedef struct epinn_config epinn_config;

/* Creates an empty configuration (all defaults apply at run time). */
epinn_status epinn_config_create(epinn_config** out);

/* Loads a configuration from a JSON file. */
epinn_status epinn_config_load(const char* path, epinn_config** out);

/* Applies one override. The key may be dotted to reach nested blocks
 * (e.g. "hmc.eps", "sweep.axis"); the value is parsed as a JSON literal when
 * possible and treated as a string otherwise. Overrides apply in call order;
 * the "scale" key re-pins the schedule fields before explicit keys are read. */
epinn_status epinn_config_set(epinn_config* cfg, const char* key, const char* value);

/* Serializes the normalized full configuration (every field present). */
epinn_status epinn_config_serialize(const epinn_config* cfg, char** json_out);

void epinn_config_destroy(epinn_config* cfg);

/* Executes one experiment. record_json_out receives the run record (status,
 * metrics, emitted files) even when the run diverges, in which case the
 * return value is EPINN_ERR_DIVERGED and the record's status is "failed". */
epinn_status epinn_run(const epinn_config* cfg, char** record_json_out);

/* Executes a sweep described by the config's sweep block. Individual run
 * failures are recorded in the aggregate and do not abort the sweep;
 * records_json_out receives {"aggregate_csv", "any_failed", "records"}. */
epinn_status epinn_sweep(const epinn_config* cfg, char** records_json_out);

/* Merges completed run directories into a consolidated table plus band
 * files under out_dir. */
epinn_status epinn_report(const char* const* run_dirs, size_t n_dirs, const char* out_dir,
                          char** report_json_out);

/* Runs the built-in invariant/oracle suite; when run_dir is non-NULL the
 * directory's artifacts are validated as well. results_json_out receives an
 * array of {"name", "pass", "detail"}. A failing check is reported in the
 * results, not as an error status. */
epinn_status epinn_check(const char* run_dir, char** results_json_out);

/* Message for the calling thread's most recent failure ("" when none). */
const char* epinn_last_error(void);

void epinn_free_string(char* s);

#ifdef __cplusplus
}
#endif

#endif /* EPINN_EPINN_C_H */
