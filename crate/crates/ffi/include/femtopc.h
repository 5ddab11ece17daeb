#ifndef FEMTOPC_H
#define FEMTOPC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status code returned by every fallible call.
 */
typedef enum FpStatus {
  FP_STATUS_OK = 0,
  FP_STATUS_NULL_POINTER = 1,
  FP_STATUS_INVALID_UTF8 = 2,
  FP_STATUS_INVALID_CONFIG = 3,
  FP_STATUS_SIMULATION = 4,
  FP_STATUS_OUT_OF_RANGE = 5,
  FP_STATUS_DOMAIN = 6,
  FP_STATUS_PANIC = 7,
} FpStatus;

/*
 Femtocell maximum-power policy.
 */
typedef enum FpScheme {
  FP_SCHEME_NO_FEMTO = 0,
  FP_SCHEME_FIXED_CAP = 1,
  FP_SCHEME_OPEN_LOOP = 2,
  FP_SCHEME_CLOSED_LOOP = 3,
} FpScheme;

/*
 User class as reported by [`fp_result_user_class`].
 */
typedef enum FpUserClass {
  FP_USER_CLASS_MACRO = 0,
  FP_USER_CLASS_FEMTO = 1,
} FpUserClass;

/*
 Opaque scenario configuration.
 */
typedef struct FpConfig FpConfig;

/*
 Opaque result of one simulated drop.
 */
typedef struct FpDropResult FpDropResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` (NUL
 terminated, truncated to `len - 1` bytes). Returns the full message
 length in bytes, excluding the terminator.

 # Safety
 `buf` must be null or valid for `len` bytes of writes.
 */
size_t fp_last_error_message(char *buf, size_t len);

/*
 Creates a configuration with every key at its default.

 # Safety
 `out` must be valid for a pointer write.
 */
enum FpStatus fp_config_default(struct FpConfig **out);

/*
 Parses a TOML scenario (flat keys, unknown keys rejected) and validates it.

 # Safety
 `text` must be a NUL-terminated string; `out` valid for a pointer write.
 */
enum FpStatus fp_config_from_toml(const char *text, struct FpConfig **out);

/*
 Sets the power-control scheme of a configuration.

 # Safety
 `cfg` must be a live handle from this library.
 */
enum FpStatus fp_config_set_scheme(struct FpConfig *cfg, enum FpScheme scheme);

/*
 Releases a configuration. Null is ignored.

 # Safety
 `cfg` must be null or a handle not yet freed.
 */
void fp_config_free(struct FpConfig *cfg);

/*
 Simulates one drop of the configured scheme.

 # Safety
 `cfg` must be a live handle; `out` valid for a pointer write.
 */
enum FpStatus fp_run_drop(const struct FpConfig *cfg, uint64_t seed, struct FpDropResult **out);

/*
 Releases a drop result. Null is ignored.

 # Safety
 `res` must be null or a handle not yet freed.
 */
void fp_result_free(struct FpDropResult *res);

/*
 Uplink throughput of the centre macrocell (bit/s).

 # Safety
 `res` must be a live handle; `out` valid for a write.
 */
enum FpStatus fp_result_macro_throughput(const struct FpDropResult *res, double *out);

/*
 Average throughput of the measured femtocells (bit/s); `OUT_OF_RANGE`
 when the drop has no femtocell in the centre cell.

 # Safety
 `res` must be a live handle; `out` valid for a write.
 */
enum FpStatus fp_result_femto_throughput(const struct FpDropResult *res, double *out);

/*
 Number of users in the drop.

 # Safety
 `res` must be a live handle; `out` valid for a write.
 */
enum FpStatus fp_result_user_count(const struct FpDropResult *res, size_t *out);

/*
 Long-run throughput of user `index` (bit/s).

 # Safety
 `res` must be a live handle; `out` valid for a write.
 */
enum FpStatus fp_result_user_throughput(const struct FpDropResult *res, size_t index, double *out);

/*
 Class of user `index`.

 # Safety
 `res` must be a live handle; `out` valid for a write.
 */
enum FpStatus fp_result_user_class(const struct FpDropResult *res,
                                   size_t index,
                                   enum FpUserClass *out);

/*
 Frames in which an open-loop femto user exceeded its interference budget.

 # Safety
 `res` must be a live handle; `out` valid for a write.
 */
enum FpStatus fp_result_open_loop_violations(const struct FpDropResult *res, uint64_t *out);

/*
 Transmissions above the device power limit.

 # Safety
 `res` must be a live handle; `out` valid for a write.
 */
enum FpStatus fp_result_power_violations(const struct FpDropResult *res, uint64_t *out);

/*
 `10^(db / 10)`.
 */
double fp_db_to_linear(double db);

/*
 `10 log10(x)`; `DOMAIN` for non-positive input.

 # Safety
 `out` must be valid for a write.
 */
enum FpStatus fp_linear_to_db(double x, double *out);

/*
 `(t_m0 - t_m) / t_m0`; `DOMAIN` when `t_m0 <= 0`.

 # Safety
 `out` must be valid for a write.
 */
enum FpStatus fp_drmt(double t_m0, double t_m, double *out);

/*
 `t_f / t_f0`; `DOMAIN` when `t_f0 <= 0`.

 # Safety
 `out` must be valid for a write.
 */
enum FpStatus fp_arft(double t_f, double t_f0, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEMTOPC_H */
