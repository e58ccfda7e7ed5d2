#ifndef TRACECERT_H
#define TRACECERT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_REJECTED = 1,
  TC_STATUS_FORMAT_ERROR = 2,
  TC_STATUS_GUIDANCE_OR_BUDGET = 3,
  TC_STATUS_INVALID_ARGUMENT = 4,
  TC_STATUS_PANIC = 5,
} TcStatus;

typedef enum TcVerdict {
  TC_VERDICT_ACCEPTED = 0,
  TC_VERDICT_REJECTED = 1,
  TC_VERDICT_BUDGET_EXHAUSTED = 2,
  TC_VERDICT_GUIDANCE_ERROR = 3,
} TcVerdict;

/**
 * A parsed DIMACS problem.
 */
typedef struct TcCnf TcCnf;

/**
 * A parsed trace with every `*` chain resolved.
 */
typedef struct TcTrace TcTrace;

typedef struct TcReport {
  enum TcVerdict verdict;
  uint64_t nodes_visited;
  uint64_t max_depth;
  uint64_t backtracks;
  uint64_t indexed_backtracks;
} TcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *tc_last_error_message(void);

/**
 * Parses a trace and resolves its `*` chains.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TcStatus tc_trace_parse(const char *text, struct TcTrace **out);

/**
 * # Safety
 * `trace` must come from this library and not have been freed; null is ignored.
 */
void tc_trace_free(struct TcTrace *trace);

/**
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TcStatus tc_cnf_parse(const char *text, struct TcCnf **out);

/**
 * # Safety
 * `cnf` must come from this library and not have been freed; null is ignored.
 */
void tc_cnf_free(struct TcCnf *cnf);

/**
 * `Ok` when the trace's original clauses are exactly the CNF's clauses.
 *
 * # Safety
 * Both handles must be live.
 */
enum TcStatus tc_validate(const struct TcTrace *trace, const struct TcCnf *cnf);

/**
 * Checks a trace. `budget` of zero means unlimited. The report is filled
 * whenever the kernel ran, including on rejection.
 *
 * # Safety
 * `trace` must be live and `report` writable.
 */
enum TcStatus tc_check(const struct TcTrace *trace,
                       bool strict,
                       uint64_t budget,
                       struct TcReport *report);

/**
 * Produces a copy of the trace whose antecedent lists the strict checker
 * accepts.
 *
 * # Safety
 * `trace` must be live and `out` writable.
 */
enum TcStatus tc_reorder(const struct TcTrace *trace, struct TcTrace **out);

/**
 * The trace in Trace format, one chain per line. Free with
 * [`tc_string_free`]. Null on failure.
 *
 * # Safety
 * `trace` must be live.
 */
char *tc_trace_to_string(const struct TcTrace *trace);

/**
 * # Safety
 * `s` must come from [`tc_trace_to_string`] and not have been freed; null is ignored.
 */
void tc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRACECERT_H */
