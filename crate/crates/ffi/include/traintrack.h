#ifndef TRAINTRACK_H
#define TRAINTRACK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TtStatus {
  TT_STATUS_OK = 0,
  TT_STATUS_NULL_POINTER = 1,
  TT_STATUS_INVALID_UTF8 = 2,
  TT_STATUS_PARSE = 3,
  TT_STATUS_INVALID = 4,
  TT_STATUS_NOT_ADMISSIBLE = 5,
  TT_STATUS_NOT_CARRIED = 6,
  TT_STATUS_ILLEGAL_MOVE = 7,
  TT_STATUS_INDEX_JUMP = 8,
  TT_STATUS_STEP_CAP = 9,
  TT_STATUS_UNSUPPORTED = 10,
  TT_STATUS_PANIC = 11,
} TtStatus;

typedef struct TtGraph TtGraph;

typedef struct TtMorphism TtMorphism;

typedef struct TtTrack TtTrack;

/*
 Message for the last failed call on this thread. Valid until the next
 failing call; never null.
 */
const char *tt_last_error(void);

/*
 Frees a string returned by this library.

 # Safety
 `s` is null or came from this library and was not freed before.
 */
void tt_string_free(char *s);

/*
 Parses and validates a marked graph.

 # Safety
 `json` is a NUL-terminated string; `out` is writable.
 */
enum TtStatus tt_graph_from_json(const char *json, struct TtGraph **out);

/*
 # Safety
 `g` is null or a live handle from [`tt_graph_from_json`].
 */
void tt_graph_free(struct TtGraph *g);

/*
 Geometric and GL index of the tree of `g`.

 # Safety
 `g` is a live handle; `geom` and `gl` are writable.
 */
enum TtStatus tt_graph_tree_index(const struct TtGraph *g, int64_t *geom, int64_t *gl);

/*
 The discrete track (singleton classes and gates) on `g`.

 # Safety
 `g` is a live handle; `out` is writable.
 */
enum TtStatus tt_track_discrete(const struct TtGraph *g, struct TtTrack **out);

/*
 Parses and validates a track.

 # Safety
 `json` is a NUL-terminated string; `out` is writable.
 */
enum TtStatus tt_track_from_json(const char *json, struct TtTrack **out);

/*
 # Safety
 `t` is null or a live track handle.
 */
void tt_track_free(struct TtTrack *t);

/*
 Serializes a track; free the result with [`tt_string_free`].

 # Safety
 `t` is a live handle; `out` is writable.
 */
enum TtStatus tt_track_to_json(const struct TtTrack *t, char **out);

/*
 # Safety
 `t` is a live handle; `height` and `geom` are writable.
 */
enum TtStatus tt_track_index(const struct TtTrack *t, size_t *height, int64_t *geom);

/*
 `Ok` if every vertex has a tripod of legal loops, `NotAdmissible` otherwise.

 # Safety
 `t` is a live handle.
 */
enum TtStatus tt_track_is_admissible(const struct TtTrack *t);

/*
 Applies a move given as JSON, returning the new track.

 # Safety
 `t` is a live handle; `move_json` is a NUL-terminated string; `out` is writable.
 */
enum TtStatus tt_track_apply(const struct TtTrack *t, const char *move_json, struct TtTrack **out);

/*
 Parses and validates a morphism.

 # Safety
 `json` is a NUL-terminated string; `out` is writable.
 */
enum TtStatus tt_morphism_from_json(const char *json, struct TtMorphism **out);

/*
 # Safety
 `f` is null or a live morphism handle.
 */
void tt_morphism_free(struct TtMorphism *f);

/*
 # Safety
 `f` is a live handle; `out` is writable.
 */
enum TtStatus tt_morphism_induced_track(const struct TtMorphism *f, struct TtTrack **out);

/*
 `Ok` if `f` carries `t`, `NotCarried` otherwise.

 # Safety
 `t` and `f` are live handles.
 */
enum TtStatus tt_carries(const struct TtTrack *t, const struct TtMorphism *f);

/*
 Runs the folding process from `t` along `f`. `max_steps == 0` uses the
 default bound. The trace JSON is written to `trace` whatever the outcome;
 the status reports it (`Ok`, `IndexJump` or `StepCap`).

 # Safety
 `t` and `f` are live handles; `trace` is writable.
 */
enum TtStatus tt_run(const struct TtTrack *t,
                     const struct TtMorphism *f,
                     size_t max_steps,
                     char **trace);

/*
 Height of the free factor system with the given ranks in `F_ambient`.

 # Safety
 `ranks` points to `len` values (or is null with `len == 0`); `out` is writable.
 */
enum TtStatus tt_height(const size_t *ranks, size_t len, size_t ambient, size_t *out);

#endif  /* TRAINTRACK_H */
