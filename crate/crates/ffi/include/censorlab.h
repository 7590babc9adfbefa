#ifndef CENSORLAB_H
#define CENSORLAB_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CENSORLAB_FLAG_ZERO_NUMERATOR 1

#define CENSORLAB_FLAG_ZERO_DENOMINATOR 2

#define CENSORLAB_FLAG_MISSING_DATA 4

typedef enum CensorlabStatus {
  CENSORLAB_STATUS_OK = 0,
  CENSORLAB_STATUS_NULL_POINTER = 1,
  CENSORLAB_STATUS_INVALID_UTF8 = 2,
  CENSORLAB_STATUS_INVALID_ARGUMENT = 3,
  CENSORLAB_STATUS_UNMAPPABLE = 4,
  CENSORLAB_STATUS_ZERO_OBSERVATIONS = 5,
  CENSORLAB_STATUS_NOT_FOUND = 6,
  CENSORLAB_STATUS_IO = 7,
  CENSORLAB_STATUS_PARSE = 8,
  CENSORLAB_STATUS_PANIC = 99,
} CensorlabStatus;

typedef enum CensorlabEncoding {
  CENSORLAB_ENCODING_UTF8 = 0,
  CENSORLAB_ENCODING_GB18030 = 1,
  CENSORLAB_ENCODING_GB2312 = 2,
} CensorlabEncoding;

typedef enum CensorlabBand {
  CENSORLAB_BAND_LOW_TAIL = 0,
  CENSORLAB_BAND_UNREMARKABLE = 1,
  CENSORLAB_BAND_HIGH_TAIL = 2,
} CensorlabBand;

/**
 * One parsed result page.
 */
typedef struct CensorlabParsed CensorlabParsed;

/**
 * An engine profile.
 */
typedef struct CensorlabProfile CensorlabProfile;

/**
 * A stored run: manifest plus records.
 */
typedef struct CensorlabRun CensorlabRun;

/**
 * A hit ratio; `ratio` is meaningful only when `has_ratio` is set.
 */
typedef struct CensorlabRatio {
  bool has_ratio;
  double ratio;
  /**
   * Bitwise OR of the `CENSORLAB_FLAG_*` constants.
   */
  uint32_t flags;
} CensorlabRatio;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on this thread.
 */
const char *censorlab_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 */
void censorlab_string_free(char *s);

/**
 * Frees a byte buffer returned by [`censorlab_transcode`].
 */
void censorlab_bytes_free(uint8_t *bytes, size_t len);

/**
 * Encodes NFC-normalized `text` in `encoding`. Fails with `Unmappable` when
 * a character has no representation.
 */
enum CensorlabStatus censorlab_transcode(const char *text,
                                         enum CensorlabEncoding encoding,
                                         uint8_t **out_bytes,
                                         size_t *out_len);

/**
 * Looks up a built-in profile by engine id, e.g. `"baidu.com"`.
 */
enum CensorlabStatus censorlab_profile_builtin(const char *name, struct CensorlabProfile **out);

/**
 * Loads a profile from a TOML file.
 */
enum CensorlabStatus censorlab_profile_load(const char *path, struct CensorlabProfile **out);

void censorlab_profile_free(struct CensorlabProfile *profile);

/**
 * Parses a raw result page fetched with `profile`. `page` is 1-based.
 */
enum CensorlabStatus censorlab_parse_response(const struct CensorlabProfile *profile,
                                              const uint8_t *body,
                                              size_t len,
                                              uint32_t page,
                                              struct CensorlabParsed **out);

void censorlab_parsed_free(struct CensorlabParsed *parsed);

/**
 * Stores the page's hit count in `out_count` and sets `out_has` when one was found.
 */
enum CensorlabStatus censorlab_parsed_hit_count(const struct CensorlabParsed *parsed,
                                                bool *out_has,
                                                uint64_t *out_count);

enum CensorlabStatus censorlab_parsed_banner(const struct CensorlabParsed *parsed, bool *out);

enum CensorlabStatus censorlab_parsed_entry_count(const struct CensorlabParsed *parsed,
                                                  size_t *out);

/**
 * Registrable domain of entry `index`; free with [`censorlab_string_free`].
 */
enum CensorlabStatus censorlab_parsed_entry_domain(const struct CensorlabParsed *parsed,
                                                   size_t index,
                                                   char **out);

/**
 * Whether decoded page text carries one of the profile's banner needles.
 */
enum CensorlabStatus censorlab_detect_banner(const struct CensorlabProfile *profile,
                                             const char *text,
                                             bool *out);

/**
 * `numerator / denominator`; pass `has_* = false` for an absent count.
 */
struct CensorlabRatio censorlab_hit_ratio(bool has_numerator,
                                          uint64_t numerator,
                                          bool has_denominator,
                                          uint64_t denominator);

enum CensorlabBand censorlab_band_classify(double median, double low, double high);

/**
 * `trigger / observation` rounded to two decimals.
 */
enum CensorlabStatus censorlab_banner_trigger_ratio(uint32_t trigger,
                                                    uint32_t observation,
                                                    double *out);

/**
 * Loads run `run_id` from the store rooted at `store_root`.
 */
enum CensorlabStatus censorlab_run_load(const char *store_root,
                                        const char *run_id,
                                        struct CensorlabRun **out);

void censorlab_run_free(struct CensorlabRun *run);

enum CensorlabStatus censorlab_run_record_count(const struct CensorlabRun *run, size_t *out);

/**
 * The run manifest as JSON; free with [`censorlab_string_free`].
 */
enum CensorlabStatus censorlab_run_manifest_json(const struct CensorlabRun *run, char **out);

/**
 * Record `index` as one JSON line; free with [`censorlab_string_free`].
 */
enum CensorlabStatus censorlab_run_record_json(const struct CensorlabRun *run,
                                               size_t index,
                                               char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CENSORLAB_H */
