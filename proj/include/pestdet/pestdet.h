/* pestdet C interface.
 *
 * Objects are opaque handles released with their *_free function. Every call
 * returns a pd_status; on failure pd_last_error() holds a message for the
 * calling thread. Strings handed out through char** belong to the caller and
 * are released with pd_string_free.
 */
#ifndef PESTDET_H
#define PESTDET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PD_API __declspec(dllexport)
#else
#define PD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pd_status {
    PD_OK = 0,
    PD_ERR_INVALID_ARGUMENT = 1,
    PD_ERR_IO = 2,
    PD_ERR_MALFORMED_HEADER = 3,
    PD_ERR_MAXVAL_UNSUPPORTED = 4,
    PD_ERR_TRUNCATED_DATA = 5,
    PD_ERR_OUT_OF_BOUNDS = 6,
    PD_ERR_OVERFLOW = 7,
    PD_ERR_SCHEMA_VIOLATION = 8,
    PD_ERR_MISSING_FIELD = 9,
    PD_ERR_RECT_OUT_OF_WINDOW = 10,
    PD_ERR_EMPTY_STAGE = 11,
    PD_ERR_EMPTY_CASCADE = 12,
    PD_ERR_SHAPE_MISMATCH = 13,
    PD_ERR_GRAPH_CYCLE = 14,
    PD_ERR_UNKNOWN_OP = 15,
    PD_ERR_UNKNOWN_TENSOR = 16,
    PD_ERR_UNKNOWN_TIER = 17,
    PD_ERR_UNKNOWN_PLATFORM = 18,
    PD_ERR_BUDGET_TOO_SMALL = 19,
    PD_ERR_L1_OVERFLOW = 20,
    PD_ERR_UNSORTED_TRACE = 21,
    PD_ERR_IMAGE_TOO_SMALL = 22,
    PD_ERR_INSUFFICIENT_DATA = 23,
    PD_ERR_INTERNAL = 100
} pd_status;

PD_API const char* pd_version(void);
PD_API const char* pd_status_name(pd_status s);
PD_API const char* pd_last_error(void);
PD_API void pd_string_free(char* s);

/* images: 8-bit grayscale, binary PGM on disk */

typedef struct pd_image pd_image;

PD_API pd_status pd_image_load(const char* path, pd_image** out);
PD_API pd_status pd_image_from_pixels(uint32_t width, uint32_t height, const uint8_t* pixels,
                                      pd_image** out);
PD_API pd_status pd_image_save(const pd_image* img, const char* path);
PD_API pd_status pd_image_dims(const pd_image* img, uint32_t* width, uint32_t* height);
/* additive Gaussian sensor noise, deterministic in seed */
PD_API pd_status pd_image_degrade(const pd_image* img, double sigma, uint64_t seed,
                                  pd_image** out);
PD_API void pd_image_free(pd_image* img);

/* cascades */

typedef struct pd_cascade pd_cascade;

PD_API pd_status pd_cascade_load(const char* path, pd_cascade** out);
PD_API pd_status pd_cascade_save(const pd_cascade* c, const char* path);
PD_API pd_status pd_cascade_info(const pd_cascade* c, uint32_t* stages, uint32_t* weak,
                                 uint64_t* size_bytes);
PD_API void pd_cascade_free(pd_cascade* c);

/* detection */

typedef enum pd_accounting {
    PD_ACCOUNT_II_ONLY = 0,
    PD_ACCOUNT_II_PLUS_INPUT = 1,
    PD_ACCOUNT_II_INPUT_SQUARES = 2
} pd_accounting;

typedef struct pd_detect_options {
    uint32_t num_scales;
    double scale_factor;
    uint32_t max_detection_px;
    uint32_t overlap;
    uint64_t budget_bytes;
    pd_accounting accounting;
    uint32_t step;
    uint32_t workers;
    double group_iou; /* 0 disables grouping */
} pd_detect_options;

typedef struct pd_detection {
    uint32_t x, y, w, h;
    uint32_t level;
    double score;
} pd_detection;

PD_API void pd_detect_options_init(pd_detect_options* opt);
PD_API pd_status pd_detect(const pd_cascade* c, const pd_image* img, const pd_detect_options* opt,
                           pd_detection** out, size_t* count);
PD_API void pd_detections_free(pd_detection* d);
/* header + one "image_id,x,y,w,h,level,score" row per detection */
PD_API pd_status pd_detect_report(const pd_cascade* c, const pd_image* img,
                                  const pd_detect_options* opt, const char* image_id, int header,
                                  char** csv);
/* "level,width,height,tile,x,y,w,h,core_x,core_y,core_w,core_h" */
PD_API pd_status pd_tile_plan_report(uint32_t width, uint32_t height, const pd_detect_options* opt,
                                     char** csv);

/* training */

typedef struct pd_train_options {
    uint32_t num_stages;
    double min_detection_rate;
    double max_false_positive_rate;
    uint32_t max_weak_per_stage;
    double feature_fraction;
    uint32_t feature_min_size;
    uint32_t feature_stride;
    uint32_t negatives_per_stage;
    uint32_t min_negatives;
    uint32_t mining_step;
    uint32_t pool_scales;
    double pool_scale_factor;
    int variance_normalization;
    uint64_t seed;
    uint32_t threads;
} pd_train_options;

PD_API void pd_train_options_init(pd_train_options* opt);
/* Positives: window-sized PGMs in pos_dir. Negatives: moth-free PGMs in neg_dir. */
PD_API pd_status pd_train_dirs(const char* pos_dir, const char* neg_dir,
                               const pd_train_options* opt, pd_cascade** out, char** log_csv);

/* synthetic trap imagery */

/* Writes train/pos, test/pos, train/neg, test/neg PGM folders under dir. */
PD_API pd_status pd_synth_corpus(const char* dir, uint32_t n_train_pos, uint32_t n_test_pos,
                                 uint32_t n_train_neg, uint32_t n_test_neg, uint32_t neg_width,
                                 uint32_t neg_height, uint64_t seed);
/* Writes scene_NNNN.pgm images plus gt.csv ("image_id,x,y,w,h") under dir. */
PD_API pd_status pd_synth_scenes(const char* dir, uint32_t count, uint32_t width, uint32_t height,
                                 uint32_t moths_per_image, uint64_t seed);

/* evaluation */

PD_API pd_status pd_eval_files(const char* pred_path, const char* gt_path, double iou_threshold,
                               char** csv, char** json);

/* CNN cost model */

typedef struct pd_graph pd_graph;
typedef struct pd_platform pd_platform;

typedef enum pd_engine { PD_ENGINE_WORKER_CORES = 0, PD_ENGINE_CONV_ACCELERATOR = 1 } pd_engine;

typedef struct pd_budget {
    char label[32];
    uint64_t l1_bytes;
    uint64_t l2_bytes;
    pd_engine engine;
    int dma_overlap; /* -1: platform default, 0 off, 1 on */
} pd_budget;

PD_API pd_status pd_graph_load(const char* path, pd_graph** out);
PD_API pd_status pd_graph_summary(const pd_graph* g, uint64_t* layers, uint64_t* macs,
                                  uint64_t* params);
PD_API void pd_graph_free(pd_graph* g);

/* File path, then <dir>/<name>.json for each dir of the colon separated
 * search path, then the builtin gap9/gap8 descriptions. */
PD_API pd_status pd_platform_resolve(const char* name_or_path, const char* search_path,
                                     pd_platform** out);
PD_API pd_status pd_platform_json(const pd_platform* p, char** json);
PD_API void pd_platform_free(pd_platform* p);

PD_API void pd_budget_init(pd_budget* b);
/* "[LABEL:]L1:L2" with optional k/M (decimal) suffixes */
PD_API pd_status pd_budget_parse(const char* spec, pd_budget* out);

PD_API pd_status pd_cnn_latency(const pd_graph* g, const pd_platform* p, const pd_budget* b,
                                char** schedule_csv, char** summary_json);
PD_API pd_status pd_cnn_compare(const pd_graph* g, const pd_platform* p, const pd_budget* budgets,
                                size_t count, char** csv, char** json);

/* duty-cycle energy */

typedef struct pd_scenario pd_scenario;

PD_API pd_status pd_scenario_load(const char* path, pd_scenario** out);
PD_API pd_status pd_scenario_default(pd_scenario** out);
/* Numeric override by field name, e.g. "wake_period_s", "compute_mj",
 * "sleep_power_uw", "capacity_mah"; "payload_policy" takes 0 (counters) or
 * 1 (image per detection). */
PD_API pd_status pd_scenario_set(pd_scenario* s, const char* field, double value);
PD_API pd_status pd_scenario_json(const pd_scenario* s, char** json);
PD_API void pd_scenario_free(pd_scenario* s);

PD_API pd_status pd_power_daily(const pd_scenario* s, double* daily_j, uint64_t* lifetime_days,
                                char** json);
PD_API pd_status pd_power_simulate(const pd_scenario* s, const double* arrivals_s, size_t count,
                                   double horizon_days, char** timeline_csv, char** json);
PD_API pd_status pd_trace_read(const char* path, double** arrivals_s, size_t* count);
PD_API pd_status pd_trace_uniform(double per_day, double days, double** arrivals_s, size_t* count);
PD_API void pd_doubles_free(double* v);

#ifdef __cplusplus
}
#endif

#endif
