/* pilesort C API.
 *
 * Every call returns a ps_status; on failure ps_last_error() holds a message
 * for the calling thread until its next failing call. Objects are opaque
 * handles released with the matching *_free function (NULL is accepted).
 */
#ifndef PILESORT_H
#define PILESORT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PILESORT_BUILDING)
#    define PS_API __declspec(dllexport)
#  else
#    define PS_API __declspec(dllimport)
#  endif
#else
#  define PS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ps_status {
  PS_OK = 0,
  PS_ERR_INVALID_ARGUMENT = 1,
  PS_ERR_IO = 2,
  PS_ERR_FORMAT = 3,
  PS_ERR_CONFIG = 4,
  PS_ERR_OUT_OF_RANGE = 5,
  PS_ERR_NO_MEMORY = 6,
  PS_ERR_INTERNAL = 7
} ps_status;

PS_API const char* ps_version(void);
PS_API const char* ps_status_string(ps_status status);
/* Message for the last failing call on this thread ("" if none). */
PS_API const char* ps_last_error(void);

/* ---- maps ------------------------------------------------------------ */

/* A heightmap with optional companion color map and unknown mask. */
typedef struct ps_heightmap ps_heightmap;

PS_API ps_status ps_heightmap_load(const char* hmap_path, ps_heightmap** out);
/* values: width * height floats, row-major, mm above the belt. */
PS_API ps_status ps_heightmap_create(int width, int height, double resolution_mm,
                                     const float* values, ps_heightmap** out);
PS_API ps_status ps_heightmap_attach_rgb(ps_heightmap* map, const char* ppm_path);
PS_API ps_status ps_heightmap_attach_unknown(ps_heightmap* map, const char* pbm_path);
PS_API ps_status ps_heightmap_info(const ps_heightmap* map, int* width, int* height,
                                   double* resolution_mm);
PS_API void ps_heightmap_free(ps_heightmap* map);

/* ---- gripper ---------------------------------------------------------- */

typedef struct ps_gripper ps_gripper;

PS_API ps_status ps_gripper_default(ps_gripper** out);
PS_API ps_status ps_gripper_load(const char* config_path, ps_gripper** out);
PS_API void ps_gripper_free(ps_gripper* gripper);

/* ---- grasp planning ----------------------------------------------------- */

typedef struct ps_grasp {
  double center_x; /* mm */
  double center_y;
  double angle; /* radians, closing direction */
  double inner_span;
  double finger_width;
  double z;
  double extra_opening;
  double value;
} ps_grasp;

typedef struct ps_plan_options {
  int num_angles;     /* 0: 16 */
  int sample;         /* weighted sample size; 0 keeps every closed grasp */
  uint64_t seed;
  int apply_openings; /* nonzero expands extra-opening variants */
} ps_plan_options;

typedef struct ps_grasp_list ps_grasp_list;

PS_API void ps_plan_options_init(ps_plan_options* options);
PS_API ps_status ps_plan_grasps(const ps_heightmap* map, const ps_gripper* gripper,
                                const ps_plan_options* options, ps_grasp_list** out);
PS_API size_t ps_grasp_list_size(const ps_grasp_list* list);
PS_API ps_status ps_grasp_list_get(const ps_grasp_list* list, size_t index, ps_grasp* out);
/* CSV center_x,center_y,angle,inner_span,extra_opening,z,value; NULL path
 * writes to stdout. */
PS_API ps_status ps_grasp_list_write_csv(const ps_grasp_list* list, const char* path);
/* One CSV row per grasp and layout: layout_id (0 success, 1 color) then the
 * feature values. Uses the map's color and unknown layers when attached. */
PS_API ps_status ps_grasp_list_dump_features(const ps_grasp_list* list, const ps_heightmap* map,
                                             const ps_gripper* gripper, const char* path);
PS_API void ps_grasp_list_free(ps_grasp_list* list);

/* ---- drop-zone feedback ------------------------------------------------- */

typedef struct ps_counts {
  int64_t red;
  int64_t yellow;
  int64_t bluegreen;
  int64_t unknown;
} ps_counts;

/* Reads frame_NNNN.hmap (depth, mm from camera) and frame_NNNN.ppm. roi is
 * {x0, y0, x1, y1} half-open, or NULL for the default border. */
PS_API ps_status ps_feedback_process_dir(const char* dir, const int* roi, ps_counts* out);

/* ---- forests ----------------------------------------------------------- */

typedef struct ps_forest ps_forest;

typedef struct ps_forest_params {
  int num_trees;         /* 0: 100 */
  int max_features;      /* 0: default for the kind */
  int min_samples_split; /* 0: default for the kind */
  uint64_t seed;
} ps_forest_params;

/* x: rows * cols floats, row-major. */
PS_API ps_status ps_forest_fit_classifier(const float* x, size_t rows, size_t cols,
                                          const int* labels, int num_classes,
                                          const ps_forest_params* params, ps_forest** out);
/* y: rows * outputs doubles, row-major. */
PS_API ps_status ps_forest_fit_regressor(const float* x, size_t rows, size_t cols,
                                         const double* y, size_t outputs,
                                         const ps_forest_params* params, ps_forest** out);
PS_API ps_status ps_forest_load(const char* path, ps_forest** out);
PS_API ps_status ps_forest_save(const ps_forest* forest, const char* path);
PS_API ps_status ps_forest_predict(const ps_forest* forest, const float* x, size_t len,
                                   double* out, size_t out_len);
PS_API size_t ps_forest_num_features(const ps_forest* forest);
PS_API size_t ps_forest_output_dim(const ps_forest* forest);
PS_API void ps_forest_free(ps_forest* forest);

/* ---- experiments ------------------------------------------------------- */

typedef struct ps_experiment_config ps_experiment_config;

/* NULL path gives the default world. */
PS_API ps_status ps_experiment_config_load(const char* path, ps_experiment_config** out);
PS_API ps_status ps_experiment_config_parse(const char* text, ps_experiment_config** out);
/* Effective configuration as key = value text; free with ps_string_free. */
PS_API ps_status ps_experiment_config_format(const ps_experiment_config* config, char** out);
PS_API void ps_experiment_config_free(ps_experiment_config* config);

typedef struct ps_tick_info {
  int tick;
  int executed;
  int picks;
  int success;
  uint64_t model_version;
} ps_tick_info;

typedef void (*ps_tick_callback)(const ps_tick_info* info, void* user);

typedef struct ps_run_summary {
  int ticks;
  int picks;
  int successes;
  int blocks;
  double first_success_rate; /* first full block; -1 if none */
  double first_purity;       /* -1 if none or undefined */
  double last_success_rate;
  double last_purity;
} ps_run_summary;

/* Writes log.csv, curves.csv, config.txt and models/ under out_dir. */
PS_API ps_status ps_experiment_run(const ps_experiment_config* config, uint64_t seed,
                                   const char* out_dir, ps_tick_callback callback, void* user,
                                   ps_run_summary* summary);
/* Recomputes block curves from a log; NULL curves_path writes to stdout. */
PS_API ps_status ps_experiment_replay(const char* log_path, int block_size,
                                      const char* curves_path, ps_run_summary* summary);

/* ---- simulation helpers ------------------------------------------------ */

/* New pile from the experiment config's world, written as scene lines. */
PS_API ps_status ps_sim_generate_pile(const ps_experiment_config* config, uint64_t seed,
                                      const char* scene_path);
/* Top camera capture of a scene file: writes the .hmap, .ppm and .pbm. */
PS_API ps_status ps_sim_capture(const ps_experiment_config* config, const char* scene_path,
                                const char* hmap_path, const char* ppm_path,
                                const char* pbm_path);
/* Drop-zone frames for every object of a scene file landing at once. */
PS_API ps_status ps_sim_dropzone(const ps_experiment_config* config, const char* scene_path,
                                 uint64_t seed, const char* frames_dir, ps_counts* truth);

PS_API void ps_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* PILESORT_H */
