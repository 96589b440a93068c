#include "pilesort/pilesort.h"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "pilesort/config.hpp"
#include "pilesort/experiment.hpp"
#include "pilesort/features.hpp"
#include "pilesort/feedback.hpp"
#include "pilesort/forest.hpp"
#include "pilesort/grasp.hpp"
#include "pilesort/heightmap.hpp"
#include "pilesort/image_io.hpp"
#include "pilesort/simworld.hpp"

struct ps_heightmap {
  pilesort::Heightmap height;
  std::optional<pilesort::RgbMap> rgb;
  std::optional<pilesort::UnknownMask> unknown;
};

struct ps_gripper {
  pilesort::GripperGeometry geometry;
};

struct ps_grasp_list {
  std::vector<pilesort::GraspRectangle> grasps;
};

struct ps_forest {
  pilesort::Forest forest;
};

struct ps_experiment_config {
  pilesort::ExperimentConfig config;
};

namespace {

thread_local std::string g_last_error;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ps_status fail(ps_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <class Fn>
ps_status guarded(Fn&& fn) {
  try {
    fn();
    return PS_OK;
  } catch (const pilesort::ConfigError& e) {
    return fail(PS_ERR_CONFIG, e.what());
  } catch (const IoError& e) {
    return fail(PS_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(PS_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(PS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(PS_ERR_OUT_OF_RANGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PS_ERR_NO_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return fail(PS_ERR_FORMAT, e.what());
  } catch (...) {
    return fail(PS_ERR_INTERNAL, "unknown internal error");
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

void require_file(const char* path) {
  require(path != nullptr, "path is NULL");
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError(std::string("cannot open ") + path);
  }
}

// Output stream on a file, or stdout when path is NULL.
class Output {
 public:
  explicit Output(const char* path) {
    if (path) {
      file_.open(path);
      if (!file_) throw IoError(std::string("cannot write ") + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw IoError("write failed");
  }

 private:
  std::ofstream file_;
};

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void fill_summary(const std::vector<pilesort::PickRecord>& log, int block_size,
                  ps_run_summary* s) {
  if (!s) return;
  *s = ps_run_summary{};
  s->ticks = static_cast<int>(log.size());
  for (const auto& r : log) {
    if (!r.executed()) continue;
    ++s->picks;
    if (r.success()) ++s->successes;
  }
  const auto curves = pilesort::block_metrics(log, block_size);
  s->blocks = static_cast<int>(curves.size());
  s->first_success_rate = s->last_success_rate = -1.0;
  s->first_purity = s->last_purity = -1.0;
  if (!curves.empty()) {
    s->first_success_rate = curves.front().success_rate;
    s->last_success_rate = curves.back().success_rate;
    s->first_purity = curves.front().purity.value_or(-1.0);
    s->last_purity = curves.back().purity.value_or(-1.0);
  }
}

pilesort::Scene read_scene_file(const char* path, const pilesort::WorldConfig& world) {
  require_file(path);
  std::ifstream in(path);
  return pilesort::read_scene(in, world.belt_width_mm, world.belt_height_mm);
}

}  // namespace

extern "C" {

const char* ps_version(void) { return "0.1.0"; }

const char* ps_status_string(ps_status status) {
  switch (status) {
    case PS_OK: return "ok";
    case PS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PS_ERR_IO: return "i/o error";
    case PS_ERR_FORMAT: return "malformed input";
    case PS_ERR_CONFIG: return "configuration error";
    case PS_ERR_OUT_OF_RANGE: return "out of range";
    case PS_ERR_NO_MEMORY: return "out of memory";
    case PS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ps_last_error(void) { return g_last_error.c_str(); }

ps_status ps_heightmap_load(const char* hmap_path, ps_heightmap** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    require_file(hmap_path);
    auto h = std::make_unique<ps_heightmap>();
    h->height = pilesort::load_hmap(hmap_path);
    *out = h.release();
  });
}

ps_status ps_heightmap_create(int width, int height, double resolution_mm, const float* values,
                              ps_heightmap** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    require(width > 0 && height > 0, "heightmap dimensions must be positive");
    auto h = std::make_unique<ps_heightmap>();
    h->height = pilesort::Heightmap(width, height, resolution_mm);
    if (values) {
      std::copy(values, values + h->height.size(), h->height.values().begin());
    }
    *out = h.release();
  });
}

ps_status ps_heightmap_attach_rgb(ps_heightmap* map, const char* ppm_path) {
  return guarded([&] {
    require(map != nullptr, "heightmap handle is NULL");
    require_file(ppm_path);
    auto rgb = pilesort::load_ppm(ppm_path);
    require(map->height.same_shape(rgb), "color map size differs from the heightmap");
    map->rgb = std::move(rgb);
  });
}

ps_status ps_heightmap_attach_unknown(ps_heightmap* map, const char* pbm_path) {
  return guarded([&] {
    require(map != nullptr, "heightmap handle is NULL");
    require_file(pbm_path);
    auto mask = pilesort::load_pbm(pbm_path);
    require(map->height.same_shape(mask), "unknown mask size differs from the heightmap");
    map->unknown = std::move(mask);
  });
}

ps_status ps_heightmap_info(const ps_heightmap* map, int* width, int* height,
                            double* resolution_mm) {
  return guarded([&] {
    require(map != nullptr, "heightmap handle is NULL");
    if (width) *width = map->height.width();
    if (height) *height = map->height.height();
    if (resolution_mm) *resolution_mm = map->height.resolution_mm();
  });
}

void ps_heightmap_free(ps_heightmap* map) { delete map; }

ps_status ps_gripper_default(ps_gripper** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    *out = new ps_gripper{};
  });
}

ps_status ps_gripper_load(const char* config_path, ps_gripper** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    require_file(config_path);
    auto g = std::make_unique<ps_gripper>();
    g->geometry = pilesort::load_gripper_config(config_path);
    *out = g.release();
  });
}

void ps_gripper_free(ps_gripper* gripper) { delete gripper; }

void ps_plan_options_init(ps_plan_options* options) {
  if (!options) return;
  options->num_angles = 16;
  options->sample = 0;
  options->seed = 0;
  options->apply_openings = 0;
}

ps_status ps_plan_grasps(const ps_heightmap* map, const ps_gripper* gripper,
                         const ps_plan_options* options, ps_grasp_list** out) {
  return guarded([&] {
    require(map != nullptr && gripper != nullptr, "heightmap or gripper handle is NULL");
    require(out != nullptr, "output handle is NULL");
    ps_plan_options opt;
    ps_plan_options_init(&opt);
    if (options) opt = *options;
    require(opt.num_angles >= 0 && opt.sample >= 0, "plan options must be nonnegative");
    const int angles = opt.num_angles > 0 ? opt.num_angles : 16;
    auto list = std::make_unique<ps_grasp_list>();
    list->grasps = pilesort::closed_grasps(map->height, gripper->geometry, angles);
    if (opt.sample > 0) {
      pilesort::Rng rng(opt.seed);
      list->grasps = pilesort::weighted_sample(list->grasps, static_cast<std::size_t>(opt.sample), rng);
    }
    if (opt.apply_openings) {
      list->grasps = pilesort::apply_openings(list->grasps, map->height, gripper->geometry);
    }
    *out = list.release();
  });
}

size_t ps_grasp_list_size(const ps_grasp_list* list) { return list ? list->grasps.size() : 0; }

ps_status ps_grasp_list_get(const ps_grasp_list* list, size_t index, ps_grasp* out) {
  return guarded([&] {
    require(list != nullptr && out != nullptr, "grasp list or output is NULL");
    if (index >= list->grasps.size()) throw std::out_of_range("grasp index out of range");
    const auto& g = list->grasps[index];
    *out = {g.center_x, g.center_y, g.angle, g.inner_span, g.finger_width, g.z, g.extra_opening,
            g.value};
  });
}

ps_status ps_grasp_list_write_csv(const ps_grasp_list* list, const char* path) {
  return guarded([&] {
    require(list != nullptr, "grasp list is NULL");
    Output out(path);
    auto& os = out.stream();
    os << "center_x,center_y,angle,inner_span,extra_opening,z,value\n";
    char buf[256];
    for (const auto& g : list->grasps) {
      std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.6f,%.3f,%.3f,%.3f,%.3f\n", g.center_x,
                    g.center_y, g.angle, g.inner_span, g.extra_opening, g.z, g.value);
      os << buf;
    }
    out.finish();
  });
}

ps_status ps_grasp_list_dump_features(const ps_grasp_list* list, const ps_heightmap* map,
                                      const ps_gripper* gripper, const char* path) {
  return guarded([&] {
    require(list != nullptr && map != nullptr && gripper != nullptr, "NULL handle");
    const auto& h = map->height;
    const pilesort::RgbMap rgb = map->rgb ? *map->rgb : pilesort::RgbMap(h.width(), h.height(), pilesort::kBeltGray);
    const pilesort::UnknownMask unknown =
        map->unknown ? *map->unknown : pilesort::UnknownMask(h.width(), h.height(), 0);
    pilesort::FeatureConfig fcfg;
    fcfg.finger_thickness_mm = gripper->geometry.finger_thickness;
    Output out(path);
    auto& os = out.stream();
    std::optional<pilesort::GraspSlices> slices;
    const pilesort::GraspRectangle* owner = nullptr;
    auto row = [&](int layout, const pilesort::FeatureVector& fv) {
      os << layout;
      for (float v : fv.values) os << ',' << shortest(v);
      os << '\n';
    };
    for (const auto& g : list->grasps) {
      if (!owner || owner->center_x != g.center_x || owner->center_y != g.center_y ||
          owner->angle != g.angle || owner->inner_span != g.inner_span) {
        slices = pilesort::GraspSlices::compute(g, h, rgb, &unknown, fcfg);
        owner = &g;
      }
      row(0, slices->success_vector(g));
      row(1, slices->color_vector(g));
    }
    out.finish();
  });
}

void ps_grasp_list_free(ps_grasp_list* list) { delete list; }

ps_status ps_feedback_process_dir(const char* dir, const int* roi, ps_counts* out) {
  return guarded([&] {
    require(dir != nullptr && out != nullptr, "directory or output is NULL");
    if (!std::filesystem::is_directory(dir)) throw IoError(std::string("no such directory ") + dir);
    auto stack = pilesort::load_frame_dir(dir);
    if (roi) {
      stack.roi = {roi[0], roi[1], roi[2], roi[3]};
      stack.validate();
    }
    const auto c = pilesort::result(stack, pilesort::default_hsv_boxes());
    *out = {c.counts[0], c.counts[1], c.counts[2], c.counts[3]};
  });
}

namespace {

pilesort::ForestParams to_params(const ps_forest_params* p, pilesort::Rng& rng) {
  pilesort::ForestParams fp;
  if (p) {
    require(p->num_trees >= 0 && p->max_features >= 0 && p->min_samples_split >= 0,
            "forest parameters must be nonnegative");
    if (p->num_trees > 0) fp.num_trees = p->num_trees;
    fp.max_features = p->max_features;
    fp.min_samples_split = p->min_samples_split;
    rng.seed(p->seed);
  }
  return fp;
}

std::vector<std::vector<float>> rows_of(const float* x, size_t rows, size_t cols) {
  require(x != nullptr && rows > 0 && cols > 0, "feature matrix is empty");
  std::vector<std::vector<float>> out(rows);
  for (size_t i = 0; i < rows; ++i) out[i].assign(x + i * cols, x + (i + 1) * cols);
  return out;
}

}  // namespace

ps_status ps_forest_fit_classifier(const float* x, size_t rows, size_t cols, const int* labels,
                                   int num_classes, const ps_forest_params* params,
                                   ps_forest** out) {
  return guarded([&] {
    require(out != nullptr && labels != nullptr, "labels or output handle is NULL");
    pilesort::Rng rng(0);
    const auto fp = to_params(params, rng);
    auto f = std::make_unique<ps_forest>();
    f->forest = pilesort::Forest::fit_classifier(rows_of(x, rows, cols),
                                                 std::span<const int>(labels, rows), num_classes,
                                                 fp, rng);
    *out = f.release();
  });
}

ps_status ps_forest_fit_regressor(const float* x, size_t rows, size_t cols, const double* y,
                                  size_t outputs, const ps_forest_params* params,
                                  ps_forest** out) {
  return guarded([&] {
    require(out != nullptr && y != nullptr && outputs > 0, "targets or output handle missing");
    pilesort::Rng rng(0);
    const auto fp = to_params(params, rng);
    std::vector<std::vector<double>> ys(rows);
    for (size_t i = 0; i < rows; ++i) ys[i].assign(y + i * outputs, y + (i + 1) * outputs);
    auto f = std::make_unique<ps_forest>();
    f->forest = pilesort::Forest::fit_regressor(rows_of(x, rows, cols), ys, fp, rng);
    *out = f.release();
  });
}

ps_status ps_forest_load(const char* path, ps_forest** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    require_file(path);
    std::ifstream in(path);
    auto f = std::make_unique<ps_forest>();
    f->forest = pilesort::Forest::load(in);
    *out = f.release();
  });
}

ps_status ps_forest_save(const ps_forest* forest, const char* path) {
  return guarded([&] {
    require(forest != nullptr && path != nullptr, "forest or path is NULL");
    Output out(path);
    forest->forest.save(out.stream());
    out.finish();
  });
}

ps_status ps_forest_predict(const ps_forest* forest, const float* x, size_t len, double* out,
                            size_t out_len) {
  return guarded([&] {
    require(forest != nullptr && x != nullptr && out != nullptr, "NULL argument");
    forest->forest.predict_into(std::span<const float>(x, len), std::span<double>(out, out_len));
  });
}

size_t ps_forest_num_features(const ps_forest* forest) {
  return forest ? static_cast<size_t>(forest->forest.num_features()) : 0;
}

size_t ps_forest_output_dim(const ps_forest* forest) {
  return forest ? static_cast<size_t>(forest->forest.output_dim()) : 0;
}

void ps_forest_free(ps_forest* forest) { delete forest; }

ps_status ps_experiment_config_load(const char* path, ps_experiment_config** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    auto c = std::make_unique<ps_experiment_config>();
    if (path) {
      if (!std::filesystem::is_regular_file(path)) throw IoError(std::string("cannot open ") + path);
      c->config = pilesort::load_experiment_config(path);
    }
    *out = c.release();
  });
}

ps_status ps_experiment_config_parse(const char* text, ps_experiment_config** out) {
  return guarded([&] {
    require(text != nullptr && out != nullptr, "text or output handle is NULL");
    auto c = std::make_unique<ps_experiment_config>();
    c->config = pilesort::parse_experiment_config(text);
    *out = c.release();
  });
}

ps_status ps_experiment_config_format(const ps_experiment_config* config, char** out) {
  return guarded([&] {
    require(config != nullptr && out != nullptr, "config or output is NULL");
    const std::string text = pilesort::format_experiment_config(config->config);
    char* s = static_cast<char*>(std::malloc(text.size() + 1));
    if (!s) throw std::bad_alloc();
    std::memcpy(s, text.c_str(), text.size() + 1);
    *out = s;
  });
}

void ps_experiment_config_free(ps_experiment_config* config) { delete config; }

ps_status ps_experiment_run(const ps_experiment_config* config, uint64_t seed,
                            const char* out_dir, ps_tick_callback callback, void* user,
                            ps_run_summary* summary) {
  return guarded([&] {
    require(config != nullptr && out_dir != nullptr, "config or output directory is NULL");
    int picks = 0;
    pilesort::TickObserver observer;
    if (callback) {
      observer = [&](const pilesort::PickRecord& r) {
        if (r.executed()) ++picks;
        const ps_tick_info info{r.tick, r.executed() ? 1 : 0, picks, r.success() ? 1 : 0,
                                r.model_version};
        callback(&info, user);
      };
    }
    const auto res = pilesort::run_to_directory(config->config, seed, out_dir, observer);
    fill_summary(res.log, config->config.block_size, summary);
  });
}

ps_status ps_experiment_replay(const char* log_path, int block_size, const char* curves_path,
                               ps_run_summary* summary) {
  return guarded([&] {
    require_file(log_path);
    require(block_size > 0, "block size must be positive");
    std::ifstream in(log_path);
    const auto log = pilesort::read_log_csv(in);
    Output out(curves_path);
    pilesort::write_curves_csv(out.stream(), pilesort::block_metrics(log, block_size));
    out.finish();
    fill_summary(log, block_size, summary);
  });
}

ps_status ps_sim_generate_pile(const ps_experiment_config* config, uint64_t seed,
                               const char* scene_path) {
  return guarded([&] {
    require(config != nullptr, "config is NULL");
    const auto& w = config->config.world;
    pilesort::Rng rng(seed);
    const auto scene = pilesort::generate_pile(w.pile, rng, w.belt_width_mm, w.belt_height_mm);
    Output out(scene_path);
    pilesort::write_scene(out.stream(), scene);
    out.finish();
  });
}

ps_status ps_sim_capture(const ps_experiment_config* config, const char* scene_path,
                         const char* hmap_path, const char* ppm_path, const char* pbm_path) {
  return guarded([&] {
    require(config != nullptr, "config is NULL");
    const auto& w = config->config.world;
    const auto scene = read_scene_file(scene_path, w);
    const auto cap = pilesort::capture(scene, 0.5 * w.belt_width_mm, w.capture);
    if (hmap_path) pilesort::save_hmap(hmap_path, cap.height);
    if (ppm_path) pilesort::save_ppm(ppm_path, cap.rgb);
    if (pbm_path) pilesort::save_pbm(pbm_path, cap.unknown);
  });
}

ps_status ps_sim_dropzone(const ps_experiment_config* config, const char* scene_path,
                          uint64_t seed, const char* frames_dir, ps_counts* truth) {
  return guarded([&] {
    require(config != nullptr && frames_dir != nullptr, "config or directory is NULL");
    const auto& w = config->config.world;
    const auto scene = read_scene_file(scene_path, w);
    pilesort::GraspOutcome outcome;
    outcome.picked = scene.objects;
    outcome.success_before_release = !outcome.picked.empty();
    pilesort::Rng rng(seed);
    pilesort::DropZoneTruth t;
    const auto stack = pilesort::synthesize_dropzone(outcome, w.dropzone, rng, &t);
    pilesort::save_frame_dir(frames_dir, stack);
    if (truth) *truth = {t.counts.counts[0], t.counts.counts[1], t.counts.counts[2], t.counts.counts[3]};
  });
}

void ps_string_free(char* s) { std::free(s); }

}  // extern "C"
