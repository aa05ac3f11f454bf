#include "semfusion/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <sstream>

#include "semfusion/dataset.h"
#include "semfusion/error.h"
#include "semfusion/label_fusion.h"
#include "semfusion/ply.h"
#include "semfusion/scene.h"

namespace semfusion {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  std::string rest;
  if (!(in >> v) || (in >> rest)) {
    throw Error(Errc::kConfig, key + ": cannot parse '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw Error(Errc::kConfig, key + ": expected a boolean, got '" + value + "'");
}

Resolution parse_resolution(const std::string& key, const std::string& value) {
  Resolution r;
  char x = 0;
  std::istringstream in(value);
  std::string rest;
  if (!(in >> r.width >> x >> r.height) || (x != 'x' && x != 'X') || (in >> rest)) {
    throw Error(Errc::kConfig, key + ": expected WxH, got '" + value + "'");
  }
  return r;
}

struct Field {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

#define SF_PATH(member) \
  Field { [](PipelineConfig& c, const std::string&, const std::string& v) { c.member = v; }, \
          [](const PipelineConfig& c) { return c.member.string(); } }
#define SF_NUM(member, type)                                                        \
  Field { [](PipelineConfig& c, const std::string& k, const std::string& v) {       \
            c.member = parse_number<type>(k, v);                                    \
          },                                                                        \
          [](const PipelineConfig& c) { return fmt(static_cast<double>(c.member)); } }
#define SF_BOOL(member)                                                             \
  Field { [](PipelineConfig& c, const std::string& k, const std::string& v) {       \
            c.member = parse_bool(k, v);                                            \
          },                                                                        \
          [](const PipelineConfig& c) { return std::string(c.member ? "true" : "false"); } }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"input.sequence", SF_PATH(sequence)},
      {"input.trajectory", SF_PATH(trajectory)},
      {"input.intrinsics", SF_PATH(intrinsics)},
      {"input.labels", SF_PATH(label_file)},
      {"input.scene",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.scene = v; },
        [](const PipelineConfig& c) { return c.scene; }}},
      {"input.scene_frames", SF_NUM(scene_frames, int)},
      {"input.depth_scale", SF_NUM(depth_scale, double)},
      {"input.pose_tolerance", SF_NUM(pose_tolerance, double)},
      {"prediction.dir", SF_PATH(predictions)},
      {"prediction.oracle_diag", SF_NUM(oracle_diag, double)},
      {"prediction.oracle_mode",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "soft") {
            c.oracle_mode = OracleMode::kSoft;
          } else if (v == "sampled") {
            c.oracle_mode = OracleMode::kSampled;
          } else {
            throw Error(Errc::kConfig, k + ": expected soft or sampled, got '" + v + "'");
          }
        },
        [](const PipelineConfig& c) {
          return std::string(c.oracle_mode == OracleMode::kSoft ? "soft" : "sampled");
        }}},
      {"prediction.oracle_sharpness", SF_NUM(oracle_sharpness, double)},
      {"prediction.oracle_smoothing", SF_NUM(oracle_smoothing, double)},
      {"schedule.cnn_every", SF_NUM(cnn_every, int)},
      {"schedule.crf_every", SF_NUM(crf_every, int)},
      {"map.depth_max", SF_NUM(map.depth_max, double)},
      {"map.depth_eps", SF_NUM(map.depth_eps, double)},
      {"map.normal_eps_deg", SF_NUM(map.normal_eps_deg, double)},
      {"map.stable_conf", SF_NUM(map.stable_conf, double)},
      {"map.probation", SF_NUM(map.probation, int)},
      {"crf.iterations", SF_NUM(crf.iterations, int)},
      {"crf.theta_alpha", SF_NUM(crf.theta_alpha, double)},
      {"crf.theta_beta", SF_NUM(crf.theta_beta, double)},
      {"crf.theta_gamma", SF_NUM(crf.theta_gamma, double)},
      {"crf.w1", SF_NUM(crf.w1, double)},
      {"crf.w2", SF_NUM(crf.w2, double)},
      {"crf.max_exact_nodes", SF_NUM(crf.max_exact_nodes, std::size_t)},
      {"crf.blend", SF_NUM(crf.blend, double)},
      {"crf.step_size", SF_NUM(crf.step_size, double)},
      {"crf.cutoff_sigmas", SF_NUM(crf.cutoff_sigmas, double)},
      {"crf.mode",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "exact") {
            c.crf.mode = CrfMode::kExact;
          } else if (v == "cutoff") {
            c.crf.mode = CrfMode::kCutoff;
          } else {
            throw Error(Errc::kConfig, k + ": expected exact or cutoff, got '" + v + "'");
          }
        },
        [](const PipelineConfig& c) {
          return std::string(c.crf.mode == CrfMode::kExact ? "exact" : "cutoff");
        }}},
      {"run.seed", SF_NUM(seed, std::uint64_t)},
      {"run.strict_sequential", SF_BOOL(strict_sequential)},
      {"run.check_table_sync", SF_BOOL(check_table_sync)},
      {"eval.res",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.eval_res = parse_resolution(k, v);
        },
        [](const PipelineConfig& c) {
          return std::to_string(c.eval_res.width) + "x" + std::to_string(c.eval_res.height);
        }}},
      {"eval.mode",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "final") {
            c.eval_mode = EvalMode::kFinal;
          } else if (v == "immediate") {
            c.eval_mode = EvalMode::kImmediate;
          } else {
            throw Error(Errc::kConfig, k + ": expected final or immediate, got '" + v + "'");
          }
        },
        [](const PipelineConfig& c) {
          return std::string(c.eval_mode == EvalMode::kFinal ? "final" : "immediate");
        }}},
      {"output.ply", SF_PATH(export_ply)},
      {"output.metrics", SF_PATH(metrics_out)},
      {"output.report", SF_PATH(report_out)},
      {"output.ply_labels", SF_BOOL(ply_labels)},
  };
  return table;
}

#undef SF_PATH
#undef SF_NUM
#undef SF_BOOL

// Frames plus the pose lookup for one input.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual FrameRecord load(std::size_t i) const = 0;
  virtual std::optional<Pose> pose(const FrameRecord& f) const = 0;
  virtual bool has_labels() const = 0;
  const Intrinsics& intrinsics() const { return intr_; }
  const LabelSet& labels() const { return labels_; }

 protected:
  FrameSource(Intrinsics intr, LabelSet labels)
      : intr_(std::move(intr)), labels_(std::move(labels)) {}
  Intrinsics intr_;
  LabelSet labels_;
};

class SceneSource final : public FrameSource {
 public:
  SceneSource(SceneSpec spec, int frames)
      : FrameSource(synthetic_intrinsics(), spec.labels()), spec_(std::move(spec)), n_(frames) {
    spec_.validate();
    if (n_ < 1) throw Error(Errc::kConfig, "input.scene_frames must be >= 1");
  }
  std::size_t size() const override { return static_cast<std::size_t>(n_); }
  FrameRecord load(std::size_t i) const override {
    const int k = static_cast<int>(i);
    FrameRecord f = render_frame(spec_, intr_, spec_.camera_pose(k, n_));
    f.index = k;
    f.timestamp = k * spec_.frame_interval;
    f.name = timestamp_stem(f.timestamp);
    return f;
  }
  std::optional<Pose> pose(const FrameRecord& f) const override {
    return spec_.camera_pose(f.index, n_);
  }
  bool has_labels() const override { return true; }

 private:
  SceneSpec spec_;
  int n_;
};

class SequenceSource final : public FrameSource {
 public:
  SequenceSource(const PipelineConfig& c, Intrinsics intr, LabelSet labels, Trajectory traj)
      : FrameSource(std::move(intr), std::move(labels)),
        reader_(c.sequence, c.depth_scale),
        trajectory_(std::move(traj)),
        tolerance_(c.pose_tolerance) {}
  std::size_t size() const override { return reader_.size(); }
  FrameRecord load(std::size_t i) const override { return reader_.load(i); }
  std::optional<Pose> pose(const FrameRecord& f) const override {
    return associate_pose(trajectory_, f.timestamp, tolerance_);
  }
  bool has_labels() const override { return reader_.has_labels(); }

 private:
  SequenceReader reader_;
  Trajectory trajectory_;
  double tolerance_;
};

std::unique_ptr<FrameSource> open_source(const PipelineConfig& c) {
  if (!c.scene.empty()) {
    SceneSpec spec = c.scene == "office" ? SceneSpec::Office() : SceneSpec::FromJson(c.scene);
    return std::make_unique<SceneSource>(std::move(spec), c.scene_frames);
  }
  if (c.sequence.empty()) {
    throw Error(Errc::kConfig, "no input: give a sequence with a trajectory or a scene");
  }
  fs::path traj_path = c.trajectory;
  if (traj_path.empty() && fs::exists(c.sequence / "trajectory.txt")) {
    traj_path = c.sequence / "trajectory.txt";
  }
  if (traj_path.empty()) {
    throw Error(Errc::kConfig, "sequence " + c.sequence.string() + " has no trajectory");
  }
  fs::path intr_path = c.intrinsics;
  if (intr_path.empty() && fs::exists(c.sequence / "intrinsics.txt")) {
    intr_path = c.sequence / "intrinsics.txt";
  }
  Intrinsics intr = intr_path.empty() ? Intrinsics::Default() : Intrinsics::FromFile(intr_path);
  fs::path label_path = c.label_file;
  if (label_path.empty() && fs::exists(c.sequence / "labels.txt")) {
    label_path = c.sequence / "labels.txt";
  }
  LabelSet labels = label_path.empty() ? LabelSet::Nyu13() : LabelSet::FromFile(label_path);
  return std::make_unique<SequenceSource>(c, std::move(intr), std::move(labels),
                                          load_trajectory(traj_path));
}

class PredictionSource {
 public:
  PredictionSource(const PipelineConfig& c, std::size_t classes) : dir_(c.predictions) {
    if (dir_.empty()) {
      model_ = ConfusionModel::Symmetric(classes, c.oracle_diag);
      model_.mode = c.oracle_mode;
      model_.sharpness = c.oracle_sharpness;
      model_.sampled_smoothing = c.oracle_smoothing;
      model_.seed = c.seed;
      model_.validate();
    }
    classes_ = classes;
  }

  // Prediction for frame `k`; nullopt when a directory source lacks the file.
  std::optional<ProbabilityMap> get(const FrameRecord& f, std::size_t& renormalised) const {
    if (dir_.empty()) {
      if (!f.gt_labels) {
        throw Error(Errc::kNoData, "the synthetic oracle needs ground-truth labels");
      }
      return synthetic_oracle(*f.gt_labels, model_, static_cast<std::uint64_t>(f.index));
    }
    const fs::path p = dir_ / (f.name + ".sfpm");
    if (!fs::exists(p)) return std::nullopt;
    auto loaded = load_probability_map(p);
    if (loaded.map.classes() != classes_) {
      throw Error(Errc::kClassCountMismatch,
                  p.string() + " has " + std::to_string(loaded.map.classes()) + " classes");
    }
    renormalised += loaded.renormalised_rows;
    return std::move(loaded.map);
  }

 private:
  fs::path dir_;
  ConfusionModel model_;
  std::size_t classes_ = 0;
};

bool fires(int k, int period) { return period > 0 && (k + 1) % period == 0; }

// Scores the map and the baseline on one labelled frame.
void evaluate_frame(const SurfelMap& map, const FrameRecord& f, const Pose& pose,
                    const Intrinsics& intr, const PipelineConfig& c,
                    const std::optional<ProbabilityMap>& baseline, ConfusionAccumulator& fused,
                    ConfusionAccumulator& base) {
  const Resolution res = c.eval_res;
  const LabelImage gt = resize_nearest(*f.gt_labels, res.width, res.height);
  const DepthImage depth = resize_nearest(f.depth, res.width, res.height);
  const ProbabilityMap* bp = baseline ? &*baseline : nullptr;
  fused.accumulate(project_map_labels(map, pose, intr, res, bp, c.map.depth_max), gt, depth);
  if (baseline) {
    const LabelImage b =
        (baseline->width() == res.width && baseline->height() == res.height)
            ? baseline->argmax()
            : rescale_probability_map(*baseline, res.width, res.height).argmax();
    base.accumulate(b, gt, depth);
  }
}

nlohmann::json accuracy_or_null(const ConfusionAccumulator& acc, const LabelSet& labels) {
  return acc.total() > 0 ? metrics_json(acc, labels) : nlohmann::json(nullptr);
}

}  // namespace

StageTimes& StageTimes::operator+=(const StageTimes& o) {
  integration += o.integration;
  table += o.table;
  prediction += o.prediction;
  fusion += o.fusion;
  crf += o.crf;
  evaluation += o.evaluation;
  return *this;
}

void PipelineConfig::validate() const {
  if (cnn_every < 1) throw Error(Errc::kConfig, "schedule.cnn_every must be >= 1");
  if (crf_every < 0) throw Error(Errc::kConfig, "schedule.crf_every must be >= 0");
  if (scene_frames < 1) throw Error(Errc::kConfig, "input.scene_frames must be >= 1");
  if (!(depth_scale > 0.0)) throw Error(Errc::kConfig, "input.depth_scale must be > 0");
  if (!(pose_tolerance >= 0.0)) throw Error(Errc::kConfig, "input.pose_tolerance must be >= 0");
  if (!(oracle_diag > 0.0 && oracle_diag <= 1.0)) {
    throw Error(Errc::kConfig, "prediction.oracle_diag must be in (0, 1]");
  }
  if (!(oracle_smoothing >= 0.0 && oracle_smoothing < 1.0)) {
    throw Error(Errc::kConfig, "prediction.oracle_smoothing must be in [0, 1)");
  }
  if (!(oracle_sharpness >= 0.0)) {
    throw Error(Errc::kConfig, "prediction.oracle_sharpness must be >= 0");
  }
  if (!(map.depth_max > 0.0) || !(map.depth_eps > 0.0) || !(map.normal_eps_deg > 0.0) ||
      map.probation < 0) {
    throw Error(Errc::kConfig, "map parameters out of range");
  }
  if (eval_res.width <= 0 || eval_res.height <= 0) {
    throw Error(Errc::kConfig, "eval.res must be positive");
  }
  try {
    crf.validate();
  } catch (const Error& e) {
    throw Error(Errc::kConfig, e.detail());
  }
  if (scene.empty() && sequence.empty()) {
    throw Error(Errc::kConfig, "no input: give a sequence with a trajectory or a scene");
  }
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(Errc::kConfig, "unknown key '" + key + "'");
  it->second.set(*this, key, trim(value));
}

void PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfig, "cannot open config " + path.string());
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(Errc::kConfig, path.string() + ":" + std::to_string(line_no) +
                                       ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::kConfig,
                  path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    set(key, line.substr(eq + 1));
  }
}

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> list = [] {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
  }();
  return list;
}

std::string PipelineConfig::dump() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(*this) + "\n";
  return out;
}

double RunReport::fused_class_avg() const {
  if (!fused) throw Error(Errc::kNoData, "run had no labelled frames");
  return class_average_accuracy(*fused);
}

double RunReport::baseline_class_avg() const {
  if (!baseline) throw Error(Errc::kNoData, "run had no labelled frames");
  return class_average_accuracy(*baseline);
}

std::string RunReport::timing_table() const {
  const auto per = [](double total, std::size_t n) { return n ? 1e3 * total / n : 0.0; };
  char buf[160];
  std::string out = "stage            total_s    mean_ms  per\n";
  auto line = [&](const char* name, double total, std::size_t n, const char* unit) {
    std::snprintf(buf, sizeof(buf), "%-14s %9.3f %10.3f  %s\n", name, total, per(total, n), unit);
    out += buf;
  };
  line("integration", times.integration, frames_processed, "frame");
  line("table", times.table, frames_processed, "frame");
  line("prediction", times.prediction, fusion_events, "fusion event");
  line("fusion", times.fusion, fusion_events, "fusion event");
  line("crf", times.crf, crf_events, "crf event");
  line("evaluation", times.evaluation, fused ? fused->frames() : 0, "evaluated frame");
  return out;
}

std::size_t scheduled_events(int n_frames, int period) {
  if (period <= 0 || n_frames <= 0) return 0;
  return static_cast<std::size_t>(n_frames / period);
}

RunReport run(const PipelineConfig& c, const RunObserver& observer) {
  c.validate();
  const auto source = open_source(c);
  const Intrinsics& intr = source->intrinsics();
  const LabelSet& labels = source->labels();
  const PredictionSource predictions(c, labels.count());

  RunReport report;
  report.frames_total = source->size();
  SurfelMap map(labels);
  CrfParams crf = c.crf;
  crf.seed = c.seed;
  const bool evaluate = source->has_labels();
  ConfusionAccumulator fused(labels.count());
  ConfusionAccumulator base(labels.count());
  const std::uint64_t all_zero_start = all_zero_count();

  const int n = static_cast<int>(source->size());
  std::future<FrameRecord> prefetched;
  auto launch = [&](int k) {
    return std::async(std::launch::async, [&source, k] { return source->load(k); });
  };
  if (!c.strict_sequential && n > 0) prefetched = launch(0);

  for (int k = 0; k < n; ++k) {
    try {
      FrameRecord f = prefetched.valid() ? prefetched.get() : source->load(k);
      if (!c.strict_sequential && k + 1 < n) prefetched = launch(k + 1);
      const auto pose = source->pose(f);
      if (!pose) {
        ++report.frames_without_pose;
        continue;
      }
      ++report.frames_processed;

      auto t0 = Clock::now();
      map.integrate_frame(f.rgb, f.depth, *pose, intr, c.map);
      report.times.integration += seconds_since(t0);

      if (fires(k, c.cnn_every)) {
        t0 = Clock::now();
        const auto pred = predictions.get(f, report.renormalised_rows);
        report.times.prediction += seconds_since(t0);
        if (pred) {
          t0 = Clock::now();
          const IndexMap visible = visible_set(map, *pose, intr, c.map.depth_max);
          fuse_prediction(map, visible, *pred);
          report.times.fusion += seconds_since(t0);
          ++report.fusion_events;
        }
      }

      if (fires(k, c.crf_every) && !map.empty()) {
        t0 = Clock::now();
        report.crf_reports.push_back(run_inference(map, crf));
        report.times.crf += seconds_since(t0);
        ++report.crf_events;
      }

      t0 = Clock::now();
      report.surfels_removed += map.remove_unstable(map.frame_counter() - 1, c.map).size();
      report.times.table += seconds_since(t0);
      if (c.check_table_sync && !map.table_in_sync()) {
        throw Error(Errc::kInvalidArgument, "probability table out of sync with surfel store");
      }

      if (evaluate && c.eval_mode == EvalMode::kImmediate && f.gt_labels) {
        t0 = Clock::now();
        std::size_t ignored_renorm = 0;
        const auto baseline = predictions.get(f, ignored_renorm);
        evaluate_frame(map, f, *pose, intr, c, baseline, fused, base);
        report.times.evaluation += seconds_since(t0);
      }
      if (observer.on_frame_end) observer.on_frame_end(k, map);
    } catch (const Error& e) {
      if (prefetched.valid()) prefetched.wait();
      throw Error(e.code(), "frame " + std::to_string(k) + ": " + e.detail());
    }
  }

  if (evaluate && c.eval_mode == EvalMode::kFinal) {
    const auto t0 = Clock::now();
    for (int k = 0; k < n; ++k) {
      try {
        const FrameRecord f = source->load(k);
        if (!f.gt_labels) continue;
        const auto pose = source->pose(f);
        if (!pose) continue;
        std::size_t ignored_renorm = 0;
        const auto baseline = predictions.get(f, ignored_renorm);
        evaluate_frame(map, f, *pose, intr, c, baseline, fused, base);
      } catch (const Error& e) {
        throw Error(e.code(), "evaluating frame " + std::to_string(k) + ": " + e.detail());
      }
    }
    report.times.evaluation += seconds_since(t0);
  }

  report.surfels_final = map.size();
  report.all_zero_normalisations = all_zero_count() - all_zero_start;
  if (evaluate && fused.frames() > 0) {
    report.fused = fused;
    report.baseline = base;
  }

  nlohmann::json m;
  m["schedule"] = {
      {"convention", "frame index k is 0-based; an event fires when (k + 1) % period == 0"},
      {"cnn_every", c.cnn_every},
      {"crf_every", c.crf_every},
  };
  m["seed"] = c.seed;
  m["eval_mode"] = c.eval_mode == EvalMode::kFinal ? "final" : "immediate";
  m["eval_resolution"] = {c.eval_res.width, c.eval_res.height};
  m["frames"] = {{"total", report.frames_total},
                 {"processed", report.frames_processed},
                 {"without_pose", report.frames_without_pose}};
  m["events"] = {{"fusion", report.fusion_events}, {"crf", report.crf_events}};
  m["map"] = {{"surfels", report.surfels_final}, {"removed", report.surfels_removed}};
  m["diagnostics"] = {{"all_zero_normalisations", report.all_zero_normalisations},
                      {"renormalised_rows", report.renormalised_rows}};
  m["fused"] = accuracy_or_null(fused, labels);
  m["baseline"] = accuracy_or_null(base, labels);
  report.metrics = std::move(m);

  if (!c.export_ply.empty()) {
    export_ply(map, c.export_ply, c.ply_labels ? PlyColourMode::kLabel : PlyColourMode::kColour);
  }
  if (!c.metrics_out.empty()) {
    std::ofstream out(c.metrics_out);
    if (!out) throw Error(Errc::kIoFailure, "cannot write " + c.metrics_out.string());
    out << report.metrics.dump(2) << '\n';
  }
  if (!c.report_out.empty()) {
    std::ofstream out(c.report_out);
    if (!out) throw Error(Errc::kIoFailure, "cannot write " + c.report_out.string());
    out << report.timing_table();
  }
  return report;
}

ConfusionAccumulator evaluate_predictions(const PipelineConfig& c) {
  c.validate();
  const auto source = open_source(c);
  const PredictionSource predictions(c, source->labels().count());
  ConfusionAccumulator acc(source->labels().count());
  const Resolution res = c.eval_res;
  for (std::size_t k = 0; k < source->size(); ++k) {
    const FrameRecord f = source->load(k);
    if (!f.gt_labels || !source->pose(f)) continue;
    std::size_t renormalised = 0;
    const auto pred = predictions.get(f, renormalised);
    if (!pred) continue;
    acc.accumulate(rescale_probability_map(*pred, res.width, res.height).argmax(),
                   resize_nearest(*f.gt_labels, res.width, res.height),
                   resize_nearest(f.depth, res.width, res.height));
  }
  return acc;
}

double estimate_fps(double t_slam, double t_table, double t_pred, double t_fuse, int skip) {
  if (skip < 1) throw Error(Errc::kInvalidArgument, "skip must be >= 1");
  return 1.0 / (t_slam + t_table + (t_pred + t_fuse) / skip);
}

std::vector<FrequencyRow> frequency_experiment(const PipelineConfig& config,
                                               const std::vector<int>& skips) {
  std::vector<FrequencyRow> rows;
  StageTimes pooled;
  std::size_t frames = 0;
  std::size_t events = 0;
  for (int skip : skips) {
    PipelineConfig c = config;
    c.cnn_every = skip;
    const RunReport r = run(c);
    FrequencyRow row;
    row.skip = skip;
    row.class_avg = r.fused_class_avg();
    row.baseline_class_avg = r.baseline_class_avg();
    row.fusion_events = r.fusion_events;
    rows.push_back(row);
    pooled += r.times;
    frames += r.frames_processed;
    events += r.fusion_events;
  }
  if (frames == 0) return rows;
  const double t_slam = pooled.integration / frames;
  const double t_table = pooled.table / frames;
  const double t_pred = events ? pooled.prediction / events : 0.0;
  const double t_fuse = events ? pooled.fusion / events : 0.0;
  for (auto& row : rows) row.est_fps = estimate_fps(t_slam, t_table, t_pred, t_fuse, row.skip);
  return rows;
}

std::vector<CrfFrequencyRow> crf_frequency_experiment(const PipelineConfig& config,
                                                      const std::vector<int>& periods) {
  std::vector<CrfFrequencyRow> rows;
  for (int period : periods) {
    PipelineConfig c = config;
    c.crf_every = period;
    const RunReport r = run(c);
    rows.push_back({period, r.fused_class_avg(), r.crf_events});
  }
  return rows;
}

}  // namespace semfusion
