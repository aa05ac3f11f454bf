#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semfusion/dense_crf.h"
#include "semfusion/evaluation.h"
#include "semfusion/prediction.h"
#include "semfusion/surfel_map.h"

namespace semfusion {

enum class EvalMode {
  kFinal,      // project the finished map into every labelled frame
  kImmediate,  // project the map into each labelled frame right after it is processed
};

struct PipelineConfig {
  // Input: a sequence directory with a trajectory, or a synthetic scene
  // ("office" or a JSON file) rendered in memory.
  std::filesystem::path sequence;
  std::filesystem::path trajectory;  // default <sequence>/trajectory.txt
  std::filesystem::path intrinsics;  // default <sequence>/intrinsics.txt
  std::filesystem::path label_file;  // default <sequence>/labels.txt, else NYU-13
  std::string scene;
  int scene_frames = 36;
  double depth_scale = 1000.0;
  double pose_tolerance = 0.02;

  // Predictions: SFPM files <dir>/<frame stem>.sfpm, or the synthetic oracle
  // when no directory is given.
  std::filesystem::path predictions;
  double oracle_diag = 0.7;
  OracleMode oracle_mode = OracleMode::kSampled;
  double oracle_sharpness = 0.0;
  double oracle_smoothing = 0.05;

  // Events fire on frame index k (0-based) when (k + 1) % period == 0.
  int cnn_every = 10;
  int crf_every = 500;  // 0 disables the CRF

  MapParams map;
  CrfParams crf = [] {
    CrfParams p;
    p.mode = CrfMode::kCutoff;
    return p;
  }();

  std::uint64_t seed = 0;
  bool strict_sequential = false;
  bool check_table_sync = true;

  Resolution eval_res;
  EvalMode eval_mode = EvalMode::kFinal;

  std::filesystem::path export_ply;
  std::filesystem::path metrics_out;
  std::filesystem::path report_out;
  bool ply_labels = false;  // colour PLY vertices by class instead of RGB

  // Throws Errc::kConfig.
  void validate() const;
  // Sets one "section.key" entry from text. Throws Errc::kConfig.
  void set(const std::string& key, const std::string& value);
  // Reads "section.key = value" lines, or "key = value" lines under
  // "[section]" headers. '#' starts a comment.
  void load(const std::filesystem::path& path);
  static const std::vector<std::string>& keys();
  // Effective configuration as "section.key = value" lines.
  std::string dump() const;
};

struct StageTimes {
  double integration = 0.0;  // seconds, summed over the run
  double table = 0.0;        // unstable-surfel removal and table upkeep
  double prediction = 0.0;
  double fusion = 0.0;
  double crf = 0.0;
  double evaluation = 0.0;

  StageTimes& operator+=(const StageTimes& o);
};

struct RunReport {
  std::size_t frames_total = 0;
  std::size_t frames_processed = 0;
  std::size_t frames_without_pose = 0;
  std::size_t fusion_events = 0;
  std::size_t crf_events = 0;
  std::size_t surfels_final = 0;
  std::size_t surfels_removed = 0;
  std::uint64_t all_zero_normalisations = 0;
  std::size_t renormalised_rows = 0;
  std::vector<InferenceReport> crf_reports;
  std::optional<ConfusionAccumulator> fused;
  std::optional<ConfusionAccumulator> baseline;
  StageTimes times;
  // Deterministic metrics document; contains no timings.
  nlohmann::json metrics;

  double fused_class_avg() const;
  double baseline_class_avg() const;
  // Per-stage wall-clock table with per-frame and per-event means.
  std::string timing_table() const;
};

struct RunObserver {
  // Called after each processed frame, once table upkeep is done.
  std::function<void(int frame, const SurfelMap& map)> on_frame_end;
};

// Throws Errc::kConfig before any processing when the input is incomplete.
// Module errors propagate with the frame index prepended to the message.
RunReport run(const PipelineConfig& config, const RunObserver& observer = {});

struct FrequencyRow {
  int skip = 1;
  double class_avg = 0.0;
  double baseline_class_avg = 0.0;
  double est_fps = 0.0;
  std::size_t fusion_events = 0;
};

// est_fps = 1 / (t_slam + t_table + (t_pred + t_fuse) / skip), with the
// stage means pooled over all runs so the estimate depends on skip alone.
double estimate_fps(double t_slam, double t_table, double t_pred, double t_fuse, int skip);

std::vector<FrequencyRow> frequency_experiment(const PipelineConfig& config,
                                               const std::vector<int>& skips);

struct CrfFrequencyRow {
  int period = 0;
  double class_avg = 0.0;
  std::size_t crf_events = 0;
};

std::vector<CrfFrequencyRow> crf_frequency_experiment(const PipelineConfig& config,
                                                      const std::vector<int>& periods);

// Single-frame accuracy of the configured prediction source (argmax per
// pixel) over every labelled frame with a pose. No map is built.
ConfusionAccumulator evaluate_predictions(const PipelineConfig& config);

// Number of events in frames 0..n_frames-1 for the given period.
std::size_t scheduled_events(int n_frames, int period);

}  // namespace semfusion
