#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <string_view>
#include <utility>

#include "dpl/gaussian.hpp"
#include "dpl/rolling_stats.hpp"
#include "dpl/time.hpp"

namespace dpl {

inline constexpr double kThreeSigmaQuantile = 0.9973;
inline constexpr int kSnapshotSchemaVersion = 1;

struct DetectorConfig {
  Duration expiration_period{std::chrono::days{7}};  // t_e: how long learned samples count
  Duration time_constant{std::chrono::hours{5}};     // t_c: span of the adaptation window
  double quantile = kThreeSigmaQuantile;              // score threshold q
  Duration warmup{std::chrono::days{1}};
  double variance_floor = kDefaultVarianceFloor;

  // Throws InvalidArgument unless t_e > t_c > 0, 0.5 < q < 1, warmup >= 0
  // and variance_floor > 0.
  void validate() const;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

struct ProcessLimits {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
  friend bool operator==(const ProcessLimits&, const ProcessLimits&) = default;
};

struct DetectionOutput {
  Timestamp timestamp;
  double value = 0.0;
  double score = 0.0;
  bool is_anomaly = false;
  bool in_warmup = false;
  bool learned = false;
  // Learned only because the adaptation condition held.
  bool adapted = false;
  // The sample arrived with a timestamp older than its predecessor and was
  // processed at the predecessor's time.
  bool timestamp_clamped = false;
  // Limits the sample was judged against (state before it was learned).
  ProcessLimits limits;

  friend bool operator==(const DetectionOutput&, const DetectionOutput&) = default;
};

struct ScoreEntry {
  Timestamp timestamp;
  double score = 0.0;

  friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};

// True when the window holds at least two scores and their mean exceeds q.
bool adaptation_condition(const std::deque<ScoreEntry>& window, double q);

// Two-sided anomaly score 2|F(x) - 1/2| in [0, 1].
double anomaly_score(double x, const GaussianParams& params);

// Streaming detector with dynamic process limits.
//
// The direct model tracks the signal and yields the upper limit; a mirrored
// model learns the negated signal and yields the lower limit. Both learn and
// forget exactly the same samples. A sample is learned when its score is
// below q, during warm-up, or when the mean score over the last t_c exceeds q
// (a sustained shift the model should follow). Learned samples are forgotten
// after t_e.
class Detector {
public:
  // Throws InvalidArgument for an invalid config or a non-finite first value.
  Detector(DetectorConfig config, Sample first);

  // Creates a detector seeded with `first` together with the output record
  // describing that seed (score 0, learned, never anomalous).
  static std::pair<Detector, DetectionOutput> start(DetectorConfig config, Sample first);

  // Scores, classifies and conditionally learns one sample. Throws
  // InvalidArgument for a non-finite value, leaving the state untouched.
  DetectionOutput process(Sample sample);

  double score(double x) const;
  ProcessLimits limits() const;
  bool adaptation_condition() const;
  bool in_warmup(Timestamp t) const;

  const DetectorConfig& config() const noexcept { return config_; }
  const RunningGaussian& direct_stats() const noexcept { return direct_; }
  const RunningGaussian& mirror_stats() const noexcept { return mirror_; }
  const TimedBuffer& buffer() const noexcept { return buffer_; }
  const std::deque<ScoreEntry>& score_window() const noexcept { return scores_; }
  Timestamp start_time() const noexcept { return start_time_; }
  Timestamp last_time() const noexcept { return last_time_; }

  GaussianParams direct_params() const;
  GaussianParams mirror_params() const;

  // Entries held in the expiration buffer and the score window.
  std::size_t state_size() const noexcept { return buffer_.size() + scores_.size(); }

  // Versioned key=value text document with the complete state.
  std::string snapshot() const;

  // Rebuilds a detector from snapshot(). The echoed config must equal
  // config. Throws SnapshotError on schema mismatch or a malformed,
  // truncated or inconsistent document.
  static Detector restore(std::string_view doc, const DetectorConfig& config);

private:
  Detector(DetectorConfig config, RunningGaussian direct, RunningGaussian mirror, TimedBuffer buffer,
           std::deque<ScoreEntry> scores, Timestamp start, Timestamp last);

  void learn(const Sample& s);

  DetectorConfig config_;
  // Standard-normal quantile at q/2 + 1/2; limits scale it by each model.
  double z_upper_;
  RunningGaussian direct_;
  RunningGaussian mirror_;
  TimedBuffer buffer_;
  std::deque<ScoreEntry> scores_;
  Timestamp start_time_;
  Timestamp last_time_;
};

} // namespace dpl
