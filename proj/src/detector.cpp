#include "dpl/detector.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "dpl/error.hpp"

namespace dpl {

void DetectorConfig::validate() const {
  if (time_constant <= Duration::zero()) {
    throw InvalidArgument("DetectorConfig: time constant must be positive");
  }
  if (expiration_period <= time_constant) {
    throw InvalidArgument("DetectorConfig: expiration period must exceed the time constant");
  }
  if (!(quantile > 0.5 && quantile < 1.0)) {
    throw InvalidArgument("DetectorConfig: quantile must lie in (0.5, 1)");
  }
  if (warmup < Duration::zero()) {
    throw InvalidArgument("DetectorConfig: warmup must be non-negative");
  }
  if (!(variance_floor > 0.0) || !std::isfinite(variance_floor)) {
    throw InvalidArgument("DetectorConfig: variance floor must be positive");
  }
}

bool adaptation_condition(const std::deque<ScoreEntry>& window, double q) {
  if (window.size() < 2) return false;
  double sum = 0.0;
  for (const auto& e : window) sum += e.score;
  return sum / static_cast<double>(window.size()) > q;
}

double anomaly_score(double x, const GaussianParams& params) {
  return 2.0 * std::fabs(cdf(x, params) - 0.5);
}

Detector::Detector(DetectorConfig config, Sample first)
    : config_((config.validate(), config)),
      z_upper_(ppf(config_.quantile / 2.0 + 0.5, kStandardNormal)),
      direct_(first.value),
      mirror_(-first.value),
      buffer_(config.expiration_period),
      start_time_(first.timestamp),
      last_time_(first.timestamp) {}

Detector::Detector(DetectorConfig config, RunningGaussian direct, RunningGaussian mirror, TimedBuffer buffer,
                   std::deque<ScoreEntry> scores, Timestamp start, Timestamp last)
    : config_(config),
      z_upper_(ppf(config_.quantile / 2.0 + 0.5, kStandardNormal)),
      direct_(direct),
      mirror_(mirror),
      buffer_(std::move(buffer)),
      scores_(std::move(scores)),
      start_time_(start),
      last_time_(last) {}

std::pair<Detector, DetectionOutput> Detector::start(DetectorConfig config, Sample first) {
  Detector det(config, first);
  DetectionOutput out;
  out.timestamp = first.timestamp;
  out.value = first.value;
  out.score = det.score(first.value);
  out.limits = det.limits();
  out.in_warmup = det.in_warmup(first.timestamp);
  out.learned = true;
  return {std::move(det), out};
}

GaussianParams Detector::direct_params() const {
  return {direct_.mean(), direct_.variance(config_.variance_floor)};
}

GaussianParams Detector::mirror_params() const {
  return {mirror_.mean(), mirror_.variance(config_.variance_floor)};
}

double Detector::score(double x) const { return anomaly_score(x, direct_params()); }

// Same arithmetic as ppf(q/2 + 1/2, params), with the root found once.
ProcessLimits Detector::limits() const {
  const GaussianParams d = direct_params();
  const GaussianParams m = mirror_params();
  return {-(z_upper_ * std::sqrt(m.variance) + m.mean), z_upper_ * std::sqrt(d.variance) + d.mean};
}

bool Detector::adaptation_condition() const { return dpl::adaptation_condition(scores_, config_.quantile); }

bool Detector::in_warmup(Timestamp t) const { return t - start_time_ < config_.warmup; }

void Detector::learn(const Sample& s) {
  direct_.update(s.value);
  mirror_.update(-s.value);
  buffer_.push(s);
  while (buffer_.front_expired(s.timestamp) && direct_.can_revert()) {
    const double old = buffer_.front().value;
    direct_.revert(old);
    mirror_.revert(-old);
    buffer_.pop_front();
  }
}

DetectionOutput Detector::process(Sample sample) {
  if (!std::isfinite(sample.value)) {
    throw InvalidArgument("Detector::process: value is not finite");
  }

  DetectionOutput out;
  out.timestamp_clamped = sample.timestamp < last_time_;
  if (out.timestamp_clamped) sample.timestamp = last_time_;
  last_time_ = sample.timestamp;

  out.timestamp = sample.timestamp;
  out.value = sample.value;
  out.score = score(sample.value);
  out.limits = limits();
  out.in_warmup = in_warmup(sample.timestamp);

  scores_.push_back({sample.timestamp, out.score});
  const Timestamp horizon = sample.timestamp - config_.time_constant;
  while (!scores_.empty() && scores_.front().timestamp <= horizon) scores_.pop_front();

  const bool normal = out.score < config_.quantile;
  out.learned = normal || out.in_warmup;
  if (!out.learned && adaptation_condition()) {
    out.learned = true;
    out.adapted = true;
  }
  if (out.learned) learn(sample);

  out.is_anomaly = !normal && !out.in_warmup;
  return out;
}

// Snapshot document

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<double> read_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Document {
  std::map<std::string, std::string> scalars;
  std::vector<std::string> buffer;
  std::vector<std::string> scores;
  bool terminated = false;
};

Document parse_document(std::string_view doc) {
  Document d;
  std::istringstream in{std::string(doc)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line == "end") {
      d.terminated = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SnapshotError("snapshot: malformed line '" + line + "'");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "buffer") {
      d.buffer.push_back(std::move(value));
    } else if (key == "score_window") {
      d.scores.push_back(std::move(value));
    } else if (!d.scalars.emplace(std::move(key), std::move(value)).second) {
      throw SnapshotError("snapshot: duplicate key '" + line.substr(0, eq) + "'");
    }
  }
  return d;
}

const std::string& require(const Document& d, const std::string& key) {
  const auto it = d.scalars.find(key);
  if (it == d.scalars.end()) throw SnapshotError("snapshot: missing key '" + key + "'");
  return it->second;
}

double require_double(const Document& d, const std::string& key) {
  const auto v = read_double(require(d, key));
  if (!v) throw SnapshotError("snapshot: '" + key + "' is not a finite number");
  return *v;
}

std::size_t require_count(const Document& d, const std::string& key) {
  const std::string& s = require(d, key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || s.front() == '-') {
    throw SnapshotError("snapshot: '" + key + "' is not a count");
  }
  return static_cast<std::size_t>(v);
}

Timestamp require_time(const Document& d, const std::string& key) {
  const auto t = parse_timestamp(require(d, key));
  if (!t) throw SnapshotError("snapshot: '" + key + "' is not a timestamp");
  return *t;
}

Duration require_duration(const Document& d, const std::string& key) {
  const auto v = parse_duration(require(d, key));
  if (!v) throw SnapshotError("snapshot: '" + key + "' is not a duration");
  return *v;
}

std::pair<Timestamp, double> parse_entry(const std::string& s, const char* what) {
  const auto sp = s.find(' ');
  if (sp == std::string::npos) throw SnapshotError(std::string("snapshot: malformed ") + what + " entry");
  const auto t = parse_timestamp(s.substr(0, sp));
  const auto v = read_double(s.substr(sp + 1));
  if (!t || !v) throw SnapshotError(std::string("snapshot: malformed ") + what + " entry '" + s + "'");
  return {*t, *v};
}

RunningGaussian require_stats(const Document& d, const std::string& prefix) {
  try {
    return RunningGaussian::from_parts(require_count(d, prefix + ".count"), require_double(d, prefix + ".mean"),
                                       require_double(d, prefix + ".sum_sq"));
  } catch (const InvalidArgument& e) {
    throw SnapshotError(std::string("snapshot: ") + prefix + ": " + e.what());
  }
}

void write_stats(std::ostringstream& out, const char* prefix, const RunningGaussian& s) {
  out << prefix << ".count=" << s.count() << '\n';
  out << prefix << ".mean=" << fmt_double(s.mean()) << '\n';
  out << prefix << ".sum_sq=" << fmt_double(s.sum_sq()) << '\n';
}

} // namespace

std::string Detector::snapshot() const {
  std::ostringstream out;
  out << "# dynamic process limits detector state\n";
  out << "schema_version=" << kSnapshotSchemaVersion << '\n';
  out << "config.expiration_period=" << format_duration(config_.expiration_period) << '\n';
  out << "config.time_constant=" << format_duration(config_.time_constant) << '\n';
  out << "config.quantile=" << fmt_double(config_.quantile) << '\n';
  out << "config.warmup=" << format_duration(config_.warmup) << '\n';
  out << "config.variance_floor=" << fmt_double(config_.variance_floor) << '\n';
  out << "start_time=" << format_timestamp(start_time_) << '\n';
  out << "last_time=" << format_timestamp(last_time_) << '\n';
  write_stats(out, "stats_direct", direct_);
  write_stats(out, "stats_mirror", mirror_);
  out << "buffer.size=" << buffer_.size() << '\n';
  for (const auto& s : buffer_.entries()) {
    out << "buffer=" << format_timestamp(s.timestamp) << ' ' << fmt_double(s.value) << '\n';
  }
  out << "score_window.size=" << scores_.size() << '\n';
  for (const auto& e : scores_) {
    out << "score_window=" << format_timestamp(e.timestamp) << ' ' << fmt_double(e.score) << '\n';
  }
  out << "end\n";
  return out.str();
}

Detector Detector::restore(std::string_view doc, const DetectorConfig& config) {
  config.validate();
  const Document d = parse_document(doc);

  const std::string& version = require(d, "schema_version");
  if (version != std::to_string(kSnapshotSchemaVersion)) {
    throw SnapshotError("snapshot: schema version " + version + " is not supported (expected " +
                        std::to_string(kSnapshotSchemaVersion) + ")");
  }
  if (!d.terminated) throw SnapshotError("snapshot: document is truncated (no end marker)");

  DetectorConfig echoed;
  echoed.expiration_period = require_duration(d, "config.expiration_period");
  echoed.time_constant = require_duration(d, "config.time_constant");
  echoed.quantile = require_double(d, "config.quantile");
  echoed.warmup = require_duration(d, "config.warmup");
  echoed.variance_floor = require_double(d, "config.variance_floor");
  if (!(echoed == config)) {
    throw SnapshotError("snapshot: stored config does not match the requested config");
  }

  const Timestamp start = require_time(d, "start_time");
  const Timestamp last = require_time(d, "last_time");
  const RunningGaussian direct = require_stats(d, "stats_direct");
  const RunningGaussian mirror = require_stats(d, "stats_mirror");

  const std::size_t buffer_size = require_count(d, "buffer.size");
  const std::size_t window_size = require_count(d, "score_window.size");
  if (d.buffer.size() != buffer_size || d.scores.size() != window_size) {
    throw SnapshotError("snapshot: entry count does not match the declared size");
  }
  if (direct.count() != buffer_size + 1 || mirror.count() != direct.count()) {
    throw SnapshotError("snapshot: model counts are inconsistent with the buffer");
  }

  TimedBuffer buffer(config.expiration_period);
  for (const auto& line : d.buffer) {
    const auto [t, v] = parse_entry(line, "buffer");
    try {
      buffer.push({t, v});
    } catch (const InvalidArgument&) {
      throw SnapshotError("snapshot: buffer entries out of order");
    }
  }
  std::deque<ScoreEntry> scores;
  for (const auto& line : d.scores) {
    const auto [t, y] = parse_entry(line, "score_window");
    if (!scores.empty() && t < scores.back().timestamp) {
      throw SnapshotError("snapshot: score window entries out of order");
    }
    scores.push_back({t, y});
  }

  return Detector(config, direct, mirror, std::move(buffer), std::move(scores), start, last);
}

} // namespace dpl
