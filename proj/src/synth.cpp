#include "dpl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dpl/error.hpp"
#include "dpl/stream_io.hpp"

namespace dpl {

namespace {

using namespace std::chrono_literals;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

bool active(const ScenarioEvent& e, Duration t) { return t >= e.start && t < e.start + e.length; }

double require_number(std::string_view key, std::string_view text) {
  const std::string buf(trim(text));
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v)) {
    throw InvalidArgument("scenario: '" + std::string(key) + "' needs a number, got '" + buf + "'");
  }
  return v;
}

Duration require_duration(std::string_view key, std::string_view text) {
  const auto d = parse_duration(text);
  if (!d) throw InvalidArgument("scenario: '" + std::string(key) + "' needs a duration, got '" + std::string(text) + "'");
  return *d;
}

} // namespace

const char* to_string(Label l) {
  switch (l) {
    case Label::normal: return "normal";
    case Label::anomaly: return "anomaly";
    case Label::change_point: return "change_point";
  }
  return "normal";
}

const char* to_string(EventType t) {
  switch (t) {
    case EventType::spike: return "spike";
    case EventType::step: return "step";
    case EventType::fault_stuck: return "fault_stuck";
    case EventType::oscillation: return "oscillation";
    case EventType::dropout: return "dropout";
  }
  return "spike";
}

std::optional<Label> parse_label(std::string_view s) {
  s = trim(s);
  if (s == "normal") return Label::normal;
  if (s == "anomaly") return Label::anomaly;
  if (s == "change_point") return Label::change_point;
  return std::nullopt;
}

std::optional<EventType> parse_event_type(std::string_view s) {
  for (auto t : {EventType::spike, EventType::step, EventType::fault_stuck, EventType::oscillation,
                 EventType::dropout}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

void ScenarioSpec::validate() const {
  if (duration <= Duration::zero()) throw InvalidArgument("scenario: duration must be positive");
  if (sampling_interval <= Duration::zero()) throw InvalidArgument("scenario: sampling interval must be positive");
  if (!(dropout_probability >= 0.0 && dropout_probability < 1.0)) {
    throw InvalidArgument("scenario: dropout probability must lie in [0, 1)");
  }
  if (dropout_probability > 0.0 && dropout_gap <= Duration::zero()) {
    throw InvalidArgument("scenario: dropout gap must be positive");
  }
  if (!std::isfinite(level) || !std::isfinite(noise_std) || noise_std < 0.0 || !std::isfinite(diurnal_amplitude)) {
    throw InvalidArgument("scenario: baseline parameters must be finite and noise_std >= 0");
  }
  if (diurnal_amplitude != 0.0 && diurnal_period <= Duration::zero()) {
    throw InvalidArgument("scenario: diurnal period must be positive");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (!std::isfinite(e.magnitude)) throw InvalidArgument("scenario: event magnitude must be finite");
    if (e.start < Duration::zero() || e.length <= Duration::zero() || e.start + e.length > duration) {
      throw InvalidArgument(std::string("scenario: ") + to_string(e.type) + " event lies outside the scenario");
    }
    if (e.type == EventType::oscillation && e.period <= Duration::zero()) {
      throw InvalidArgument("scenario: oscillation period must be positive");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = events[j];
      const bool overlap = e.start < o.start + o.length && o.start < e.start + e.length;
      // a step only shifts the baseline; other events may ride on its label
      // window, but two steps may not relabel the same span
      const bool step_pair = e.type == EventType::step && o.type == EventType::step;
      const bool involves_step = e.type == EventType::step || o.type == EventType::step;
      if (overlap && (step_pair || !involves_step)) {
        throw InvalidArgument(std::string("scenario: ") + to_string(o.type) + " and " + to_string(e.type) +
                              " events overlap");
      }
    }
  }
}

std::vector<LabeledSample> generate(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 noise_rng(spec.seed);
  std::mt19937_64 dropout_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(spec.duration / spec.sampling_interval) + 1);
  Duration gap_end{-1};

  for (Duration t{0}; t < spec.duration; t += spec.sampling_interval) {
    const double eps = noise(noise_rng);
    if (spec.dropout_probability > 0.0 && t >= gap_end && unit(dropout_rng) < spec.dropout_probability) {
      gap_end = t + spec.dropout_gap;
    }
    if (t < gap_end) continue;

    double baseline = spec.level;
    if (spec.diurnal_amplitude != 0.0) {
      baseline += spec.diurnal_amplitude * std::sin(2.0 * std::numbers::pi * to_seconds(t) /
                                                    to_seconds(spec.diurnal_period));
    }
    Label label = Label::normal;
    bool dropped = false;
    bool stuck = false;
    double stuck_offset = 0.0;
    double disturbance = 0.0;
    for (const auto& e : spec.events) {
      if (e.type == EventType::step) {
        if (t >= e.start) baseline += e.magnitude;
        if (active(e, t) && label == Label::normal) label = Label::change_point;
        continue;
      }
      if (!active(e, t)) continue;
      switch (e.type) {
        case EventType::spike: disturbance += e.magnitude; break;
        case EventType::oscillation:
          disturbance += e.magnitude * std::sin(2.0 * std::numbers::pi * to_seconds(t - e.start) / to_seconds(e.period));
          break;
        case EventType::fault_stuck:
          stuck = true;
          stuck_offset = e.magnitude;
          break;
        case EventType::dropout: dropped = true; break;
        case EventType::step: break;
      }
      if (e.type != EventType::dropout) label = Label::anomaly;
    }
    if (dropped) continue;

    const double value = stuck ? baseline + stuck_offset : baseline + disturbance + spec.noise_std * eps;
    out.push_back({{spec.start_time + t, value}, label});
  }
  return out;
}

ScenarioSpec parse_scenario(std::string_view text) {
  ScenarioSpec spec;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("scenario line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));

    if (key == "start_time") {
      const auto t = parse_timestamp(value);
      if (!t) throw InvalidArgument("scenario: bad start_time");
      spec.start_time = *t;
    } else if (key == "duration") {
      spec.duration = require_duration(key, value);
    } else if (key == "sampling_interval") {
      spec.sampling_interval = require_duration(key, value);
    } else if (key == "dropout_probability") {
      spec.dropout_probability = require_number(key, value);
    } else if (key == "dropout_gap") {
      spec.dropout_gap = require_duration(key, value);
    } else if (key == "level") {
      spec.level = require_number(key, value);
    } else if (key == "noise_std") {
      spec.noise_std = require_number(key, value);
    } else if (key == "diurnal_amplitude") {
      spec.diurnal_amplitude = require_number(key, value);
    } else if (key == "diurnal_period") {
      spec.diurnal_period = require_duration(key, value);
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(std::stoull(std::string(value)));
    } else if (key == "event") {
      std::istringstream parts{std::string(value)};
      std::string type_name;
      parts >> type_name;
      const auto type = parse_event_type(type_name);
      if (!type) throw InvalidArgument("scenario: unknown event type '" + type_name + "'");
      ScenarioEvent e;
      e.type = *type;
      std::string attr;
      while (parts >> attr) {
        const auto aeq = attr.find('=');
        if (aeq == std::string::npos) throw InvalidArgument("scenario: bad event attribute '" + attr + "'");
        const std::string name = attr.substr(0, aeq);
        const std::string v = attr.substr(aeq + 1);
        if (name == "start") e.start = require_duration(name, v);
        else if (name == "length") e.length = require_duration(name, v);
        else if (name == "magnitude") e.magnitude = require_number(name, v);
        else if (name == "period") e.period = require_duration(name, v);
        else throw InvalidArgument("scenario: unknown event attribute '" + name + "'");
      }
      spec.events.push_back(e);
    } else {
      throw InvalidArgument("scenario: unknown key '" + std::string(key) + "'");
    }
  }
  spec.validate();
  return spec;
}

std::string format_scenario(const ScenarioSpec& spec) {
  std::ostringstream out;
  out << "start_time = " << format_timestamp(spec.start_time) << '\n';
  out << "duration = " << format_duration(spec.duration) << '\n';
  out << "sampling_interval = " << format_duration(spec.sampling_interval) << '\n';
  out << "dropout_probability = " << fmt17(spec.dropout_probability) << '\n';
  out << "dropout_gap = " << format_duration(spec.dropout_gap) << '\n';
  out << "level = " << fmt17(spec.level) << '\n';
  out << "noise_std = " << fmt17(spec.noise_std) << '\n';
  out << "diurnal_amplitude = " << fmt17(spec.diurnal_amplitude) << '\n';
  out << "diurnal_period = " << format_duration(spec.diurnal_period) << '\n';
  out << "seed = " << spec.seed << '\n';
  for (const auto& e : spec.events) {
    out << "event = " << to_string(e.type) << " start=" << format_duration(e.start)
        << " length=" << format_duration(e.length) << " magnitude=" << fmt17(e.magnitude);
    if (e.type == EventType::oscillation) out << " period=" << format_duration(e.period);
    out << '\n';
  }
  return out.str();
}

std::string format_labeled_csv(std::span<const LabeledSample> samples) {
  std::string out = "timestamp,value,label\n";
  for (const auto& s : samples) {
    out += format_timestamp(s.sample.timestamp);
    out += ',';
    out += fmt17(s.sample.value);
    out += ',';
    out += to_string(s.label);
    out += '\n';
  }
  return out;
}

std::vector<LabeledSample> parse_labeled_csv(std::string_view text) {
  std::vector<LabeledSample> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<std::size_t> ts_col, value_col, label_col;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = trim(fields[i]);
        if (name == "timestamp") ts_col = i;
        else if (name == "value") value_col = i;
        else if (name == "label") label_col = i;
      }
      if (!ts_col || !value_col || !label_col) {
        throw InvalidArgument("labels file needs timestamp, value and label columns");
      }
      header_seen = true;
      continue;
    }
    const std::size_t need = std::max({*ts_col, *value_col, *label_col});
    if (fields.size() <= need) throw InvalidArgument("labels file line " + std::to_string(line_no) + ": too few columns");
    const auto ts = parse_timestamp(fields[*ts_col]);
    const auto label = parse_label(fields[*label_col]);
    char* end = nullptr;
    const double v = std::strtod(fields[*value_col].c_str(), &end);
    if (!ts || !label || end == fields[*value_col].c_str()) {
      throw InvalidArgument("labels file line " + std::to_string(line_no) + ": malformed record");
    }
    out.push_back({{*ts, v}, *label});
  }
  return out;
}

Metrics evaluate(std::span<const DetectionOutput> outputs, std::span<const LabeledSample> labels,
                 Duration match_window) {
  if (outputs.size() != labels.size()) {
    throw InvalidArgument("evaluate: " + std::to_string(outputs.size()) + " outputs vs " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].timestamp != labels[i].sample.timestamp) {
      throw InvalidArgument("evaluate: record " + std::to_string(i) + " is misaligned (" +
                            format_timestamp(outputs[i].timestamp) + " vs " +
                            format_timestamp(labels[i].sample.timestamp) + ")");
    }
  }

  // indices of records outside warm-up
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!outputs[i].in_warmup) idx.push_back(i);
  }

  Metrics m;
  m.evaluated = idx.size();

  struct Span {
    std::size_t first;  // positions in idx
    std::size_t last;
  };
  std::vector<Span> spans;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Label l = labels[idx[k]].label;
    if (l == Label::normal) continue;
    if (!spans.empty() && spans.back().last + 1 == k && labels[idx[spans.back().first]].label == l) {
      spans.back().last = k;
    } else {
      spans.push_back({k, k});
    }
  }
  for (const auto& s : spans) {
    EventResult e;
    e.label = labels[idx[s.first]].label;
    e.start = outputs[idx[s.first]].timestamp;
    e.end = outputs[idx[s.last]].timestamp;
    m.events.push_back(e);
  }

  std::size_t anomalies = 0;
  std::size_t anomalies_flagged = 0;
  std::size_t normals = 0;
  std::size_t unmatched = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& o = outputs[idx[k]];
    const Label l = labels[idx[k]].label;
    if (l == Label::anomaly) {
      ++anomalies;
      if (o.is_anomaly) ++anomalies_flagged;
    }
    if (l == Label::normal) ++normals;
    if (!o.is_anomaly) continue;
    ++m.flags;
    bool matched = false;
    for (auto& e : m.events) {
      if (o.timestamp + match_window < e.start || o.timestamp > e.end + match_window) continue;
      matched = true;
      const double delay = std::max(0.0, to_seconds(o.timestamp - e.start));
      if (!e.detected || delay < *e.detection_delay) e.detection_delay = delay;
      e.detected = true;
    }
    if (matched) ++m.matched_flags;
    else ++unmatched;
  }

  // change points: adapted at the first in-limits, unflagged sample of the
  // span; settled at the first such sample after the span's last flag
  for (std::size_t s = 0; s < spans.size(); ++s) {
    auto& e = m.events[s];
    if (e.label != Label::change_point) continue;
    auto first_calm = [&](std::size_t from) -> std::optional<double> {
      for (std::size_t k = from; k <= spans[s].last; ++k) {
        const auto& o = outputs[idx[k]];
        if (!o.is_anomaly && o.limits.contains(o.value)) return to_seconds(o.timestamp - e.start);
      }
      return std::nullopt;
    };
    std::optional<std::size_t> last_flag;
    for (std::size_t k = spans[s].first; k <= spans[s].last; ++k) {
      if (outputs[idx[k]].is_anomaly) last_flag = k;
    }
    e.adaptation_time = first_calm(spans[s].first);
    e.settling_time = first_calm(last_flag ? *last_flag + 1 : spans[s].first);
  }

  m.precision = m.flags == 0 ? 1.0 : static_cast<double>(m.matched_flags) / static_cast<double>(m.flags);
  m.recall = anomalies == 0 ? 1.0 : static_cast<double>(anomalies_flagged) / static_cast<double>(anomalies);
  m.false_positive_rate = normals == 0 ? 0.0 : static_cast<double>(unmatched) / static_cast<double>(normals);

  std::size_t detected = 0;
  double delay_sum = 0.0;
  for (const auto& e : m.events) {
    if (e.detected) {
      ++detected;
      delay_sum += *e.detection_delay;
    }
  }
  m.event_recall = m.events.empty() ? 1.0 : static_cast<double>(detected) / static_cast<double>(m.events.size());
  if (detected > 0) m.mean_detection_delay = delay_sum / static_cast<double>(detected);

  auto worst = [&m](std::optional<double> EventResult::*field) -> std::optional<double> {
    std::optional<double> w;
    for (const auto& e : m.events) {
      if (e.label != Label::change_point) continue;
      if (!(e.*field)) return std::nullopt;
      w = std::max(w.value_or(0.0), *(e.*field));
    }
    return w;
  };
  m.adaptation_time = worst(&EventResult::adaptation_time);
  m.settling_time = worst(&EventResult::settling_time);
  return m;
}

std::string format_metrics(const Metrics& m) {
  std::ostringstream out;
  auto opt = [](const std::optional<double>& v) { return v ? fmt9(*v) : std::string("none"); };
  out << "evaluated = " << m.evaluated << '\n';
  out << "flags = " << m.flags << '\n';
  out << "matched_flags = " << m.matched_flags << '\n';
  out << "precision = " << fmt9(m.precision) << '\n';
  out << "recall = " << fmt9(m.recall) << '\n';
  out << "event_recall = " << fmt9(m.event_recall) << '\n';
  out << "false_positive_rate = " << fmt9(m.false_positive_rate) << '\n';
  out << "mean_detection_delay_s = " << opt(m.mean_detection_delay) << '\n';
  out << "adaptation_time_s = " << opt(m.adaptation_time) << '\n';
  out << "settling_time_s = " << opt(m.settling_time) << '\n';
  out << "events = " << m.events.size() << '\n';
  for (const auto& e : m.events) {
    out << "event = " << to_string(e.label) << ' ' << format_timestamp(e.start) << ' ' << format_timestamp(e.end)
        << " detected=" << (e.detected ? "true" : "false") << " delay_s=" << opt(e.detection_delay);
    if (e.label == Label::change_point) {
      out << " adaptation_s=" << opt(e.adaptation_time) << " settling_s=" << opt(e.settling_time);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<DetectionOutput> run_detector(const DetectorConfig& config, std::span<const LabeledSample> samples) {
  std::vector<DetectionOutput> out;
  if (samples.empty()) return out;
  out.reserve(samples.size());
  auto [det, seed] = Detector::start(config, samples.front().sample);
  out.push_back(seed);
  for (std::size_t i = 1; i < samples.size(); ++i) out.push_back(det.process(samples[i].sample));
  return out;
}

std::optional<CaseProfile> parse_case_profile(std::string_view s) {
  if (s == "bess") return CaseProfile::bess;
  if (s == "inverter") return CaseProfile::inverter;
  return std::nullopt;
}

ScenarioSpec case_scenario(CaseProfile profile) {
  using std::chrono::days;
  using std::chrono::hours;
  using std::chrono::minutes;
  ScenarioSpec s;
  s.sampling_interval = minutes{1};
  s.dropout_gap = minutes{10};

  auto add = [&s](EventType type, Duration start, Duration length, double magnitude, Duration period = hours{1}) {
    s.events.push_back({type, start, length, magnitude, period});
  };

  if (profile == CaseProfile::bess) {
    // Average battery cell temperature, normalized; 21 Feb - 26 Mar.
    s.start_time = Timestamp{std::chrono::sys_days{std::chrono::year{2022} / 2 / 21}};
    s.duration = days{33};
    s.dropout_probability = 0.001;
    s.level = 0.5;
    s.noise_std = 0.02;
    s.diurnal_amplitude = 0.01;
    s.seed = 20220221;
    add(EventType::spike, days{10} + hours{12}, minutes{20}, 0.2);        // manipulation, 3 Mar
    add(EventType::spike, days{11} + hours{9}, minutes{30}, 0.25);        // peak, 4 Mar
    add(EventType::step, days{14} + hours{8}, days{2}, 0.1);              // relocation, 7 Mar
    add(EventType::spike, days{17} + hours{13}, minutes{15}, 0.35);       // test events 10-15 Mar
    add(EventType::spike, days{18} + hours{13}, minutes{15}, 0.35);
    add(EventType::fault_stuck, days{19} + hours{10}, hours{1}, -0.3);    // faulty measurement, 12 Mar
    add(EventType::spike, days{20} + hours{13}, minutes{15}, 0.35);
    add(EventType::spike, days{21} + hours{13}, minutes{15}, 0.35);
    add(EventType::spike, days{22} + hours{13}, minutes{15}, 0.35);
    add(EventType::dropout, days{28}, hours{6}, 0.0);                     // packet loss, 21 Mar
    add(EventType::spike, days{30} + hours{11}, hours{1}, 0.3);           // temperature control off
    add(EventType::spike, days{31} + hours{11}, hours{1}, 0.3);
  } else {
    // Inverter temperature; 16 Mar - 17 Apr.
    s.start_time = Timestamp{std::chrono::sys_days{std::chrono::year{2022} / 3 / 16}};
    s.duration = days{32};
    s.dropout_probability = 0.001;
    s.level = 0.4;
    s.noise_std = 0.02;
    s.diurnal_amplitude = 0.04;
    s.seed = 20220316;
    add(EventType::dropout, days{3} + hours{6}, hours{18}, 0.0);             // packet loss before 21 Mar
    add(EventType::spike, days{5} + hours{12}, minutes{20}, 0.3);            // rare temperature events
    add(EventType::spike, days{5} + hours{16}, minutes{20}, 0.3);
    add(EventType::fault_stuck, days{6} + hours{9}, minutes{10}, -0.35);     // faulty readings
    add(EventType::fault_stuck, days{7} + hours{9}, minutes{10}, -0.35);
    add(EventType::oscillation, days{8}, days{5}, 0.06, hours{2});            // until 29 Mar
    add(EventType::fault_stuck, days{13} + hours{9}, minutes{10}, -0.35);
    add(EventType::fault_stuck, days{19} + hours{9}, minutes{10}, -0.35);    // 4 Apr
    for (int d = 22; d < 25; ++d) {                                          // rescaling from 7 Apr
      add(EventType::spike, days{d} + hours{10}, minutes{5}, 0.3);
      add(EventType::spike, days{d} + hours{15}, minutes{5}, -0.3);
    }
  }
  return s;
}

DetectorConfig case_config(CaseProfile profile) {
  DetectorConfig c;
  c.quantile = kThreeSigmaQuantile;
  c.warmup = std::chrono::days{1};
  if (profile == CaseProfile::bess) {
    c.expiration_period = std::chrono::days{7};
    c.time_constant = std::chrono::hours{5};
  } else {
    // Not given for this profile; a shorter memory suits the faster thermal dynamics.
    c.expiration_period = std::chrono::days{3};
    c.time_constant = std::chrono::hours{2};
  }
  return c;
}

CaseStudy replicate_case_study(CaseProfile profile) {
  CaseStudy study;
  study.profile = profile;
  study.scenario = case_scenario(profile);
  study.config = case_config(profile);
  study.samples = generate(study.scenario);
  study.outputs = run_detector(study.config, study.samples);
  study.metrics = evaluate(study.outputs, study.samples, study.match_window);
  return study;
}

void write_case_study(const CaseStudy& study, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("scenario.txt");
    f << format_scenario(study.scenario);
  }
  {
    auto f = open("input.csv");
    f << format_labeled_csv(study.samples);
  }
  {
    auto f = open("detections.csv");
    f << output_header(RecordFormat::csv) << ",label\n";
    for (std::size_t i = 0; i < study.outputs.size(); ++i) {
      f << emit_output(study.outputs[i], RecordFormat::csv) << ',' << to_string(study.samples[i].label) << '\n';
    }
  }
  {
    auto f = open("metrics.txt");
    f << "profile = " << (study.profile == CaseProfile::bess ? "bess" : "inverter") << '\n';
    f << "expiration_period = " << format_duration(study.config.expiration_period) << '\n';
    f << "time_constant = " << format_duration(study.config.time_constant) << '\n';
    f << "quantile = " << fmt9(study.config.quantile) << '\n';
    f << format_metrics(study.metrics);
    if (!f) throw IoError("failed writing metrics.txt");
  }
}

} // namespace dpl
