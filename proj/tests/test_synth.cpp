#include "dpl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dpl/error.hpp"
#include "dpl/stream_io.hpp"

using namespace dpl;
using namespace std::chrono_literals;

namespace {

ScenarioSpec quiet_day() {
  ScenarioSpec s;
  s.duration = std::chrono::days{1};
  s.sampling_interval = 1min;
  s.level = 2.0;
  s.noise_std = 0.0;
  s.seed = 1;
  return s;
}

std::size_t count_label(const std::vector<LabeledSample>& v, Label l) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [l](const auto& s) { return s.label == l; }));
}

DetectionOutput output_at(Timestamp t, bool flagged) {
  DetectionOutput o;
  o.timestamp = t;
  o.is_anomaly = flagged;
  o.limits = {-1.0, 1.0};
  return o;
}

} // namespace

TEST(Generate, ZeroNoiseIsConstant) {
  const auto v = generate(quiet_day());
  ASSERT_EQ(v.size(), 1440u);
  for (const auto& s : v) {
    EXPECT_EQ(s.sample.value, 2.0);
    EXPECT_EQ(s.label, Label::normal);
  }
  EXPECT_EQ(v.front().sample.timestamp, quiet_day().start_time);
  EXPECT_EQ(v.back().sample.timestamp - v.front().sample.timestamp, Duration{1439min});
}

TEST(Generate, SingleSampleSpike) {
  auto spec = quiet_day();
  spec.noise_std = 0.1;
  spec.events.push_back({EventType::spike, 600min, 1min, 1.0});
  const auto v = generate(spec);
  EXPECT_EQ(count_label(v, Label::anomaly), 1u);
  EXPECT_EQ(v[600].label, Label::anomaly);
  EXPECT_GT(v[600].sample.value, 2.5);
}

TEST(Generate, StepLabelsChangePointThenNormal) {
  auto spec = quiet_day();
  spec.duration = std::chrono::days{3};
  spec.noise_std = 0.1;
  spec.events.push_back({EventType::step, Duration{std::chrono::days{1}}, Duration{std::chrono::days{1}}, 0.5});
  const auto v = generate(spec);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Label want = i < 1440 ? Label::normal : i < 2880 ? Label::change_point : Label::normal;
    ASSERT_EQ(v[i].label, want) << i;
  }
  double late = 0.0;
  for (std::size_t i = 2880; i < v.size(); ++i) late += v[i].sample.value;
  EXPECT_NEAR(late / static_cast<double>(v.size() - 2880), 2.5, 0.02);
}

TEST(Generate, StuckFaultAndDropout) {
  auto spec = quiet_day();
  spec.noise_std = 0.1;
  spec.events.push_back({EventType::fault_stuck, 100min, 10min, -1.0});
  spec.events.push_back({EventType::dropout, 300min, 60min, 0.0});
  const auto v = generate(spec);
  EXPECT_EQ(v.size(), 1440u - 60u);
  for (std::size_t i = 100; i < 110; ++i) {
    EXPECT_EQ(v[i].sample.value, 1.0);
    EXPECT_EQ(v[i].label, Label::anomaly);
  }
  EXPECT_EQ(v[300].sample.timestamp - v[299].sample.timestamp, Duration{61min});
}

TEST(Generate, RandomDropoutMakesGaps) {
  auto spec = quiet_day();
  spec.dropout_probability = 0.01;
  spec.dropout_gap = 10min;
  const auto v = generate(spec);
  EXPECT_LT(v.size(), 1440u);
  bool gap = false;
  for (std::size_t i = 1; i < v.size(); ++i) gap = gap || v[i].sample.timestamp - v[i - 1].sample.timestamp > 1min;
  EXPECT_TRUE(gap);
}

TEST(Generate, DeterministicPerSeed) {
  auto spec = case_scenario(CaseProfile::inverter);
  const auto a = format_labeled_csv(generate(spec));
  EXPECT_EQ(a, format_labeled_csv(generate(spec)));
  spec.seed += 1;
  EXPECT_NE(a, format_labeled_csv(generate(spec)));
}

TEST(Generate, RejectsContradictoryEvents) {
  auto spec = quiet_day();
  spec.events.push_back({EventType::spike, 100min, 30min, 1.0});
  spec.events.push_back({EventType::fault_stuck, 120min, 30min, -1.0});
  EXPECT_THROW(generate(spec), InvalidArgument);

  spec.events = {{EventType::spike, 1430min, 30min, 1.0}};
  EXPECT_THROW(generate(spec), InvalidArgument);

  spec.events = {{EventType::step, 100min, 60min, 1.0}, {EventType::step, 130min, 60min, 1.0}};
  EXPECT_THROW(generate(spec), InvalidArgument);

  spec.events = {{EventType::step, 100min, 60min, 1.0}, {EventType::spike, 130min, 5min, 1.0}};
  EXPECT_NO_THROW(generate(spec));
}

TEST(Scenario, TextRoundTrip) {
  const auto spec = case_scenario(CaseProfile::bess);
  const std::string text = format_scenario(spec);
  const auto back = parse_scenario(text);
  EXPECT_EQ(format_scenario(back), text);
  EXPECT_EQ(format_labeled_csv(generate(back)), format_labeled_csv(generate(spec)));
}

TEST(Scenario, ParsesDocumentedForm) {
  const auto spec = parse_scenario(R"(# two days of a flat signal
duration = 2d
sampling_interval = 1m
level = 0.5   # normalized
noise_std = 0.01
seed = 7
event = spike start=1d12h length=20m magnitude=0.2
event = oscillation start=6h length=2h magnitude=0.05 period=30m
)");
  EXPECT_EQ(spec.duration, Duration{48h});
  EXPECT_EQ(spec.level, 0.5);
  ASSERT_EQ(spec.events.size(), 2u);
  EXPECT_EQ(spec.events[0].start, Duration{36h});
  EXPECT_EQ(spec.events[1].period, Duration{30min});
  EXPECT_THROW(parse_scenario("colour = blue\n"), InvalidArgument);
  EXPECT_THROW(parse_scenario("event = jump start=1h length=1m magnitude=1\n"), InvalidArgument);
  EXPECT_THROW(parse_scenario("duration = soon\n"), InvalidArgument);
}

TEST(LabeledCsv, RoundTrip) {
  auto spec = quiet_day();
  spec.noise_std = 0.3;
  spec.events.push_back({EventType::spike, 60min, 5min, 2.0});
  const auto v = generate(spec);
  const auto back = parse_labeled_csv(format_labeled_csv(v));
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(back[i].sample.timestamp, v[i].sample.timestamp);
    EXPECT_EQ(back[i].sample.value, v[i].sample.value);
    EXPECT_EQ(back[i].label, v[i].label);
  }
}

TEST(Evaluate, PerfectFlags) {
  auto spec = quiet_day();
  spec.noise_std = 0.1;
  spec.events.push_back({EventType::spike, 100min, 5min, 5.0});
  spec.events.push_back({EventType::spike, 700min, 1min, 5.0});
  const auto v = generate(spec);
  std::vector<DetectionOutput> out;
  for (const auto& s : v) out.push_back(output_at(s.sample.timestamp, s.label == Label::anomaly));
  const auto m = evaluate(out, v, 10min);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.event_recall, 1.0);
  EXPECT_EQ(m.false_positive_rate, 0.0);
  EXPECT_EQ(m.events.size(), 2u);
  EXPECT_EQ(m.mean_detection_delay, 0.0);
}

TEST(Evaluate, NoFlags) {
  auto spec = quiet_day();
  spec.events.push_back({EventType::spike, 100min, 5min, 5.0});
  const auto v = generate(spec);
  std::vector<DetectionOutput> out;
  for (const auto& s : v) out.push_back(output_at(s.sample.timestamp, false));
  const auto m = evaluate(out, v, 10min);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.flags, 0u);
  EXPECT_EQ(m.event_recall, 0.0);
  EXPECT_FALSE(m.mean_detection_delay);
}

TEST(Evaluate, OneSpuriousFlag) {
  auto spec = quiet_day();
  spec.duration = 1000min;
  const auto v = generate(spec);
  ASSERT_EQ(v.size(), 1000u);
  std::vector<DetectionOutput> out;
  for (const auto& s : v) out.push_back(output_at(s.sample.timestamp, false));
  out[500].is_anomaly = true;
  const auto m = evaluate(out, v, 10min);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_DOUBLE_EQ(m.false_positive_rate, 1.0 / 1000.0);
}

TEST(Evaluate, WarmupIsExcluded) {
  const auto v = generate(quiet_day());
  std::vector<DetectionOutput> out;
  for (const auto& s : v) out.push_back(output_at(s.sample.timestamp, false));
  for (std::size_t i = 0; i < 100; ++i) {
    out[i].in_warmup = true;
    out[i].is_anomaly = true;
  }
  const auto m = evaluate(out, v, 10min);
  EXPECT_EQ(m.evaluated, 1340u);
  EXPECT_EQ(m.flags, 0u);
}

TEST(Evaluate, MatchWindowAndDelay) {
  auto spec = quiet_day();
  spec.events.push_back({EventType::spike, 100min, 10min, 5.0});
  const auto v = generate(spec);
  std::vector<DetectionOutput> out;
  for (const auto& s : v) out.push_back(output_at(s.sample.timestamp, false));
  out[103].is_anomaly = true;  // inside, 3 min late
  out[115].is_anomaly = true;  // 6 min after the last labelled sample
  out[140].is_anomaly = true;  // too far
  const auto m = evaluate(out, v, 10min);
  EXPECT_EQ(m.matched_flags, 2u);
  EXPECT_EQ(m.events[0].detection_delay, 180.0);
  EXPECT_EQ(m.recall, 0.1);
}

TEST(Evaluate, ChangePointTimes) {
  auto spec = quiet_day();
  spec.events.push_back({EventType::step, 100min, 100min, 5.0});
  const auto v = generate(spec);
  std::vector<DetectionOutput> out;
  for (const auto& s : v) {
    auto o = output_at(s.sample.timestamp, false);
    o.value = 0.0;
    out.push_back(o);
  }
  for (std::size_t i = 100; i < 130; ++i) out[i].is_anomaly = true;
  out[110].is_anomaly = false;  // an early calm sample
  out[150].is_anomaly = true;
  const auto m = evaluate(out, v, 10min);
  ASSERT_EQ(m.events.size(), 1u);
  EXPECT_EQ(m.events[0].label, Label::change_point);
  EXPECT_EQ(m.adaptation_time, 600.0);
  EXPECT_EQ(m.settling_time, 51.0 * 60.0);
}

TEST(Evaluate, MisalignedInputIsAnError) {
  const auto v = generate(quiet_day());
  std::vector<DetectionOutput> out;
  for (const auto& s : v) out.push_back(output_at(s.sample.timestamp + 1s, false));
  EXPECT_THROW(evaluate(out, v, 10min), InvalidArgument);
  out.pop_back();
  EXPECT_THROW(evaluate(out, v, 10min), InvalidArgument);
}

TEST(CaseStudy, BessNarrative) {
  const auto study = replicate_case_study(CaseProfile::bess);
  const auto& m = study.metrics;
  const auto& cfg = study.config;
  EXPECT_EQ(cfg.expiration_period, Duration{std::chrono::days{7}});
  EXPECT_EQ(cfg.time_constant, Duration{5h});
  EXPECT_EQ(cfg.quantile, 0.9973);

  ASSERT_TRUE(m.adaptation_time.has_value());
  EXPECT_LE(*m.adaptation_time, 1.5 * 86400.0);
  ASSERT_TRUE(m.settling_time.has_value());
  EXPECT_LE(*m.settling_time, to_seconds(cfg.expiration_period));

  // spikes are at least 5 sigma of the noise and must all be caught
  for (const auto& e : m.events) {
    if (e.label == Label::anomaly) EXPECT_TRUE(e.detected) << format_timestamp(e.start);
  }

  // the stuck sensor is flagged throughout and does not move the limits
  const auto& spec = study.scenario;
  const auto stuck = std::find_if(spec.events.begin(), spec.events.end(),
                                  [](const auto& e) { return e.type == EventType::fault_stuck; });
  ASSERT_NE(stuck, spec.events.end());
  const Timestamp from = spec.start_time + stuck->start;
  const Timestamp to = from + stuck->length;
  std::optional<std::size_t> first;
  std::optional<std::size_t> after;
  for (std::size_t i = 0; i < study.outputs.size(); ++i) {
    const auto& o = study.outputs[i];
    if (o.timestamp >= from && o.timestamp < to) {
      if (!first) first = i;
      EXPECT_TRUE(o.is_anomaly);
      EXPECT_FALSE(o.learned);
    }
    if (o.timestamp >= to && !after) after = i;
  }
  ASSERT_TRUE(first && after);
  const auto& before = study.outputs[*first];
  const double sd = (before.limits.upper - before.limits.lower) / 6.0;
  EXPECT_LE(std::fabs(study.outputs[*after].limits.upper - before.limits.upper), 0.2 * sd);
  EXPECT_LE(std::fabs(study.outputs[*after].limits.lower - before.limits.lower), 0.2 * sd);
}

TEST(CaseStudy, InverterNarrative) {
  const auto study = replicate_case_study(CaseProfile::inverter);
  EXPECT_EQ(study.metrics.event_recall, 1.0);
  EXPECT_LE(study.metrics.false_positive_rate, 0.01);
  // a long dropout leaves a gap in the stream
  Duration longest{0};
  for (std::size_t i = 1; i < study.samples.size(); ++i) {
    longest = std::max(longest, study.samples[i].sample.timestamp - study.samples[i - 1].sample.timestamp);
  }
  EXPECT_GE(longest, Duration{18h});
}

TEST(CaseStudy, WritesPlotReadyFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "dpl_case_study_test";
  std::filesystem::remove_all(dir);
  const auto study = replicate_case_study(CaseProfile::inverter);
  write_case_study(study, dir);
  for (const char* f : {"scenario.txt", "input.csv", "detections.csv", "metrics.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream det(dir / "detections.csv");
  const auto rows = read_emitted_csv(det);
  ASSERT_EQ(rows.size(), study.outputs.size());
  EXPECT_EQ(rows[0].extra, std::vector<std::string>{"normal"});
  for (std::size_t i = 0; i < rows.size(); i += 997) {
    EXPECT_EQ(rows[i].output.is_anomaly, study.outputs[i].is_anomaly);
    EXPECT_EQ(rows[i].extra[0], to_string(study.samples[i].label));
  }
  std::filesystem::remove_all(dir);
}

TEST(FalsePositiveBudget, AllNormalStream) {
  DetectorConfig cfg;
  cfg.expiration_period = std::chrono::days{7};
  cfg.time_constant = 5h;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ScenarioSpec spec;
    spec.duration = std::chrono::minutes{1440 + 100000};
    spec.sampling_interval = 1min;
    spec.level = 10.0;
    spec.noise_std = 1.0;
    spec.seed = seed;
    const auto samples = generate(spec);
    const auto out = run_detector(cfg, samples);
    std::size_t n = 0;
    std::size_t flags = 0;
    for (const auto& o : out) {
      if (o.in_warmup) continue;
      ++n;
      flags += o.is_anomaly;
    }
    ASSERT_EQ(n, 100000u);
    EXPECT_LE(static_cast<double>(flags) / static_cast<double>(n), 0.01) << "seed " << seed;
  }
}
