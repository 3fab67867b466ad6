#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpl/detector.hpp"

namespace dpl {

enum class Label { normal, anomaly, change_point };
enum class EventType { spike, step, fault_stuck, oscillation, dropout };

const char* to_string(Label l);
const char* to_string(EventType t);
std::optional<Label> parse_label(std::string_view s);
std::optional<EventType> parse_event_type(std::string_view s);

// An injected disturbance. Offsets are relative to the scenario start.
//   spike        adds `magnitude` while active; labelled anomaly
//   step         adds `magnitude` from `start` to the end of the stream;
//                samples in [start, start + length) are labelled change_point
//   fault_stuck  sensor reads baseline + magnitude with no noise; anomaly
//   oscillation  adds magnitude * sin(2 pi (t - start) / period); anomaly
//   dropout      no samples are produced while active
struct ScenarioEvent {
  EventType type = EventType::spike;
  Duration start{0};
  Duration length{0};
  double magnitude = 0.0;
  Duration period{std::chrono::hours{1}};
};

struct ScenarioSpec {
  Timestamp start_time{std::chrono::sys_days{std::chrono::year{2022} / 2 / 21}};
  Duration duration{std::chrono::days{1}};
  Duration sampling_interval{std::chrono::minutes{1}};
  // Each tick starts a random packet-loss gap of dropout_gap with this probability.
  double dropout_probability = 0.0;
  Duration dropout_gap{std::chrono::minutes{10}};
  double level = 0.0;
  double noise_std = 1.0;
  double diurnal_amplitude = 0.0;
  Duration diurnal_period{std::chrono::days{1}};
  std::vector<ScenarioEvent> events;
  std::uint64_t seed = 0;

  // Throws InvalidArgument for non-positive durations, events outside the
  // scenario, or overlapping events that would contradict each other.
  void validate() const;
};

struct LabeledSample {
  Sample sample;
  Label label = Label::normal;
};

// Deterministic for a fixed spec (seed included).
std::vector<LabeledSample> generate(const ScenarioSpec& spec);

// Key = value text form:
//   duration = 30d
//   sampling_interval = 1m
//   level = 0.5
//   event = spike start=3d12h length=20m magnitude=0.2
// Durations accept the CLI suffixes; compound forms like 3d12h are allowed
// in event offsets. Throws InvalidArgument on unknown keys or bad values.
ScenarioSpec parse_scenario(std::string_view text);
std::string format_scenario(const ScenarioSpec& spec);

// Plain CSV: timestamp,value,label.
std::string format_labeled_csv(std::span<const LabeledSample> samples);
std::vector<LabeledSample> parse_labeled_csv(std::string_view text);

struct EventResult {
  Label label = Label::anomaly;
  Timestamp start;
  Timestamp end;  // last labelled sample
  bool detected = false;
  std::optional<double> detection_delay;  // seconds
  // Change points only, in seconds from onset. adaptation_time: first sample
  // inside its limits and unflagged. settling_time: first such sample after
  // the last flag of the span.
  std::optional<double> adaptation_time;
  std::optional<double> settling_time;
};

struct Metrics {
  double precision = 1.0;
  double recall = 1.0;
  double event_recall = 1.0;
  double false_positive_rate = 0.0;
  std::optional<double> mean_detection_delay;  // seconds
  // Worst change-point adaptation and settling times in seconds; empty when
  // a change point never got there or there is none.
  std::optional<double> adaptation_time;
  std::optional<double> settling_time;
  std::size_t evaluated = 0;
  std::size_t flags = 0;
  std::size_t matched_flags = 0;
  std::vector<EventResult> events;
};

// Scores detector output against generator labels. Records must be aligned
// one-to-one by timestamp (throws InvalidArgument otherwise). Warm-up records
// are ignored. Events are maximal runs of equal non-normal labels; a flag
// within match_window of an event's span belongs to that event. With no
// flags precision is reported as 1.
Metrics evaluate(std::span<const DetectionOutput> outputs, std::span<const LabeledSample> labels,
                 Duration match_window);

std::string format_metrics(const Metrics& m);

// Runs a fresh detector over the samples (first sample seeds it).
std::vector<DetectionOutput> run_detector(const DetectorConfig& config, std::span<const LabeledSample> samples);

enum class CaseProfile { bess, inverter };
std::optional<CaseProfile> parse_case_profile(std::string_view s);

struct CaseStudy {
  CaseProfile profile = CaseProfile::bess;
  ScenarioSpec scenario;
  DetectorConfig config;
  Duration match_window{std::chrono::minutes{10}};
  std::vector<LabeledSample> samples;
  std::vector<DetectionOutput> outputs;
  Metrics metrics;
};

ScenarioSpec case_scenario(CaseProfile profile);
DetectorConfig case_config(CaseProfile profile);

// Generates the profile's scenario, runs the detector and evaluates it.
CaseStudy replicate_case_study(CaseProfile profile);

// Writes scenario.txt, input.csv, detections.csv (emit format plus a label
// column) and metrics.txt into dir.
void write_case_study(const CaseStudy& study, const std::filesystem::path& dir);

} // namespace dpl
