// dpl: streaming anomaly detection with dynamic process limits.
//
//   dpl detect    --input data.csv --t-e 7d --t-c 5h ...
//   dpl synth     --scenario scenario.txt --output stream.csv
//   dpl eval      --detections out.csv --labels stream.csv
//   dpl replicate --profile bess --output-dir runs/bess

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dpl/error.hpp"
#include "dpl/stream_io.hpp"
#include "dpl/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStartup = 1;
constexpr int kExitIo = 2;

struct StartupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw StartupError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

dpl::Duration duration_arg(const std::string& flag, const std::string& text) {
  const auto d = dpl::parse_duration(text);
  if (!d) throw StartupError(flag + ": invalid duration '" + text + "' (try 7d, 5h, 90s)");
  return *d;
}

dpl::RecordFormat format_arg(const std::string& flag, const std::string& text) {
  const auto f = dpl::parse_record_format(text);
  if (!f) throw StartupError(flag + ": expected csv or ndjson, got '" + text + "'");
  return *f;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw dpl::IoError("cannot write snapshot " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw dpl::IoError("cannot move snapshot into place: " + ec.message());
}

struct DetectArgs {
  std::string input = "-";
  std::string format = "csv";
  std::string timestamp_field = "timestamp";
  std::string value_field = "value";
  std::string timestamp_format = "auto";
  std::string signal_field;
  std::string t_e;
  std::string t_c;
  double q = dpl::kThreeSigmaQuantile;
  std::string warmup = "1d";
  std::string snapshot;
  std::size_t snapshot_every = 0;
  std::string restore;
  std::string output = "-";
  std::string output_format = "csv";
  bool realtime = false;
  std::string prescale;
};

int run_detect(const DetectArgs& a) {
  dpl::StreamOptions opt;
  std::ifstream in_file;
  std::ofstream out_file;
  try {
    opt.input_format = format_arg("--format", a.format);
    opt.output_format = format_arg("--output-format", a.output_format);
    opt.mapping.timestamp_field = a.timestamp_field;
    opt.mapping.value_field = a.value_field;
    if (a.timestamp_format == "auto") opt.mapping.timestamp_format = dpl::TimestampFormat::automatic;
    else if (a.timestamp_format == "iso8601") opt.mapping.timestamp_format = dpl::TimestampFormat::iso8601;
    else if (a.timestamp_format == "epoch") opt.mapping.timestamp_format = dpl::TimestampFormat::epoch_seconds;
    else throw StartupError("--timestamp-format: expected auto, iso8601 or epoch");
    if (!a.signal_field.empty()) opt.mapping.signal_id_field = a.signal_field;

    opt.detector.expiration_period = duration_arg("--t-e", a.t_e);
    opt.detector.time_constant = duration_arg("--t-c", a.t_c);
    opt.detector.quantile = a.q;
    opt.detector.warmup = duration_arg("--warmup", a.warmup);
    opt.detector.validate();

    if (!a.prescale.empty()) {
      const auto comma = a.prescale.find(',');
      if (comma == std::string::npos) throw StartupError("--prescale: expected A,B");
      try {
        opt.prescale = std::make_pair(std::stod(a.prescale.substr(0, comma)), std::stod(a.prescale.substr(comma + 1)));
      } catch (const std::exception&) {
        throw StartupError("--prescale: expected two numbers A,B");
      }
    }
    opt.realtime = a.realtime;
    if (!a.restore.empty()) opt.restore_document = read_file(a.restore);
    if (!a.snapshot.empty()) {
      const std::filesystem::path path = a.snapshot;
      opt.snapshot_sink = [path](const std::string& text) { write_file_atomically(path, text); };
      opt.snapshot_every = a.snapshot_every;
    }
    opt.diagnostics = &std::cerr;

    if (a.input != "-") {
      in_file.open(a.input, std::ios::binary);
      if (!in_file) throw StartupError("cannot open input " + a.input);
    }
    if (a.output != "-") {
      out_file.open(a.output, std::ios::binary | std::ios::trunc);
      if (!out_file) throw StartupError("cannot open output " + a.output);
    }
  } catch (const StartupError& e) {
    std::cerr << "dpl detect: " << e.what() << '\n';
    return kExitStartup;
  } catch (const dpl::InvalidArgument& e) {
    std::cerr << "dpl detect: " << e.what() << '\n';
    return kExitStartup;
  }

  std::istream& in = a.input == "-" ? std::cin : in_file;
  std::ostream& out = a.output == "-" ? std::cout : out_file;
  try {
    const dpl::RunSummary s = dpl::run_stream(opt, in, out);
    std::cerr << "samples_in=" << s.samples_in << " samples_rejected=" << s.samples_rejected
              << " anomalies=" << s.anomalies << " adaptations=" << s.adaptations
              << " timestamp_regressions=" << s.timestamp_regressions << " signals=" << s.signals
              << " wall_time_s=" << s.wall_time << '\n';
  } catch (const dpl::IoError& e) {
    std::cerr << "dpl detect: " << e.what() << '\n';
    return kExitIo;
  } catch (const dpl::Error& e) {
    std::cerr << "dpl detect: " << e.what() << '\n';
    return kExitStartup;
  }
  return kExitOk;
}

int run_synth(const std::string& scenario_path, const std::string& output) {
  try {
    const auto spec = dpl::parse_scenario(read_file(scenario_path));
    const auto samples = dpl::generate(spec);
    const std::string text = dpl::format_labeled_csv(samples);
    if (output == "-") {
      std::cout << text;
      if (!std::cout) return kExitIo;
    } else {
      std::ofstream f(output, std::ios::binary | std::ios::trunc);
      if (!f) throw StartupError("cannot open output " + output);
      f << text;
      if (!f) return kExitIo;
    }
    std::cerr << "samples=" << samples.size() << '\n';
  } catch (const StartupError& e) {
    std::cerr << "dpl synth: " << e.what() << '\n';
    return kExitStartup;
  } catch (const dpl::Error& e) {
    std::cerr << "dpl synth: " << e.what() << '\n';
    return kExitStartup;
  }
  return kExitOk;
}

int run_eval(const std::string& detections, const std::string& labels, const std::string& window) {
  try {
    std::istringstream det_stream(read_file(detections));
    const auto emitted = dpl::read_emitted_csv(det_stream);
    std::vector<dpl::DetectionOutput> outputs;
    outputs.reserve(emitted.size());
    for (const auto& r : emitted) outputs.push_back(r.output);
    const auto truth = dpl::parse_labeled_csv(read_file(labels));
    const auto metrics = dpl::evaluate(outputs, truth, duration_arg("--match-window", window));
    std::cout << dpl::format_metrics(metrics);
  } catch (const StartupError& e) {
    std::cerr << "dpl eval: " << e.what() << '\n';
    return kExitStartup;
  } catch (const dpl::Error& e) {
    std::cerr << "dpl eval: " << e.what() << '\n';
    return kExitStartup;
  }
  return kExitOk;
}

int run_replicate(const std::string& profile_name, const std::string& dir) {
  const auto profile = dpl::parse_case_profile(profile_name);
  if (!profile) {
    std::cerr << "dpl replicate: unknown profile '" << profile_name << "' (bess or inverter)\n";
    return kExitStartup;
  }
  try {
    const auto study = dpl::replicate_case_study(*profile);
    dpl::write_case_study(study, dir);
    std::cout << dpl::format_metrics(study.metrics);
  } catch (const dpl::IoError& e) {
    std::cerr << "dpl replicate: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "dpl replicate: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming anomaly detection with dynamic process limits"};
  app.require_subcommand(1);

  DetectArgs d;
  auto* detect = app.add_subcommand("detect", "Score a stream and publish dynamic process limits");
  detect->add_option("--input", d.input, "Input file, or - for stdin")->capture_default_str();
  detect->add_option("--format", d.format, "Input format: csv or ndjson")->capture_default_str();
  detect->add_option("--timestamp-field", d.timestamp_field, "Timestamp column/field")->capture_default_str();
  detect->add_option("--value-field", d.value_field, "Value column/field")->capture_default_str();
  detect->add_option("--timestamp-format", d.timestamp_format, "auto, iso8601 or epoch")->capture_default_str();
  detect->add_option("--signal-field", d.signal_field, "Column/field with the signal id (multi-signal streams)");
  detect->add_option("--t-e", d.t_e, "Expiration period, e.g. 7d")->required();
  detect->add_option("--t-c", d.t_c, "Time constant for change-point adaptation, e.g. 5h")->required();
  detect->add_option("--q", d.q, "Score threshold")->capture_default_str();
  detect->add_option("--warmup", d.warmup, "Grace period with suppressed flags")->capture_default_str();
  detect->add_option("--snapshot", d.snapshot, "Write detector state here at the end of the run");
  detect->add_option("--snapshot-every", d.snapshot_every, "Also write the snapshot every N records");
  detect->add_option("--restore", d.restore, "Resume from a snapshot written by --snapshot");
  detect->add_option("--output", d.output, "Output file, or - for stdout")->capture_default_str();
  detect->add_option("--output-format", d.output_format, "csv or ndjson")->capture_default_str();
  detect->add_flag("--realtime", d.realtime, "Sleep to reproduce the gaps between record timestamps");
  detect->add_option("--prescale", d.prescale, "Affine pre-scale A,B: value -> A*value + B");

  std::string scenario_path;
  std::string synth_output = "-";
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic stream");
  synth->add_option("--scenario", scenario_path, "Scenario spec file")->required();
  synth->add_option("--output", synth_output, "Output CSV, or - for stdout")->capture_default_str();

  std::string detections_path;
  std::string labels_path;
  std::string match_window = "10m";
  auto* eval = app.add_subcommand("eval", "Score detections against generator labels");
  eval->add_option("--detections", detections_path, "CSV written by detect")->required();
  eval->add_option("--labels", labels_path, "CSV written by synth")->required();
  eval->add_option("--match-window", match_window, "Tolerance around labelled events")->capture_default_str();

  std::string profile = "bess";
  std::string output_dir = "case_study";
  auto* replicate = app.add_subcommand("replicate", "Run a synthetic microgrid case study");
  replicate->add_option("--profile", profile, "bess or inverter")->capture_default_str();
  replicate->add_option("--output-dir", output_dir, "Directory for plot-ready CSV files")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitStartup;
  }

  if (*detect) return run_detect(d);
  if (*synth) return run_synth(scenario_path, synth_output);
  if (*eval) return run_eval(detections_path, labels_path, match_window);
  if (*replicate) return run_replicate(profile, output_dir);
  return kExitStartup;
}
