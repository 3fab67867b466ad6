#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dpl/detector.hpp"

namespace dpl {

enum class RecordFormat { csv, ndjson };
enum class TimestampFormat { automatic, iso8601, epoch_seconds };

std::optional<RecordFormat> parse_record_format(std::string_view name);

struct RecordMapping {
  std::string timestamp_field = "timestamp";
  std::string value_field = "value";
  TimestampFormat timestamp_format = TimestampFormat::automatic;
  std::optional<std::string> signal_id_field;
};

enum class RejectReason { missing_field, non_numeric, non_finite, bad_timestamp, malformed };

const char* to_string(RejectReason r);

struct Rejection {
  RejectReason reason = RejectReason::malformed;
  std::string detail;
};

struct Record {
  std::string signal;  // empty for single-signal streams
  Sample sample;
};

using ParseResult = std::variant<Record, Rejection>;

// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split_csv(std::string_view line);

// Parses record lines for one input stream. CSV input needs its header line
// first (set_header); NDJSON lines are self-describing.
class RecordParser {
public:
  RecordParser(RecordFormat format, RecordMapping mapping);

  // Resolves column positions. Throws InvalidArgument if a mapped column is
  // absent from the header.
  void set_header(std::string_view header_line);

  ParseResult parse(std::string_view line) const;

  RecordFormat format() const noexcept { return format_; }
  const RecordMapping& mapping() const noexcept { return mapping_; }

private:
  ParseResult parse_csv(std::string_view line) const;
  ParseResult parse_ndjson(std::string_view line) const;
  ParseResult finish(std::string_view ts, std::string_view value, std::string signal) const;

  RecordFormat format_;
  RecordMapping mapping_;
  std::optional<std::size_t> ts_col_;
  std::optional<std::size_t> value_col_;
  std::optional<std::size_t> signal_col_;
};

// One-shot parse; header is required for CSV and ignored for NDJSON.
ParseResult parse_record(std::string_view line, RecordFormat format, const RecordMapping& mapping,
                         std::string_view csv_header = "timestamp,value");

// Output records. Columns, in order: timestamp, value, score, is_anomaly,
// lower, upper, learned, in_warmup (then signal, when present). Reals are
// printed with 9 significant digits.
std::string output_header(RecordFormat format, bool with_signal = false);
std::string emit_output(const DetectionOutput& out, RecordFormat format, const std::string* signal = nullptr);
std::string emit_rejection(std::size_t record_index, const Rejection& r, RecordFormat format);

// Reads records previously written by emit_output in CSV form (header
// included, rejection comments skipped). Extra trailing columns are kept
// verbatim in `extra`.
struct EmittedRecord {
  DetectionOutput output;
  std::vector<std::string> extra;
};
std::vector<EmittedRecord> read_emitted_csv(std::istream& in);

struct RunSummary {
  std::size_t samples_in = 0;
  std::size_t samples_rejected = 0;
  std::size_t anomalies = 0;
  std::size_t adaptations = 0;
  std::size_t timestamp_regressions = 0;
  std::size_t signals = 0;
  double wall_time = 0.0;  // seconds
};

struct StreamOptions {
  RecordFormat input_format = RecordFormat::csv;
  RecordFormat output_format = RecordFormat::csv;
  RecordMapping mapping;
  DetectorConfig detector;
  // value -> scale * value + offset before detection
  std::optional<std::pair<double, double>> prescale;
  bool realtime = false;
  // Snapshot text to resume from (see write_snapshot_file).
  std::optional<std::string> restore_document;
  // Receives the full snapshot text every snapshot_every records (if > 0)
  // and once at the end of the stream.
  std::function<void(const std::string&)> snapshot_sink;
  std::size_t snapshot_every = 0;
  // Warnings (timestamp regressions) go here when set.
  std::ostream* diagnostics = nullptr;
};

// Runs every record of `in` through one detector per signal and writes one
// output line per record to `out`, in input order. Throws InvalidArgument
// for a bad configuration/header/snapshot and IoError when writing fails.
RunSummary run_stream(const StreamOptions& options, std::istream& in, std::ostream& out);

// Multi-signal snapshot container: "signal=<id>" followed by that detector's
// document, repeated.
std::string join_snapshots(const std::vector<std::pair<std::string, std::string>>& docs);
std::vector<std::pair<std::string, std::string>> split_snapshots(std::string_view text);

} // namespace dpl
