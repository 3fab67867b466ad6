#include "dpl/stream_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dpl/error.hpp"

namespace dpl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

// Full-token strtod; nullopt when the text is not a number at all.
std::optional<double> to_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  const std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

const char* fmt_bool(bool b) { return b ? "true" : "false"; }

std::optional<std::size_t> find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return i;
  }
  return std::nullopt;
}

} // namespace

std::optional<RecordFormat> parse_record_format(std::string_view name) {
  if (name == "csv") return RecordFormat::csv;
  if (name == "ndjson" || name == "jsonl") return RecordFormat::ndjson;
  return std::nullopt;
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::missing_field: return "missing_field";
    case RejectReason::non_numeric: return "non_numeric";
    case RejectReason::non_finite: return "non_finite";
    case RejectReason::bad_timestamp: return "bad_timestamp";
    case RejectReason::malformed: return "malformed";
  }
  return "malformed";
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r' && c != '\n') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

RecordParser::RecordParser(RecordFormat format, RecordMapping mapping)
    : format_(format), mapping_(std::move(mapping)) {}

void RecordParser::set_header(std::string_view header_line) {
  const auto header = split_csv(header_line);
  ts_col_ = find_column(header, mapping_.timestamp_field);
  value_col_ = find_column(header, mapping_.value_field);
  if (!ts_col_) throw InvalidArgument("input header has no column '" + mapping_.timestamp_field + "'");
  if (!value_col_) throw InvalidArgument("input header has no column '" + mapping_.value_field + "'");
  if (mapping_.signal_id_field) {
    signal_col_ = find_column(header, *mapping_.signal_id_field);
    if (!signal_col_) throw InvalidArgument("input header has no column '" + *mapping_.signal_id_field + "'");
  }
}

ParseResult RecordParser::parse(std::string_view line) const {
  return format_ == RecordFormat::csv ? parse_csv(line) : parse_ndjson(line);
}

ParseResult RecordParser::finish(std::string_view ts_text, std::string_view value_text, std::string signal) const {
  ts_text = trim(ts_text);
  value_text = trim(value_text);
  if (ts_text.empty()) return Rejection{RejectReason::missing_field, mapping_.timestamp_field};
  if (value_text.empty()) return Rejection{RejectReason::missing_field, mapping_.value_field};

  std::optional<Timestamp> ts;
  const auto numeric_ts = to_number(ts_text);
  switch (mapping_.timestamp_format) {
    case TimestampFormat::automatic: ts = parse_timestamp(ts_text); break;
    case TimestampFormat::iso8601:
      if (!numeric_ts) ts = parse_timestamp(ts_text);
      break;
    case TimestampFormat::epoch_seconds:
      if (numeric_ts) ts = parse_timestamp(ts_text);
      break;
  }
  if (!ts) return Rejection{RejectReason::bad_timestamp, std::string(ts_text)};

  const auto value = to_number(value_text);
  if (!value) return Rejection{RejectReason::non_numeric, std::string(value_text)};
  if (!std::isfinite(*value)) return Rejection{RejectReason::non_finite, std::string(value_text)};
  return Record{std::move(signal), Sample{*ts, *value}};
}

ParseResult RecordParser::parse_csv(std::string_view line) const {
  if (!ts_col_ || !value_col_) throw InvalidArgument("RecordParser: CSV header not set");
  const auto fields = split_csv(line);
  if (*ts_col_ >= fields.size()) return Rejection{RejectReason::missing_field, mapping_.timestamp_field};
  if (*value_col_ >= fields.size()) return Rejection{RejectReason::missing_field, mapping_.value_field};
  std::string signal;
  if (signal_col_) {
    if (*signal_col_ >= fields.size() || trim(fields[*signal_col_]).empty()) {
      return Rejection{RejectReason::missing_field, *mapping_.signal_id_field};
    }
    signal = std::string(trim(fields[*signal_col_]));
  }
  return finish(fields[*ts_col_], fields[*value_col_], std::move(signal));
}

ParseResult RecordParser::parse_ndjson(std::string_view line) const {
  using nlohmann::json;
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    return Rejection{RejectReason::malformed, e.what()};
  }
  if (!obj.is_object()) return Rejection{RejectReason::malformed, "record is not an object"};

  auto field_text = [&](const std::string& name) -> std::optional<std::string> {
    const auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number()) {
      // keep full precision of the JSON token
      if (it->is_number_integer()) return it->dump();
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", it->get<double>());
      return std::string(buf);
    }
    return it->dump();
  };

  const auto ts = field_text(mapping_.timestamp_field);
  if (!ts) return Rejection{RejectReason::missing_field, mapping_.timestamp_field};
  const auto value = field_text(mapping_.value_field);
  if (!value) return Rejection{RejectReason::missing_field, mapping_.value_field};
  std::string signal;
  if (mapping_.signal_id_field) {
    const auto s = field_text(*mapping_.signal_id_field);
    if (!s || s->empty()) return Rejection{RejectReason::missing_field, *mapping_.signal_id_field};
    signal = *s;
  }
  return finish(*ts, *value, std::move(signal));
}

ParseResult parse_record(std::string_view line, RecordFormat format, const RecordMapping& mapping,
                         std::string_view csv_header) {
  RecordParser parser(format, mapping);
  if (format == RecordFormat::csv) parser.set_header(csv_header);
  return parser.parse(line);
}

std::string output_header(RecordFormat format, bool with_signal) {
  if (format == RecordFormat::ndjson) return {};
  std::string h = "timestamp,value,score,is_anomaly,lower,upper,learned,in_warmup";
  if (with_signal) h += ",signal";
  return h;
}

std::string emit_output(const DetectionOutput& out, RecordFormat format, const std::string* signal) {
  const std::string ts = format_timestamp(out.timestamp);
  std::string line;
  line.reserve(128);
  if (format == RecordFormat::csv) {
    line += ts;
    line += ',';
    line += fmt9(out.value);
    line += ',';
    line += fmt9(out.score);
    line += ',';
    line += fmt_bool(out.is_anomaly);
    line += ',';
    line += fmt9(out.limits.lower);
    line += ',';
    line += fmt9(out.limits.upper);
    line += ',';
    line += fmt_bool(out.learned);
    line += ',';
    line += fmt_bool(out.in_warmup);
    if (signal) {
      line += ',';
      const bool needs_quotes = signal->find_first_of(",\"") != std::string::npos;
      if (needs_quotes) {
        line += '"';
        for (char c : *signal) {
          if (c == '"') line += '"';
          line += c;
        }
        line += '"';
      } else {
        line += *signal;
      }
    }
    return line;
  }
  line += "{\"timestamp\":\"" + ts + "\"";
  line += ",\"value\":" + fmt9(out.value);
  line += ",\"score\":" + fmt9(out.score);
  line += ",\"is_anomaly\":" + std::string(fmt_bool(out.is_anomaly));
  line += ",\"lower\":" + fmt9(out.limits.lower);
  line += ",\"upper\":" + fmt9(out.limits.upper);
  line += ",\"learned\":" + std::string(fmt_bool(out.learned));
  line += ",\"in_warmup\":" + std::string(fmt_bool(out.in_warmup));
  if (signal) line += ",\"signal\":" + nlohmann::json(*signal).dump();
  line += '}';
  return line;
}

std::string emit_rejection(std::size_t record_index, const Rejection& r, RecordFormat format) {
  if (format == RecordFormat::csv) {
    std::string detail = r.detail;
    for (char& c : detail) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    return "# rejected record " + std::to_string(record_index) + ": " + to_string(r.reason) + " (" + detail + ")";
  }
  nlohmann::ordered_json j;
  j["record"] = record_index;
  j["rejected"] = to_string(r.reason);
  j["detail"] = r.detail;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::vector<EmittedRecord> read_emitted_csv(std::istream& in) {
  std::vector<EmittedRecord> records;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.empty()) return records;

  static const char* const names[] = {"timestamp", "value", "score", "is_anomaly",
                                      "lower",     "upper", "learned", "in_warmup"};
  std::size_t cols[8];
  for (int i = 0; i < 8; ++i) {
    const auto c = find_column(header, names[i]);
    if (!c) throw InvalidArgument(std::string("detections file has no column '") + names[i] + "'");
    cols[i] = *c;
  }
  std::vector<std::size_t> extra_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    bool known = false;
    for (std::size_t c : cols) known = known || c == i;
    if (!known) extra_cols.push_back(i);
  }

  auto number = [](const std::string& s, std::size_t line_no) {
    const auto v = to_number(s);
    if (!v) throw InvalidArgument("detections file line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return *v;
  };
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto f = split_csv(line);
    if (f.size() < header.size()) {
      throw InvalidArgument("detections file line " + std::to_string(line_no) + ": too few columns");
    }
    EmittedRecord r;
    const auto ts = parse_timestamp(f[cols[0]]);
    if (!ts) throw InvalidArgument("detections file line " + std::to_string(line_no) + ": bad timestamp");
    r.output.timestamp = *ts;
    r.output.value = number(f[cols[1]], line_no);
    r.output.score = number(f[cols[2]], line_no);
    r.output.is_anomaly = trim(f[cols[3]]) == "true";
    r.output.limits.lower = number(f[cols[4]], line_no);
    r.output.limits.upper = number(f[cols[5]], line_no);
    r.output.learned = trim(f[cols[6]]) == "true";
    r.output.in_warmup = trim(f[cols[7]]) == "true";
    for (std::size_t c : extra_cols) r.extra.push_back(f[c]);
    records.push_back(std::move(r));
  }
  return records;
}

std::string join_snapshots(const std::vector<std::pair<std::string, std::string>>& docs) {
  std::string text;
  for (const auto& [signal, doc] : docs) {
    text += "signal=" + signal + "\n";
    text += doc;
  }
  return text;
}

std::vector<std::pair<std::string, std::string>> split_snapshots(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> docs;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("signal=", 0) == 0) {
      docs.emplace_back(line.substr(7), std::string{});
      continue;
    }
    if (docs.empty()) {
      if (trim(line).empty()) continue;
      // a bare document without a signal header belongs to the single signal
      docs.emplace_back(std::string{}, std::string{});
    }
    docs.back().second += line;
    docs.back().second += '\n';
  }
  return docs;
}

RunSummary run_stream(const StreamOptions& options, std::istream& in, std::ostream& out) {
  const auto wall_start = std::chrono::steady_clock::now();
  options.detector.validate();
  if (options.prescale && (!std::isfinite(options.prescale->first) || !std::isfinite(options.prescale->second))) {
    throw InvalidArgument("prescale coefficients must be finite");
  }

  std::map<std::string, Detector> detectors;
  if (options.restore_document) {
    for (const auto& [signal, doc] : split_snapshots(*options.restore_document)) {
      try {
        detectors.emplace(signal, Detector::restore(doc, options.detector));
      } catch (const SnapshotError& e) {
        throw InvalidArgument(std::string("cannot restore snapshot: ") + e.what());
      }
    }
  }

  auto write_line = [&out](const std::string& line) {
    out << line << '\n';
    if (!out) throw IoError("failed to write output");
  };
  auto take_snapshot = [&] {
    if (!options.snapshot_sink) return;
    std::vector<std::pair<std::string, std::string>> docs;
    for (const auto& [signal, det] : detectors) docs.emplace_back(signal, det.snapshot());
    options.snapshot_sink(join_snapshots(docs));
  };

  RecordParser parser(options.input_format, options.mapping);
  const bool with_signal = options.mapping.signal_id_field.has_value();
  RunSummary summary;
  std::string line;

  if (options.input_format == RecordFormat::csv) {
    while (std::getline(in, line)) {
      if (!trim(line).empty()) {
        parser.set_header(line);
        break;
      }
    }
  }
  if (options.output_format == RecordFormat::csv) write_line(output_header(RecordFormat::csv, with_signal));

  std::optional<Timestamp> previous_arrival;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::size_t index = summary.samples_in++;
    const ParseResult parsed = parser.parse(line);
    if (const auto* rej = std::get_if<Rejection>(&parsed)) {
      ++summary.samples_rejected;
      write_line(emit_rejection(index, *rej, options.output_format));
      continue;
    }
    Record rec = std::get<Record>(parsed);
    if (options.prescale) {
      rec.sample.value = options.prescale->first * rec.sample.value + options.prescale->second;
      if (!std::isfinite(rec.sample.value)) {
        ++summary.samples_rejected;
        write_line(emit_rejection(index, {RejectReason::non_finite, "after prescale"}, options.output_format));
        continue;
      }
    }

    if (options.realtime) {
      if (previous_arrival && rec.sample.timestamp > *previous_arrival) {
        std::this_thread::sleep_for(rec.sample.timestamp - *previous_arrival);
      }
      previous_arrival = rec.sample.timestamp;
    }

    DetectionOutput result;
    if (auto it = detectors.find(rec.signal); it != detectors.end()) {
      result = it->second.process(rec.sample);
    } else {
      auto [det, seed] = Detector::start(options.detector, rec.sample);
      detectors.emplace(rec.signal, std::move(det));
      result = seed;
    }

    if (result.is_anomaly) ++summary.anomalies;
    if (result.adapted) ++summary.adaptations;
    if (result.timestamp_clamped) {
      ++summary.timestamp_regressions;
      if (options.diagnostics) {
        *options.diagnostics << "warning: record " << index << " timestamp "
                             << format_timestamp(rec.sample.timestamp) << " precedes its predecessor; processed at "
                             << format_timestamp(result.timestamp) << '\n';
      }
    }
    write_line(emit_output(result, options.output_format, with_signal ? &rec.signal : nullptr));

    if (options.snapshot_every > 0 && summary.samples_in % options.snapshot_every == 0) take_snapshot();
  }
  if (in.bad()) throw IoError("failed to read input");
  out.flush();
  if (!out) throw IoError("failed to write output");
  take_snapshot();

  summary.signals = detectors.size();
  summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return summary;
}

} // namespace dpl
