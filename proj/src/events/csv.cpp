#include "semba/events/csv.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace semba::events {
namespace {

constexpr std::size_t kMaxWarnings = 20;

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '"'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

struct RawRow {
  std::string src;
  std::string dst;
  double weight;
  double time;
};

std::string read_all(const std::filesystem::path& path) {
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (!file) throw DataError("cannot open dataset '" + path.string() + "'");
  std::unique_ptr<gzFile_s, decltype(&gzclose)> guard(file, &gzclose);
  std::string content;
  char buffer[1 << 16];
  while (true) {
    const int n = gzread(file, buffer, sizeof(buffer));
    if (n < 0) throw DataError("failed to read '" + path.string() + "'");
    if (n == 0) break;
    content.append(buffer, static_cast<std::size_t>(n));
  }
  return content;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EventLog parse_csv(std::istream& in, const CsvOptions& options, ParseReport* report) {
  ParseReport local;
  ParseReport& rep = report ? *report : local;
  rep = ParseReport{};
  const int needed = std::max({options.src_column, options.dst_column, options.weight_column, options.time_column}) + 1;
  if (std::min({options.src_column, options.dst_column, options.weight_column, options.time_column}) < 0)
    throw std::invalid_argument("column indices must be non-negative");

  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  auto malformed = [&](const std::string& why) {
    ++rep.malformed;
    const std::string msg = "line " + std::to_string(line_no) + ": " + why;
    if (options.strict) throw DataError(msg);
    if (rep.warnings.size() < kMaxWarnings) rep.warnings.push_back(msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    auto fields = split(line, options.delimiter);
    const bool is_first = first_content;
    first_content = false;
    if (is_first && options.header == HeaderMode::present) continue;
    if (static_cast<int>(fields.size()) < 2 || std::max(options.src_column, options.dst_column) >= static_cast<int>(fields.size())) {
      malformed("expected at least " + std::to_string(needed) + " fields");
      continue;
    }
    auto field = [&](int col) -> std::string_view { return col < static_cast<int>(fields.size()) ? fields[static_cast<std::size_t>(col)] : std::string_view{}; };
    const auto weight_text = field(options.weight_column);
    const auto time_text = field(options.time_column);
    double weight = 0, time = 0;
    const bool weight_ok = parse_number(weight_text, weight);
    const bool time_ok = parse_number(time_text, time);
    if (is_first && options.header == HeaderMode::detect && ((!weight_ok && !weight_text.empty()) || (!time_ok && !time_text.empty())))
      continue;  // header row
    ++rep.rows;
    if (weight_text.empty() || time_text.empty()) {
      ++rep.missing_fields;
      continue;
    }
    if (!weight_ok || !time_ok) {
      malformed("unparsable weight or time");
      continue;
    }
    if (time < 0) {
      malformed("negative time");
      continue;
    }
    const auto src = field(options.src_column);
    const auto dst = field(options.dst_column);
    if (src.empty() || dst.empty()) {
      malformed("missing node id");
      continue;
    }
    if (weight == 0.0) {
      ++rep.zero_weight;
      continue;
    }
    if (!options.keep_self_loops && src == dst) {
      ++rep.self_loops;
      continue;
    }
    if (options.signed_binary) weight = weight > 0 ? 1.0 : -1.0;
    rows.push_back(RawRow{std::string(src), std::string(dst), weight, time});
  }
  if (rows.empty()) throw DataError("no valid events after filtering");

  std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) { return a.time < b.time; });

  std::vector<std::string> raw_ids;
  std::unordered_map<std::string, NodeId> ids;
  auto densify = [&](const std::string& raw) {
    auto [it, inserted] = ids.emplace(raw, static_cast<NodeId>(raw_ids.size()));
    if (inserted) raw_ids.push_back(raw);
    return it->second;
  };
  std::vector<SignedEvent> events;
  events.reserve(rows.size());
  for (const auto& r : rows) {
    const NodeId s = densify(r.src);
    const NodeId d = densify(r.dst);
    events.push_back(SignedEvent{r.time, s, d, r.weight});
  }
  rep.kept = events.size();
  return EventLog(std::move(events), std::move(raw_ids));
}

EventLog parse_snap_csv(const std::filesystem::path& path, const CsvOptions& options, ParseReport* report) {
  if (!std::filesystem::exists(path)) throw DataError("dataset '" + path.string() + "' does not exist");
  std::istringstream in(read_all(path));
  return parse_csv(in, options, report);
}

void write_canonical_csv(std::ostream& out, const EventLog& log) {
  out << "src,dst,weight,time\n";
  for (const auto& e : log.events()) {
    out << log.raw_id(e.src) << ',' << log.raw_id(e.dst) << ',' << format_number(e.weight) << ',' << format_number(e.time) << '\n';
  }
}

}  // namespace semba::events
