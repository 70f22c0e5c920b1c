#pragma once

#include "semba/events/event_log.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace semba::events {

enum class HeaderMode { detect, present, absent };

struct CsvOptions {
  char delimiter = ',';
  int src_column = 0;
  int dst_column = 1;
  int weight_column = 2;
  int time_column = 3;
  HeaderMode header = HeaderMode::detect;
  // Map weights to +-1 (e.g. vote networks); zero weights are dropped either way.
  bool signed_binary = false;
  bool keep_self_loops = false;
  // Abort on the first malformed row instead of skipping it.
  bool strict = false;
};

struct ParseReport {
  std::size_t rows = 0;
  std::size_t kept = 0;
  std::size_t missing_fields = 0;
  std::size_t zero_weight = 0;
  std::size_t self_loops = 0;
  std::size_t malformed = 0;
  std::vector<std::string> warnings;  // first few malformed rows
};

// Reads `src,dst,weight,time` rows (column order configurable). Files ending
// in .gz, or carrying a gzip header, are decompressed transparently. Rows with
// a missing time or weight, zero weight, or (by default) src == dst are
// dropped; the rest are stably sorted by time and ids densified in order of
// first appearance.
EventLog parse_snap_csv(const std::filesystem::path& path, const CsvOptions& options = {}, ParseReport* report = nullptr);
EventLog parse_csv(std::istream& in, const CsvOptions& options = {}, ParseReport* report = nullptr);

// Canonical form: header `src,dst,weight,time`, raw ids, %.17g numbers.
void write_canonical_csv(std::ostream& out, const EventLog& log);

}  // namespace semba::events
