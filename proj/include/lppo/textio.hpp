#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lppo {

/// Format a double with 17 significant digits (round-trip exact).
std::string fmt_g17(double x);

/// Shortest-ish fixed formatting for CSV fields that are exact small ints.
std::string fmt_int(long long x);

/// Read a whole file; throws std::invalid_argument if missing.
std::string read_file(const std::string& path);

/// Write a whole file; throws std::runtime_error on failure.
void write_file(const std::string& path, const std::string& content);

/// Split a CSV line on commas (no quoting; our formats never need it).
std::vector<std::string> split_csv(const std::string& line);

/// Parse a double, throwing std::invalid_argument naming `what` on failure.
double parse_double(const std::string& s, const std::string& what);

long long parse_int(const std::string& s, const std::string& what);

/// Minimal CSV table: header + rows of doubles, plus leading '#' comment
/// lines preserved verbatim. Covers every file format in the toolkit.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int col(const std::string& name) const;  // throws if absent
};

CsvTable read_csv(const std::string& path);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header,
            const std::vector<std::string>& comments = {});
  void row(const std::vector<double>& values);
  void raw_row(const std::string& line);
  void close();
  ~CsvWriter();

 private:
  std::ofstream out_;
  std::string path_;
  size_t ncols_;
};

}  // namespace lppo
