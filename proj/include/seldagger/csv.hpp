#pragma once

#include <string>
#include <vector>

namespace seldagger {

/// Locale-independent, 9 significant digits.
std::string fmt_num(double x);

/// Round-trips a double through its 9-significant-digit text form.
double quantize(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row

  int column(const std::string& name) const;  // -1 when absent
};

/// Strict reader: header row required, every row has the header's width,
/// no quoting. Errors (MalformedFile) carry the line number.
CsvTable parse_csv(const std::string& text, const std::string& source);
CsvTable read_csv(const std::string& path);

/// Strict numeric field parse; MalformedFile names source and line.
double parse_number(const std::string& field, const std::string& source, int line);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace seldagger
