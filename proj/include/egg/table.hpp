#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace egg {

// Numeric table read from delimited text:
//
//   - blank lines and lines starting with '#' are skipped;
//   - the first remaining line is the header of unique, non-empty names;
//   - cells are separated by ',' if the header contains one, else by a tab
//     if it contains one, else by runs of spaces;
//   - surrounding spaces are trimmed and every cell must be a complete
//     decimal or scientific number;
//   - every row has exactly as many cells as the header.
struct NumericTable {
  std::vector<std::string> header;
  std::size_t rows = 0;
  std::vector<double> values;  // rows x cols, row-major

  std::size_t cols() const { return header.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  // Throws std::invalid_argument naming the available columns.
  std::size_t column_index(const std::string& name) const;
};

class TableError : public std::runtime_error {
 public:
  TableError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

NumericTable parse_table(std::istream& in, const std::string& source = "<table>");
NumericTable load_table(const std::filesystem::path& path);

}  // namespace egg
