#include "egg/table.hpp"

#include <charconv>
#include <fstream>
#include <set>

namespace egg {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  if (delimiter == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
      if (i == line.size()) break;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\r') ++i;
      out.push_back(line.substr(start, i - start));
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

TableError::TableError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

std::size_t NumericTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  std::string known;
  for (const auto& h : header) known += (known.empty() ? "" : ", ") + h;
  throw std::invalid_argument("no column '" + name + "' (columns: " + known + ")");
}

NumericTable parse_table(std::istream& in, const std::string& source) {
  NumericTable table;
  char delimiter = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;

    if (!delimiter) {
      delimiter = stripped.find(',') != std::string::npos    ? ','
                  : stripped.find('\t') != std::string::npos ? '\t'
                                                             : ' ';
      table.header = split(stripped, delimiter);
      std::set<std::string> seen;
      for (const auto& name : table.header) {
        if (name.empty()) throw TableError(source, line_no, "empty column name in header");
        if (!seen.insert(name).second) {
          throw TableError(source, line_no, "duplicate column name '" + name + "'");
        }
      }
      continue;
    }

    const auto cells = split(stripped, delimiter);
    if (cells.size() != table.cols()) {
      throw TableError(source, line_no,
                       "expected " + std::to_string(table.cols()) + " fields as in the header, found " +
                           std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      double v = 0.0;
      const char* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (cell.empty() || ec != std::errc() || ptr != end) {
        throw TableError(source, line_no,
                         "column '" + table.header[c] + "': '" + cell + "' is not a number");
      }
      table.values.push_back(v);
    }
    ++table.rows;
  }
  if (!delimiter) throw TableError(source, line_no, "no header row");
  return table;
}

NumericTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table " + path.string());
  return parse_table(in, path.string());
}

}  // namespace egg
