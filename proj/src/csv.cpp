#include "emgsens/csv.hpp"

#include <fstream>
#include <sstream>

#include "emgsens/errors.hpp"

namespace emgsens {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV: " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && !line.empty() && line.front() == '#') {
      table.comments.push_back(line);
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != table.header.size()) {
        throw DataError("CSV " + path + ": row with " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw DataError("CSV " + path + ": missing header row");
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write CSV: " + path);
  for (const auto& c : table.comments) out << c << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << "\n";
  }
  if (!out) throw DataError("short write: " + path);
}

}  // namespace emgsens
