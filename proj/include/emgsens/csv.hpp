#pragma once

#include <string>
#include <vector>

namespace emgsens {

// Minimal CSV container. Lines starting with '#' before the header are kept
// as comments; every output file uses one to carry the config hash and
// toolkit version.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace emgsens
