#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#ifndef PPTLAB_GOLDEN_DIR
#define PPTLAB_GOLDEN_DIR "tests/golden"
#endif

namespace pptlab::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string golden_path(const std::string& name) { return std::string(PPTLAB_GOLDEN_DIR) + "/" + name; }

/// Tab-separated "key<TAB>value" lines.
inline std::map<std::string, std::string> read_golden_table(const std::string& name) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(golden_path(name)));
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

}  // namespace pptlab::testing
