#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"

namespace cusplab::cli {

constexpr int kCsvSchema = 1;

// Ordered key=value record written as manifest.txt.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  // Merges key=value lines.
  void merge(const std::string& lines);
  const std::string* find(const std::string& key) const;
  std::string text() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct RunResult {
  int status = 0;
  Manifest manifest;
  std::vector<std::string> files;  // written outputs, relative to the output directory
  std::vector<std::string> errors;
};

// Runs the selected experiments in dependency order and writes CSVs plus manifest.txt.
RunResult run(const RunConfig& cfg, std::ostream& log);

// Cheap derived constants for a validated configuration (preset geometry and coding certificate).
std::string derived_constants(const RunConfig& cfg);

}  // namespace cusplab::cli
