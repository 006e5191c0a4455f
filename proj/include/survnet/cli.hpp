#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace survnet {

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

// Writes to path.tmp then renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

struct DatasetPreset {
  const char* name;
  double gamma;
  double bce_weight;
  double sigma_factor;
  double weight_decay_sumo;
  double weight_decay_bce;
};
const std::vector<DatasetPreset>& dataset_presets();

}  // namespace survnet
