#pragma once

#include "semba/harness/train.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace semba::cli {

// Every run setting, resolved from defaults, then an INI file, then flags.
struct RunSettings {
  std::string dataset;
  bool signed_binary = false;
  harness::TrainConfig train;
  std::filesystem::path out;
};

// Binds the shared flags to a subcommand. Values stay raw until resolve().
class SettingFlags {
 public:
  explicit SettingFlags(CLI::App& sub, bool with_training = true);

  // defaults <- INI files in order <- flags given on the command line.
  // Throws model::ConfigError on unknown keys or malformed values.
  RunSettings resolve(const std::vector<std::filesystem::path>& ini_files, const std::string& command) const;

  const std::string& config_path() const { return config_path_; }

 private:
  struct Flag {
    std::string section;
    std::string key;
    std::string raw;
    CLI::Option* option = nullptr;
  };
  std::vector<Flag> flags_;
  std::string config_path_;
};

// The [section] key = value snapshot of a resolved run.
std::string to_ini(const RunSettings& s);
std::map<std::string, std::string> settings_map(const RunSettings& s);

// Output root for runs without --out: $SEMBA_OUT, else ./runs.
std::filesystem::path default_output_root();

}  // namespace semba::cli
