#pragma once

#include "gsr/gmm.hpp"
#include "gsr/params.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsr::cli {

/// Bad configuration input; maps to the usage exit code.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

using Settings = std::map<std::string, std::string>;

/// Every key accepted in a config file or as a `--key` flag.
std::span<const std::string_view> known_keys();

/// Flat `key = value` lines; `#` starts a comment; blank lines are ignored.
/// Unknown keys and malformed lines raise ConfigError with the line number.
Settings parse_config(std::string_view text);
Settings load_config(const std::filesystem::path& path);

/// Overlays `top` onto `base`.
Settings merge(Settings base, const Settings& top);

std::optional<std::string> lookup(const Settings& s, const std::string& key);
double get_double(const Settings& s, const std::string& key, double fallback);
long long get_int(const Settings& s, const std::string& key, long long fallback);
std::vector<double> parse_sigma_list(std::string_view text);

/// Applies every parameter key present in `s` except sigma, then validates.
/// Setting d without stride resets stride to the default for that d.
void apply_overrides(const Settings& s, DenoiseParams& p);

/// Table row for `sigma` (default 30), then any explicit overrides.
DenoiseParams resolve_denoise_params(const Settings& s);

struct TrainingSetup {
  int num_components = 64;
  TrainingConfig config;
};
TrainingSetup resolve_training(const Settings& s);

}  // namespace gsr::cli
