#include "config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace gsr::cli {

namespace {

constexpr std::array<std::string_view, 28> kKeys{
    "corpus_dir", "model_path", "input", "output", "clean", "test_dir", "csv", "hist",
    "sigma", "sigmas", "seed", "threads",
    "K", "W", "d", "m", "c", "rho", "gamma", "iters", "stride",
    "use_prior_weights", "prior_codes",
    "n_groups", "max_em_iters", "em_tol", "cov_floor", "quiet",
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::span<const std::string_view> known_keys() { return kKeys; }

Settings parse_config(std::string_view text) {
  Settings out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value", line_no);
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", line_no);
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ConfigError("unknown key '" + std::string(key) + "'", line_no);
    }
    out[std::string(key)] = std::string(value);
  }
  return out;
}

Settings load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Settings merge(Settings base, const Settings& top) {
  for (const auto& [k, v] : top) base[k] = v;
  return base;
}

std::optional<std::string> lookup(const Settings& s, const std::string& key) {
  const auto it = s.find(key);
  if (it == s.end()) return std::nullopt;
  return it->second;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value for " + key + ": '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + text + "'");
}

}  // namespace

double get_double(const Settings& s, const std::string& key, double fallback) {
  const auto v = lookup(s, key);
  return v ? parse_number<double>(key, *v) : fallback;
}

long long get_int(const Settings& s, const std::string& key, long long fallback) {
  const auto v = lookup(s, key);
  return v ? parse_number<long long>(key, *v) : fallback;
}

std::vector<double> parse_sigma_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item(trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (item.empty()) throw ConfigError("empty entry in sigma list");
    out.push_back(parse_number<double>("sigmas", item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

void apply_overrides(const Settings& s, DenoiseParams& p) {
  p.num_components = static_cast<int>(get_int(s, "K", p.num_components));
  p.window = static_cast<int>(get_int(s, "W", p.window));
  if (lookup(s, "d")) {
    p.patch_size = static_cast<int>(get_int(s, "d", p.patch_size));
    p.stride = default_stride(p.patch_size);
  }
  p.group_size = static_cast<int>(get_int(s, "m", p.group_size));
  p.stride = static_cast<int>(get_int(s, "stride", p.stride));
  p.c = get_double(s, "c", p.c);
  p.rho = get_double(s, "rho", p.rho);
  p.gamma = get_double(s, "gamma", p.gamma);
  p.iters = static_cast<int>(get_int(s, "iters", p.iters));
  p.threads = static_cast<unsigned>(std::max(0LL, get_int(s, "threads", p.threads)));
  if (const auto v = lookup(s, "use_prior_weights")) p.use_prior_weights = parse_bool("use_prior_weights", *v);
  if (const auto v = lookup(s, "prior_codes")) {
    if (*v == "projection") {
      p.prior_codes = PriorCodes::Projection;
    } else if (*v == "wiener") {
      p.prior_codes = PriorCodes::Wiener;
    } else {
      throw ConfigError("prior_codes must be 'projection' or 'wiener', got '" + *v + "'");
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

DenoiseParams resolve_denoise_params(const Settings& s) {
  const double sigma = get_double(s, "sigma", 30.0);
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  DenoiseParams p = schedule_for_sigma(sigma);
  apply_overrides(s, p);
  return p;
}

TrainingSetup resolve_training(const Settings& s) {
  const DenoiseParams p = resolve_denoise_params(s);
  TrainingSetup out;
  out.num_components = p.num_components;
  out.config.spec = p.patch_spec();
  out.config.threads = p.threads;
  out.config.n_groups = static_cast<int>(get_int(s, "n_groups", out.config.n_groups));
  out.config.max_em_iters = static_cast<int>(get_int(s, "max_em_iters", out.config.max_em_iters));
  out.config.tolerance = get_double(s, "em_tol", out.config.tolerance);
  out.config.covariance_floor = get_double(s, "cov_floor", out.config.covariance_floor);
  out.config.seed = static_cast<std::uint64_t>(get_int(s, "seed", 0));
  try {
    out.config.validate(out.num_components);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

}  // namespace gsr::cli
