#include "commands.hpp"

#include "config.hpp"

#include "gsr/analysis.hpp"
#include "gsr/denoiser.hpp"
#include "gsr/gmm.hpp"
#include "gsr/image.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace gsr::cli {

namespace {

namespace fs = std::filesystem;

/// Distinct failure: the model's patch size does not fit the parameters.
class PatchSizeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlagSpec {
  const char* names;  // CLI11 name string
  const char* key;    // config key
  const char* help;
};

// Flags shared by every subcommand that consumes denoising parameters.
constexpr FlagSpec kParamFlags[] = {
    {"--sigma", "sigma", "noise standard deviation (0-255 scale); selects the parameter table row"},
    {"-K,--components", "K", "mixture components"},
    {"-W,--window", "W", "search window side"},
    {"-d,--patch-size", "d", "patch side"},
    {"-m,--group-size", "m", "patches per group"},
    {"-c,--lambda-scale", "c", "threshold scale constant"},
    {"--rho", "rho", "iterative regularization step"},
    {"--gamma", "gamma", "noise re-estimation factor"},
    {"--iters", "iters", "outer iterations"},
    {"--stride", "stride", "reference patch step"},
    {"--use-prior-weights", "use_prior_weights", "include log mixture weights in component selection (true/false)"},
    {"--prior-codes", "prior_codes", "estimated true codes: projection (default) or wiener"},
    {"--threads", "threads", "worker threads, 0 = auto"},
};

class Command {
 public:
  Command(CLI::App& app, const char* name, const char* description) : sub_(app.add_subcommand(name, description)) {
    sub_->add_option("--config", config_path_, "key=value config file (flags override it)");
  }

  void flag(const FlagSpec& f) { options_.emplace_back(sub_->add_option(f.names, values_[f.key], f.help), f.key); }
  void flag(const char* names, const char* key, const char* help) { flag(FlagSpec{names, key, help}); }
  void param_flags() {
    for (const FlagSpec& f : kParamFlags) flag(f);
  }

  bool parsed() const { return sub_->parsed(); }

  /// Built-in defaults < config file < flags.
  Settings settings() const {
    Settings file;
    if (!config_path_.empty()) file = load_config(config_path_);
    Settings flags;
    for (const auto& [opt, key] : options_) {
      if (opt->count() > 0) flags[key] = values_.at(key);
    }
    return merge(std::move(file), flags);
  }

 private:
  CLI::App* sub_;
  std::string config_path_;
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> options_;
};

std::string require(const Settings& s, const std::string& key, const char* flag) {
  const auto v = lookup(s, key);
  if (!v || v->empty()) throw ConfigError(std::string("missing required ") + flag + " (config key " + key + ")");
  return *v;
}

std::string describe(const DenoiseParams& p) {
  std::ostringstream out;
  out << "d=" << p.patch_size << " m=" << p.group_size << " W=" << p.window << " K=" << p.num_components
      << " c=" << p.c << " rho=" << p.rho << " gamma=" << p.gamma << " iters=" << p.iters << " stride=" << p.stride;
  return out.str();
}

void check_model_fits(const GmmModel& model, const DenoiseParams& p) {
  if (model.patch_dim() != p.patch_size * p.patch_size) {
    std::ostringstream msg;
    msg << "model patch size d=" << model.patch_size() << " (dimension " << model.patch_dim()
        << ") does not match denoising patch size d=" << p.patch_size << " (dimension "
        << p.patch_size * p.patch_size << ")";
    throw PatchSizeMismatch(msg.str());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file << text;
  if (!file) throw IoError("write failed: " + path.string());
}

int cmd_train(const Settings& s, std::ostream& out) {
  const fs::path corpus_dir = require(s, "corpus_dir", "--corpus");
  const fs::path model_path = require(s, "model_path", "--model");
  const TrainingSetup setup = resolve_training(s);

  std::vector<GrayImage> corpus;
  for (const fs::path& f : list_pgm_files(corpus_dir)) corpus.push_back(load_pgm(f));
  if (corpus.empty()) throw IoError("no PGM images in " + corpus_dir.string());

  const auto groups = sample_training_groups(corpus, setup.config);
  const TrainingResult result = train_em(groups, setup.num_components, setup.config);
  save_model(result.model, model_path);

  out << "images: " << corpus.size() << "\n"
      << "groups: " << groups.size() << " (d=" << setup.config.spec.patch_size
      << " m=" << setup.config.spec.group_size << " W=" << setup.config.spec.window << ")\n"
      << "components: " << result.model.num_components() << "\n"
      << "em iterations: " << result.iterations << (result.converged ? " (converged)" : "") << "\n"
      << std::setprecision(10) << "final mean log-likelihood: " << result.log_likelihood.back() << "\n"
      << "model: " << model_path.string() << "\n";
  return kOk;
}

int cmd_denoise(const Settings& s, std::ostream& out) {
  const fs::path input = require(s, "input", "--in");
  const fs::path model_path = require(s, "model_path", "--model");
  const fs::path output = require(s, "output", "--out");
  const DenoiseParams params = resolve_denoise_params(s);

  const GrayImage noisy = load_pgm(input);
  const GmmModel model = load_model(model_path);
  check_model_fits(model, params);
  std::optional<GrayImage> clean;
  if (const auto c = lookup(s, "clean")) clean = load_pgm(*c);

  out << "sigma: " << params.sigma << "\n" << "parameters: " << describe(params) << "\n";
  const auto start = std::chrono::steady_clock::now();
  const DenoiseResult result = denoise(noisy, model, params, [&](const IterationState& st) {
    out << "iteration " << st.t << ": sigma_t=" << std::fixed << std::setprecision(4) << st.sigma_t;
    if (clean) out << " psnr=" << psnr(*clean, st.x_hat);
    out << std::defaultfloat << "\n";
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_pgm(result.image, output);

  out << "iterations: " << params.iters << "\n"
      << "wall time: " << std::fixed << std::setprecision(2) << seconds << " s\n";
  if (clean) {
    out << std::setprecision(4) << "psnr noisy: " << psnr(*clean, noisy) << " dB\n"
        << "psnr denoised: " << psnr(*clean, result.image) << " dB\n";
  }
  out << std::defaultfloat << "output: " << output.string() << "\n";
  return kOk;
}

std::vector<GmmModel> load_models(const std::string& list) {
  std::vector<GmmModel> models;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const std::string item = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) models.push_back(load_model(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (models.empty()) throw ConfigError("no model given");
  return models;
}

int cmd_bench(const Settings& s, std::ostream& out) {
  const fs::path test_dir = require(s, "test_dir", "--test-dir");
  const std::vector<GmmModel> models = load_models(require(s, "model_path", "--model"));
  BenchOptions options;
  if (const auto v = lookup(s, "sigmas")) options.sigmas = parse_sigma_list(*v);
  options.seed = static_cast<std::uint64_t>(get_int(s, "seed", 0));
  options.threads = static_cast<unsigned>(std::max(0LL, get_int(s, "threads", 0)));
  // Per-sigma rows come from the table; the patch size follows the model.
  Settings overrides = s;
  overrides.erase("sigma");
  overrides.erase("d");
  options.customize = [overrides](DenoiseParams& p) { apply_overrides(overrides, p); };

  const BenchTable table = bench(test_dir, models, options);
  const std::string csv = table.to_csv();
  if (const auto path = lookup(s, "csv")) write_text(*path, csv);
  out << csv;
  out << "# reference full-scale averages (14 images, K=64):";
  for (const ReferencePsnr& r : reference_average_psnr()) out << " sigma=" << r.sigma << ":" << r.psnr;
  out << "\n";
  return kOk;
}

int cmd_residual_hist(const Settings& s, std::ostream& out) {
  const GmmModel model = load_model(require(s, "model_path", "--model"));
  const DenoiseParams params = resolve_denoise_params(s);
  check_model_fits(model, params);

  GrayImage noisy;
  std::string id;
  if (const auto in = lookup(s, "input")) {
    noisy = load_pgm(*in);
    id = fs::path(*in).stem().string();
  } else if (const auto clean = lookup(s, "clean")) {
    noisy = add_awgn(load_pgm(*clean), {params.sigma, static_cast<std::uint64_t>(get_int(s, "seed", 0))});
    id = fs::path(*clean).stem().string();
  } else {
    throw ConfigError("missing required --in (noisy image) or --clean (image to corrupt)");
  }

  ResidualSample sample = collect_residuals(noisy, model, params);
  sample.image_id = id;
  const Histogram hist = make_histogram(sample.values);
  if (const auto path = lookup(s, "hist")) write_text(*path, histogram_csv(hist));

  out << "image: " << sample.image_id << " sigma: " << sample.sigma << " residuals: " << sample.values.size() << "\n";
  DistributionFit best;
  bool first = true;
  for (Family f : {Family::Gaussian, Family::Laplacian, Family::HyperLaplacian}) {
    const DistributionFit d = fit(sample, f);
    out << std::left << std::setw(16) << family_name(f) << std::right << std::setprecision(6)
        << " scale=" << d.scale << " exponent=" << d.exponent << " log_fit_error=" << d.log_fit_error << "\n";
    if (first || d.log_fit_error < best.log_fit_error) best = d;
    first = false;
  }
  out << "best: " << family_name(best.family) << "\n";
  return kOk;
}

int cmd_synth_noise(const Settings& s, std::ostream& out) {
  const fs::path input = require(s, "input", "--in");
  const fs::path output = require(s, "output", "--out");
  const double sigma = get_double(s, "sigma", 30.0);
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  const auto seed = static_cast<std::uint64_t>(get_int(s, "seed", 0));
  const GrayImage clean = load_pgm(input);
  const GrayImage noisy = add_awgn(clean, {sigma, seed});
  save_pgm(noisy, output);
  out << std::setprecision(4) << std::fixed << "psnr: " << psnr(clean, noisy) << " dB\n"
      << "output: " << output.string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group sparsity residual denoising with an external GMM patch-group prior", "gsr"};
  app.require_subcommand(1);

  Command train(app, "train", "learn a GMM prior from a directory of clean PGM images");
  train.flag("--corpus", "corpus_dir", "directory of clean PGM images");
  train.flag("--model", "model_path", "output model file");
  train.flag("--n-groups", "n_groups", "training groups to sample");
  train.flag("--max-em-iters", "max_em_iters", "EM iteration cap");
  train.flag("--em-tol", "em_tol", "relative log-likelihood tolerance");
  train.flag("--cov-floor", "cov_floor", "covariance eigenvalue floor");
  train.flag("--seed", "seed", "RNG seed");
  train.param_flags();

  Command den(app, "denoise", "denoise a PGM image");
  den.flag("--in", "input", "noisy PGM image");
  den.flag("--model", "model_path", "trained model file");
  den.flag("--out", "output", "denoised PGM output");
  den.flag("--clean", "clean", "clean reference for PSNR reporting");
  den.param_flags();

  Command bench_cmd(app, "bench", "PSNR table over a test directory and noise levels");
  bench_cmd.flag("--test-dir", "test_dir", "directory of clean PGM test images");
  bench_cmd.flag("--model", "model_path", "model file(s), comma separated");
  bench_cmd.flag("--sigmas", "sigmas", "comma separated noise levels");
  bench_cmd.flag("--out,--csv", "csv", "CSV output path");
  bench_cmd.flag("--seed", "seed", "noise seed");
  bench_cmd.param_flags();

  Command hist(app, "residual-hist", "residual statistics and distribution fits for one image");
  hist.flag("--in", "input", "noisy PGM image");
  hist.flag("--clean", "clean", "clean PGM image to corrupt with seeded noise");
  hist.flag("--model", "model_path", "trained model file");
  hist.flag("--out,--hist", "hist", "histogram CSV output path");
  hist.flag("--seed", "seed", "noise seed for --clean");
  hist.param_flags();

  Command synth(app, "synth-noise", "add seeded white Gaussian noise to a PGM image");
  synth.flag("--in", "input", "clean PGM image");
  synth.flag("--out", "output", "noisy PGM output");
  synth.flag("--sigma", "sigma", "noise standard deviation");
  synth.flag("--seed", "seed", "RNG seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train.parsed()) return cmd_train(train.settings(), out);
    if (den.parsed()) return cmd_denoise(den.settings(), out);
    if (bench_cmd.parsed()) return cmd_bench(bench_cmd.settings(), out);
    if (hist.parsed()) return cmd_residual_hist(hist.settings(), out);
    if (synth.parsed()) return cmd_synth_noise(synth.settings(), out);
  } catch (const ConfigError& e) {
    err << "gsr: usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const PatchSizeMismatch& e) {
    err << "gsr: " << e.what() << "\n";
    return kNumerical;
  } catch (const NumericalError& e) {
    err << "gsr: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    err << "gsr: I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ModelError& e) {
    err << "gsr: invalid model: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "gsr: I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    err << "gsr: usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "gsr: numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  err << "gsr: no subcommand\n";
  return kUsage;
}

}  // namespace gsr::cli
