#include "config.hpp"

#include "spirit_sde/error.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace ssd::cli {
namespace {

class Reader
{
public:
  explicit Reader(std::string origin)
    : origin_{std::move(origin)}
  {
  }

  [[noreturn]] void fail(YAML::Mark const &mark, std::string const &msg) const
  {
    if (mark.is_null()) {
      throw ConfigError(fmt::format("{}: {}", origin_, msg));
    }
    throw ConfigError(fmt::format("{}:{}:{}: {}", origin_, mark.line + 1, mark.column + 1, msg));
  }

  void requireMap(YAML::Node const &n, std::string const &what) const
  {
    if (!n.IsMap()) {
      fail(n.Mark(), fmt::format("'{}' must be a mapping", what));
    }
  }

  void allowOnly(YAML::Node const &n, std::string const &what, std::set<std::string> const &keys) const
  {
    requireMap(n, what);
    for (auto const &kv : n) {
      auto const key = kv.first.as<std::string>();
      if (!keys.count(key)) {
        fail(kv.first.Mark(), fmt::format("unknown key '{}' in {}", key, what));
      }
    }
  }

  template <typename T>
  void get(YAML::Node const &parent, char const *key, T &out) const
  {
    YAML::Node const n = parent[key];
    if (!n) {
      return;
    }
    try {
      out = n.as<T>();
    } catch (YAML::BadConversion const &) {
      fail(n.Mark(), fmt::format("'{}' has the wrong type", key));
    }
  }

  void count(YAML::Node const &parent, char const *key, std::size_t &out) const
  {
    YAML::Node const n = parent[key];
    if (!n) {
      return;
    }
    long long v = 0;
    try {
      v = n.as<long long>();
    } catch (YAML::BadConversion const &) {
      fail(n.Mark(), fmt::format("'{}' must be an integer", key));
    }
    if (v < 0) {
      fail(n.Mark(), fmt::format("'{}' must be non-negative", key));
    }
    out = std::size_t(v);
  }

  template <typename F>
  void checked(YAML::Node const &n, F &&f) const
  {
    try {
      f();
    } catch (InvalidInput const &e) {
      fail(n.Mark(), e.what());
    }
  }

private:
  std::string origin_;
};

} // namespace

void ExperimentConfig::validate() const
{
  if (methods.empty()) {
    throw ConfigError("methods must list at least one method");
  }
  for (auto const &m : methods) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
      throw ConfigError(fmt::format("unknown method '{}'", m));
    }
  }
  if (phantom.rows < 8 || phantom.cols < 8 || coils < 1) {
    throw ConfigError("phantom must be at least 8x8 with one or more coils");
  }
  if (kernel_size < 3 || kernel_size % 2 == 0) {
    throw ConfigError(fmt::format("spirit.kernel_size must be odd and >= 3, got {}", kernel_size));
  }
  if (box_smooth != 0 && box_smooth % 2 == 0) {
    throw ConfigError(fmt::format("coils.box_smooth must be odd or 0, got {}", box_smooth));
  }
  if (!(error_window > 0.0)) {
    throw ConfigError("error_window must be positive");
  }
  if (score.training_samples < 2) {
    throw ConfigError("score.training_samples must be at least 2");
  }
  if (roi && (roi->empty() || roi->row0 + roi->rows > phantom.rows || roi->col0 + roi->cols > phantom.cols)) {
    throw ConfigError("roi lies outside the image");
  }
  try {
    sampler.validate();
    classic.validate();
  } catch (InvalidInput const &e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig ParseConfig(std::string const &text, std::string const &origin)
{
  Reader const rd(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (YAML::ParserException const &e) {
    rd.fail(e.mark, e.msg);
  }
  if (root.IsMap() && root["config"]) {
    root = root["config"];
  }
  ExperimentConfig cfg;
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  rd.allowOnly(root, "config",
               {"phantom", "coils", "mask", "noise_std", "noise_seed", "spirit", "schedule", "sampler", "score",
                "classic", "methods", "output_dir", "roi", "error_window"});

  if (auto const n = root["phantom"]) {
    rd.allowOnly(n, "phantom", {"rows", "cols", "kind", "seed"});
    rd.count(n, "rows", cfg.phantom.rows);
    rd.count(n, "cols", cfg.phantom.cols);
    std::string kind = ToString(cfg.phantom.kind);
    rd.get(n, "kind", kind);
    rd.checked(n["kind"] ? n["kind"] : n, [&] { cfg.phantom.kind = ParsePhantomKind(kind); });
    rd.get(n, "seed", cfg.phantom.seed);
  }
  if (auto const n = root["coils"]) {
    rd.allowOnly(n, "coils", {"count", "seed", "box_smooth"});
    rd.count(n, "count", cfg.coils);
    rd.get(n, "seed", cfg.coil_seed);
    rd.count(n, "box_smooth", cfg.box_smooth);
  }
  if (auto const n = root["mask"]) {
    rd.allowOnly(n, "mask", {"pattern", "acceleration", "acs_rows", "acs_cols", "seed", "density_exponent"});
    std::string pattern = ToString(cfg.mask.pattern);
    rd.get(n, "pattern", pattern);
    rd.checked(n["pattern"] ? n["pattern"] : n, [&] { cfg.mask.pattern = ParseMaskPattern(pattern); });
    rd.get(n, "acceleration", cfg.mask.acceleration);
    rd.count(n, "acs_rows", cfg.mask.acs_rows);
    rd.count(n, "acs_cols", cfg.mask.acs_cols);
    rd.get(n, "seed", cfg.mask.seed);
    rd.get(n, "density_exponent", cfg.mask.density_exponent);
  }
  rd.get(root, "noise_std", cfg.noise_std);
  rd.get(root, "noise_seed", cfg.noise_seed);
  if (auto const n = root["spirit"]) {
    rd.allowOnly(n, "spirit", {"kernel_size", "tikhonov"});
    rd.count(n, "kernel_size", cfg.kernel_size);
    rd.get(n, "tikhonov", cfg.tikhonov);
  }
  if (auto const n = root["schedule"]) {
    rd.allowOnly(n, "schedule", {"beta_min", "beta_max", "eta0"});
    rd.get(n, "beta_min", cfg.schedule.beta_min);
    rd.get(n, "beta_max", cfg.schedule.beta_max);
    rd.get(n, "eta0", cfg.schedule.eta0);
    rd.checked(n, [&] { NoiseSchedule(cfg.schedule.beta_min, cfg.schedule.beta_max, cfg.schedule.eta0, 1); });
  }
  if (auto const n = root["sampler"]) {
    rd.allowOnly(n, "sampler", {"lambda1", "lambda2", "r", "n_steps", "m_corrector", "seed"});
    rd.get(n, "lambda1", cfg.sampler.lambda1);
    rd.get(n, "lambda2", cfg.sampler.lambda2);
    rd.get(n, "r", cfg.sampler.r);
    rd.count(n, "n_steps", cfg.sampler.n_steps);
    rd.count(n, "m_corrector", cfg.sampler.m_corrector);
    rd.get(n, "seed", cfg.sampler.seed);
    rd.checked(n, [&] { cfg.sampler.validate(); });
  }
  if (auto const n = root["score"]) {
    rd.allowOnly(n, "score", {"training_samples", "training_seed", "ridge"});
    rd.count(n, "training_samples", cfg.score.training_samples);
    rd.get(n, "training_seed", cfg.score.training_seed);
    rd.get(n, "ridge", cfg.score.ridge);
  }
  if (auto const n = root["classic"]) {
    rd.allowOnly(n, "classic", {"lambda_dc", "max_iters", "tol", "step_eta", "step_lambda"});
    rd.get(n, "lambda_dc", cfg.classic.lambda_dc);
    rd.count(n, "max_iters", cfg.classic.max_iters);
    rd.get(n, "tol", cfg.classic.tol);
    rd.get(n, "step_eta", cfg.classic.step_eta);
    rd.get(n, "step_lambda", cfg.classic.step_lambda);
    rd.checked(n, [&] { cfg.classic.validate(); });
  }
  if (auto const n = root["methods"]) {
    if (!n.IsSequence() || n.size() == 0) {
      rd.fail(n.Mark(), "'methods' must be a non-empty list");
    }
    cfg.methods.clear();
    for (auto const &m : n) {
      auto const name = m.as<std::string>();
      if (std::find(kMethods.begin(), kMethods.end(), name) == kMethods.end()) {
        rd.fail(m.Mark(), fmt::format("unknown method '{}'", name));
      }
      if (std::find(cfg.methods.begin(), cfg.methods.end(), name) != cfg.methods.end()) {
        rd.fail(m.Mark(), fmt::format("method '{}' listed twice", name));
      }
      cfg.methods.push_back(name);
    }
  }
  if (auto const n = root["output_dir"]) {
    std::string dir;
    rd.get(root, "output_dir", dir);
    cfg.output_dir = dir;
  }
  if (auto const n = root["roi"]) {
    if (!(n.IsScalar() && n.as<std::string>() == "auto")) {
      rd.allowOnly(n, "roi", {"row0", "col0", "rows", "cols"});
      Rect r;
      rd.count(n, "row0", r.row0);
      rd.count(n, "col0", r.col0);
      rd.count(n, "rows", r.rows);
      rd.count(n, "cols", r.cols);
      cfg.roi = r;
    }
  }
  rd.get(root, "error_window", cfg.error_window);

  try {
    cfg.validate();
  } catch (ConfigError const &e) {
    rd.fail(root.Mark(), e.what());
  }
  return cfg;
}

ExperimentConfig LoadConfig(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open config '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path.string());
}

nlohmann::json ToJson(ExperimentConfig const &cfg)
{
  using nlohmann::json;
  json j;
  j["phantom"] = {{"rows", cfg.phantom.rows},
                  {"cols", cfg.phantom.cols},
                  {"kind", ToString(cfg.phantom.kind)},
                  {"seed", cfg.phantom.seed}};
  j["coils"] = {{"count", cfg.coils}, {"seed", cfg.coil_seed}, {"box_smooth", cfg.box_smooth}};
  j["mask"] = {{"pattern", ToString(cfg.mask.pattern)}, {"acceleration", cfg.mask.acceleration},
               {"acs_rows", cfg.mask.acs_rows},         {"acs_cols", cfg.mask.acs_cols},
               {"seed", cfg.mask.seed},                 {"density_exponent", cfg.mask.density_exponent}};
  j["noise_std"] = cfg.noise_std;
  j["noise_seed"] = cfg.noise_seed;
  j["spirit"] = {{"kernel_size", cfg.kernel_size}, {"tikhonov", cfg.tikhonov}};
  j["schedule"] = {
    {"beta_min", cfg.schedule.beta_min}, {"beta_max", cfg.schedule.beta_max}, {"eta0", cfg.schedule.eta0}};
  j["sampler"] = {{"lambda1", cfg.sampler.lambda1}, {"lambda2", cfg.sampler.lambda2},
                  {"r", cfg.sampler.r},             {"n_steps", cfg.sampler.n_steps},
                  {"m_corrector", cfg.sampler.m_corrector}, {"seed", cfg.sampler.seed}};
  j["score"] = {{"training_samples", cfg.score.training_samples},
                {"training_seed", cfg.score.training_seed},
                {"ridge", cfg.score.ridge}};
  j["classic"] = {{"lambda_dc", cfg.classic.lambda_dc}, {"max_iters", cfg.classic.max_iters},
                  {"tol", cfg.classic.tol},             {"step_eta", cfg.classic.step_eta},
                  {"step_lambda", cfg.classic.step_lambda}};
  j["methods"] = cfg.methods;
  j["output_dir"] = cfg.output_dir.string();
  if (cfg.roi) {
    j["roi"] = {{"row0", cfg.roi->row0}, {"col0", cfg.roi->col0}, {"rows", cfg.roi->rows}, {"cols", cfg.roi->cols}};
  } else {
    j["roi"] = "auto";
  }
  j["error_window"] = cfg.error_window;
  return j;
}

} // namespace ssd::cli
