#include "vbreg/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "vbreg/errors.hpp"
#include "vbreg/format.hpp"

namespace vbreg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw UsageError("expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw UsageError("integer out of range: '" + v + "'");
  }
}

double to_real(const std::string& v) {
  try {
    return parse_real(v);
  } catch (const DataError&) {
    throw UsageError("expected a real number, got '" + v + "'");
  }
}

template <class T, class F>
std::vector<T> to_list(const std::string& v, F conv) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(conv(trim(item)));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_real(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Key {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VB_SIZE(name, field)                                                            \
  {name,                                                                                \
   {[](RunConfig& c, const std::string& v) { c.field = static_cast<std::size_t>(to_u64(v)); }, \
    [](const RunConfig& c) { return std::to_string(c.field); }}}
#define VB_U64(name, field)                                                  \
  {name,                                                                     \
   {[](RunConfig& c, const std::string& v) { c.field = to_u64(v); },        \
    [](const RunConfig& c) { return std::to_string(c.field); }}}
#define VB_REAL(name, field)                                                 \
  {name,                                                                     \
   {[](RunConfig& c, const std::string& v) { c.field = to_real(v); },       \
    [](const RunConfig& c) { return format_real(c.field); }}}

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = {
      VB_U64("seed", seed),
      {"epsilon",
       {[](RunConfig& c, const std::string& v) { c.epsilon = to_real(v); },
        [](const RunConfig& c) { return c.epsilon ? format_real(*c.epsilon) : std::string(); }}},
      VB_SIZE("iterations", net.iterations),
      VB_SIZE("feature_dim", net.feature_dim),
      VB_SIZE("latent_dim", net.latent_dim),
      VB_SIZE("hidden_dim", net.hidden_dim),
      VB_SIZE("label_tile_k", net.label_tile_k),
      VB_SIZE("epochs", train.epochs),
      VB_REAL("lr", train.adam.lr),
      VB_REAL("weight_decay", train.adam.weight_decay),
      VB_SIZE("train_scenes", train_scenes),
      VB_SIZE("val_scenes", val_scenes),
      VB_SIZE("kappa", pipeline.kappa),
      VB_REAL("seed_ratio", pipeline.seeds.ratio),
      VB_SIZE("seed_lower_bar", pipeline.seeds.lower_bar),
      VB_REAL("nms_radius", pipeline.seeds.nms_radius),
      VB_REAL("sigma", pipeline.sigma),
      VB_REAL("wilson_z", pipeline.z),
      VB_SIZE("refine_iterations", pipeline.refine_iterations),
      VB_SIZE("synth_n", synth.n),
      VB_REAL("synth_inlier_ratio", synth.inlier_ratio),
      VB_REAL("synth_noise_std", synth.noise_std),
      VB_REAL("synth_extent", synth.extent),
      VB_SIZE("bench_scenes", bench.scenes),
      {"bench_ratios",
       {[](RunConfig& c, const std::string& v) { c.bench.ratios = to_list<double>(v, to_real); },
        [](const RunConfig& c) { return join(c.bench.ratios); }}},
      VB_SIZE("bench_n", bench.scene.n),
      VB_REAL("bench_noise_std", bench.scene.noise_std),
      VB_REAL("bench_extent", bench.scene.extent),
      VB_SIZE("ransac_iterations", bench.ransac.iterations),
      VB_SIZE("ransac_sample", bench.ransac.sample_size),
      VB_SIZE("sm_top_k", bench.sm_top_k),
      VB_REAL("re_thresh_deg", bench.re_thresh_deg),
      VB_REAL("te_thresh", bench.te_thresh),
      {"theorem_p_in",
       {[](RunConfig& c, const std::string& v) { c.theorem.p_in = to_list<double>(v, to_real); },
        [](const RunConfig& c) { return join(c.theorem.p_in); }}},
      {"theorem_kappa",
       {[](RunConfig& c, const std::string& v) {
          c.theorem.kappa = to_list<std::size_t>(v, [](const std::string& s) { return static_cast<std::size_t>(to_u64(s)); });
        },
        [](const RunConfig& c) { return join(c.theorem.kappa); }}},
      {"theorem_J",
       {[](RunConfig& c, const std::string& v) {
          c.theorem.J = to_list<std::size_t>(v, [](const std::string& s) { return static_cast<std::size_t>(to_u64(s)); });
        },
        [](const RunConfig& c) { return join(c.theorem.J); }}},
      {"theorem_seed_inliers",
       {[](RunConfig& c, const std::string& v) {
          c.theorem.seed_inliers = to_list<std::size_t>(v, [](const std::string& s) { return static_cast<std::size_t>(to_u64(s)); });
        },
        [](const RunConfig& c) { return join(c.theorem.seed_inliers); }}},
      VB_REAL("theorem_alpha_fraction", theorem.alpha_fraction),
      VB_SIZE("theorem_n", theorem.n),
      VB_SIZE("theorem_trials", theorem.trials),
  };
  return table;
}

#undef VB_SIZE
#undef VB_U64
#undef VB_REAL

}  // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
  synth.seed = s;
  bench.seed = s;
  theorem.seed = s;
  pipeline.noise_seed = s;
}

void RunConfig::set_epsilon(double eps) {
  epsilon = eps;
  synth.epsilon = eps;
  bench.scene.epsilon = eps;
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("config: " + what);
  };
  if (epsilon) need(*epsilon > 0.0, "epsilon must be > 0");
  net.validate();
  need(train.epochs >= 1, "epochs must be >= 1");
  need(train.adam.lr > 0.0, "lr must be > 0");
  need(train.adam.weight_decay >= 0.0, "weight_decay must be >= 0");
  need(train_scenes >= 1, "train_scenes must be >= 1");
  pipeline.validate();
  need(pipeline.seeds.lower_bar >= 1, "seed_lower_bar must be >= 1");
  synth.validate();
  bench.validate();
  need(!theorem.p_in.empty() && !theorem.kappa.empty() && !theorem.J.empty() &&
           !theorem.seed_inliers.empty(),
       "theorem grid lists must be non-empty");
  for (double p : theorem.p_in) need(p > 0.0 && p < 1.0, "theorem_p_in entries must be in (0, 1)");
  for (auto k : theorem.kappa) {
    need(k >= 1, "theorem_kappa entries must be >= 1");
    for (double p : theorem.p_in) {
      need(std::floor(p * static_cast<double>(theorem.n)) >= static_cast<double>(k),
           "theorem_n * p_in must be >= kappa in every cell");
    }
  }
  for (auto j : theorem.J) need(j >= 1, "theorem_J entries must be >= 1");
  for (auto c : theorem.seed_inliers) need(c >= 1, "theorem_seed_inliers entries must be >= 1");
  need(theorem.alpha_fraction >= 0.0, "theorem_alpha_fraction must be >= 0");
  need(theorem.trials >= 1, "theorem_trials must be >= 1");
}

RunConfig parse_run_config(std::istream& is) {
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys().find(key);
    if (it == keys().end()) {
      throw UsageError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    try {
      it->second.set(cfg, value);
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(lineno) + " (" + key + "): " + e.what());
    }
  }
  if (cfg.epsilon) cfg.set_epsilon(*cfg.epsilon);
  cfg.set_seed(cfg.seed);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config " + path.string());
  return parse_run_config(is);
}

void write_run_config(std::ostream& os, const RunConfig& cfg) {
  for (const auto& [name, key] : keys()) {
    const std::string v = key.get(cfg);
    if (!v.empty()) os << name << " = " << v << '\n';
  }
}

}  // namespace vbreg
