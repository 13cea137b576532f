#pragma once

// RunConfig: the flat JSON schema read by the command-line tool.
//
// Scalar keys may also be given as arrays; `run` needs exactly one value per
// key while `sweep` and `compare` expand the Cartesian product. Optional keys
// left out are filled with the task defaults listed in resolve().

#include "erligme/io.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace erligme {

struct RunConfig {
  Task task = Task::denoise;
  std::vector<std::string> variants;  ///< e.g. "DSTV", "L-DVTV", "EL-ASNN"
  std::vector<double> mu;
  std::vector<double> lambda1;
  std::vector<double> theta_ligme;  ///< θ for L-variants
  std::vector<double> theta_er;     ///< θ for EL-variants
  std::vector<double> rho_er;       ///< ρ for EL-variants (defaults to θ)
  std::vector<int> shifts;          ///< RPCA shift s ∈ {0, 1, 2}
  std::optional<double> eps_s;      ///< RPCA ℓ1 budget; default MN·p_noise
  double p_noise = 0.1;
  Index n = 32;
  int regions = 8;
  double sigma_noise = 0.1;
  double sampling_ratio = 0.4;
  Index w = 3;
  bool overlap = true;
  BMode b_mode = BMode::scaled_identity;
  double strict_eps = 0.0;
  double kappa = 1.1;
  std::optional<double> eps_stop;
  int max_iters = 20000;
  StepRule step_rule = StepRule::conservative;
  int guard_window = 100;
  double guard_factor = 10.0;
  std::string input_image;
  std::string output_dir = "runs";
  std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Name parsing

inline Task parse_task(const std::string& s) {
  if (s == "denoise") return Task::denoise;
  if (s == "cs") return Task::cs;
  if (s == "rpca") return Task::rpca;
  throw ConfigError("unknown task '" + s + "' (expected denoise, cs or rpca)");
}

inline Regularizer parse_regularizer(const std::string& s) {
  for (Regularizer r : {Regularizer::DVTV, Regularizer::STV, Regularizer::DSTV, Regularizer::NN,
                        Regularizer::ASNN})
    if (s == to_string(r)) return r;
  throw ConfigError("unknown regularizer '" + s + "'");
}

inline Enhancement parse_enhancement(const std::string& s) {
  for (Enhancement e : {Enhancement::plain, Enhancement::ligme, Enhancement::er_ligme})
    if (s == to_string(e)) return e;
  throw ConfigError("unknown enhancement '" + s + "' (expected plain, ligme or er_ligme)");
}

inline BMode parse_b_mode(const std::string& s) {
  for (BMode m : {BMode::scaled_identity, BMode::chen_svd})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown b_mode '" + s + "'");
}

inline StepRule parse_step_rule(const std::string& s) {
  if (s == "conservative") return StepRule::conservative;
  if (s == "theorem") return StepRule::theorem;
  throw ConfigError("unknown step_rule '" + s + "'");
}

/// "EL-DSTV" → (DSTV, er_ligme) and so on.
inline std::pair<Regularizer, Enhancement> parse_variant(const std::string& label) {
  if (label.rfind("EL-", 0) == 0) return {parse_regularizer(label.substr(3)), Enhancement::er_ligme};
  if (label.rfind("L-", 0) == 0) return {parse_regularizer(label.substr(2)), Enhancement::ligme};
  return {parse_regularizer(label), Enhancement::plain};
}

/// Variants compared by default, in table order.
inline std::vector<std::string> default_variants(Task t) {
  switch (t) {
    case Task::denoise:
      return {"DVTV", "L-DVTV", "EL-DVTV", "STV", "L-STV", "EL-STV", "DSTV", "EL-DSTV"};
    case Task::cs: return {"DVTV", "EL-DVTV", "STV", "EL-STV", "DSTV", "EL-DSTV"};
    case Task::rpca: return {"NN", "L-NN", "ASNN", "EL-ASNN"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// JSON ↔ RunConfig

namespace detail {

template <class T>
std::vector<T> scalar_or_array(const Json& v, const std::string& key) {
  std::vector<T> out;
  try {
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(e.get<T>());
    } else {
      out.push_back(v.get<T>());
    }
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
  return out;
}

template <class T>
T scalar(const Json& v, const std::string& key) {
  if (v.is_array()) throw ConfigError("config key '" + key + "' must be a single value");
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Every key accepted in a config file.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "task", "variants", "regularizer", "enhancement", "mu", "lambda1", "theta_ligme",
      "theta_er", "rho_er", "shifts", "eps_s", "p_noise", "n", "regions", "sigma_noise",
      "sampling_ratio", "w", "overlap", "b_mode", "strict_eps", "kappa", "eps_stop",
      "max_iters", "step_rule", "guard_window", "guard_factor", "input_image", "output_dir",
      "seed"};
  return keys;
}

/// Parses and validates; unknown keys are rejected. Defaults are not yet
/// filled in (see resolve()).
inline RunConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const std::set<std::string> known(config_keys().begin(), config_keys().end());
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  using detail::scalar;
  using detail::scalar_or_array;
  RunConfig c;
  if (!j.contains("task")) throw ConfigError("config key 'task' is required");
  c.task = parse_task(scalar<std::string>(j["task"], "task"));

  if (j.contains("variants")) {
    if (j.contains("regularizer") || j.contains("enhancement"))
      throw ConfigError("give either 'variants' or 'regularizer'/'enhancement', not both");
    c.variants = scalar_or_array<std::string>(j["variants"], "variants");
  } else if (j.contains("regularizer")) {
    const auto regs = scalar_or_array<std::string>(j["regularizer"], "regularizer");
    const auto enhs = j.contains("enhancement")
                          ? scalar_or_array<std::string>(j["enhancement"], "enhancement")
                          : std::vector<std::string>{"plain"};
    for (const auto& r : regs)
      for (const auto& e : enhs)
        c.variants.push_back(variant_label(parse_regularizer(r), parse_enhancement(e)));
  } else if (j.contains("enhancement")) {
    throw ConfigError("'enhancement' needs 'regularizer'");
  }

  auto num_list = [&](const char* key, std::vector<double>& dst) {
    if (j.contains(key)) dst = scalar_or_array<double>(j[key], key);
  };
  num_list("mu", c.mu);
  num_list("lambda1", c.lambda1);
  num_list("theta_ligme", c.theta_ligme);
  num_list("theta_er", c.theta_er);
  num_list("rho_er", c.rho_er);
  if (j.contains("shifts")) c.shifts = scalar_or_array<int>(j["shifts"], "shifts");
  if (j.contains("eps_s")) c.eps_s = scalar<double>(j["eps_s"], "eps_s");
  if (j.contains("eps_stop")) c.eps_stop = scalar<double>(j["eps_stop"], "eps_stop");

  auto get = [&](const char* key, auto& dst) {
    using T = std::decay_t<decltype(dst)>;
    if (j.contains(key)) dst = scalar<T>(j[key], key);
  };
  get("p_noise", c.p_noise);
  get("n", c.n);
  get("regions", c.regions);
  get("sigma_noise", c.sigma_noise);
  get("sampling_ratio", c.sampling_ratio);
  get("w", c.w);
  get("overlap", c.overlap);
  get("strict_eps", c.strict_eps);
  get("kappa", c.kappa);
  get("max_iters", c.max_iters);
  get("guard_window", c.guard_window);
  get("guard_factor", c.guard_factor);
  get("input_image", c.input_image);
  get("output_dir", c.output_dir);
  get("seed", c.seed);
  if (j.contains("b_mode")) c.b_mode = parse_b_mode(scalar<std::string>(j["b_mode"], "b_mode"));
  if (j.contains("step_rule"))
    c.step_rule = parse_step_rule(scalar<std::string>(j["step_rule"], "step_rule"));
  return c;
}

/// Fills task defaults and checks ranges. Defaults:
///   variants     default_variants(task)
///   mu           denoise/cs {0.05, 0.1, 0.2, 0.3, 0.4, 0.5}; rpca {1}
///   lambda1      rpca {0.05, 0.25, 0.5, 0.75, 1, 1.25}; images {1} (unused)
///   theta_ligme  denoise/cs {0.99}; rpca {0.1}
///   theta_er     denoise {3.5}; cs {4}; rpca {1}
///   rho_er       equal to theta_er (paired element-wise)
///   shifts       rpca {0, 1, 2}; images {0}
///   eps_s        rows·cols·p_noise
///   eps_stop     images 1e-3; rpca 1e-5
inline RunConfig resolve(RunConfig c) {
  const bool rpca = c.task == Task::rpca;
  if (c.variants.empty()) c.variants = default_variants(c.task);
  for (const auto& v : c.variants) {
    const auto [r, e] = parse_variant(v);
    require_config(is_image_regularizer(r) != rpca,
                   "variant " + v + " does not belong to task " + to_string(c.task));
    require_config(!(e == Enhancement::ligme && (r == Regularizer::DSTV || r == Regularizer::ASNN)),
                   "variant " + v + " has no proximable LiGME form; use EL-" +
                       std::string(to_string(r)));
  }
  if (c.mu.empty()) c.mu = rpca ? std::vector<double>{1.0} : denoise_mu_grid();
  if (c.lambda1.empty()) c.lambda1 = rpca ? rpca_lambda_grid() : std::vector<double>{1.0};
  if (c.theta_ligme.empty()) c.theta_ligme = {rpca ? 0.1 : 0.99};
  if (c.theta_er.empty()) c.theta_er = {c.task == Task::denoise ? 3.5 : c.task == Task::cs ? 4.0 : 1.0};
  if (c.rho_er.empty()) c.rho_er = c.theta_er;
  require_config(c.rho_er.size() == c.theta_er.size(),
                 "theta_er and rho_er must have the same length (they are paired)");
  if (c.shifts.empty()) c.shifts = rpca ? std::vector<int>{0, 1, 2} : std::vector<int>{0};
  if (!c.eps_stop) c.eps_stop = rpca ? 1e-5 : 1e-3;

  for (double m : c.mu) require_config(m > 0.0, "mu must be positive");
  for (double l : c.lambda1) require_config(l > 0.0, "lambda1 must be positive");
  for (double t : c.theta_ligme) require_config(t >= 0.0, "theta_ligme must be non-negative");
  for (std::size_t i = 0; i < c.theta_er.size(); ++i) {
    require_config(c.theta_er[i] >= 0.0 && c.rho_er[i] > 0.0, "theta_er/rho_er out of range");
    if (c.theta_er[i] > c.rho_er[i])
      throw ConfigError("convexity condition violated: theta (" + format_double(c.theta_er[i]) +
                        ") must not exceed rho (" + format_double(c.rho_er[i]) + ")");
  }
  for (int s : c.shifts) require_config(s >= 0 && s <= 2, "shifts must lie in {0, 1, 2}");
  if (!rpca) require_config(c.shifts == std::vector<int>{0}, "shifts apply to rpca only");
  require_config(c.p_noise >= 0.0 && c.p_noise <= 1.0, "p_noise must lie in [0, 1]");
  if (c.eps_s) require_config(*c.eps_s >= 0.0, "eps_s must be non-negative");
  require_config(c.n >= 8, "n must be at least 8");
  require_config(c.regions >= 1, "regions must be positive");
  require_config(c.sigma_noise >= 0.0, "sigma_noise must be non-negative");
  require_config(c.sampling_ratio > 0.0 && c.sampling_ratio <= 1.0,
                 "sampling_ratio must lie in (0, 1]");
  require_config(c.w >= 1, "w must be positive");
  require_config(c.strict_eps >= 0.0, "strict_eps must be non-negative");
  require_config(c.kappa > 1.0, "kappa must exceed 1");
  require_config(*c.eps_stop > 0.0, "eps_stop must be positive");
  require_config(c.max_iters >= 1, "max_iters must be positive");
  require_config(c.guard_window >= 0 && c.guard_factor > 1.0, "guard settings out of range");
  return c;
}

/// The fully resolved config as JSON, every key present.
inline Json config_to_json(const RunConfig& c) {
  Json j;
  j["task"] = to_string(c.task);
  j["variants"] = c.variants;
  j["mu"] = c.mu;
  j["lambda1"] = c.lambda1;
  j["theta_ligme"] = c.theta_ligme;
  j["theta_er"] = c.theta_er;
  j["rho_er"] = c.rho_er;
  j["shifts"] = c.shifts;
  j["eps_s"] = c.eps_s ? Json(*c.eps_s) : Json(nullptr);
  j["p_noise"] = c.p_noise;
  j["n"] = c.n;
  j["regions"] = c.regions;
  j["sigma_noise"] = c.sigma_noise;
  j["sampling_ratio"] = c.sampling_ratio;
  j["w"] = c.w;
  j["overlap"] = c.overlap;
  j["b_mode"] = to_string(c.b_mode);
  j["strict_eps"] = c.strict_eps;
  j["kappa"] = c.kappa;
  j["eps_stop"] = c.eps_stop ? Json(*c.eps_stop) : Json(nullptr);
  j["max_iters"] = c.max_iters;
  j["step_rule"] = to_string(c.step_rule);
  j["guard_window"] = c.guard_window;
  j["guard_factor"] = c.guard_factor;
  j["input_image"] = c.input_image;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

inline RunConfig load_config(const std::string& path) {
  const std::string text = read_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  // A written-back resolved config carries eps_s/eps_stop as null when unset.
  for (const char* k : {"eps_s", "eps_stop"})
    if (j.is_object() && j.contains(k) && j[k].is_null()) j.erase(k);
  return parse_config(j);
}

inline SolverConfig solver_config(const RunConfig& c) {
  SolverConfig s;
  s.kappa = c.kappa;
  s.eps_stop = *c.eps_stop;
  s.max_iters = c.max_iters;
  s.rule = c.step_rule;
  s.guard_window = c.guard_window;
  s.guard_factor = c.guard_factor;
  return s;
}

/// 64-bit FNV-1a of the resolved config with seed and output_dir removed.
inline std::uint64_t config_hash(const RunConfig& c) {
  Json j = config_to_json(c);
  j.erase("seed");
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Grid expansion

/// Every VariantConfig selected by the (resolved) config for one problem.
inline std::vector<VariantConfig> expand_grid(const RunConfig& c, const Problem& p) {
  std::vector<VariantConfig> grid;
  for (const auto& label : c.variants) {
    const auto [r, e] = parse_variant(label);
    std::vector<std::pair<double, double>> theta_rho;
    if (e == Enhancement::ligme) {
      for (double t : c.theta_ligme) theta_rho.push_back({t, 1.0});
    } else if (e == Enhancement::er_ligme) {
      for (std::size_t i = 0; i < c.theta_er.size(); ++i)
        theta_rho.push_back({c.theta_er[i], c.rho_er[i]});
    } else {
      theta_rho.push_back({0.0, 1.0});
    }
    const std::vector<double> lambdas =
        is_image_regularizer(r) ? std::vector<double>{c.lambda1.front()} : c.lambda1;
    for (const auto& [theta, rho] : theta_rho)
      for (double mu : c.mu)
        for (double l : lambdas) {
          VariantConfig v;
          v.regularizer = r;
          v.enhancement = e;
          v.theta = theta;
          v.rho = rho;
          v.mu = mu;
          v.lambda1 = l;
          v.w = c.w;
          v.overlap = c.overlap;
          v.b_mode = c.b_mode;
          v.strict_eps = c.strict_eps;
          if (p.task == Task::rpca)
            v.eps_s = c.eps_s ? *c.eps_s : double(p.rows * p.cols) * c.p_noise;
          grid.push_back(fit_to_problem(v, p));
        }
  }
  return grid;
}

/// The observation of one (seed, shift) pair.
inline Problem make_problem(const RunConfig& c, int shift) {
  switch (c.task) {
    case Task::rpca: return make_rpca_problem(shift, c.p_noise, c.seed);
    case Task::denoise:
    case Task::cs:
      if (!c.input_image.empty()) {
        Image img = read_ppm(c.input_image);
        return make_image_problem(c.task, std::move(img.data), img.n, c.sampling_ratio,
                                  c.sigma_noise, c.seed);
      }
      return c.task == Task::cs ? make_cs_problem(c.n, c.regions, c.sampling_ratio, c.sigma_noise, c.seed)
                                : make_denoise_problem(c.n, c.regions, c.sigma_noise, c.seed);
  }
  throw ConfigError("unknown task");
}

}  // namespace erligme
