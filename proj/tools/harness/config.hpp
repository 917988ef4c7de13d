#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gist/model.hpp"

namespace harness {

using gist::Index;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"standard_normal", "ill_conditioned_normal", "correlated_normal",
                                              "eight_schools"};
  return names;
}

inline const std::vector<std::string>& sampler_names() {
  static const std::vector<std::string> names{"gist_uniform", "gist_binomial",   "nuts",           "aaps",
                                              "rhmc_exact",   "gist_exact_angle", "gist_exact_dist"};
  return names;
}

struct ModelConfig {
  std::string name = "standard_normal";
  Index dim = 100;
  double correlation = 0.9;
  std::string data;       // eight schools data file; empty means the built-in table
  std::string reference;  // eight schools reference moments; empty means the shipped fixture
  double mu_scale = 5.0;
  double tau_scale = 5.0;
};

struct RunConfig {
  ModelConfig model;
  std::string sampler = "gist_uniform";
  double eps = 0.36;
  double fraction = 0.0;
  double psi = 0.9;
  std::int64_t K = 2;
  std::string aaps_weight = "boltzmann";
  double lambda = 1.0;
  std::int64_t cap = 1024;
  int max_depth = 10;
  std::int64_t n_iterations = 1000;
  std::int64_t n_chains = 4;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: GIST_WORKERS, else hardware concurrency
  std::string output = "-";

  // sweep axes; an empty axis keeps the scalar value above
  std::vector<double> sweep_eps;
  std::vector<double> sweep_fraction;
  std::vector<double> sweep_psi;
  std::vector<std::int64_t> sweep_K;

  bool exact() const { return sampler == "rhmc_exact" || sampler == "gist_exact_angle" || sampler == "gist_exact_dist"; }
};

namespace detail {

template <class T>
void read(const nlohmann::json& section, const std::string& where, const char* key, T& out) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type (" + section.at(key).dump() + ")");
  }
}

inline void reject_unknown(const nlohmann::json& section, const std::string& where, std::set<std::string> known) {
  if (!section.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : section.items()) {
    if (!known.count(key)) throw ConfigError(where + "." + key + ": unknown field");
  }
}

}  // namespace detail

// Sections: model, sampler, run, sweep. Every key is optional.
inline RunConfig parse_config(const nlohmann::json& j, RunConfig c = {}) {
  detail::reject_unknown(j, "config", {"model", "sampler", "run", "sweep"});
  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::reject_unknown(m, "model", {"name", "dim", "correlation", "data", "reference", "mu_scale", "tau_scale"});
    detail::read(m, "model", "name", c.model.name);
    detail::read(m, "model", "dim", c.model.dim);
    detail::read(m, "model", "correlation", c.model.correlation);
    detail::read(m, "model", "data", c.model.data);
    detail::read(m, "model", "reference", c.model.reference);
    detail::read(m, "model", "mu_scale", c.model.mu_scale);
    detail::read(m, "model", "tau_scale", c.model.tau_scale);
  }
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    detail::reject_unknown(s, "sampler",
                           {"name", "eps", "fraction", "psi", "K", "aaps_weight", "lambda", "cap", "max_depth"});
    detail::read(s, "sampler", "name", c.sampler);
    detail::read(s, "sampler", "eps", c.eps);
    detail::read(s, "sampler", "fraction", c.fraction);
    detail::read(s, "sampler", "psi", c.psi);
    detail::read(s, "sampler", "K", c.K);
    detail::read(s, "sampler", "aaps_weight", c.aaps_weight);
    detail::read(s, "sampler", "lambda", c.lambda);
    detail::read(s, "sampler", "cap", c.cap);
    detail::read(s, "sampler", "max_depth", c.max_depth);
  }
  if (j.contains("run")) {
    const auto& r = j["run"];
    detail::reject_unknown(r, "run", {"n_iterations", "n_chains", "seed", "workers", "output"});
    detail::read(r, "run", "n_iterations", c.n_iterations);
    detail::read(r, "run", "n_chains", c.n_chains);
    detail::read(r, "run", "seed", c.seed);
    detail::read(r, "run", "workers", c.workers);
    detail::read(r, "run", "output", c.output);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    detail::reject_unknown(s, "sweep", {"eps", "fraction", "psi", "K"});
    detail::read(s, "sweep", "eps", c.sweep_eps);
    detail::read(s, "sweep", "fraction", c.sweep_fraction);
    detail::read(s, "sweep", "psi", c.sweep_psi);
    detail::read(s, "sweep", "K", c.sweep_K);
  }
  return c;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config(j, std::move(base));
}

namespace detail {

inline void check_eps(double eps, const std::string& field) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError(field + ": must be positive and finite");
}
inline void check_fraction(double f, const std::string& field) {
  if (!(f >= 0.0 && f < 1.0)) throw ConfigError(field + ": must lie in [0, 1)");
}
inline void check_psi(double p, const std::string& field) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError(field + ": must lie in (0, 1)");
}
inline void check_k(std::int64_t k, const std::string& field) {
  if (k < 0) throw ConfigError(field + ": must be nonnegative");
}

inline bool one_of(const std::string& v, const std::vector<std::string>& names) {
  return std::find(names.begin(), names.end(), v) != names.end();
}

inline std::string joined(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace detail

// Everything is checked before any chain starts.
inline void validate(const RunConfig& c) {
  if (!detail::one_of(c.model.name, model_names())) {
    throw ConfigError("model.name: unknown model '" + c.model.name + "' (expected one of " +
                      detail::joined(model_names()) + ")");
  }
  if (c.model.name != "eight_schools" && c.model.dim < 1) throw ConfigError("model.dim: must be at least 1");
  if (c.model.name == "correlated_normal" && !(c.model.correlation > -1.0 / static_cast<double>(std::max<Index>(c.model.dim - 1, 1)) &&
                                               c.model.correlation < 1.0)) {
    throw ConfigError("model.correlation: covariance must be positive definite");
  }
  if (!(c.model.mu_scale > 0.0)) throw ConfigError("model.mu_scale: must be positive");
  if (!(c.model.tau_scale > 0.0)) throw ConfigError("model.tau_scale: must be positive");
  if (!detail::one_of(c.sampler, sampler_names())) {
    throw ConfigError("sampler.name: unknown sampler '" + c.sampler + "' (expected one of " +
                      detail::joined(sampler_names()) + ")");
  }
  if (c.exact() && c.model.name != "standard_normal" && c.model.name != "ill_conditioned_normal") {
    throw ConfigError("sampler.name: " + c.sampler + " needs a diagonal Gaussian model, not " + c.model.name);
  }
  detail::check_eps(c.eps, "sampler.eps");
  detail::check_fraction(c.fraction, "sampler.fraction");
  detail::check_psi(c.psi, "sampler.psi");
  detail::check_k(c.K, "sampler.K");
  if (c.aaps_weight != "boltzmann" && c.aaps_weight != "boltzmann_sqjump") {
    throw ConfigError("sampler.aaps_weight: expected boltzmann or boltzmann_sqjump");
  }
  if (!(c.lambda > 0.0)) throw ConfigError("sampler.lambda: must be positive");
  if (c.cap < 1) throw ConfigError("sampler.cap: must be at least 1");
  if (c.max_depth < 0 || c.max_depth > 30) throw ConfigError("sampler.max_depth: must lie in [0, 30]");
  if (c.n_iterations < 0) throw ConfigError("run.n_iterations: must be nonnegative");
  if (c.n_chains < 1) throw ConfigError("run.n_chains: must be at least 1");
  if (c.workers < 0) throw ConfigError("run.workers: must be nonnegative");
  for (double e : c.sweep_eps) detail::check_eps(e, "sweep.eps");
  for (double f : c.sweep_fraction) detail::check_fraction(f, "sweep.fraction");
  for (double p : c.sweep_psi) detail::check_psi(p, "sweep.psi");
  for (auto k : c.sweep_K) detail::check_k(k, "sweep.K");
}

// Flag, then config, then GIST_WORKERS, then the machine.
inline unsigned resolve_workers(int configured) {
  if (configured > 0) return static_cast<unsigned>(configured);
  if (const char* env = std::getenv("GIST_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("GIST_WORKERS: must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace harness
