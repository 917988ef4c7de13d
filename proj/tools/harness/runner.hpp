#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gist/aaps.hpp"
#include "gist/diagnostics.hpp"
#include "gist/gaussian_exact.hpp"
#include "gist/gist.hpp"
#include "gist/model.hpp"
#include "gist/nuts.hpp"
#include "gist/rhmc.hpp"
#include "harness/config.hpp"
#include "harness/csv.hpp"
#include "harness/pool.hpp"

#ifndef GIST_DATA_DIR
#define GIST_DATA_DIR "data"
#endif

namespace harness {

using gist::Rng;
using gist::TransitionReport;
using gist::Vector;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kRngName = "philox4x32-10";

struct Target {
  gist::AnyModel model;
  Vector ref_mean;  // NaN where no reference exists
  Vector ref_sq;
};

inline std::string default_reference_path() { return std::string(GIST_DATA_DIR) + "/eight_schools_reference.json"; }

inline Target make_target(const ModelConfig& m) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (m.name == "standard_normal") {
    gist::StandardNormal model(m.dim);
    return {model, model.mean(), model.second_moment()};
  }
  if (m.name == "ill_conditioned_normal") {
    gist::IllConditionedNormal model(m.dim);
    return {model, model.mean(), model.second_moment()};
  }
  if (m.name == "correlated_normal") {
    gist::CorrelatedNormal model(m.dim, m.correlation);
    return {model, Vector::Zero(m.dim), model.second_moment()};
  }
  gist::EightSchoolsData data = gist::EightSchoolsData::classic();
  if (!m.data.empty()) {
    try {
      data = gist::EightSchoolsData::load(m.data);
    } catch (const gist::error& e) {
      throw ConfigError(std::string("model.data: ") + e.what());
    }
  }
  gist::EightSchools model(data, {m.mu_scale, m.tau_scale});
  Target t{model, Vector::Constant(model.dim(), nan), Vector::Constant(model.dim(), nan)};
  const std::string ref = m.reference.empty() ? default_reference_path() : m.reference;
  if (!std::filesystem::exists(ref)) {
    if (!m.reference.empty()) throw ConfigError("model.reference: cannot open " + ref);
    return t;
  }
  std::ifstream in(ref);
  try {
    const auto j = nlohmann::json::parse(in);
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sq = j.at("second_moment").get<std::vector<double>>();
    if (static_cast<Index>(mean.size()) != model.dim() || sq.size() != mean.size()) {
      throw ConfigError("model.reference: dimension does not match the model");
    }
    t.ref_mean = Eigen::Map<const Vector>(mean.data(), model.dim());
    t.ref_sq = Eigen::Map<const Vector>(sq.data(), model.dim());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model.reference: " + ref + ": " + e.what());
  }
  return t;
}

// Chain c of every cell uses stream (seed, c), so cells that differ only in a
// tuning parameter share their random numbers.
inline gist::ChainSummary run_chain(const RunConfig& c, const Target& target, std::uint64_t chain,
                                    const std::function<void(const Vector&)>& on_draw = {}) {
  Rng rng = Rng::stream(c.seed, chain);
  Vector theta = target.model.draw(rng);
  gist::ChainAccumulator acc(target.ref_mean, target.ref_sq);
  acc.start(theta);
  auto drive = [&](auto&& step) {
    for (std::int64_t n = 0; n < c.n_iterations; ++n) {
      TransitionReport r = step(theta);
      acc.add(r);
      theta = std::move(r.next.theta);
      if (on_draw) on_draw(theta);
    }
  };

  if (c.exact()) {
    const gist::ExactFlowSpec spec(*target.model.diagonal_scales());
    if (c.sampler == "rhmc_exact") {
      drive([&](const Vector& t) { return gist::rhmc_exact_transition(spec, t, c.lambda, rng); });
    } else {
      const auto crit = c.sampler == "gist_exact_angle" ? gist::UTurnCriterion::angle : gist::UTurnCriterion::distance;
      drive([&](const Vector& t) { return gist::gist_exact_transition(spec, t, crit, rng); });
    }
    return acc.summary();
  }

  target.model.visit([&](const auto& model) {
    using M = std::decay_t<decltype(model)>;
    const auto mass = gist::MassMatrix::identity(model.dim());
    if (c.sampler == "gist_uniform" || c.sampler == "gist_binomial") {
      const auto dist = c.sampler == "gist_uniform" ? gist::StepDistribution::uniform(c.fraction)
                                                    : gist::StepDistribution::binomial(c.psi);
      const gist::GistSampler<M> s(model, c.eps, mass, dist, c.cap);
      drive([&](const Vector& t) { return s.transition(t, rng); });
    } else if (c.sampler == "nuts") {
      const gist::NutsSampler<M> s(model, c.eps, mass, c.max_depth);
      drive([&](const Vector& t) { return s.transition(t, rng); });
    } else {
      const auto w = c.aaps_weight == "boltzmann" ? gist::AapsWeight::boltzmann : gist::AapsWeight::boltzmann_sqjump;
      const gist::AapsSampler<M> s(model, c.eps, mass, c.K, w, c.cap);
      drive([&](const Vector& t) { return s.transition(t, rng); });
    }
  });
  return acc.summary();
}

// Cartesian product of the sweep axes, eps outermost, then fraction, psi, K.
inline std::vector<RunConfig> expand_grid(const RunConfig& c) {
  const std::vector<double> eps = c.sweep_eps.empty() ? std::vector<double>{c.eps} : c.sweep_eps;
  const std::vector<double> fr = c.sweep_fraction.empty() ? std::vector<double>{c.fraction} : c.sweep_fraction;
  const std::vector<double> psi = c.sweep_psi.empty() ? std::vector<double>{c.psi} : c.sweep_psi;
  const std::vector<std::int64_t> ks = c.sweep_K.empty() ? std::vector<std::int64_t>{c.K} : c.sweep_K;
  std::vector<RunConfig> cells;
  for (double e : eps)
    for (double f : fr)
      for (double p : psi)
        for (auto k : ks) {
          RunConfig cell = c;
          cell.eps = e;
          cell.fraction = f;
          cell.psi = p;
          cell.K = k;
          cell.sweep_eps.clear();
          cell.sweep_fraction.clear();
          cell.sweep_psi.clear();
          cell.sweep_K.clear();
          cells.push_back(std::move(cell));
        }
  return cells;
}

// summaries[cell][chain]
inline std::vector<std::vector<gist::ChainSummary>> run_grid(const std::vector<RunConfig>& cells,
                                                             const Target& target, unsigned workers) {
  std::vector<std::vector<gist::ChainSummary>> out(cells.size());
  if (cells.empty() || cells.front().n_iterations == 0) return out;
  const auto chains = static_cast<std::size_t>(cells.front().n_chains);
  for (auto& row : out) row.resize(chains);
  parallel_for(cells.size() * chains, workers, [&](std::size_t task) {
    const std::size_t cell = task / chains, chain = task % chains;
    out[cell][chain] = run_chain(cells[cell], target, chain);
  });
  return out;
}

inline gist::ChainSummary average(const std::vector<gist::ChainSummary>& xs) {
  gist::ChainSummary a;
  for (const auto& s : xs) {
    a.msjd += s.msjd;
    a.rmse_params += s.rmse_params;
    a.rmse_params_sq += s.rmse_params_sq;
    a.accept_rate += s.accept_rate;
    a.mean_accept_prob += s.mean_accept_prob;
    a.no_return_rate += s.no_return_rate;
    a.divergence_rate += s.divergence_rate;
    a.mean_leapfrog += s.mean_leapfrog;
    a.mean_steps += s.mean_steps;
    a.mean_path_length += s.mean_path_length;
    a.mean_tau += s.mean_tau;
    a.total_gradient_evals += s.total_gradient_evals;
    a.n_iterations = s.n_iterations;
  }
  const auto n = static_cast<double>(xs.size());
  for (double* f : {&a.msjd, &a.rmse_params, &a.rmse_params_sq, &a.accept_rate, &a.mean_accept_prob,
                    &a.no_return_rate, &a.divergence_rate, &a.mean_leapfrog, &a.mean_steps, &a.mean_path_length,
                    &a.mean_tau})
    *f /= n;
  return a;
}

inline const std::vector<std::string>& chain_columns() {
  static const std::vector<std::string> cols{
      "schema_version", "rng",          "model",       "dim",           "sampler",          "eps",
      "fraction",       "psi",          "K",           "aaps_weight",   "lambda",           "cap",
      "max_depth",      "n_iterations", "n_chains",    "seed",          "cell",             "chain",
      "msjd",           "rmse_params",  "rmse_params_sq", "accept_rate", "mean_accept_prob", "no_return_rate",
      "divergence_rate", "mean_leapfrog", "mean_steps", "mean_path_length", "mean_tau", "total_gradient_evals"};
  return cols;
}

inline CsvRow chain_row(const RunConfig& c, Index dim, std::size_t cell, const std::string& chain,
                        const gist::ChainSummary& s) {
  CsvRow r;
  r.add(kSchemaVersion).add(kRngName).add(c.model.name).add(static_cast<std::int64_t>(dim)).add(c.sampler);
  r.add(c.eps).add(c.fraction).add(c.psi).add(c.K).add(c.aaps_weight).add(c.lambda).add(c.cap).add(c.max_depth);
  r.add(c.n_iterations).add(c.n_chains).add(c.seed).add(cell).add(chain);
  r.add(s.msjd).add(s.rmse_params).add(s.rmse_params_sq).add(s.accept_rate).add(s.mean_accept_prob);
  r.add(s.no_return_rate).add(s.divergence_rate).add(s.mean_leapfrog).add(s.mean_steps).add(s.mean_path_length);
  r.add(s.mean_tau).add(s.total_gradient_evals);
  return r;
}

// `run`: one row per chain. `sweep`: one row per cell, averaged over chains.
inline void write_chains(std::ostream& out, const RunConfig& c, unsigned workers, bool aggregate) {
  const Target target = make_target(c.model);
  const auto cells = expand_grid(c);
  const auto results = run_grid(cells, target, workers);
  write_line(out, chain_columns());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (results[i].empty()) continue;
    if (aggregate) {
      write_line(out, chain_row(cells[i], target.model.dim(), i, "all", average(results[i])).cells());
    } else {
      for (std::size_t k = 0; k < results[i].size(); ++k) {
        write_line(out, chain_row(cells[i], target.model.dim(), i, std::to_string(k), results[i][k]).cells());
      }
    }
  }
}

// Running absolute error after each draw, averaged over chains.
inline void write_learning_curve(std::ostream& out, const RunConfig& c, unsigned workers) {
  const Target target = make_target(c.model);
  const auto chains = static_cast<std::size_t>(c.n_chains);
  const auto n = static_cast<std::size_t>(c.n_iterations);
  std::vector<std::vector<gist::CurvePoint>> params(chains), squares(chains);
  if (n > 0) {
    parallel_for(chains, workers, [&](std::size_t k) {
      std::vector<Vector> draws;
      draws.reserve(n);
      run_chain(c, target, k, [&](const Vector& t) { draws.push_back(t); });
      params[k] = gist::learning_curve(draws, target.ref_mean, gist::Transform::identity);
      squares[k] = gist::learning_curve(draws, target.ref_sq, gist::Transform::square);
    });
  }
  write_line(out, {"schema_version", "rng", "model", "dim", "sampler", "eps", "fraction", "psi", "n_chains", "seed",
                   "n", "abs_error_params", "abs_error_params_sq"});
  for (std::size_t m = 0; m < n; ++m) {
    double e = 0.0, e2 = 0.0;
    for (std::size_t k = 0; k < chains; ++k) {
      e += params[k][m].abs_error / static_cast<double>(chains);
      e2 += squares[k][m].abs_error / static_cast<double>(chains);
    }
    CsvRow r;
    r.add(kSchemaVersion).add(kRngName).add(c.model.name).add(static_cast<std::int64_t>(target.model.dim()));
    r.add(c.sampler).add(c.eps).add(c.fraction).add(c.psi).add(c.n_chains).add(c.seed);
    r.add(m + 1).add(e).add(e2);
    write_line(out, r.cells());
  }
}

struct ExactConfig {
  Index dim = 1000;
  std::int64_t n_steps = 100000;
  int n_seeds = 3;
  std::uint64_t seed = 1;
  double lambda = 1.0;
  std::vector<std::string> variants{"rhmc", "gist_angle", "gist_dist"};
  bool per_seed = false;
};

inline gist::ExactVariant parse_variant(const std::string& v) {
  if (v == "rhmc") return gist::ExactVariant::rhmc;
  if (v == "gist_angle") return gist::ExactVariant::gist_angle;
  if (v == "gist_dist") return gist::ExactVariant::gist_dist;
  throw ConfigError("variants: unknown variant '" + v + "' (expected rhmc, gist_angle, gist_dist)");
}

inline void validate(const ExactConfig& c) {
  if (c.dim < 1) throw ConfigError("dim: must be at least 1");
  if (c.n_steps < 1) throw ConfigError("steps: must be at least 1");
  if (c.n_seeds < 1) throw ConfigError("seeds: must be at least 1");
  if (!(c.lambda > 0.0)) throw ConfigError("lambda: must be positive");
  if (c.variants.empty()) throw ConfigError("variants: at least one variant is needed");
  for (const auto& v : c.variants) parse_variant(v);
}

// results[variant][replicate]; replicate r runs on stream (seed, r)
inline std::vector<std::vector<gist::ExperimentSummary>> run_exact(const ExactConfig& c, unsigned workers) {
  const auto reps = static_cast<std::size_t>(c.n_seeds);
  std::vector<std::vector<gist::ExperimentSummary>> out(c.variants.size(), std::vector<gist::ExperimentSummary>(reps));
  parallel_for(c.variants.size() * reps, workers, [&](std::size_t task) {
    const std::size_t v = task / reps, r = task % reps;
    out[v][r] = gist::run_gaussian_experiment(c.dim, c.n_steps, parse_variant(c.variants[v]), c.seed, c.lambda, r);
  });
  return out;
}

inline gist::ExperimentSummary average(const std::vector<gist::ExperimentSummary>& xs) {
  gist::ExperimentSummary a = xs.front();
  for (double* f : {&a.mean_accept, &a.accept_rate, &a.no_return_rate, &a.msjd, &a.mean_tau, &a.mean_uturn_time,
                    &a.mean_accepted_path})
    *f = 0.0;
  for (const auto& s : xs) {
    a.mean_accept += s.mean_accept;
    a.accept_rate += s.accept_rate;
    a.no_return_rate += s.no_return_rate;
    a.msjd += s.msjd;
    a.mean_tau += s.mean_tau;
    a.mean_uturn_time += s.mean_uturn_time;
    a.mean_accepted_path += s.mean_accepted_path;
  }
  const auto n = static_cast<double>(xs.size());
  for (double* f : {&a.mean_accept, &a.accept_rate, &a.no_return_rate, &a.msjd, &a.mean_tau, &a.mean_uturn_time,
                    &a.mean_accepted_path})
    *f /= n;
  return a;
}

inline void write_exact(std::ostream& out, const ExactConfig& c, unsigned workers) {
  const auto results = run_exact(c, workers);
  write_line(out, {"schema_version", "rng", "variant", "dim", "n_steps", "n_seeds", "seed", "replicate", "lambda",
                   "mean_accept", "accept_rate", "no_return_rate", "msjd", "mean_tau", "mean_uturn_time",
                   "mean_accepted_path"});
  auto emit = [&](const std::string& variant, const std::string& replicate, const gist::ExperimentSummary& s) {
    CsvRow r;
    r.add(kSchemaVersion).add(kRngName).add(variant).add(static_cast<std::int64_t>(c.dim)).add(c.n_steps);
    r.add(c.n_seeds).add(c.seed).add(replicate).add(c.lambda);
    r.add(s.mean_accept).add(s.accept_rate).add(s.no_return_rate).add(s.msjd).add(s.mean_tau);
    r.add(s.mean_uturn_time).add(s.mean_accepted_path);
    write_line(out, r.cells());
  };
  for (std::size_t v = 0; v < results.size(); ++v) {
    if (c.per_seed) {
      for (std::size_t k = 0; k < results[v].size(); ++k) emit(c.variants[v], std::to_string(k), results[v][k]);
      continue;
    }
    emit(c.variants[v], "all", average(results[v]));
  }
}

}  // namespace harness
