#pragma once

#include <cmath>
#include <concepts>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gist/rng.hpp"
#include "gist/types.hpp"

namespace gist {

// A target density known up to a constant. `log_density_gradient` returns
// log p(theta) and writes its gradient into `grad` (resized by the callee).
// Both are unchecked; use the free functions below for validated access.
template <class M>
concept LogDensityModel = requires(const M& m, const Vector& x, Vector& g) {
  { m.dim() } -> std::convertible_to<Index>;
  { m.log_density(x) } -> std::convertible_to<double>;
  { m.log_density_gradient(x, g) } -> std::convertible_to<double>;
};

namespace detail {

template <LogDensityModel M>
void check_point(const M& model, const Vector& theta) {
  if (theta.size() != model.dim()) {
    throw dimension_error("theta has dimension " + std::to_string(theta.size()) +
                          ", model expects " + std::to_string(model.dim()));
  }
  if (!theta.allFinite()) throw domain_error("theta has non-finite entries", theta);
}

}  // namespace detail

template <LogDensityModel M>
double log_density(const M& model, const Vector& theta) {
  detail::check_point(model, theta);
  return model.log_density(theta);
}

template <LogDensityModel M>
Vector grad_log_density(const M& model, const Vector& theta) {
  detail::check_point(model, theta);
  Vector grad;
  model.log_density_gradient(theta, grad);
  return grad;
}

/// Isotropic standard normal; log p = -|theta|^2 / 2.
class StandardNormal {
 public:
  explicit StandardNormal(Index dim) : dim_(dim) {
    if (dim < 1) throw dimension_error("standard normal needs dim >= 1");
  }

  Index dim() const { return dim_; }
  static constexpr const char* kind() { return "standard_normal"; }

  double log_density(const Vector& theta) const { return -0.5 * theta.squaredNorm(); }

  double log_density_gradient(const Vector& theta, Vector& grad) const {
    grad = -theta;
    return -0.5 * theta.squaredNorm();
  }

  Vector draw(Rng& rng) const {
    return Vector::NullaryExpr(dim_, [&](Index) { return rng.normal(); });
  }

  Vector scales() const { return Vector::Ones(dim_); }
  Vector mean() const { return Vector::Zero(dim_); }
  Vector second_moment() const { return Vector::Ones(dim_); }

 private:
  Index dim_;
};

/// Diagonal normal with standard deviations sigma_i = i / d.
class IllConditionedNormal {
 public:
  explicit IllConditionedNormal(Index dim) : IllConditionedNormal(default_scales(dim)) {}

  explicit IllConditionedNormal(Vector scales) : scales_(std::move(scales)) {
    if (scales_.size() < 1) throw dimension_error("ill-conditioned normal needs dim >= 1");
    if (!(scales_.array() > 0.0).all() || !scales_.allFinite()) {
      throw domain_error("scales must be positive and finite", scales_);
    }
    inv_var_ = scales_.array().square().inverse();
  }

  static Vector default_scales(Index dim) {
    if (dim < 1) throw dimension_error("ill-conditioned normal needs dim >= 1");
    return Vector::LinSpaced(dim, 1.0, static_cast<double>(dim)) / static_cast<double>(dim);
  }

  Index dim() const { return scales_.size(); }
  static constexpr const char* kind() { return "ill_conditioned_normal"; }

  double log_density(const Vector& theta) const {
    return -0.5 * (theta.array().square() * inv_var_.array()).sum();
  }

  double log_density_gradient(const Vector& theta, Vector& grad) const {
    grad = -(theta.array() * inv_var_.array()).matrix();
    return -0.5 * (theta.array().square() * inv_var_.array()).sum();
  }

  Vector draw(Rng& rng) const {
    return Vector::NullaryExpr(dim(), [&](Index i) { return scales_[i] * rng.normal(); });
  }

  const Vector& scales() const { return scales_; }
  Vector mean() const { return Vector::Zero(dim()); }
  Vector second_moment() const { return scales_.array().square(); }

 private:
  Vector scales_;
  Vector inv_var_;
};

/// Normal with covariance S_ij = r^|i-j|, evaluated through a Cholesky factor of S.
class CorrelatedNormal {
 public:
  CorrelatedNormal(Index dim, double correlation) : correlation_(correlation) {
    if (dim < 1) throw dimension_error("correlated normal needs dim >= 1");
    if (!(std::abs(correlation) < 1.0)) throw error("correlation must satisfy |r| < 1");
    covariance_ = covariance(dim, correlation);
    llt_.compute(covariance_);
    if (llt_.info() != Eigen::Success) throw error("covariance is not positive definite");
    lower_ = llt_.matrixL();
  }

  static Matrix covariance(Index dim, double r) {
    Matrix s(dim, dim);
    for (Index i = 0; i < dim; ++i)
      for (Index j = 0; j < dim; ++j) s(i, j) = std::pow(r, static_cast<double>(std::abs(i - j)));
    return s;
  }

  Index dim() const { return covariance_.rows(); }
  static constexpr const char* kind() { return "correlated_normal"; }
  double correlation() const { return correlation_; }
  const Matrix& covariance() const { return covariance_; }

  double log_density(const Vector& theta) const {
    const Vector z = llt_.matrixL().solve(theta);
    return -0.5 * z.squaredNorm();
  }

  double log_density_gradient(const Vector& theta, Vector& grad) const {
    Vector z = llt_.matrixL().solve(theta);
    const double lp = -0.5 * z.squaredNorm();
    grad = -llt_.matrixU().solve(z);
    return lp;
  }

  Vector draw(Rng& rng) const {
    const Vector z = Vector::NullaryExpr(dim(), [&](Index) { return rng.normal(); });
    return lower_ * z;
  }

  Vector mean() const { return Vector::Zero(dim()); }
  Vector second_moment() const { return covariance_.diagonal(); }

 private:
  double correlation_;
  Matrix covariance_;
  Matrix lower_;
  Eigen::LLT<Matrix> llt_;
};

struct EightSchoolsData {
  std::vector<double> effects;
  std::vector<double> std_errors;

  // SAT coaching effects, the usual eight schools meta-analysis data.
  static EightSchoolsData classic() {
    return {{28, 8, -3, 7, -1, 1, 18, 12}, {15, 10, 16, 11, 9, 11, 10, 18}};
  }

  static EightSchoolsData from_json(const nlohmann::json& j) {
    if (!j.contains("y") || !j.contains("sigma")) {
      throw error("eight schools data needs arrays \"y\" and \"sigma\"");
    }
    EightSchoolsData data{j.at("y").get<std::vector<double>>(), j.at("sigma").get<std::vector<double>>()};
    data.validate();
    return data;
  }

  static EightSchoolsData load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open eight schools data file: " + path);
    return from_json(nlohmann::json::parse(in));
  }

  void validate() const {
    if (effects.empty()) throw error("eight schools data needs at least one school");
    if (effects.size() != std_errors.size()) throw error("\"y\" and \"sigma\" differ in length");
    for (double s : std_errors)
      if (!(s > 0.0) || !std::isfinite(s)) throw error("\"sigma\" entries must be positive");
    for (double y : effects)
      if (!std::isfinite(y)) throw error("\"y\" entries must be finite");
  }
};

struct EightSchoolsPriors {
  double mu_scale = 5.0;   // mu ~ normal(0, mu_scale)
  double tau_scale = 5.0;  // tau ~ half-normal(0, tau_scale)
};

/// Non-centered hierarchical model. Parameter layout:
///   [0]       mu
///   [1]       log tau
///   [2 + j]   theta_tilde_j, with theta_j = mu + tau * theta_tilde_j
/// The log tau coordinate carries the Jacobian term log tau.
class EightSchools {
 public:
  explicit EightSchools(EightSchoolsData data = EightSchoolsData::classic(), EightSchoolsPriors priors = {})
      : priors_(priors) {
    data.validate();
    const auto n = static_cast<Index>(data.effects.size());
    y_ = Eigen::Map<const Vector>(data.effects.data(), n);
    inv_var_ = Eigen::Map<const Vector>(data.std_errors.data(), n).array().square().inverse();
    data_ = std::move(data);
  }

  Index dim() const { return y_.size() + 2; }
  Index schools() const { return y_.size(); }
  static constexpr const char* kind() { return "eight_schools"; }
  const EightSchoolsData& data() const { return data_; }
  const EightSchoolsPriors& priors() const { return priors_; }

  double log_density(const Vector& theta) const {
    const double mu = theta[0];
    const double log_tau = theta[1];
    const double tau = std::exp(log_tau);
    const auto eta = theta.tail(schools()).array();
    const auto resid = y_.array() - mu - tau * eta;
    return -0.5 * (resid.square() * inv_var_.array()).sum()
           - 0.5 * square(mu / priors_.mu_scale)
           - 0.5 * square(tau / priors_.tau_scale) + log_tau
           - 0.5 * eta.square().sum();
  }

  double log_density_gradient(const Vector& theta, Vector& grad) const {
    const double mu = theta[0];
    const double log_tau = theta[1];
    const double tau = std::exp(log_tau);
    const auto eta = theta.tail(schools()).array();
    const Eigen::ArrayXd resid = y_.array() - mu - tau * eta;
    const Eigen::ArrayXd scaled = resid * inv_var_.array();
    grad.resize(dim());
    grad[0] = scaled.sum() - mu / square(priors_.mu_scale);
    grad[1] = tau * (scaled * eta).sum() - square(tau / priors_.tau_scale) + 1.0;
    grad.tail(schools()) = (tau * scaled - eta).matrix();
    return -0.5 * (resid.square() * inv_var_.array()).sum()
           - 0.5 * square(mu / priors_.mu_scale)
           - 0.5 * square(tau / priors_.tau_scale) + log_tau
           - 0.5 * eta.square().sum();
  }

  // Draw from the prior; used only to start chains.
  Vector draw(Rng& rng) const {
    Vector theta(dim());
    theta[0] = priors_.mu_scale * rng.normal();
    theta[1] = std::log(priors_.tau_scale * std::abs(rng.normal()));
    for (Index j = 0; j < schools(); ++j) theta[2 + j] = rng.normal();
    return theta;
  }

 private:
  static double square(double x) { return x * x; }

  EightSchoolsData data_;
  EightSchoolsPriors priors_;
  Vector y_;
  Vector inv_var_;
};

/// Closed set of models the harness can instantiate by name.
class AnyModel {
 public:
  using Variant = std::variant<StandardNormal, IllConditionedNormal, CorrelatedNormal, EightSchools>;

  template <class M>
    requires std::constructible_from<Variant, M>
  AnyModel(M model) : model_(std::move(model)) {}

  Index dim() const {
    return std::visit([](const auto& m) { return m.dim(); }, model_);
  }
  std::string kind() const {
    return std::visit([](const auto& m) { return std::string(m.kind()); }, model_);
  }
  double log_density(const Vector& theta) const {
    return std::visit([&](const auto& m) { return m.log_density(theta); }, model_);
  }
  double log_density_gradient(const Vector& theta, Vector& grad) const {
    return std::visit([&](const auto& m) { return m.log_density_gradient(theta, grad); }, model_);
  }
  Vector draw(Rng& rng) const {
    return std::visit([&](const auto& m) { return m.draw(rng); }, model_);
  }

  // Diagonal Gaussians admit the exact flow; returns their standard deviations.
  std::optional<Vector> diagonal_scales() const {
    if (const auto* m = std::get_if<StandardNormal>(&model_)) return m->scales();
    if (const auto* m = std::get_if<IllConditionedNormal>(&model_)) return m->scales();
    return std::nullopt;
  }

  const Variant& variant() const { return model_; }

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), model_);
  }

 private:
  Variant model_;
};

}  // namespace gist
