#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gist {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class dimension_error : public error {
 public:
  using error::error;
};

class domain_error : public error {
 public:
  domain_error(const std::string& what, Vector where) : error(what), where_(std::move(where)) {}
  const Vector& where() const { return where_; }

 private:
  Vector where_;
};

// Raised when a leapfrog trajectory leaves the finite region or its energy
// error exceeds the divergence threshold. `step` is 1-based.
class divergence_error : public error {
 public:
  divergence_error(const std::string& what, std::int64_t step) : error(what), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

class root_error : public error {
 public:
  root_error(const std::string& what, Vector theta, Vector rho)
      : error(what), theta_(std::move(theta)), rho_(std::move(rho)) {}
  const Vector& theta() const { return theta_; }
  const Vector& rho() const { return rho_; }

 private:
  Vector theta_;
  Vector rho_;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace gist
