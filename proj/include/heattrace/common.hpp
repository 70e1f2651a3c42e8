#pragma once

// Shared scalar/matrix typedefs and error types used across the library.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace heattrace {

using Complex = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using MatrixR = Eigen::MatrixXd;
using VectorR = Eigen::VectorXd;

// Raised when an input violates a mathematical precondition of an operation
// (non-positive spectrum, dimension mismatch, arguments outside the validity
// region of a closed form, ...).  The CLI maps this to exit code 3.
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when two independent computation routes disagree beyond tolerance.
// The CLI maps this to exit code 4.
class CrossCheckError : public std::runtime_error {
public:
  explicit CrossCheckError(const std::string& what) : std::runtime_error(what) {}
};

// Raised on malformed configuration input.  The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DomainError(msg);
}

// Rising factorial a(a+1)...(a+k-1); poch(a,0) = 1.
inline double pochhammer(double a, int k) {
  double prod = 1.0;
  for (int i = 0; i < k; ++i) prod *= a + i;
  return prod;
}

inline double factorial(int n) {
  double prod = 1.0;
  for (int i = 2; i <= n; ++i) prod *= i;
  return prod;
}

// Relative distance used by all clustering/certificate checks.
inline double rel_gap(double a, double b) {
  double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

}  // namespace heattrace
