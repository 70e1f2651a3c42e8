#pragma once

// Symbolic expansion of the subleading local heat-kernel integrand.
//
// Terms are weighted slot lists  coeff * f_k[B_1, ..., B_k]  where f_k is
// the simplex-weighted functional calculus of tensor_algebra.hpp and the
// B_j are built from the operator data (second/first/zeroth coefficient) and
// the quadratic fibre form H.  A slot may carry `pending` derivative indices
// that still act on everything to its right; push_derivatives eliminates
// them with the rewrite
//
//   f_k[... B_i d_a ...] =   sum_{j=i+1..k} f_k[... (d_a B_j) ...]
//                          - sum_{j=i..k}   f_{k+1}[... B_j, (d_a H), B_{j+1} ...]
//
// applied to the rightmost pending index first, which keeps every slot to
// the right of the active one pending-free.
//
// expand_volterra_order1 produces the starting terms of the t^1 order (the
// half-integer order between t^0 and t^1 carries odd fibre parity and
// integrates to zero; it is dropped here).  After the rewrite terminates,
// specialize_scalar_metric substitutes the scalar-principal shape
// u^{ab} = g^{ab} u, expanding metric jets by the Leibniz rule and leaving
// matrix words in u, v, w and their derivatives with scalar metric-jet
// prefactors and free fibre indices to be contracted against Gaussian
// moments.
//
// Canonical form: slot order is fixed (non-commutative), scalar factors
// commute, symmetric index pairs may flip, and summation indices are
// relabelled; canonicalize minimises over these choices so equal terms merge
// by exact rational arithmetic.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "heattrace/common.hpp"

namespace heattrace::symbols {

struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n) : num(n), den(1) {}
  Rational(long long n, long long d);

  Rational operator*(const Rational& o) const;
  Rational operator+(const Rational& o) const;
  Rational operator-() const { return {-num, den}; }
  bool operator==(const Rational& o) const {
    return num == o.num && den == o.den;
  }
  bool is_zero() const { return num == 0; }
  double to_double() const { return double(num) / double(den); }
  std::string str() const;
};

enum class Atom : std::uint8_t {
  PrincipalFull,  // second-order coefficient with two upper indices
  PrincipalXi,    // xi-contracted second-order coefficient, one upper index
  FirstXi,        // xi-contracted first-order coefficient
  First,          // first-order coefficient, one upper index
  Zeroth,         // zeroth-order coefficient
  QuadForm,       // quadratic fibre form H (appears only with derivatives)
  ScalarU,        // fibre matrix u of the scalar-principal shape
};

struct Slot {
  Atom atom;
  std::vector<int> upper;    // upper indices carried by the atom
  std::vector<int> derivs;   // applied derivative indices (commuting)
  std::vector<int> pending;  // derivative indices still acting to the right

  bool operator==(const Slot&) const = default;
};

struct MetricFactor {  // scalar factor (d_{derivs} g^{upper0 upper1})
  std::vector<int> derivs;
  std::array<int, 2> upper{};

  bool operator==(const MetricFactor&) const = default;
};

struct Term {
  Rational coeff;
  std::vector<Slot> slots;
  std::vector<MetricFactor> factors;
  std::vector<int> xi;  // free fibre indices (even count after filtering)
  int next_id = 0;      // fresh summation-index counter

  int k() const { return static_cast<int>(slots.size()); }
  int p() const { return static_cast<int>(xi.size()) / 2; }
};

// Fibre-momentum degree: explicit xi indices plus those folded into
// xi-contracted atoms.
int xi_degree(const Term& t);

// Starting terms of the t^1 coefficient (pendings not yet pushed).
std::vector<Term> expand_volterra_order1();

// One rewrite step on the rightmost pending index; identity if none.
std::vector<Term> push_derivatives(const Term& t);

// Pushes all pendings to fixed point and merges canonically.
std::vector<Term> push_derivatives_all(std::vector<Term> terms);

// Substitutes the scalar-principal shape and expands metric jets; input
// terms must be pending-free.  Output is canonically merged.
std::vector<Term> specialize_scalar_metric(const std::vector<Term>& terms);

// Rewrites the term into its canonical labelling/ordering and returns the
// canonical encoding key (coefficient not included).
std::string canonicalize(Term& t);

// Canonically merges equal terms (exact rational sums, zeros dropped);
// result sorted by encoding key.
std::vector<Term> merge_terms(const std::vector<Term>& terms);

// Human/machine-readable one-line rendering.
std::string to_string(const Term& t);

// One term per line after canonical merging.
std::string to_text(const std::vector<Term>& terms);

// The (k, p) insertion shapes required at expansion order r; r = 0 gives
// {(0,0)}, r >= 1 gives {(k, k-r) : k = r..4r}.
std::vector<std::pair<int, int>> count_required_operators(int r);

}  // namespace heattrace::symbols
