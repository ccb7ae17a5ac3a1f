#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace confop {

// Truncated multivariate Taylor polynomial with binary64 coefficients.
// Monomials are ranked in graded lexicographic order; ranks are stable
// across truncation orders, so jets of different orders mix freely
// (results carry the smaller order).
class JetPolynomial {
 public:
  JetPolynomial() = default;
  JetPolynomial(int n_vars, int order);
  static JetPolynomial constant(int n_vars, int order, double value);
  static JetPolynomial variable(int n_vars, int order, int var, double base = 0.0);

  int n_vars() const { return n_vars_; }
  int order() const { return order_; }
  bool is_zero() const;

  double value() const { return coeff_.empty() ? 0.0 : coeff_[0]; }
  double coefficient(const std::vector<int>& exponents) const;
  void set_coefficient(const std::vector<int>& exponents, double v);

  JetPolynomial operator+(const JetPolynomial& o) const;
  JetPolynomial operator-(const JetPolynomial& o) const;
  JetPolynomial operator*(const JetPolynomial& o) const;
  JetPolynomial operator-() const;
  JetPolynomial& operator+=(const JetPolynomial& o);
  JetPolynomial& operator-=(const JetPolynomial& o);
  JetPolynomial scaled(double s) const;

  // partial derivative; the result is one order lower
  JetPolynomial partial(int var) const;
  JetPolynomial truncated(int new_order) const;

  // keeps monomials with exponent k in `var`, zeroing that exponent
  JetPolynomial slice(int var, int k) const;
  // multiplies by var^k
  JetPolynomial shifted(int var, int k) const;

  // analytic composures; the constant term is the expansion point
  JetPolynomial exp() const;
  JetPolynomial log() const;     // requires positive constant term
  JetPolynomial pow(double a) const;

  // substitutes x_i = sum_j A[i][j] y_j (jet pushforward under a linear map)
  JetPolynomial compose_linear(const std::vector<std::vector<double>>& A) const;

  double max_abs() const;

  const std::vector<double>& raw() const { return coeff_; }
  std::vector<double>& raw() { return coeff_; }

  static std::size_t rank_count(int n_vars, int order);

 private:
  int n_vars_ = 0;
  int order_ = 0;
  std::vector<double> coeff_;
};

}  // namespace confop
