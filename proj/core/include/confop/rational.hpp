#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace confop {

// Thrown when exact integer arithmetic leaves the 64-bit range.
struct CoefficientOverflow : std::runtime_error {
  CoefficientOverflow() : std::runtime_error("coefficient arithmetic overflowed 64-bit range") {}
};

// Thrown when a coefficient is instantiated at a root of its denominator
// (e.g. the 1/(n-3) Cotton substitution at n = 3, or 1/(n-4) at n = 4).
struct SingularCoefficient : std::runtime_error {
  explicit SingularCoefficient(const std::string& what) : std::runtime_error(what) {}
};

std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);

// Exact rational number on int64, always stored reduced with positive denominator.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Fraction() = default;
  Fraction(std::int64_t n);  // NOLINT(google-explicit-constructor)
  Fraction(std::int64_t n, std::int64_t d);

  Fraction operator+(const Fraction& o) const;
  Fraction operator-(const Fraction& o) const;
  Fraction operator*(const Fraction& o) const;
  Fraction operator/(const Fraction& o) const;
  Fraction operator-() const { return {-num, den}; }
  bool operator==(const Fraction& o) const = default;

  bool is_zero() const { return num == 0; }
  double to_double() const { return double(num) / double(den); }
  std::string str() const;
};

// Integer polynomial in the two formal symbols n (dimension) and w (weight).
class Polynomial {
 public:
  struct Monomial {
    int dn = 0;
    int dw = 0;
    auto operator<=>(const Monomial&) const = default;
  };

  Polynomial() = default;
  Polynomial(std::int64_t c);  // NOLINT(google-explicit-constructor)
  static Polynomial monomial(std::int64_t c, int dn, int dw);
  static Polynomial sym_n() { return monomial(1, 1, 0); }
  static Polynomial sym_w() { return monomial(1, 0, 1); }

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  std::int64_t constant_value() const;  // requires is_constant()
  int degree_n() const;
  int degree_w() const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const;
  bool operator==(const Polynomial& o) const = default;

  // gcd of all integer coefficients, carrying the sign of the leading term.
  std::int64_t content_signed() const;
  Polynomial divide_content(std::int64_t c) const;

  Fraction evaluate(const Fraction& n_value, const Fraction& w_value) const;
  std::string str() const;

  static Polynomial gcd(const Polynomial& a, const Polynomial& b);
  // Exact division; throws std::logic_error if b does not divide a.
  static Polynomial divide_exact(const Polynomial& a, const Polynomial& b);

  const std::map<Monomial, std::int64_t>& terms() const { return terms_; }

 private:
  // monomial -> coefficient, zero coefficients never stored
  std::map<Monomial, std::int64_t> terms_;
  void set(Monomial m, std::int64_t c);
  friend class Coefficient;
};

// Element of the field Q(n, w): a reduced ratio of integer polynomials.
// The denominator is never zero and its leading coefficient is positive.
class Coefficient {
 public:
  Coefficient() : num_(0), den_(1) {}
  Coefficient(std::int64_t c) : num_(c), den_(1) {}  // NOLINT(google-explicit-constructor)
  Coefficient(const Fraction& f) : num_(f.num), den_(f.den) {}  // NOLINT
  Coefficient(Polynomial num);  // NOLINT(google-explicit-constructor)
  Coefficient(Polynomial num, Polynomial den);

  static Coefficient sym_n() { return Coefficient(Polynomial::sym_n()); }
  static Coefficient sym_w() { return Coefficient(Polynomial::sym_w()); }
  static Coefficient fraction(std::int64_t p, std::int64_t q) { return Coefficient(Polynomial(p), Polynomial(q)); }

  bool is_zero() const { return num_.is_zero(); }
  bool is_one() const { return num_ == Polynomial(1) && den_ == Polynomial(1); }
  bool is_constant() const { return num_.is_constant() && den_.is_constant(); }

  Coefficient operator+(const Coefficient& o) const;
  Coefficient operator-(const Coefficient& o) const;
  Coefficient operator*(const Coefficient& o) const;
  Coefficient operator/(const Coefficient& o) const;
  Coefficient operator-() const;
  Coefficient& operator+=(const Coefficient& o) { return *this = *this + o; }
  Coefficient& operator*=(const Coefficient& o) { return *this = *this * o; }
  bool operator==(const Coefficient& o) const = default;

  // Exact instantiation at integer-or-rational n and w values.
  Fraction evaluate(const Fraction& n_value, const Fraction& w_value) const;
  double evaluate_double(double n_value, double w_value) const;

  const Polynomial& num() const { return num_; }
  const Polynomial& den() const { return den_; }
  std::string str() const;

 private:
  Polynomial num_, den_;
  void reduce();
};

}  // namespace confop
