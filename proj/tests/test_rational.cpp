#include <doctest.h>

#include "confop/rational.hpp"

using namespace confop;

namespace {
Coefficient n() { return Coefficient::sym_n(); }
Coefficient w() { return Coefficient::sym_w(); }
}  // namespace

TEST_CASE("polynomial arithmetic and printing") {
  Polynomial p = (Polynomial::sym_n() - Polynomial(2)) * (Polynomial::sym_n() - Polynomial(2)) + Polynomial(4);
  CHECK(p.str() == "n^2-4*n+8");
  CHECK(p.evaluate(Fraction(2), Fraction(0)) == Fraction(4));
  CHECK((p - p).is_zero());
}

TEST_CASE("gcd reduces common polynomial factors") {
  Polynomial nm2 = Polynomial::sym_n() - Polynomial(2);
  Polynomial nm3 = Polynomial::sym_n() - Polynomial(3);
  Polynomial a = nm2 * nm2 * nm3;
  Polynomial b = nm2 * Polynomial(6);
  Polynomial g = Polynomial::gcd(a, b);
  CHECK(g == nm2 * Polynomial(2) || g == nm2);  // content convention
  Coefficient c(a, b);
  // (n-2)^2 (n-3) / (6 (n-2)) = (n-2)(n-3)/6
  CHECK(c == Coefficient(nm2 * nm3, Polynomial(6)));
}

TEST_CASE("gcd handles mixed n and w polynomials") {
  Polynomial common = Polynomial::sym_n() + Polynomial::sym_w() * Polynomial(2);  // n + 2w
  Polynomial a = common * (Polynomial::sym_n() - Polynomial(1));
  Polynomial b = common * Polynomial::sym_w();
  Coefficient c(a, b);
  CHECK(c == Coefficient(Polynomial::sym_n() - Polynomial(1), Polynomial::sym_w()));
}

TEST_CASE("coefficient field operations") {
  // the conformal Laplacian coefficient (n-2)/(2(n-1))
  Coefficient c = (n() - 2) / ((n() - 1) * 2);
  CHECK(c.evaluate(Fraction(4), Fraction(0)) == Fraction(1, 3));
  Coefficient paneitz_a = ((n() - 2) * (n() - 2) + 4) / ((n() - 1) * (n() - 2) * 2);
  CHECK(paneitz_a.evaluate(Fraction(6), Fraction(0)) == Fraction(1, 2));
  CHECK((c - c).is_zero());
  CHECK((c / c).is_one());
  Coefficient s = c + paneitz_a;
  CHECK(s - paneitz_a == c);
}

TEST_CASE("denominator roots raise the named singularity") {
  Coefficient cotton = Coefficient(1) / (n() - 3);
  CHECK_THROWS_AS(cotton.evaluate(Fraction(3), Fraction(0)), SingularCoefficient);
  CHECK(cotton.evaluate(Fraction(5), Fraction(0)) == Fraction(1, 2));
}

TEST_CASE("equality is decidable across construction routes") {
  Coefficient lhs = (n() * n() - 4) / (n() + 2);
  Coefficient rhs = n() - 2;
  CHECK(lhs == rhs);
  // w-dependent: (n - 2w)(n + 2w) / (n + 2w) = n - 2w
  Coefficient a = (n() - w() * 2) * (n() + w() * 2) / (n() + w() * 2);
  CHECK(a == n() - w() * 2);
}

TEST_CASE("overflow is detected, not wrapped") {
  Coefficient big(std::int64_t(1) << 62);
  CHECK_THROWS_AS(big * big, CoefficientOverflow);
}
