#include <doctest.h>

#include <cmath>

#include "confop/jet.hpp"
#include "confop/rng.hpp"

using namespace confop;

namespace {
JetPolynomial random_jet(int n_vars, int order, std::uint64_t seed) {
  JetPolynomial j(n_vars, order);
  CounterRng rng(seed);
  for (auto& c : j.raw()) c = rng.uniform();
  return j;
}
}  // namespace

TEST_CASE("product rule and associativity hold exactly at stored orders") {
  int n = 4, order = 5;
  JetPolynomial a = random_jet(n, order, 1), b = random_jet(n, order, 2), c = random_jet(n, order, 3);
  JetPolynomial lhs = (a * b) * c, rhs = a * (b * c);
  double scale = std::max(lhs.max_abs(), 1e-300);
  CHECK((lhs - rhs).max_abs() / scale < 1e-13);

  JetPolynomial d1 = (a * b).partial(2);
  JetPolynomial d2 = a.partial(2) * b + a * b.partial(2);
  CHECK((d1 - d2).max_abs() / std::max(d1.max_abs(), 1e-300) < 1e-13);
}

TEST_CASE("mixed-order products truncate to the smaller order") {
  JetPolynomial a = random_jet(3, 6, 4);
  JetPolynomial b = random_jet(3, 3, 5);
  CHECK((a * b).order() == 3);
}

TEST_CASE("exp and log invert each other") {
  JetPolynomial a = random_jet(3, 5, 7).scaled(0.3);
  a.raw()[0] = 0.8;
  JetPolynomial back = a.exp().log();
  CHECK((back - a).max_abs() < 1e-12);
  JetPolynomial p = a.pow(-0.5) * a.pow(0.5);
  CHECK((p - JetPolynomial::constant(3, 5, 1.0)).max_abs() < 1e-12);
}

TEST_CASE("linear substitution composes") {
  // f(x,y) = x^2 y; substitute x = 2u, y = u+v; check a coefficient
  JetPolynomial f(2, 4);
  f.set_coefficient({2, 1}, 1.0);
  std::vector<std::vector<double>> A = {{2, 0}, {1, 1}};
  JetPolynomial g = f.compose_linear(A);
  // (2u)^2 (u+v) = 4u^3 + 4u^2 v
  CHECK(g.coefficient({3, 0}) == doctest::Approx(4.0));
  CHECK(g.coefficient({2, 1}) == doctest::Approx(4.0));
  CHECK(g.coefficient({1, 2}) == doctest::Approx(0.0));
}

TEST_CASE("slice and shift") {
  JetPolynomial f(3, 4);
  f.set_coefficient({1, 0, 2}, 5.0);
  JetPolynomial s = f.slice(2, 2);
  CHECK(s.coefficient({1, 0, 0}) == doctest::Approx(5.0));
  JetPolynomial back = s.shifted(2, 2);
  CHECK(back.coefficient({1, 0, 2}) == doctest::Approx(5.0));
}

TEST_CASE("counter rng is deterministic and splittable") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  CounterRng c(43);
  CHECK(a.uniform() != c.uniform());
}
