#include <doctest.h>

#include <cmath>

#include "confop/geometry.hpp"
#include "confop/parser.hpp"
#include "confop/rng.hpp"

using namespace confop;

namespace {

// constant-curvature metric in normal coordinates, exact through order 2:
// g_ij = delta_ij - (c/3)(delta_ij |x|^2 - x_i x_j)
MetricJet constant_curvature(int n, double c, int order = 2) {
  MetricJet m;
  m.n = n;
  m.order = order;
  m.g.assign(std::size_t(n * n), JetPolynomial(n, order));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      JetPolynomial jet(n, order);
      if (i == j) {
        jet = JetPolynomial::constant(n, order, 1.0);
        for (int k = 0; k < n; ++k) {
          std::vector<int> e(std::size_t(n), 0);
          e[std::size_t(k)] = 2;
          jet.set_coefficient(e, jet.coefficient(e) - c / 3.0);
        }
      }
      std::vector<int> e(std::size_t(n), 0);
      e[std::size_t(i)] += 1;
      e[std::size_t(j)] += 1;
      jet.set_coefficient(e, jet.coefficient(e) + c / 3.0);
      m.at(i, j) = jet;
    }
  return m;
}

JetPolynomial coordinate_jet(int n, int order, int var) { return JetPolynomial::variable(n, order, var); }

}  // namespace

TEST_CASE("sampling is deterministic and flat at zero amplitude") {
  MetricJet a = sample_metric_jet(7, 5, 4, 0.1);
  MetricJet b = sample_metric_jet(7, 5, 4, 0.1);
  for (std::size_t k = 0; k < a.g.size(); ++k) CHECK((a.g[k] - b.g[k]).max_abs() == 0.0);
  MetricJet flat = sample_metric_jet(7, 5, 4, 0.0);
  GeometryStack s(flat);
  for (auto& c : s.riemann().comp) CHECK(c.max_abs() == 0.0);
  MetricJet other = sample_metric_jet(8, 5, 4, 0.1);
  GeometryStack sa(a), so(other);
  double diff = 0;
  for (std::size_t k = 0; k < sa.riemann().comp.size(); ++k)
    diff = std::max(diff, std::abs(sa.riemann().comp[k].value() - so.riemann().comp[k].value()));
  CHECK(diff > 1e-8);  // distinct seeds give distinct curvature
}

TEST_CASE("constant-curvature stack matches the closed forms") {
  int n = 5;
  double c = 0.3;
  GeometryStack s(constant_curvature(n, c));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double want = c * ((i == k && j == l ? 1.0 : 0.0) - (i == l && j == k ? 1.0 : 0.0));
          CHECK(std::abs(s.riemann().comp[std::size_t(((i * n + j) * n + k) * n + l)].value() - want) < 1e-10);
          CHECK(std::abs(s.weyl().comp[std::size_t(((i * n + j) * n + k) * n + l)].value()) < 1e-10);
        }
  CHECK(s.scalar().value() == doctest::Approx(c * n * (n - 1)));
}

TEST_CASE("curvature commutator convention") {
  // [grad_k, grad_l] omega_j = -R_{ijkl} omega^i with the stored conventions
  int n = 4;
  MetricJet g = sample_metric_jet(11, n, 4, 0.1);
  GeometryStack s(g);
  TensorJet omega(n, 1, n, 4);
  CounterRng rng(100);
  for (auto& cmp : omega.comp)
    for (auto& c : cmp.raw()) c = rng.uniform();
  TensorJet d1 = s.covariant_derivative(omega);
  TensorJet d2 = s.covariant_derivative(d1);
  double worst = 0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < n; ++j) {
        double comm = d2.comp[std::size_t((k * n + l) * n + j)].value() -
                      d2.comp[std::size_t((l * n + k) * n + j)].value();
        double corr = 0;
        for (int i = 0; i < n; ++i)
          for (int a = 0; a < n; ++a)
            corr += s.ginv().comp[std::size_t(i * n + a)].value() *
                    s.riemann().comp[std::size_t(((i * n + j) * n + k) * n + l)].value() *
                    omega.comp[std::size_t(a)].value();
        worst = std::max(worst, std::abs(comm + corr));
      }
  CHECK(worst < 1e-10);
}

TEST_CASE("conformally flat metrics have vanishing Weyl and Cotton") {
  int n = 5;
  JetPolynomial phi(n, 4);
  CounterRng rng(5);
  for (auto& c : phi.raw()) c = 0.1 * rng.uniform();
  JetPolynomial conf = phi.scaled(2.0).exp();
  MetricJet g;
  g.n = n;
  g.order = 4;
  g.g.assign(std::size_t(n * n), JetPolynomial(n, 4));
  for (int i = 0; i < n; ++i) g.at(i, i) = conf;
  GeometryStack s(g);
  double mag = 0, weyl = 0, cotton = 0;
  for (auto& c : s.riemann().comp) mag = std::max(mag, std::abs(c.value()));
  for (auto& c : s.weyl().comp) weyl = std::max(weyl, std::abs(c.value()));
  for (auto& c : s.cotton().comp) cotton = std::max(cotton, std::abs(c.value()));
  CHECK(weyl / mag < 1e-9);
  CHECK(cotton / mag < 1e-8);
}

TEST_CASE("construction identities on random jets") {
  GeometryStack s(sample_metric_jet(17, 5, 4, 0.1));
  auto r = s.check_identities();
  CHECK(r.first_bianchi < 1e-12);
  CHECK(r.second_bianchi < 1e-10);
  CHECK(r.weyl_trace < 1e-10);
}

TEST_CASE("evaluate simple contractions") {
  int n = 5;
  MetricJet flat = sample_metric_jet(1, n, 4, 0.0);
  GeometryStack s(flat);
  JetPolynomial f = coordinate_jet(n, 4, 0);  // f = x_1
  EvalInput in;
  in.stack = &s;
  in.f = &f;
  in.n_value = Fraction(n);
  EvalResult r = evaluate(parse("D{a}f * D{a}f"), in);
  CHECK(r.value == doctest::Approx(1.0));

  // conformal Laplacian on a constant-curvature background with f == 1
  double c = 0.2;
  GeometryStack sc(constant_curvature(n, c, 3));
  JetPolynomial one = JetPolynomial::constant(n, 3, 1.0);
  EvalInput in2;
  in2.stack = &sc;
  in2.f = &one;
  in2.n_value = Fraction(n);
  EvalResult r2 = evaluate(parse("D{a,a}f + ((n-2)/(2*(n-1))) * S * f"), in2);
  double expect = (n - 2.0) / (2.0 * (n - 1.0)) * c * n * (n - 1);
  CHECK(r2.value == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("weight homogeneity under constant metric rescaling") {
  int n = 5;
  MetricJet g = sample_metric_jet(23, n, 4, 0.1);
  JetPolynomial f(n, 4);
  CounterRng rng(9);
  for (auto& c : f.raw()) c = rng.uniform();
  LinearCombination L = parse("W{i,j,k,l} * W{i,j,k,l} * D{a,a}f");  // weight -6
  for (double t : {2.0, 1.0 / 3.0}) {
    MetricJet g2 = g;
    for (auto& comp : g2.g) comp = comp.scaled(t * t);
    GeometryStack s1(g), s2(g2);
    EvalInput i1{&s1, &f, {}, Fraction(n), Fraction(0)};
    EvalInput i2{&s2, &f, {}, Fraction(n), Fraction(0)};
    double v1 = evaluate(L, i1).value;
    double v2 = evaluate(L, i2).value;
    CHECK(v2 == doctest::Approx(std::pow(t, -6.0) * v1).epsilon(1e-9));
  }
}

TEST_CASE("coordinate invariance under a random linear change") {
  int n = 4;
  MetricJet g = sample_metric_jet(31, n, 4, 0.1);
  JetPolynomial f(n, 4);
  CounterRng rng(12);
  for (auto& c : f.raw()) c = rng.uniform();
  LinearCombination L = parse("Ric{a,b} * D{a}f * D{b}f + S * D{c}f * D{c}f");
  GeometryStack s1(g);
  EvalInput i1{&s1, &f, {}, Fraction(n), Fraction(0)};
  double v1 = evaluate(L, i1).value;

  // push everything forward through x = A y
  std::vector<std::vector<double>> A(std::size_t(n), std::vector<double>(std::size_t(n), 0.0));
  CounterRng arng(77);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A[std::size_t(i)][std::size_t(j)] = (i == j ? 1.0 : 0.0) + 0.3 * arng.uniform();
  MetricJet g2;
  g2.n = n;
  g2.order = 4;
  g2.g.assign(std::size_t(n * n), JetPolynomial(n, 4));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      JetPolynomial s(n, 4);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          s += g.at(a, b).compose_linear(A).scaled(A[std::size_t(a)][std::size_t(i)] * A[std::size_t(b)][std::size_t(j)]);
      g2.at(i, j) = s;
    }
  JetPolynomial f2 = f.compose_linear(A);
  GeometryStack s2(g2);
  EvalInput i2{&s2, &f2, {}, Fraction(n), Fraction(0)};
  double v2 = evaluate(L, i2).value;
  CHECK(v2 == doctest::Approx(v1).epsilon(1e-8));
}

TEST_CASE("rescale test basics") {
  int n = 5;
  MetricJet g = sample_metric_jet(41, n, 4, 0.1);
  GeometryStack s(g);
  JetPolynomial f(n, 4);
  CounterRng rng(3);
  for (auto& c : f.raw()) c = rng.uniform();
  LinearCombination L = parse("D{a}f * D{a}f");  // weight -2, homogeneity 2

  JetPolynomial zero(n, 4);
  CHECK(rescale_test(L, parse_coefficient("0"), parse_coefficient("-2"), s, f, zero, Fraction(n), Fraction(0)) <
        1e-14);
  // constant phi: pure weight scaling, any weight-correct operator passes
  JetPolynomial cphi = JetPolynomial::constant(n, 4, 0.37);
  CHECK(rescale_test(L, parse_coefficient("0"), parse_coefficient("-2"), s, f, cphi, Fraction(n), Fraction(0)) <
        1e-12);
}

TEST_CASE("linearized environment symmetries and nonvanishing") {
  LinearizedEnv env(99, 5, 2);
  CHECK(env.identity_residual() < 1e-12);
  LinearCombination L = parse("Rlin{i,j,k,l} * Rlin{i,j,k,l}");
  bool nonzero = false;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    LinearizedEnv e(seed, 5, 1);
    if (std::abs(evaluate_linearized(L, e).value) > 1e-10) nonzero = true;
  }
  CHECK(nonzero);
}
