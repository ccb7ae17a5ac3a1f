#include <doctest.h>

#include <cmath>

#include "confop/canonical.hpp"
#include "confop/geometry.hpp"
#include "confop/parser.hpp"
#include "confop/rng.hpp"

using namespace confop;

namespace {

// numeric agreement of two linear combinations on random jets
double numeric_gap(const LinearCombination& A, const LinearCombination& B, std::uint64_t seed, int n,
                   const Fraction& w = Fraction(0)) {
  MetricJet g = sample_metric_jet(seed, n, 5, 0.1);
  GeometryStack s(g);
  JetPolynomial f(n, 5), phi(n, 5), ups(n, 5), why(n, 5);
  CounterRng rng(seed ^ 0xabcdef);
  for (auto& c : f.raw()) c = rng.uniform();
  for (auto& c : phi.raw()) c = rng.uniform();
  for (auto& c : ups.raw()) c = rng.uniform();
  for (auto& c : why.raw()) c = rng.uniform();
  EvalInput in;
  in.stack = &s;
  in.f = &f;
  in.aux[AuxName::Phi] = phi;
  in.aux[AuxName::Ups] = ups;
  in.aux[AuxName::Y] = why;
  in.n_value = Fraction(n);
  in.w_value = w;
  TensorEvalResult ra = evaluate_tensor(A, in);
  TensorEvalResult rb = evaluate_tensor(B, in);
  double gap = 0, scale = std::max({ra.scale, rb.scale, 1e-12});
  if (ra.value.size() != rb.value.size()) {
    // one side is empty (formally zero): measure the other against its scale
    const TensorEvalResult& nz = ra.value.size() > rb.value.size() ? ra : rb;
    for (double v : nz.value) gap = std::max(gap, std::abs(v));
    return gap / scale;
  }
  for (std::size_t i = 0; i < ra.value.size(); ++i) gap = std::max(gap, std::abs(ra.value[i] - rb.value[i]));
  return gap / scale;
}

bool canonical_zero_and_numeric_zero(const std::string& src, int n = 5) {
  LinearCombination L = parse(src);
  bool formal = is_formally_zero(L);
  double gap = numeric_gap(L, LinearCombination(), 7, n);
  return formal && gap < 1e-6;
}

}  // namespace

TEST_CASE("antisymmetry of the Weyl factor") {
  CHECK(canonical_zero_and_numeric_zero("W{i,j,k,l} * W{j,i,k,l} * f + W{i,j,k,l} * W{i,j,k,l} * f"));
}

TEST_CASE("internal traces of a Weyl factor vanish") {
  CHECK(is_formally_zero(parse("W{i,j,i,l} * D{j}f * D{l}f")));
  CHECK(is_formally_zero(parse("W{i,j,k,k} * D{i}f * D{j}f")));
}

TEST_CASE("first Bianchi spans a two-element basis") {
  LinearCombination L = parse(
      "W{i,j,k,l} * D{i}f * D{j}ups * D{k}Y * D{l}phi"
      "+ W{j,k,i,l} * D{i}f * D{j}ups * D{k}Y * D{l}phi"
      "+ W{k,i,j,l} * D{i}f * D{j}ups * D{k}Y * D{l}phi");
  CHECK(is_formally_zero(L));
  CHECK(numeric_gap(L, LinearCombination(), 3, 5) < 1e-6);
}

TEST_CASE("dummy relabeling and factor order do not matter") {
  LinearCombination a = parse("D{p}W{i,j,k,l} * W{i,j,k,l} * D{p}f");
  LinearCombination b = parse("W{a,b,c,d} * D{q}f * D{q}W{a,b,c,d}");
  CHECK(is_formally_zero(a - b));
}

TEST_CASE("metric factors are eliminated") {
  CHECK(is_formally_zero(parse("g{a,b} * D{a}f * D{b}f - D{c}f * D{c}f")));
  LinearCombination tr = canonicalize(parse("g{a,a} * f"));
  REQUIRE(tr.size() == 1);
  CHECK(tr.terms()[0].coeff == Coefficient::sym_n());
  CHECK(tr.terms()[0].factors.size() == 1);
}

TEST_CASE("Riemann internal traces fold to Ricci and scalar kinds") {
  CHECK(is_formally_zero(parse("R{i,j,i,l} * D{j}f * D{l}f - Ric{j,l} * D{j}f * D{l}f")));
  CHECK(is_formally_zero(parse("R{i,j,i,j} * f - S * f")));
  // sign case: g^{il} R_{ijkl} = -Ric_{jk}
  CHECK(is_formally_zero(parse("R{i,j,k,i} * D{j}f * D{k}f + Ric{j,k} * D{j}f * D{k}f")));
}

TEST_CASE("|W|^2 is not formally zero and not numerically zero") {
  LinearCombination L = parse("W{i,j,k,l} * W{i,j,k,l} * f");
  CHECK_FALSE(is_formally_zero(L));
  bool nonzero = false;
  for (std::uint64_t seed = 2; seed < 8; ++seed)
    if (numeric_gap(L, LinearCombination(), seed, 5) > 1e-4) nonzero = true;
  CHECK(nonzero);
}

TEST_CASE("antisymmetric against symmetric gives zero") {
  CHECK(is_formally_zero(parse("W{i,j,k,l} * SP{i,j} * SP{k,l} * f")));
}

TEST_CASE("derivative exchange emits a curvature correction") {
  LinearCombination L = parse("D{a,b,c}f * D{a}ups * D{b}Y * D{c}phi");
  const Term& t = L.terms()[0];
  AdjacentSwap sw = commute_adjacent(t, 0, 0);
  REQUIRE(sw.corrections.size() == 1);
  CHECK(sw.corrections[0].factors.size() == t.factors.size() + 1);
  // exact identity: original = swapped + corrections
  LinearCombination rhs;
  rhs.add(sw.swapped);
  for (auto& c : sw.corrections) rhs.add(c);
  CHECK(numeric_gap(L, rhs, 11, 5) < 1e-9);
  // a scalar's first two derivatives commute without corrections
  LinearCombination L2 = parse("D{a,b}f * D{a}ups * D{b}Y");
  AdjacentSwap sw2 = commute_adjacent(L2.terms()[0], 0, 0);
  CHECK(sw2.corrections.empty());
}

TEST_CASE("normal ordering is numerically sound") {
  const char* cases[] = {
      "D{a,b,c}f * D{b}ups * D{a}Y * D{c}phi",
      "D{b,a}Ric{a,c} * D{c}f * D{b}f",
      "D{p,q}W{i,j,k,l} * W{i,j,k,l} * D{q,p}f",
      "D{a,a,b}f * D{b}f * S",
  };
  for (const char* c : cases) {
    LinearCombination L = parse(c);
    LinearCombination C = canonicalize(L);
    CHECK(numeric_gap(L, C, 13, 5) < 1e-7);
    CHECK(numeric_gap(L, C, 14, 6) < 1e-7);
  }
}

TEST_CASE("canonicalize is idempotent") {
  const char* cases[] = {
      "D{a,b,c}f * D{b}ups * D{a}Y * D{c}phi",
      "W{i,j,k,l} * W{i,k,j,l} * f",
      "D{b,a}Ric{a,c} * D{c}f * D{b}f",
      "R{i,j,k,l} * D{i,k}f * D{j,l}f",
  };
  for (const char* c : cases) {
    LinearCombination once = canonicalize(parse(c));
    LinearCombination twice = canonicalize(once);
    CHECK(print(once) == print(twice));
  }
}

TEST_CASE("linearized first and second Bianchi reductions") {
  // cyclic sums vanish identically in the linearized world
  LinearCombination b1 = parse(
      "Rlin{i,j,k,l} * T{i,m} * T{j,m} * T{k,p} * T{l,p}");
  CHECK_FALSE(is_formally_zero(b1));  // sanity: a generic contraction survives
  LinearCombination cyc = parse(
      "D{h}Rlin{i,j,k,l} * T{h,a} * T{i,a} * T{j,b} * T{k,b} * v{l}"
      "+ D{i}Rlin{j,h,k,l} * T{h,a} * T{i,a} * T{j,b} * T{k,b} * v{l}"
      "+ D{j}Rlin{h,i,k,l} * T{h,a} * T{i,a} * T{j,b} * T{k,b} * v{l}");
  CHECK(is_formally_zero(cyc));
  LinearizedEnv env(5, 6, 2);
  CHECK(std::abs(evaluate_linearized(cyc, env).value) < 1e-10);
}

TEST_CASE("formally zero implies numerically zero on linearized samples") {
  LinearCombination L = parse(
      "Rlin{i,j,k,l} * Rlin{i,j,k,l} * T{a,a}"
      "- Rlin{j,i,l,k} * Rlin{i,j,k,l} * T{b,b}");
  CHECK(is_formally_zero(L));
  for (std::uint64_t s = 0; s < 5; ++s) {
    LinearizedEnv env(s, 5, 1);
    CHECK(std::abs(evaluate_linearized(L, env).value) < 1e-9);
  }
}
