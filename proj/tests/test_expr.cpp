#include <doctest.h>

#include "confop/expr.hpp"
#include "confop/parser.hpp"

using namespace confop;

TEST_CASE("profile of |grad f|^2") {
  LinearCombination L = parse("D{a}f * D{a}f");
  REQUIRE(L.size() == 1);
  const Term& t = L.terms()[0];
  ExpressionProfile p = profile(t);
  CHECK(p.weight == -2);
  CHECK(p.kappa == 2);
  CHECK(p.kappa_sharp == 2);
  CHECK(p.sigma == 2);
  CHECK(p.delta == 0);
  CHECK(p.beta.value() == 1);
  CHECK(p.character_curvature.empty());
  CHECK(p.character_density.empty());
}

TEST_CASE("profile of |W|^2 Laplacian f") {
  // two Weyl factors, one density factor with two derivatives internally contracted
  LinearCombination L = parse("W{i,j,k,l} * W{i,j,k,l} * D{a,a}f");
  REQUIRE(L.size() == 1);
  ExpressionProfile p = profile(L.terms()[0]);
  CHECK(p.weight == -6);
  CHECK(p.degree == 5);  // 2*2 curvature factors + 1 differentiated density
  CHECK(p.beta.value() == 0);
  CHECK(p.gamma == 2);
  CHECK(p.character_curvature.empty());
  CHECK(p.character_density == std::vector<int>{1});
}

TEST_CASE("gamma extension for symmetrized Schouten factors") {
  LinearCombination L = parse("SP{a,b} * D{a}f * D{b}f");
  int f_index = -1;
  const Term& t = L.terms()[0];
  for (std::size_t f = 0; f < t.factors.size(); ++f)
    if (t.factors[f].kind == FactorKind::SymSchouten) f_index = int(f);
  REQUIRE(f_index >= 0);
  CHECK(factor_gamma(t, f_index) == 1);  // iota=2, tau=0, offset 1
}

TEST_CASE("split by homogeneity") {
  LinearCombination L = parse("D{a,a}f + S * f + 3 * f * D{a,a}f");
  auto parts = split_by_homogeneity(L);
  CHECK(parts.size() == 2);
  CHECK(parts[1].size() == 2);
  CHECK(parts[2].size() == 1);
  CHECK(split_by_homogeneity(LinearCombination()).empty());
}

TEST_CASE("extra restrictions") {
  // n=6, w=-1 so k=2; f * Laplacian f has beta = 1 < 2
  LinearCombination L = parse("f * D{a,a}f");
  RestrictionReport rep = check_extra_restrictions(L, 6, parse_coefficient("-1"));
  CHECK(rep.beta_applicable);
  CHECK(rep.beta_bound == 2);
  CHECK(rep.beta_ok);
  CHECK(rep.gamma_applicable);
  CHECK(rep.gamma_ok);
  CHECK(rep.pass());

  // a factor with beta = 2 at k = 2 fails the strict bound
  LinearCombination L2 = parse("f * D{a,a,b,b}f");  // density factor with beta = 4-2 = 2
  RestrictionReport rep2 = check_extra_restrictions(L2, 6, parse_coefficient("-1"));
  CHECK_FALSE(rep2.beta_ok);
  CHECK(rep2.witness.find("beta=2") != std::string::npos);

  // odd n with non-integer w + n/2: nothing applies
  RestrictionReport rep3 = check_extra_restrictions(L, 5, parse_coefficient("-1/2"));
  CHECK_FALSE(rep3.beta_applicable);
  CHECK_FALSE(rep3.gamma_applicable);
  CHECK(rep3.str() == "no restrictions applicable");
}

TEST_CASE("weight additivity across factor kinds") {
  LinearCombination L = parse("D{a}W{i,j,k,l} * D{i}Ric{j,k} * D{l,a}f * SP{m,m}");
  CHECK(L.terms()[0].weight() == -(1 + 2) - (1 + 2) - 2 - 2);
}

TEST_CASE("structurally identical terms merge and cancel") {
  LinearCombination L = parse("D{a}f * D{a}f - D{b}f * D{b}f");
  // distinct dummy names produce the same stored structure
  CHECK(L.empty());
  LinearCombination M = parse("2 * S * f + 3 * S * f");
  REQUIRE(M.size() == 1);
  CHECK(M.terms()[0].coeff == Coefficient(5));
}
