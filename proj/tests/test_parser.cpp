#include <doctest.h>

#include "confop/parser.hpp"

using namespace confop;

TEST_CASE("grammar basics") {
  LinearCombination L = parse("((n-2)/(2*(n-1))) * S * f");
  REQUIRE(L.size() == 1);
  const Term& t = L.terms()[0];
  CHECK(t.coeff == (Coefficient::sym_n() - 2) / ((Coefficient::sym_n() - 1) * 2));
  REQUIRE(t.factors.size() == 2);
  CHECK(t.factors[0].kind == FactorKind::Scalar);
  CHECK(t.factors[1].kind == FactorKind::Density);
}

TEST_CASE("repeated index letters become pairings, singletons stay free") {
  LinearCombination L = parse("W{i,j,k,l} * W{i,j,k,m}");
  const Term& t = L.terms()[0];
  int free_count = 0, edges = 0;
  for (auto& ports : t.conn)
    for (auto& p : ports) {
      if (p.is_free()) ++free_count;
      if (p.is_paired()) ++edges;
    }
  CHECK(free_count == 2);  // l and m
  CHECK(edges == 6);       // three edges, two endpoints each
}

TEST_CASE("an index used three times is an arity error") {
  CHECK_THROWS_AS(parse("W{i,j,k,l} * W{i,j,l,k} * g{k,m}"), ParseError);
}

TEST_CASE("slot count mismatches are rejected") {
  CHECK_THROWS_AS(parse("W{i,j,k}"), ParseError);
  CHECK_THROWS_AS(parse("Ric{i}"), ParseError);
  CHECK_THROWS_AS(parse("Q{i}"), ParseError);
}

TEST_CASE("syntax errors carry position") {
  try {
    parse("S * \n * f");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("round trip is the identity on printed text") {
  const char* cases[] = {
      "D{a}f * D{a}f",
      "((n-2)/(2*(n-1))) * S * f + D{a,a}f",
      "W{i,j,k,l} * W{i,j,k,l} * D{a,a}f",
      "D{a,b}W{i,j,k,l} * Rlin{i,j,k,l} * T{a,b}",
      "-4/(n-2) * Ric{a,b} * D{a}f * D{b}f + 2 * SP{a,a} * f",
      "D{m}Rt{i,j,k,l} * Rt{i,j,k,l} * D{m}ut",
      "Rt{T0,i,j,INF} * Rt{T0,i,j,INF}",
  };
  for (const char* c : cases) {
    LinearCombination L1 = parse(c);
    std::string printed = print(L1);
    LinearCombination L2 = parse(printed);
    REQUIRE(L1.size() == L2.size());
    for (std::size_t i = 0; i < L1.size(); ++i) {
      CHECK(L1.terms()[i].structure_key() == L2.terms()[i].structure_key());
      CHECK(L1.terms()[i].coeff == L2.terms()[i].coeff);
    }
  }
}

TEST_CASE("newlines join terms, comments are skipped") {
  LinearCombination L = parse("# conformal Laplacian\nD{a,a}f\n((n-2)/(2*(n-1))) * S * f\n- f * S");
  CHECK(L.size() == 3);
}

TEST_CASE("coefficient literals") {
  CHECK(parse_coefficient("-n/2+1") ==
        Coefficient(1) - Coefficient::sym_n() / 2);
  CHECK(parse_coefficient("((n-2)^2+4)/(2*(n-1)*(n-2))") ==
        ((Coefficient::sym_n() - 2) * (Coefficient::sym_n() - 2) + 4) /
            ((Coefficient::sym_n() - 1) * (Coefficient::sym_n() - 2) * 2));
  CHECK(parse_coefficient("w^2-w") == Coefficient::sym_w() * Coefficient::sym_w() - Coefficient::sym_w());
}
