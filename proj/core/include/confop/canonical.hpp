#pragma once

#include "confop/expr.hpp"

namespace confop {

// Canonical form under: metric-factor elimination (traces become the symbol
// n), same-factor internal traces folded to Ricci / scalar kinds (Weyl traces
// vanish), factor-kind sort, dummy relabeling, per-factor symmetry action
// with sign, normal ordering of derivative slots with eagerly generated
// curvature corrections, and first-Bianchi reduction to a fixed spanning set
// (plus the linearized second Bianchi for linearized curvature factors).
// Structurally equal results merge; zero coefficients drop.  Idempotent.
LinearCombination canonicalize(const LinearCombination& L);
LinearCombination canonicalize(const Term& t);

// The artifact's decision procedure for "holds formally".
bool is_formally_zero(const LinearCombination& L);

// Exchanges the adjacent derivative slots pos and pos+1 of one factor.
// Exact identity: input = swapped + corrections; every correction carries one
// extra genuine curvature factor.
struct AdjacentSwap {
  Term swapped;
  std::vector<Term> corrections;
};
AdjacentSwap commute_adjacent(const Term& t, int factor, int pos);

}  // namespace confop
