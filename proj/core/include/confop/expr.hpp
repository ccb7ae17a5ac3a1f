#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confop/rational.hpp"

namespace confop {

struct BadTerm : std::runtime_error {
  explicit BadTerm(const std::string& what) : std::runtime_error(what) {}
};

// The tensor building blocks. Slot layout of every factor: the ordered
// derivative slots come first (outermost derivative first), then the factor's
// own slots (the four curvature slots of R/W, the two of Ric, the p+2 fully
// symmetric slots of the symmetrized Schouten factor, and so on).
enum class FactorKind : std::uint8_t {
  Riemann,      // iterated covariant derivative of the curvature tensor
  Weyl,         // iterated covariant derivative of the Weyl tensor
  Ricci,        // iterated covariant derivative of the Ricci tensor
  Scalar,       // iterated covariant derivative of the scalar curvature
  SymSchouten,  // fully symmetrized derivative of the Schouten tensor
  Density,      // iterated covariant derivative of the density f
  AuxScalar,    // iterated covariant derivative of an auxiliary scalar
  Metric,       // explicit metric (or inverse metric) factor
  LinRiemann,   // linearized curvature, derivative slots fully symmetric
  SymTensor,    // free symmetric tensor replacing derivatives of f
  AuxVector,    // free vector replacing a gradient of an auxiliary scalar
  SchoutenPlain,  // ordered (unsymmetrized) derivative of Schouten; transient
  AmbientCurv,    // derivative of the ambient curvature tensor
  AmbientDensity  // derivative of the harmonic density extension
};

enum class AuxName : std::uint8_t { Phi, Ups, Y };

struct Factor {
  FactorKind kind = FactorKind::Density;
  int deriv = 0;  // number of derivative slots
  AuxName aux = AuxName::Phi;

  int own_slots() const;
  int slots() const { return deriv + own_slots(); }
  // contribution to the weight of a complete contraction
  int weight() const;
  bool is_curvature_kind() const;
  bool operator==(const Factor&) const = default;
  auto operator<=>(const Factor&) const = default;
};

// Where a slot connects. Exactly one of the three states holds:
// paired with another slot, free with an external label, or fixed to a
// distinguished ambient coordinate direction (t or rho).
struct Port {
  std::int16_t factor = -1;
  std::int16_t slot = -1;
  std::int16_t label = -1;  // index into Term::labels
  std::int16_t fixed = -1;  // 0 = t-direction, 1 = rho-direction

  bool is_paired() const { return factor >= 0; }
  bool is_free() const { return label >= 0; }
  bool is_fixed() const { return fixed >= 0; }
  bool operator==(const Port&) const = default;
};

// One complete (or tensor-valued) contraction: a coefficient, a factor list,
// and the connection of every slot.
struct Term {
  Coefficient coeff = Coefficient(1);
  std::vector<Factor> factors;
  std::vector<std::vector<Port>> conn;  // conn[f][s] mirrors pairings
  std::vector<std::string> labels;      // external labels for free slots

  void validate() const;  // throws BadTerm on a broken invariant
  int weight() const;
  // number of slot pairs joined within a single factor
  int internal_contractions() const;
  int internal_contractions_of(int f) const;
  bool is_complete() const;  // no free slots

  // structural key: factors, edges, and free labels in address order
  std::string structure_key() const;

  // editing helpers, all keep the mirror invariant of conn
  void link(int f1, int s1, int f2, int s2);
  void set_free(int f, int s, const std::string& label);
  Port port(int f, int s) const { return conn[std::size_t(f)][std::size_t(s)]; }
  // rewires whatever `p` points at so that it now points to (f,s)
  void attach(const Port& p, int f, int s);
  void erase_factor(int f);            // factor must have no live slots left
  void remove_slots(int f, const std::vector<int>& slots_to_drop);
  int add_factor(const Factor& fac);   // returns the new factor index; slots unset
  int label_id(const std::string& label);
};

// Formal sum of terms; structurally identical terms are merged on insertion.
class LinearCombination {
 public:
  LinearCombination() = default;
  LinearCombination(Term t) { add(std::move(t)); }  // NOLINT

  void add(Term t);
  void add(const LinearCombination& o);
  void scale(const Coefficient& c);
  LinearCombination operator+(const LinearCombination& o) const;
  LinearCombination operator-(const LinearCombination& o) const;
  LinearCombination operator*(const Coefficient& c) const;

  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const std::vector<Term>& terms() const { return terms_; }
  std::vector<Term>& terms() { return terms_; }

 private:
  std::vector<Term> terms_;
  std::map<std::string, std::size_t> index_;
};

// The statistics of Definitions kakom / betagamma / bonjour / tereza.
struct ExpressionProfile {
  int weight = 0;
  int kappa = 0;        // density factors
  int kappa_sharp = 0;  // density factors with at least one derivative
  int sigma = 0;        // factors, metric factors excluded
  int delta = 0;        // internal contractions
  int degree = 0;
  std::optional<int> beta;  // absent when there is no density factor
  int gamma = 0;
  std::vector<int> character_curvature;  // decreasing, zeros erased
  std::vector<int> character_density;
};

ExpressionProfile profile(const Term& t);

// gamma of a single factor, per the per-kind offsets
int factor_gamma(const Term& t, int f);

std::map<int, LinearCombination> split_by_homogeneity(const LinearCombination& L);

struct RestrictionReport {
  bool beta_applicable = false;
  bool beta_ok = true;
  int beta_bound = 0;  // the k of w = -n/2 + k
  bool gamma_applicable = false;
  bool gamma_ok = true;
  std::string witness;  // description of the worst factor on failure
  bool pass() const { return beta_ok && gamma_ok; }
  std::string str() const;
};

// Checks the extra restrictions beta[L] < k (when w = -n/2 + k) and
// gamma[L] < n/2 (when n is even).
RestrictionReport check_extra_restrictions(const LinearCombination& L, int n_value,
                                           const Coefficient& w_value);

std::string factor_str(const Factor& f);

}  // namespace confop
