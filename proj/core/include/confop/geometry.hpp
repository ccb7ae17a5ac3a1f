#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "confop/expr.hpp"
#include "confop/jet.hpp"

namespace confop {

struct InsufficientOrder : std::runtime_error {
  explicit InsufficientOrder(const std::string& what) : std::runtime_error(what) {}
};

// Dense tensor of jets, all dimensions equal to n; components row-major.
struct TensorJet {
  int n = 0;
  int rank = 0;
  std::vector<JetPolynomial> comp;

  TensorJet() = default;
  TensorJet(int n_, int rank_, int n_vars, int order);
  JetPolynomial& at(const std::vector<int>& idx);
  const JetPolynomial& at(const std::vector<int>& idx) const;
  std::size_t size() const { return comp.size(); }
};

struct MetricJet {
  int n = 0;
  int order = 0;
  std::vector<JetPolynomial> g;  // n*n, symmetric

  JetPolynomial& at(int i, int j) { return g[std::size_t(i * n + j)]; }
  const JetPolynomial& at(int i, int j) const { return g[std::size_t(i * n + j)]; }
};

// Deterministic random metric jet: identity at the base point, coefficient of
// x^alpha scaled by amplitude^|alpha|.
MetricJet sample_metric_jet(std::uint64_t seed, int n, int order, double amplitude);

// Curvature tensors of a metric jet, all at consistent truncation orders.
// Index conventions (validated by the unit tests):
//   R_{ijkl} = c (g_ik g_jl - g_il g_jk) on a constant-curvature background,
//   Ric_jl = g^{ik} R_{ijkl},  S = g^{jl} Ric_jl,
//   P = (Ric - S g / (2(n-1))) / (n-2),
//   W_{ijkl} = R_{ijkl} - P_ik g_jl - P_jl g_ik + P_il g_jk + P_jk g_il,
//   C_{kij} = grad_i P_{jk} - grad_j P_{ik},
//   B_ij = grad^k C_{ijk} - P^{kl} W_{kijl}.
class GeometryStack {
 public:
  explicit GeometryStack(const MetricJet& metric);

  int n() const { return n_; }
  int order() const { return order_; }
  const MetricJet& metric() const { return metric_; }
  const TensorJet& ginv() const { return ginv_; }
  const TensorJet& christoffel() const { return christoffel_; }  // [k][i][j]
  const TensorJet& riemann() const { return riemann_; }
  const TensorJet& ricci() const { return ricci_; }
  const JetPolynomial& scalar() const { return scalar_; }
  const TensorJet& schouten() const { return schouten_; }
  const TensorJet& weyl() const { return weyl_; }
  const TensorJet& cotton() const { return cotton_; }
  const TensorJet& bach() const { return bach_; }

  // iterated covariant derivative, the new index outermost-first; cached
  const TensorJet& derivatives(FactorKind base, int m) const;
  TensorJet covariant_derivative(const TensorJet& t) const;
  // covariant derivatives of a caller-supplied scalar (not cached)
  TensorJet scalar_derivatives(const JetPolynomial& f, int m) const;

  struct IdentityResiduals {
    double first_bianchi = 0;
    double second_bianchi = 0;
    double weyl_trace = 0;
  };
  IdentityResiduals check_identities() const;

 private:
  int n_, order_;
  MetricJet metric_;
  TensorJet ginv_, christoffel_, riemann_, ricci_, schouten_, weyl_, cotton_, bach_;
  JetPolynomial scalar_;
  mutable std::map<std::pair<int, int>, TensorJet> deriv_cache_;
};

GeometryStack curvature_stack(const MetricJet& g);

// Numeric evaluation of intrinsic terms at the base point.
struct EvalInput {
  const GeometryStack* stack = nullptr;
  const JetPolynomial* f = nullptr;                 // density values
  std::map<AuxName, JetPolynomial> aux;             // phi / ups / Y values
  Fraction n_value{0};
  Fraction w_value{0};
};

struct EvalResult {
  double value = 0;
  double scale = 0;  // sum of absolute term magnitudes
};

EvalResult evaluate(const LinearCombination& L, const EvalInput& in);

// Tensor-valued evaluation: the result array runs over the free slots in
// label-sorted order; `scale` as above.
struct TensorEvalResult {
  std::vector<std::string> labels;
  std::vector<double> value;  // size n^labels
  double scale = 0;
};
TensorEvalResult evaluate_tensor(const LinearCombination& L, const EvalInput& in);

// Values for the linearized world (contractions taken with the flat metric).
class LinearizedEnv {
 public:
  LinearizedEnv(std::uint64_t seed, int n, int max_curv_derivs = 4, int max_sym_rank = 8);

  int n() const { return n_; }
  const std::vector<double>& lin_riemann(int m) const;  // [r1..rm i j k l]
  const std::vector<double>& sym_tensor(int p) const;
  const std::vector<double>& aux_vector() const { return aux_vector_; }
  double identity_residual() const;  // construction symmetries of lin_riemann(1)

 private:
  int n_;
  std::vector<std::vector<double>> lin_r_;   // by m
  mutable std::map<int, std::vector<double>> sym_;  // by p
  std::uint64_t seed_;
  std::vector<double> aux_vector_;
};

EvalResult evaluate_linearized(const LinearCombination& L, const LinearizedEnv& env);
TensorEvalResult evaluate_linearized_tensor(const LinearCombination& L, const LinearizedEnv& env);

// |L_{Omega^2 g}(Omega^a f) - Omega^b L_g(f)| / scale at the base point.
double rescale_test(const LinearCombination& L, const Coefficient& bidegree_a,
                    const Coefficient& bidegree_b, const GeometryStack& stack,
                    const JetPolynomial& f, const JetPolynomial& phi, const Fraction& n_value,
                    const Fraction& w_value);

}  // namespace confop
