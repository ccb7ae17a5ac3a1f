#include "confop/expr.hpp"

#include <algorithm>
#include <sstream>

namespace confop {

int Factor::own_slots() const {
  switch (kind) {
    case FactorKind::Riemann:
    case FactorKind::Weyl:
    case FactorKind::LinRiemann:
    case FactorKind::AmbientCurv:
      return 4;
    case FactorKind::Ricci:
    case FactorKind::SymSchouten:
    case FactorKind::SchoutenPlain:
    case FactorKind::Metric:
      return 2;
    case FactorKind::AuxVector:
      return 1;
    case FactorKind::Scalar:
    case FactorKind::Density:
    case FactorKind::AuxScalar:
    case FactorKind::SymTensor:
    case FactorKind::AmbientDensity:
      return 0;
  }
  return 0;
}

int Factor::weight() const {
  switch (kind) {
    case FactorKind::Riemann:
    case FactorKind::Weyl:
    case FactorKind::Ricci:
    case FactorKind::Scalar:
    case FactorKind::SymSchouten:
    case FactorKind::SchoutenPlain:
    case FactorKind::LinRiemann:
    case FactorKind::AmbientCurv:
      return -(deriv + 2);
    case FactorKind::Density:
    case FactorKind::AuxScalar:
    case FactorKind::SymTensor:
    case FactorKind::AmbientDensity:
      return -deriv;
    case FactorKind::AuxVector:
      return -1;
    case FactorKind::Metric:
      return 0;
  }
  return 0;
}

bool Factor::is_curvature_kind() const {
  switch (kind) {
    case FactorKind::Riemann:
    case FactorKind::Weyl:
    case FactorKind::Ricci:
    case FactorKind::Scalar:
    case FactorKind::SymSchouten:
    case FactorKind::SchoutenPlain:
    case FactorKind::LinRiemann:
    case FactorKind::AmbientCurv:
      return true;
    default:
      return false;
  }
}

std::string factor_str(const Factor& f) {
  std::string base;
  switch (f.kind) {
    case FactorKind::Riemann: base = "R"; break;
    case FactorKind::Weyl: base = "W"; break;
    case FactorKind::Ricci: base = "Ric"; break;
    case FactorKind::Scalar: base = "S"; break;
    case FactorKind::SymSchouten: base = "SP"; break;
    case FactorKind::SchoutenPlain: base = "P!"; break;
    case FactorKind::Density: base = "f"; break;
    case FactorKind::AuxScalar:
      base = (f.aux == AuxName::Phi) ? "phi" : (f.aux == AuxName::Ups) ? "ups" : "Y";
      break;
    case FactorKind::Metric: base = "g"; break;
    case FactorKind::LinRiemann: base = "Rlin"; break;
    case FactorKind::SymTensor: base = "T"; break;
    case FactorKind::AuxVector: base = "v"; break;
    case FactorKind::AmbientCurv: base = "Rt"; break;
    case FactorKind::AmbientDensity: base = "ut"; break;
  }
  return base;
}

void Term::validate() const {
  if (factors.size() != conn.size()) throw BadTerm("factor/connection size mismatch");
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (int(conn[f].size()) != factors[f].slots()) throw BadTerm("slot count mismatch");
    for (std::size_t s = 0; s < conn[f].size(); ++s) {
      const Port& p = conn[f][s];
      int states = int(p.is_paired()) + int(p.is_free()) + int(p.is_fixed());
      if (states != 1) throw BadTerm("slot must be exactly one of paired/free/fixed");
      if (p.is_paired()) {
        if (p.factor >= std::int16_t(factors.size()) || p.slot >= std::int16_t(conn[p.factor].size()))
          throw BadTerm("dangling pairing");
        const Port& q = conn[p.factor][p.slot];
        if (!q.is_paired() || q.factor != std::int16_t(f) || q.slot != std::int16_t(s))
          throw BadTerm("pairing not mirrored");
        if (p.factor == std::int16_t(f) && p.slot == std::int16_t(s)) throw BadTerm("slot paired with itself");
      }
      if (p.is_free() && p.label >= std::int16_t(labels.size())) throw BadTerm("dangling label");
    }
  }
}

int Term::weight() const {
  int w = 0;
  for (auto& f : factors) w += f.weight();
  return w;
}

int Term::internal_contractions_of(int f) const {
  int count = 0;
  const auto& ports = conn[std::size_t(f)];
  for (std::size_t s = 0; s < ports.size(); ++s)
    if (ports[s].is_paired() && ports[s].factor == std::int16_t(f) && ports[s].slot > std::int16_t(s)) ++count;
  return count;
}

int Term::internal_contractions() const {
  int count = 0;
  for (std::size_t f = 0; f < factors.size(); ++f) count += internal_contractions_of(int(f));
  return count;
}

bool Term::is_complete() const {
  for (auto& ports : conn)
    for (auto& p : ports)
      if (p.is_free()) return false;
  return true;
}

std::string Term::structure_key() const {
  std::ostringstream os;
  for (auto& f : factors)
    os << int(f.kind) << "." << f.deriv << "." << int(f.aux) << ";";
  os << "|";
  for (std::size_t f = 0; f < conn.size(); ++f)
    for (std::size_t s = 0; s < conn[f].size(); ++s) {
      const Port& p = conn[f][s];
      if (p.is_paired()) {
        if (p.factor > std::int16_t(f) || (p.factor == std::int16_t(f) && p.slot > std::int16_t(s)))
          os << f << "," << s << "-" << p.factor << "," << p.slot << ";";
      } else if (p.is_free()) {
        os << f << "," << s << "=" << labels[std::size_t(p.label)] << ";";
      } else {
        os << f << "," << s << "#" << p.fixed << ";";
      }
    }
  return os.str();
}

void Term::link(int f1, int s1, int f2, int s2) {
  conn[std::size_t(f1)][std::size_t(s1)] = Port{std::int16_t(f2), std::int16_t(s2), -1, -1};
  conn[std::size_t(f2)][std::size_t(s2)] = Port{std::int16_t(f1), std::int16_t(s1), -1, -1};
}

int Term::label_id(const std::string& label) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return int(i);
  labels.push_back(label);
  return int(labels.size()) - 1;
}

void Term::set_free(int f, int s, const std::string& label) {
  conn[std::size_t(f)][std::size_t(s)] = Port{-1, -1, std::int16_t(label_id(label)), -1};
}

void Term::attach(const Port& p, int f, int s) {
  if (p.is_paired())
    link(p.factor, p.slot, f, s);
  else
    conn[std::size_t(f)][std::size_t(s)] = p;
}

void Term::erase_factor(int f) {
  factors.erase(factors.begin() + f);
  conn.erase(conn.begin() + f);
  for (auto& ports : conn)
    for (auto& p : ports)
      if (p.is_paired() && p.factor > std::int16_t(f)) --p.factor;
}

void Term::remove_slots(int f, const std::vector<int>& slots_to_drop) {
  auto& ports = conn[std::size_t(f)];
  std::vector<int> remap(ports.size());
  std::vector<Port> kept;
  int out = 0;
  for (std::size_t s = 0; s < ports.size(); ++s) {
    if (std::find(slots_to_drop.begin(), slots_to_drop.end(), int(s)) != slots_to_drop.end()) {
      remap[s] = -1;
    } else {
      remap[s] = out++;
      kept.push_back(ports[s]);
    }
  }
  conn[std::size_t(f)] = std::move(kept);
  for (std::size_t g = 0; g < conn.size(); ++g)
    for (auto& p : conn[g])
      if (p.is_paired() && p.factor == std::int16_t(f)) p.slot = std::int16_t(remap[std::size_t(p.slot)]);
}

int Term::add_factor(const Factor& fac) {
  factors.push_back(fac);
  conn.emplace_back(std::size_t(fac.slots()));
  return int(factors.size()) - 1;
}

void LinearCombination::add(Term t) {
  if (t.coeff.is_zero()) return;
  std::string key = t.structure_key();
  auto it = index_.find(key);
  if (it == index_.end()) {
    index_[key] = terms_.size();
    terms_.push_back(std::move(t));
  } else {
    Term& dst = terms_[it->second];
    dst.coeff = dst.coeff + t.coeff;
    if (dst.coeff.is_zero()) {
      // keep positions stable: swap-with-last then reindex the moved term
      std::size_t pos = it->second;
      index_.erase(it);
      if (pos + 1 != terms_.size()) {
        terms_[pos] = std::move(terms_.back());
        index_[terms_[pos].structure_key()] = pos;
      }
      terms_.pop_back();
    }
  }
}

void LinearCombination::add(const LinearCombination& o) {
  for (auto& t : o.terms_) add(t);
}

void LinearCombination::scale(const Coefficient& c) {
  if (c.is_zero()) {
    terms_.clear();
    index_.clear();
    return;
  }
  for (auto& t : terms_) t.coeff = t.coeff * c;
}

LinearCombination LinearCombination::operator+(const LinearCombination& o) const {
  LinearCombination r = *this;
  r.add(o);
  return r;
}

LinearCombination LinearCombination::operator-(const LinearCombination& o) const {
  LinearCombination r = *this;
  LinearCombination neg = o;
  neg.scale(Coefficient(-1));
  r.add(neg);
  return r;
}

LinearCombination LinearCombination::operator*(const Coefficient& c) const {
  LinearCombination r = *this;
  r.scale(c);
  return r;
}

int factor_gamma(const Term& t, int f) {
  const Factor& fac = t.factors[std::size_t(f)];
  int iota = fac.slots();
  int tau = t.internal_contractions_of(f);
  switch (fac.kind) {
    case FactorKind::Riemann:
    case FactorKind::Weyl:
    case FactorKind::LinRiemann:
      return iota - tau - 2;
    case FactorKind::SymSchouten:
    case FactorKind::SchoutenPlain:
    case FactorKind::Ricci:
      return iota - tau - 1;
    default:
      return iota - tau;
  }
}

ExpressionProfile profile(const Term& t) {
  ExpressionProfile p;
  p.weight = t.weight();
  bool have_gamma = false;
  for (std::size_t f = 0; f < t.factors.size(); ++f) {
    const Factor& fac = t.factors[f];
    if (fac.kind == FactorKind::Metric) continue;
    ++p.sigma;
    int tau = t.internal_contractions_of(int(f));
    p.delta += tau;
    if (fac.kind == FactorKind::Density || fac.kind == FactorKind::SymTensor) {
      ++p.kappa;
      if (fac.deriv >= 1) ++p.kappa_sharp;
      int b = fac.slots() - tau;
      if (!p.beta || b > *p.beta) p.beta = b;
      if (tau > 0) p.character_density.push_back(tau);
    } else if (fac.is_curvature_kind()) {
      if (tau > 0) p.character_curvature.push_back(tau);
    }
    int g = factor_gamma(t, int(f));
    if (!have_gamma || g > p.gamma) {
      p.gamma = g;
      have_gamma = true;
    }
  }
  int curvature_count = 0;
  for (auto& fac : t.factors)
    if (fac.is_curvature_kind()) ++curvature_count;
  p.degree = 2 * curvature_count + p.kappa_sharp;
  std::sort(p.character_curvature.rbegin(), p.character_curvature.rend());
  std::sort(p.character_density.rbegin(), p.character_density.rend());
  return p;
}

std::map<int, LinearCombination> split_by_homogeneity(const LinearCombination& L) {
  std::map<int, LinearCombination> parts;
  for (auto& t : L.terms()) {
    int kappa = 0;
    for (auto& f : t.factors)
      if (f.kind == FactorKind::Density || f.kind == FactorKind::SymTensor) ++kappa;
    parts[kappa].add(t);
  }
  return parts;
}

std::string RestrictionReport::str() const {
  std::ostringstream os;
  if (!beta_applicable && !gamma_applicable) return "no restrictions applicable";
  if (beta_applicable)
    os << "beta < " << beta_bound << ": " << (beta_ok ? "pass" : "FAIL") << "; ";
  if (gamma_applicable) os << "gamma < n/2: " << (gamma_ok ? "pass" : "FAIL") << "; ";
  if (!witness.empty()) os << "witness: " << witness;
  return os.str();
}

RestrictionReport check_extra_restrictions(const LinearCombination& L, int n_value,
                                           const Coefficient& w_value) {
  RestrictionReport rep;
  // k is derivable only when w + n/2 is a positive integer
  if (w_value.is_constant()) {
    Fraction w = w_value.evaluate(Fraction(n_value), Fraction(0));
    Fraction k = w + Fraction(n_value, 2);
    if (k.den == 1 && k.num >= 1) {
      rep.beta_applicable = true;
      rep.beta_bound = int(k.num);
    }
  }
  rep.gamma_applicable = (n_value % 2 == 0);
  for (auto& t : L.terms()) {
    ExpressionProfile p = profile(t);
    if (rep.beta_applicable && p.beta && *p.beta >= rep.beta_bound) {
      rep.beta_ok = false;
      rep.witness = "term with beta=" + std::to_string(*p.beta);
    }
    if (rep.gamma_applicable && 2 * p.gamma >= n_value) {
      rep.gamma_ok = false;
      rep.witness = "term with gamma=" + std::to_string(p.gamma);
    }
  }
  return rep;
}

}  // namespace confop
