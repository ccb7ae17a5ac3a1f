#include "confop/rational.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace confop {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw CoefficientOverflow();
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw CoefficientOverflow();
  return r;
}

static std::int64_t igcd(std::int64_t a, std::int64_t b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b) {
    std::int64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// ---------------------------------------------------------------- Fraction

Fraction::Fraction(std::int64_t n) : num(n), den(1) {}

Fraction::Fraction(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (den == 0) throw SingularCoefficient("zero denominator in rational constant");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = igcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Fraction Fraction::operator+(const Fraction& o) const {
  return {checked_add(checked_mul(num, o.den), checked_mul(o.num, den)), checked_mul(den, o.den)};
}
Fraction Fraction::operator-(const Fraction& o) const { return *this + Fraction{-o.num, o.den}; }
Fraction Fraction::operator*(const Fraction& o) const {
  return {checked_mul(num, o.num), checked_mul(den, o.den)};
}
Fraction Fraction::operator/(const Fraction& o) const {
  if (o.num == 0) throw SingularCoefficient("division by zero fraction");
  return {checked_mul(num, o.den), checked_mul(den, o.num)};
}

std::string Fraction::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

// -------------------------------------------------------------- Polynomial

Polynomial::Polynomial(std::int64_t c) {
  if (c != 0) terms_[{0, 0}] = c;
}

Polynomial Polynomial::monomial(std::int64_t c, int dn, int dw) {
  Polynomial p;
  if (c != 0) p.terms_[{dn, dw}] = c;
  return p;
}

void Polynomial::set(Monomial m, std::int64_t c) {
  if (c == 0)
    terms_.erase(m);
  else
    terms_[m] = c;
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first == Monomial{0, 0});
}

std::int64_t Polynomial::constant_value() const {
  if (terms_.empty()) return 0;
  return terms_.begin()->second;
}

int Polynomial::degree_n() const {
  int d = 0;
  for (auto& [m, c] : terms_) d = std::max(d, m.dn);
  return d;
}

int Polynomial::degree_w() const {
  int d = 0;
  for (auto& [m, c] : terms_) d = std::max(d, m.dw);
  return d;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (auto& [m, c] : o.terms_) {
    auto it = r.terms_.find(m);
    if (it == r.terms_.end()) {
      r.terms_[m] = c;
    } else {
      it->second = checked_add(it->second, c);
      if (it->second == 0) r.terms_.erase(it);
    }
  }
  return r;
}

Polynomial Polynomial::operator-() const {
  Polynomial r = *this;
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (-o); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  for (auto& [ma, ca] : terms_)
    for (auto& [mb, cb] : o.terms_) {
      Monomial m{ma.dn + mb.dn, ma.dw + mb.dw};
      auto it = r.terms_.find(m);
      std::int64_t prod = checked_mul(ca, cb);
      if (it == r.terms_.end()) {
        if (prod != 0) r.terms_[m] = prod;
      } else {
        it->second = checked_add(it->second, prod);
        if (it->second == 0) r.terms_.erase(it);
      }
    }
  return r;
}

std::int64_t Polynomial::content_signed() const {
  if (terms_.empty()) return 0;
  std::int64_t g = 0;
  for (auto& [m, c] : terms_) g = igcd(g, c);
  // sign taken from the highest monomial
  if (terms_.rbegin()->second < 0) g = -g;
  return g;
}

Polynomial Polynomial::divide_content(std::int64_t c) const {
  Polynomial r = *this;
  for (auto& [m, v] : r.terms_) v /= c;
  return r;
}

Fraction Polynomial::evaluate(const Fraction& nv, const Fraction& wv) const {
  Fraction total(0);
  for (auto& [m, c] : terms_) {
    Fraction t(c);
    for (int i = 0; i < m.dn; ++i) t = t * nv;
    for (int i = 0; i < m.dw; ++i) t = t * wv;
    total = total + t;
  }
  return total;
}

std::string Polynomial::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    auto [m, c] = *it;
    std::int64_t a = c;
    if (out.empty()) {
      if (a < 0) {
        out += "-";
        a = -a;
      }
    } else {
      out += (a < 0) ? "-" : "+";
      if (a < 0) a = -a;
    }
    bool has_sym = m.dn > 0 || m.dw > 0;
    if (a != 1 || !has_sym) out += std::to_string(a);
    if (m.dn > 0) {
      if (out.back() != '-' && out.back() != '+' && (a != 1 || !has_sym)) out += "*";
      out += "n";
      if (m.dn > 1) out += "^" + std::to_string(m.dn);
    }
    if (m.dw > 0) {
      if (m.dn > 0 || (a != 1 || !has_sym)) out += "*";
      out += "w";
      if (m.dw > 1) out += "^" + std::to_string(m.dw);
    }
  }
  return out;
}

// Univariate view with polynomial coefficients, used by gcd and exact division.
namespace {

enum class Var { N, W };

// coefficient vector by degree in the main variable
using UPoly = std::vector<Polynomial>;

UPoly to_upoly(const Polynomial& p, Var v) {
  int deg = (v == Var::N) ? p.degree_n() : p.degree_w();
  UPoly u(std::size_t(deg) + 1);
  for (auto& [m, c] : p.terms()) {
    int d = (v == Var::N) ? m.dn : m.dw;
    int other_n = (v == Var::N) ? 0 : m.dn;
    int other_w = (v == Var::N) ? m.dw : 0;
    u[std::size_t(d)] = u[std::size_t(d)] + Polynomial::monomial(c, other_n, other_w);
  }
  while (u.size() > 1 && u.back().is_zero()) u.pop_back();
  return u;
}

Polynomial from_upoly(const UPoly& u, Var v) {
  Polynomial r;
  Polynomial x = (v == Var::N) ? Polynomial::sym_n() : Polynomial::sym_w();
  for (auto it = u.rbegin(); it != u.rend(); ++it) r = r * x + *it;
  return r;
}

bool up_zero(const UPoly& u) {
  for (auto& c : u)
    if (!c.is_zero()) return false;
  return true;
}

int up_deg(const UPoly& u) {
  for (int i = int(u.size()) - 1; i >= 0; --i)
    if (!u[std::size_t(i)].is_zero()) return i;
  return -1;
}

UPoly up_scale(const UPoly& u, const Polynomial& s) {
  UPoly r = u;
  for (auto& c : r) c = c * s;
  return r;
}

// lc(b)^(da-db+1) * a mod b, by repeated leading-term elimination
UPoly pseudo_rem(UPoly a, const UPoly& b) {
  int db = up_deg(b);
  const Polynomial& lb = b[std::size_t(db)];
  int da = up_deg(a);
  while (da >= db && da >= 0) {
    Polynomial la = a[std::size_t(da)];
    a = up_scale(a, lb);
    for (int i = 0; i <= db; ++i) {
      std::size_t k = std::size_t(da - db + i);
      a[k] = a[k] - la * b[std::size_t(i)];
    }
    int nd = up_deg(a);
    while (nd >= 0 && nd >= da) --da;  // defensive, elimination guarantees nd < da
    da = nd;
  }
  return a;
}

Polynomial up_content(const UPoly& u) {
  Polynomial g;
  for (auto& c : u) {
    if (c.is_zero()) continue;
    g = Polynomial::gcd(g, c);
  }
  return g;
}

}  // namespace

Polynomial Polynomial::gcd(const Polynomial& a, const Polynomial& b) {
  auto normalize = [](Polynomial p) {
    std::int64_t c = p.content_signed();
    if (c < 0) p = -p;
    return p;
  };
  if (a.is_zero()) return normalize(b);
  if (b.is_zero()) return normalize(a);
  if (a.is_constant() || b.is_constant()) {
    return Polynomial(igcd(a.content_signed(), b.content_signed()));
  }
  Var v = (a.degree_n() > 0 || b.degree_n() > 0) ? Var::N : Var::W;
  UPoly A = to_upoly(a, v), B = to_upoly(b, v);
  if (up_deg(A) < up_deg(B)) std::swap(A, B);
  if (up_deg(B) == 0) {
    // other operand is free of the main variable: gcd with the content
    return normalize(Polynomial::gcd(up_content(A), B[0]));
  }
  Polynomial ca = up_content(A), cb = up_content(B);
  Polynomial d = Polynomial::gcd(ca, cb);
  for (auto& c : A) c = divide_exact(c, ca);
  for (auto& c : B) c = divide_exact(c, cb);
  // primitive polynomial remainder sequence
  while (true) {
    UPoly r = pseudo_rem(A, B);
    if (up_zero(r)) break;
    if (up_deg(r) == 0) {
      // coprime in the main variable
      return normalize(d);
    }
    Polynomial cr = up_content(r);
    for (auto& c : r) c = divide_exact(c, cr);
    A = B;
    B = r;
  }
  Polynomial g = from_upoly(B, v) * d;
  return normalize(g);
}

Polynomial Polynomial::divide_exact(const Polynomial& a, const Polynomial& b) {
  if (b.is_zero()) throw std::logic_error("polynomial division by zero");
  if (a.is_zero()) return Polynomial();
  if (b.is_constant()) {
    std::int64_t c = b.constant_value();
    Polynomial r = a;
    for (auto& [m, v] : r.terms_) {
      if (v % c != 0) throw std::logic_error("inexact polynomial division");
      v /= c;
    }
    return r;
  }
  Var v = (b.degree_n() > 0) ? Var::N : Var::W;
  UPoly A = to_upoly(a, v), B = to_upoly(b, v);
  int db = up_deg(B);
  UPoly Q(A.size());
  int da = up_deg(A);
  while (da >= db) {
    Polynomial q = divide_exact(A[std::size_t(da)], B[std::size_t(db)]);
    Q[std::size_t(da - db)] = q;
    for (int i = 0; i <= db; ++i)
      A[std::size_t(da - db + i)] = A[std::size_t(da - db + i)] - q * B[std::size_t(i)];
    da = up_deg(A);
  }
  if (!up_zero(A)) throw std::logic_error("inexact polynomial division");
  return from_upoly(Q, v);
}

// ------------------------------------------------------------- Coefficient

Coefficient::Coefficient(Polynomial num) : num_(std::move(num)), den_(1) {}

Coefficient::Coefficient(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw SingularCoefficient("zero denominator polynomial");
  reduce();
}

void Coefficient::reduce() {
  if (num_.is_zero()) {
    den_ = Polynomial(1);
    return;
  }
  Polynomial g = Polynomial::gcd(num_, den_);
  if (!(g == Polynomial(1))) {
    num_ = Polynomial::divide_exact(num_, g);
    den_ = Polynomial::divide_exact(den_, g);
  }
  if (den_.content_signed() < 0) {
    num_ = -num_;
    den_ = -den_;
  }
}

Coefficient Coefficient::operator+(const Coefficient& o) const {
  return Coefficient(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}
Coefficient Coefficient::operator-(const Coefficient& o) const {
  return Coefficient(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}
Coefficient Coefficient::operator*(const Coefficient& o) const {
  return Coefficient(num_ * o.num_, den_ * o.den_);
}
Coefficient Coefficient::operator/(const Coefficient& o) const {
  if (o.is_zero()) throw SingularCoefficient("division by zero coefficient");
  return Coefficient(num_ * o.den_, den_ * o.num_);
}
Coefficient Coefficient::operator-() const {
  Coefficient r = *this;
  r.num_ = -r.num_;
  return r;
}

Fraction Coefficient::evaluate(const Fraction& nv, const Fraction& wv) const {
  Fraction d = den_.evaluate(nv, wv);
  if (d.is_zero()) {
    throw SingularCoefficient("coefficient denominator (" + den_.str() + ") vanishes at n=" + nv.str() +
                              ", w=" + wv.str());
  }
  return num_.evaluate(nv, wv) / d;
}

double Coefficient::evaluate_double(double nv, double wv) const {
  auto eval = [&](const Polynomial& p) {
    double total = 0;
    for (auto& [m, c] : p.terms()) {
      double t = double(c);
      for (int i = 0; i < m.dn; ++i) t *= nv;
      for (int i = 0; i < m.dw; ++i) t *= wv;
      total += t;
    }
    return total;
  };
  double d = eval(den_);
  if (d == 0.0) throw SingularCoefficient("coefficient denominator vanishes at given n, w");
  return eval(num_) / d;
}

std::string Coefficient::str() const {
  if (den_ == Polynomial(1)) {
    if (num_.is_constant()) return std::to_string(num_.constant_value());
    return "(" + num_.str() + ")";
  }
  return "((" + num_.str() + ")/(" + den_.str() + "))";
}

}  // namespace confop
