#include "confop/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace confop {

namespace {

// Shared combinatorics for one (n_vars, order) pair.
struct Context {
  int n_vars, order;
  std::vector<std::vector<std::uint8_t>> exps;  // rank -> exponent vector
  std::vector<int> deg;                         // rank -> total degree
  std::vector<std::size_t> ranks_through_deg;   // degree -> count of ranks with deg <= d
  std::vector<std::vector<std::int32_t>> deriv_rank;  // [var][rank] -> rank of exp - e_var, or -1
  // pair_table[pair_offset[i] + j] = rank of exps[i] + exps[j], for deg_i + deg_j <= order
  std::vector<std::size_t> pair_offset;
  std::vector<std::uint32_t> pair_table;
};

void gen_exps(int n_vars, int order, std::vector<std::vector<std::uint8_t>>& out) {
  // graded lexicographic: by total degree, then lex on the exponent vector
  std::vector<std::uint8_t> cur(std::size_t(n_vars), 0);
  for (int d = 0; d <= order; ++d) {
    // enumerate compositions of d into n_vars parts in lex-descending first var
    std::vector<int> stack;
    std::vector<std::uint8_t> e(std::size_t(n_vars), 0);
    // recursive enumeration, iterative via odometer
    std::vector<int> idx(std::size_t(n_vars), 0);
    // simple recursive lambda
    auto rec = [&](auto&& self, int pos, int rem) -> void {
      if (pos == n_vars - 1) {
        e[std::size_t(pos)] = std::uint8_t(rem);
        out.push_back(e);
        return;
      }
      for (int k = rem; k >= 0; --k) {
        e[std::size_t(pos)] = std::uint8_t(k);
        self(self, pos + 1, rem - k);
      }
    };
    if (n_vars == 0) {
      if (d == 0) out.push_back({});
      continue;
    }
    rec(rec, 0, d);
  }
}

int find_rank(const Context& ctx, const std::vector<std::uint8_t>& e) {
  int d = 0;
  for (auto x : e) d += x;
  if (d > ctx.order) return -1;
  std::size_t lo = (d == 0) ? 0 : ctx.ranks_through_deg[std::size_t(d - 1)];
  std::size_t hi = ctx.ranks_through_deg[std::size_t(d)];
  // lex-descending order within a degree block, as generated
  auto cmp = [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  };
  auto it = std::lower_bound(ctx.exps.begin() + std::ptrdiff_t(lo), ctx.exps.begin() + std::ptrdiff_t(hi), e, cmp);
  return int(it - ctx.exps.begin());
}

const Context& context(int n_vars, int order) {
  static std::map<std::pair<int, int>, Context> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n_vars, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Context ctx;
  ctx.n_vars = n_vars;
  ctx.order = order;
  gen_exps(n_vars, order, ctx.exps);
  ctx.deg.resize(ctx.exps.size());
  ctx.ranks_through_deg.assign(std::size_t(order) + 1, 0);
  for (std::size_t r = 0; r < ctx.exps.size(); ++r) {
    int d = 0;
    for (auto x : ctx.exps[r]) d += x;
    ctx.deg[r] = d;
  }
  for (int d = 0; d <= order; ++d) {
    std::size_t c = 0;
    for (std::size_t r = 0; r < ctx.exps.size(); ++r)
      if (ctx.deg[r] <= d) ++c;
    ctx.ranks_through_deg[std::size_t(d)] = c;
  }
  ctx.deriv_rank.assign(std::size_t(n_vars), std::vector<std::int32_t>(ctx.exps.size(), -1));
  for (std::size_t r = 0; r < ctx.exps.size(); ++r)
    for (int v = 0; v < n_vars; ++v)
      if (ctx.exps[r][std::size_t(v)] > 0) {
        auto e = ctx.exps[r];
        --e[std::size_t(v)];
        ctx.deriv_rank[std::size_t(v)][r] = find_rank(ctx, e);
      }
  ctx.pair_offset.assign(ctx.exps.size() + 1, 0);
  for (std::size_t i = 0; i < ctx.exps.size(); ++i) {
    std::size_t nj = ctx.ranks_through_deg[std::size_t(order - ctx.deg[i])];
    ctx.pair_offset[i + 1] = ctx.pair_offset[i] + nj;
  }
  ctx.pair_table.resize(ctx.pair_offset.back());
  std::vector<std::uint8_t> tmp(static_cast<std::size_t>(n_vars));
  for (std::size_t i = 0; i < ctx.exps.size(); ++i) {
    std::size_t nj = ctx.ranks_through_deg[std::size_t(order - ctx.deg[i])];
    for (std::size_t j = 0; j < nj; ++j) {
      for (int v = 0; v < n_vars; ++v)
        tmp[std::size_t(v)] = std::uint8_t(ctx.exps[i][std::size_t(v)] + ctx.exps[j][std::size_t(v)]);
      ctx.pair_table[ctx.pair_offset[i] + j] = std::uint32_t(find_rank(ctx, tmp));
    }
  }
  return cache.emplace(key, std::move(ctx)).first->second;
}

}  // namespace

std::size_t JetPolynomial::rank_count(int n_vars, int order) {
  return context(n_vars, order).exps.size();
}

JetPolynomial::JetPolynomial(int n_vars, int order) : n_vars_(n_vars), order_(order) {
  coeff_.assign(rank_count(n_vars, order), 0.0);
}

JetPolynomial JetPolynomial::constant(int n_vars, int order, double value) {
  JetPolynomial j(n_vars, order);
  j.coeff_[0] = value;
  return j;
}

JetPolynomial JetPolynomial::variable(int n_vars, int order, int var, double base) {
  JetPolynomial j(n_vars, order);
  j.coeff_[0] = base;
  if (order >= 1) {
    std::vector<int> e(std::size_t(n_vars), 0);
    e[std::size_t(var)] = 1;
    j.set_coefficient(e, 1.0);
  }
  return j;
}

bool JetPolynomial::is_zero() const {
  for (double c : coeff_)
    if (c != 0.0) return false;
  return true;
}

double JetPolynomial::coefficient(const std::vector<int>& exponents) const {
  const Context& ctx = context(n_vars_, order_);
  std::vector<std::uint8_t> e(exponents.begin(), exponents.end());
  int r = find_rank(ctx, e);
  if (r < 0) return 0.0;
  return coeff_[std::size_t(r)];
}

void JetPolynomial::set_coefficient(const std::vector<int>& exponents, double v) {
  const Context& ctx = context(n_vars_, order_);
  std::vector<std::uint8_t> e(exponents.begin(), exponents.end());
  int r = find_rank(ctx, e);
  if (r < 0) throw std::out_of_range("monomial beyond jet order");
  coeff_[std::size_t(r)] = v;
}

JetPolynomial JetPolynomial::operator+(const JetPolynomial& o) const {
  JetPolynomial r = (order_ <= o.order_) ? *this : o.truncated(o.order_);
  if (order_ <= o.order_) {
    for (std::size_t i = 0; i < r.coeff_.size(); ++i) r.coeff_[i] += o.coeff_[i];
  } else {
    r = o;
    JetPolynomial t = truncated(o.order_);
    for (std::size_t i = 0; i < r.coeff_.size(); ++i) r.coeff_[i] += t.coeff_[i];
  }
  return r;
}

JetPolynomial JetPolynomial::operator-(const JetPolynomial& o) const { return *this + (-o); }

JetPolynomial JetPolynomial::operator-() const {
  JetPolynomial r = *this;
  for (double& c : r.coeff_) c = -c;
  return r;
}

JetPolynomial& JetPolynomial::operator+=(const JetPolynomial& o) { return *this = *this + o; }
JetPolynomial& JetPolynomial::operator-=(const JetPolynomial& o) { return *this = *this - o; }

JetPolynomial JetPolynomial::scaled(double s) const {
  JetPolynomial r = *this;
  for (double& c : r.coeff_) c *= s;
  return r;
}

JetPolynomial JetPolynomial::operator*(const JetPolynomial& o) const {
  int r_order = std::min(order_, o.order_);
  const JetPolynomial& a = *this;
  const JetPolynomial& b = o;
  JetPolynomial r(n_vars_, r_order);
  const Context& ctx = context(n_vars_, r_order);
  std::size_t na = std::min(a.coeff_.size(), ctx.exps.size());
  for (std::size_t i = 0; i < na; ++i) {
    double ai = a.coeff_[i];
    if (ai == 0.0) continue;
    std::size_t nj = ctx.ranks_through_deg[std::size_t(r_order - ctx.deg[i])];
    nj = std::min(nj, b.coeff_.size());
    const std::uint32_t* tab = ctx.pair_table.data() + ctx.pair_offset[i];
    for (std::size_t j = 0; j < nj; ++j) {
      double bj = b.coeff_[j];
      if (bj != 0.0) r.coeff_[tab[j]] += ai * bj;
    }
  }
  return r;
}

JetPolynomial JetPolynomial::partial(int var) const {
  if (order_ == 0) return JetPolynomial(n_vars_, 0);
  const Context& ctx = context(n_vars_, order_);
  JetPolynomial r(n_vars_, order_ - 1);
  for (std::size_t i = 0; i < coeff_.size(); ++i) {
    if (coeff_[i] == 0.0) continue;
    int e = ctx.exps[i][std::size_t(var)];
    if (e == 0) continue;
    std::int32_t dr = ctx.deriv_rank[std::size_t(var)][i];
    if (dr >= 0 && std::size_t(dr) < r.coeff_.size()) r.coeff_[std::size_t(dr)] += double(e) * coeff_[i];
  }
  return r;
}

JetPolynomial JetPolynomial::truncated(int new_order) const {
  if (new_order >= order_) {
    JetPolynomial r(n_vars_, new_order);
    std::copy(coeff_.begin(), coeff_.end(), r.coeff_.begin());
    return r;
  }
  JetPolynomial r(n_vars_, new_order);
  std::copy(coeff_.begin(), coeff_.begin() + std::ptrdiff_t(r.coeff_.size()), r.coeff_.begin());
  return r;
}

JetPolynomial JetPolynomial::slice(int var, int k) const {
  const Context& ctx = context(n_vars_, order_);
  JetPolynomial r(n_vars_, order_);
  std::vector<std::uint8_t> e;
  for (std::size_t i = 0; i < coeff_.size(); ++i) {
    if (coeff_[i] == 0.0) continue;
    if (ctx.exps[i][std::size_t(var)] != k) continue;
    e = ctx.exps[i];
    e[std::size_t(var)] = 0;
    int rr = find_rank(ctx, e);
    r.coeff_[std::size_t(rr)] += coeff_[i];
  }
  return r;
}

JetPolynomial JetPolynomial::shifted(int var, int k) const {
  const Context& ctx = context(n_vars_, order_);
  JetPolynomial r(n_vars_, order_);
  std::vector<std::uint8_t> e;
  for (std::size_t i = 0; i < coeff_.size(); ++i) {
    if (coeff_[i] == 0.0) continue;
    e = ctx.exps[i];
    int d = ctx.deg[i] + k;
    if (d > order_) continue;
    e[std::size_t(var)] = std::uint8_t(e[std::size_t(var)] + k);
    int rr = find_rank(ctx, e);
    if (rr >= 0) r.coeff_[std::size_t(rr)] += coeff_[i];
  }
  return r;
}

JetPolynomial JetPolynomial::exp() const {
  double c0 = value();
  JetPolynomial u = *this;
  u.coeff_[0] = 0.0;
  JetPolynomial acc = JetPolynomial::constant(n_vars_, order_, 1.0);
  JetPolynomial term = JetPolynomial::constant(n_vars_, order_, 1.0);
  for (int k = 1; k <= order_; ++k) {
    term = (term * u).truncated(order_).scaled(1.0 / double(k));
    acc += term;
  }
  return acc.scaled(std::exp(c0));
}

JetPolynomial JetPolynomial::log() const {
  double c0 = value();
  if (c0 <= 0.0) throw std::domain_error("jet log requires positive constant term");
  JetPolynomial u = scaled(1.0 / c0);
  u.coeff_[0] = 0.0;
  JetPolynomial acc = JetPolynomial::constant(n_vars_, order_, std::log(c0));
  JetPolynomial term = JetPolynomial::constant(n_vars_, order_, 1.0);
  for (int k = 1; k <= order_; ++k) {
    term = (term * u).truncated(order_);
    acc += term.scaled(((k % 2) ? 1.0 : -1.0) / double(k));
  }
  return acc;
}

JetPolynomial JetPolynomial::pow(double a) const { return log().scaled(a).exp(); }

JetPolynomial JetPolynomial::compose_linear(const std::vector<std::vector<double>>& A) const {
  const Context& ctx = context(n_vars_, order_);
  // new variables y: x_v = sum_j A[v][j] y_j
  std::vector<JetPolynomial> xs;
  for (int v = 0; v < n_vars_; ++v) {
    JetPolynomial x(n_vars_, order_);
    for (int j = 0; j < n_vars_; ++j) {
      if (A[std::size_t(v)][std::size_t(j)] == 0.0) continue;
      x += JetPolynomial::variable(n_vars_, order_, j).scaled(A[std::size_t(v)][std::size_t(j)]);
    }
    xs.push_back(x);
  }
  JetPolynomial r(n_vars_, order_);
  for (std::size_t i = 0; i < coeff_.size(); ++i) {
    if (coeff_[i] == 0.0) continue;
    JetPolynomial m = JetPolynomial::constant(n_vars_, order_, coeff_[i]);
    for (int v = 0; v < n_vars_; ++v)
      for (int e = 0; e < ctx.exps[i][std::size_t(v)]; ++e) m = m * xs[std::size_t(v)];
    r += m;
  }
  return r;
}

double JetPolynomial::max_abs() const {
  double m = 0.0;
  for (double c : coeff_) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace confop
