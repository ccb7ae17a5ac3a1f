#include "confop/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "confop/rng.hpp"

namespace confop {

namespace {

std::size_t ipow(int n, int r) {
  std::size_t v = 1;
  for (int i = 0; i < r; ++i) v *= std::size_t(n);
  return v;
}

std::size_t flat(const std::vector<int>& idx, int n) {
  std::size_t p = 0;
  for (int i : idx) p = p * std::size_t(n) + std::size_t(i);
  return p;
}

bool next_index(std::vector<int>& idx, int n) {
  for (int k = int(idx.size()) - 1; k >= 0; --k) {
    if (++idx[std::size_t(k)] < n) return true;
    idx[std::size_t(k)] = 0;
  }
  return false;
}

}  // namespace

TensorJet::TensorJet(int n_, int rank_, int n_vars, int order) : n(n_), rank(rank_) {
  comp.assign(ipow(n_, rank_), JetPolynomial(n_vars, order));
}

JetPolynomial& TensorJet::at(const std::vector<int>& idx) { return comp[flat(idx, n)]; }
const JetPolynomial& TensorJet::at(const std::vector<int>& idx) const { return comp[flat(idx, n)]; }

MetricJet sample_metric_jet(std::uint64_t seed, int n, int order, double amplitude) {
  if (n < 3) throw std::invalid_argument("dimension must be at least 3");
  MetricJet m;
  m.n = n;
  m.order = order;
  m.g.assign(std::size_t(n * n), JetPolynomial(n, order));
  CounterRng rng(seed);
  std::size_t ranks = JetPolynomial::rank_count(n, order);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      JetPolynomial jet(n, order);
      auto& raw = jet.raw();
      raw[0] = (i == j) ? 1.0 : 0.0;
      for (std::size_t r = 1; r < ranks; ++r) {
        double u = rng.uniform();
        raw[r] = u;  // rescaled below by degree
      }
      m.at(i, j) = jet;
      m.at(j, i) = jet;
    }
  // scale the coefficient of x^alpha by amplitude^|alpha|
  std::vector<std::vector<double>> A(std::size_t(n), std::vector<double>(std::size_t(n), 0.0));
  for (int v = 0; v < n; ++v) A[std::size_t(v)][std::size_t(v)] = amplitude;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      JetPolynomial scaled = m.at(i, j).compose_linear(A);
      scaled.raw()[0] = (i == j) ? 1.0 : 0.0;
      m.at(i, j) = scaled;
      m.at(j, i) = scaled;
    }
  return m;
}

GeometryStack::GeometryStack(const MetricJet& metric) : n_(metric.n), order_(metric.order), metric_(metric) {
  if (order_ < 2) throw InsufficientOrder("metric jet order must be at least 2 for curvature");
  int nv = n_;
  // inverse metric by Newton iteration on jets
  ginv_ = TensorJet(n_, 2, nv, order_);
  {
    // invert the base-point matrix
    std::vector<double> a(std::size_t(n_ * n_)), inv(std::size_t(n_ * n_), 0.0);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) a[std::size_t(i * n_ + j)] = metric_.at(i, j).value();
    for (int i = 0; i < n_; ++i) inv[std::size_t(i * n_ + i)] = 1.0;
    for (int c = 0; c < n_; ++c) {
      int piv = c;
      for (int r = c + 1; r < n_; ++r)
        if (std::abs(a[std::size_t(r * n_ + c)]) > std::abs(a[std::size_t(piv * n_ + c)])) piv = r;
      for (int k = 0; k < n_; ++k) {
        std::swap(a[std::size_t(c * n_ + k)], a[std::size_t(piv * n_ + k)]);
        std::swap(inv[std::size_t(c * n_ + k)], inv[std::size_t(piv * n_ + k)]);
      }
      double d = a[std::size_t(c * n_ + c)];
      for (int k = 0; k < n_; ++k) {
        a[std::size_t(c * n_ + k)] /= d;
        inv[std::size_t(c * n_ + k)] /= d;
      }
      for (int r = 0; r < n_; ++r) {
        if (r == c) continue;
        double m = a[std::size_t(r * n_ + c)];
        for (int k = 0; k < n_; ++k) {
          a[std::size_t(r * n_ + k)] -= m * a[std::size_t(c * n_ + k)];
          inv[std::size_t(r * n_ + k)] -= m * inv[std::size_t(c * n_ + k)];
        }
      }
    }
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        ginv_.comp[std::size_t(i * n_ + j)] = JetPolynomial::constant(nv, order_, inv[std::size_t(i * n_ + j)]);
    // X <- X (2 I - g X), doubling the matched order each pass
    int passes = 1;
    while ((1 << passes) <= order_ + 1) ++passes;
    for (int p = 0; p < passes; ++p) {
      TensorJet gx(n_, 2, nv, order_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
          JetPolynomial s(nv, order_);
          for (int k = 0; k < n_; ++k)
            s += metric_.at(i, k) * ginv_.comp[std::size_t(k * n_ + j)];
          gx.comp[std::size_t(i * n_ + j)] = s;
        }
      TensorJet nx(n_, 2, nv, order_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
          JetPolynomial s(nv, order_);
          for (int k = 0; k < n_; ++k) s += ginv_.comp[std::size_t(i * n_ + k)] * gx.comp[std::size_t(k * n_ + j)];
          nx.comp[std::size_t(i * n_ + j)] = ginv_.comp[std::size_t(i * n_ + j)].scaled(2.0) - s;
        }
      ginv_ = nx;
    }
  }

  // Christoffel symbols, order - 1
  christoffel_ = TensorJet(n_, 3, nv, order_ - 1);
  for (int k = 0; k < n_; ++k)
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) {
        JetPolynomial s(nv, order_ - 1);
        for (int l = 0; l < n_; ++l) {
          JetPolynomial t = metric_.at(l, j).partial(i) + metric_.at(l, i).partial(j) - metric_.at(i, j).partial(l);
          s += ginv_.comp[std::size_t(k * n_ + l)].truncated(order_ - 1) * t;
        }
        s = s.scaled(0.5);
        christoffel_.comp[flat({k, i, j}, n_)] = s;
        christoffel_.comp[flat({k, j, i}, n_)] = s;
      }

  // Lowered curvature tensor, order - 2.  R_{ijkl} = g_{im} Rup^m_{jkl},
  // Rup^m_{jkl} = d_k Gamma^m_{lj} - d_l Gamma^m_{kj} + Gamma^m_{ks} Gamma^s_{lj} - Gamma^m_{ls} Gamma^s_{kj}.
  riemann_ = TensorJet(n_, 4, nv, order_ - 2);
  {
    TensorJet rup(n_, 4, nv, order_ - 2);  // [m][j][k][l]
    for (int m = 0; m < n_; ++m)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < k; ++l) {
            JetPolynomial s = christoffel_.comp[flat({m, l, j}, n_)].partial(k) -
                              christoffel_.comp[flat({m, k, j}, n_)].partial(l);
            for (int q = 0; q < n_; ++q)
              s += christoffel_.comp[flat({m, k, q}, n_)].truncated(order_ - 2) *
                       christoffel_.comp[flat({q, l, j}, n_)] -
                   christoffel_.comp[flat({m, l, q}, n_)].truncated(order_ - 2) *
                       christoffel_.comp[flat({q, k, j}, n_)];
            rup.comp[flat({m, j, k, l}, n_)] = s;
            rup.comp[flat({m, j, l, k}, n_)] = -s;
          }
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < n_; ++l) {
            JetPolynomial s(nv, order_ - 2);
            for (int m = 0; m < n_; ++m)
              s += metric_.at(i, m).truncated(order_ - 2) * rup.comp[flat({m, j, k, l}, n_)];
            riemann_.comp[flat({i, j, k, l}, n_)] = s;
          }
  }

  ricci_ = TensorJet(n_, 2, nv, order_ - 2);
  for (int j = 0; j < n_; ++j)
    for (int l = 0; l < n_; ++l) {
      JetPolynomial s(nv, order_ - 2);
      for (int i = 0; i < n_; ++i)
        for (int k = 0; k < n_; ++k)
          s += ginv_.comp[std::size_t(i * n_ + k)].truncated(order_ - 2) * riemann_.comp[flat({i, j, k, l}, n_)];
      ricci_.comp[std::size_t(j * n_ + l)] = s;
    }

  scalar_ = JetPolynomial(nv, order_ - 2);
  for (int j = 0; j < n_; ++j)
    for (int l = 0; l < n_; ++l)
      scalar_ += ginv_.comp[std::size_t(j * n_ + l)].truncated(order_ - 2) * ricci_.comp[std::size_t(j * n_ + l)];

  schouten_ = TensorJet(n_, 2, nv, order_ - 2);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      schouten_.comp[std::size_t(i * n_ + j)] =
          (ricci_.comp[std::size_t(i * n_ + j)] -
           (scalar_ * metric_.at(i, j).truncated(order_ - 2)).scaled(1.0 / (2.0 * (n_ - 1))))
              .scaled(1.0 / (n_ - 2));

  weyl_ = TensorJet(n_, 4, nv, order_ - 2);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) {
          auto P = [&](int a, int b) { return schouten_.comp[std::size_t(a * n_ + b)]; };
          auto G = [&](int a, int b) { return metric_.at(a, b).truncated(order_ - 2); };
          weyl_.comp[flat({i, j, k, l}, n_)] = riemann_.comp[flat({i, j, k, l}, n_)] - P(i, k) * G(j, l) -
                                               P(j, l) * G(i, k) + P(i, l) * G(j, k) + P(j, k) * G(i, l);
        }

  if (order_ >= 3) {
    TensorJet dp = covariant_derivative(schouten_);  // [c][j][k] = grad_c P_{jk}
    cotton_ = TensorJet(n_, 3, nv, order_ - 3);
    for (int k = 0; k < n_; ++k)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          cotton_.comp[flat({k, i, j}, n_)] = dp.comp[flat({i, j, k}, n_)] - dp.comp[flat({j, i, k}, n_)];
  }
  if (order_ >= 4) {
    TensorJet dc = covariant_derivative(cotton_);  // [c][k][i][j]
    bach_ = TensorJet(n_, 2, nv, order_ - 4);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        JetPolynomial s(nv, order_ - 4);
        for (int a = 0; a < n_; ++a)
          for (int b = 0; b < n_; ++b)
            s += ginv_.comp[std::size_t(a * n_ + b)].truncated(order_ - 4) * dc.comp[flat({a, i, j, b}, n_)];
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < n_; ++l) {
            JetPolynomial pkl(nv, order_ - 4);
            for (int a = 0; a < n_; ++a)
              for (int b = 0; b < n_; ++b)
                pkl += ginv_.comp[std::size_t(k * n_ + a)].truncated(order_ - 4) *
                       ginv_.comp[std::size_t(l * n_ + b)].truncated(order_ - 4) *
                       schouten_.comp[std::size_t(a * n_ + b)].truncated(order_ - 4);
            s -= pkl * weyl_.comp[flat({k, i, j, l}, n_)].truncated(order_ - 4);
          }
        bach_.comp[std::size_t(i * n_ + j)] = s;
      }
  }
}

TensorJet GeometryStack::covariant_derivative(const TensorJet& t) const {
  int in_order = t.comp.empty() ? 0 : t.comp[0].order();
  if (in_order < 1) throw InsufficientOrder("jet order exhausted computing a covariant derivative");
  int out_order = in_order - 1;
  TensorJet out(n_, t.rank + 1, n_, out_order);
  std::vector<int> idx(std::size_t(t.rank), 0);
  if (t.rank == 0) {
    for (int c = 0; c < n_; ++c) out.comp[std::size_t(c)] = t.comp[0].partial(c);
    return out;
  }
  do {
    const JetPolynomial& base = t.comp[flat(idx, n_)];
    for (int c = 0; c < n_; ++c) {
      JetPolynomial s = base.partial(c);
      for (std::size_t jpos = 0; jpos < idx.size(); ++jpos) {
        std::vector<int> mod = idx;
        for (int q = 0; q < n_; ++q) {
          mod[jpos] = q;
          const JetPolynomial& gamma = christoffel_.comp[flat({q, c, idx[jpos]}, n_)];
          if (gamma.is_zero()) continue;
          s -= gamma.truncated(out_order) * t.comp[flat(mod, n_)].truncated(out_order);
        }
        mod[jpos] = idx[jpos];
      }
      std::vector<int> oidx;
      oidx.push_back(c);
      oidx.insert(oidx.end(), idx.begin(), idx.end());
      out.comp[flat(oidx, n_)] = s;
    }
  } while (next_index(idx, n_));
  return out;
}

TensorJet GeometryStack::scalar_derivatives(const JetPolynomial& f, int m) const {
  TensorJet t(n_, 0, n_, f.order());
  t.comp[0] = f;
  for (int i = 0; i < m; ++i) t = covariant_derivative(t);
  return t;
}

const TensorJet& GeometryStack::derivatives(FactorKind base, int m) const {
  auto key = std::make_pair(int(base), m);
  auto it = deriv_cache_.find(key);
  if (it != deriv_cache_.end()) return it->second;
  TensorJet t;
  if (m == 0) {
    switch (base) {
      case FactorKind::Riemann: t = riemann_; break;
      case FactorKind::Weyl: t = weyl_; break;
      case FactorKind::Ricci: t = ricci_; break;
      case FactorKind::SymSchouten:
      case FactorKind::SchoutenPlain: t = schouten_; break;
      case FactorKind::Scalar: {
        t = TensorJet(n_, 0, n_, scalar_.order());
        t.comp[0] = scalar_;
        break;
      }
      default: throw std::invalid_argument("unsupported base tensor");
    }
  } else {
    t = covariant_derivative(derivatives(base, m - 1));
  }
  return deriv_cache_.emplace(key, std::move(t)).first->second;
}

GeometryStack::IdentityResiduals GeometryStack::check_identities() const {
  IdentityResiduals r;
  double mag = 0;
  for (auto& c : riemann_.comp) mag = std::max(mag, std::abs(c.value()));
  mag = std::max(mag, 1e-300);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) {
          double bi = riemann_.comp[flat({i, j, k, l}, n_)].value() +
                      riemann_.comp[flat({i, k, l, j}, n_)].value() +
                      riemann_.comp[flat({i, l, j, k}, n_)].value();
          r.first_bianchi = std::max(r.first_bianchi, std::abs(bi) / mag);
        }
  if (order_ >= 3) {
    TensorJet dr = covariant_derivative(riemann_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < n_; ++l)
            for (int m = 0; m < n_; ++m) {
              double b2 = dr.comp[flat({m, i, j, k, l}, n_)].value() +
                          dr.comp[flat({k, i, j, l, m}, n_)].value() +
                          dr.comp[flat({l, i, j, m, k}, n_)].value();
              r.second_bianchi = std::max(r.second_bianchi, std::abs(b2) / mag);
            }
  }
  std::vector<double> gv(std::size_t(n_ * n_));
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) gv[std::size_t(i * n_ + j)] = ginv_.comp[std::size_t(i * n_ + j)].value();
  for (int j = 0; j < n_; ++j)
    for (int l = 0; l < n_; ++l) {
      double tr = 0;
      for (int i = 0; i < n_; ++i)
        for (int k = 0; k < n_; ++k) tr += gv[std::size_t(i * n_ + k)] * weyl_.comp[flat({i, j, k, l}, n_)].value();
      r.weyl_trace = std::max(r.weyl_trace, std::abs(tr) / mag);
    }
  return r;
}

GeometryStack curvature_stack(const MetricJet& g) { return GeometryStack(g); }

// ------------------------------------------------------------------ einsum

namespace {

struct DArr {
  std::vector<int> ids;  // >=0 dummy, <0 output axis (-(k+1))
  std::vector<double> v;
};

DArr self_trace(DArr a, int n) {
  while (true) {
    int p1 = -1, p2 = -1;
    for (std::size_t i = 0; i < a.ids.size() && p1 < 0; ++i)
      for (std::size_t j = i + 1; j < a.ids.size(); ++j)
        if (a.ids[i] >= 0 && a.ids[i] == a.ids[j]) {
          p1 = int(i);
          p2 = int(j);
          break;
        }
    if (p1 < 0) return a;
    DArr out;
    for (std::size_t i = 0; i < a.ids.size(); ++i)
      if (int(i) != p1 && int(i) != p2) out.ids.push_back(a.ids[i]);
    out.v.assign(ipow(n, int(out.ids.size())), 0.0);
    std::vector<int> idx(out.ids.size(), 0);
    std::vector<int> full(a.ids.size(), 0);
    std::size_t pos = 0;
    do {
      double s = 0;
      for (int d = 0; d < n; ++d) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < a.ids.size(); ++i) {
          if (int(i) == p1 || int(i) == p2)
            full[i] = d;
          else
            full[i] = idx[k++];
        }
        s += a.v[flat(full, n)];
      }
      out.v[pos++] = s;
    } while (next_index(idx, n));
    if (out.ids.empty() && out.v.empty()) out.v.push_back(0.0);
    return out;
  }
}

DArr contract_pair(const DArr& A, const DArr& B, int n) {
  std::vector<int> shared;
  for (int id : A.ids)
    if (id >= 0 && std::find(B.ids.begin(), B.ids.end(), id) != B.ids.end()) shared.push_back(id);
  std::vector<std::size_t> a_keep, b_keep, a_shared, b_shared;
  DArr out;
  for (std::size_t i = 0; i < A.ids.size(); ++i) {
    if (std::find(shared.begin(), shared.end(), A.ids[i]) != shared.end())
      ;
    else {
      a_keep.push_back(i);
      out.ids.push_back(A.ids[i]);
    }
  }
  for (std::size_t i = 0; i < B.ids.size(); ++i) {
    if (std::find(shared.begin(), shared.end(), B.ids[i]) != shared.end())
      ;
    else {
      b_keep.push_back(i);
      out.ids.push_back(B.ids[i]);
    }
  }
  for (int id : shared) {
    for (std::size_t i = 0; i < A.ids.size(); ++i)
      if (A.ids[i] == id) a_shared.push_back(i);
    for (std::size_t i = 0; i < B.ids.size(); ++i)
      if (B.ids[i] == id) b_shared.push_back(i);
  }
  std::size_t na = ipow(n, int(a_keep.size())), nb = ipow(n, int(b_keep.size())),
              ns = ipow(n, int(shared.size()));
  out.v.assign(na * nb, 0.0);
  std::vector<int> ai(A.ids.size()), bi(B.ids.size());
  for (std::size_t ka = 0; ka < na; ++ka) {
    // decode ka into the kept A positions
    std::size_t t = ka;
    for (std::size_t i = a_keep.size(); i-- > 0;) {
      ai[a_keep[i]] = int(t % std::size_t(n));
      t /= std::size_t(n);
    }
    for (std::size_t kb = 0; kb < nb; ++kb) {
      t = kb;
      for (std::size_t i = b_keep.size(); i-- > 0;) {
        bi[b_keep[i]] = int(t % std::size_t(n));
        t /= std::size_t(n);
      }
      double s = 0;
      for (std::size_t ks = 0; ks < ns; ++ks) {
        t = ks;
        for (std::size_t i = shared.size(); i-- > 0;) {
          int d = int(t % std::size_t(n));
          t /= std::size_t(n);
          ai[a_shared[i]] = d;
          bi[b_shared[i]] = d;
        }
        s += A.v[flat(ai, n)] * B.v[flat(bi, n)];
      }
      out.v[ka * nb + kb] = s;
    }
  }
  if (out.ids.empty() && out.v.empty()) out.v.push_back(0.0);
  return out;
}

void raise_slot(DArr& a, std::size_t pos, const std::vector<double>& ginv0, int n) {
  std::vector<double> out(a.v.size(), 0.0);
  std::size_t stride = ipow(n, int(a.ids.size() - 1 - pos));
  std::size_t block = stride * std::size_t(n);
  for (std::size_t base = 0; base < a.v.size(); base += block)
    for (std::size_t rem = 0; rem < stride; ++rem)
      for (int b = 0; b < n; ++b) {
        double s = 0;
        for (int c = 0; c < n; ++c)
          s += ginv0[std::size_t(b * n + c)] * a.v[base + std::size_t(c) * stride + rem];
        out[base + std::size_t(b) * stride + rem] = s;
      }
  a.v = std::move(out);
}

// values at the base point of a jet tensor
std::vector<double> values_of(const TensorJet& t) {
  std::vector<double> v(t.comp.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = t.comp[i].value();
  return v;
}

void symmetrize_all(std::vector<double>& v, int rank, int n) {
  if (rank < 2) return;
  std::vector<int> perm(static_cast<std::size_t>(rank));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> out(v.size(), 0.0);
  std::size_t count = 0;
  std::vector<int> idx(std::size_t(rank), 0), pidx(std::size_t(rank), 0);
  do {
    ++count;
    idx.assign(std::size_t(rank), 0);
    do {
      for (int i = 0; i < rank; ++i) pidx[std::size_t(i)] = idx[std::size_t(perm[std::size_t(i)])];
      out[flat(idx, n)] += v[flat(pidx, n)];
    } while (next_index(idx, n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = out[i] / double(count);
}

struct FactorArrays {
  // genuine world
  const GeometryStack* stack = nullptr;
  const JetPolynomial* f = nullptr;
  const std::map<AuxName, JetPolynomial>* aux = nullptr;
  // linearized world
  const LinearizedEnv* lin = nullptr;

  int n() const { return stack ? stack->n() : lin->n(); }

  std::vector<double> values(const Factor& fac) const {
    if (lin) {
      switch (fac.kind) {
        case FactorKind::LinRiemann: return lin->lin_riemann(fac.deriv);
        case FactorKind::SymTensor: return lin->sym_tensor(fac.deriv);
        case FactorKind::AuxVector: return lin->aux_vector();
        default: throw BadTerm("factor kind not valid in the linearized world");
      }
    }
    switch (fac.kind) {
      case FactorKind::Riemann:
      case FactorKind::Weyl:
      case FactorKind::Ricci:
      case FactorKind::Scalar:
        return values_of(stack->derivatives(fac.kind, fac.deriv));
      case FactorKind::SymSchouten: {
        std::vector<double> v = values_of(stack->derivatives(FactorKind::SymSchouten, fac.deriv));
        symmetrize_all(v, fac.deriv + 2, stack->n());
        return v;
      }
      case FactorKind::SchoutenPlain:
        return values_of(stack->derivatives(FactorKind::SchoutenPlain, fac.deriv));
      case FactorKind::Density: {
        if (!f) throw BadTerm("no density jet supplied");
        return values_of(stack->scalar_derivatives(*f, fac.deriv));
      }
      case FactorKind::AuxScalar: {
        if (!aux || !aux->count(fac.aux)) throw BadTerm("no jet supplied for auxiliary scalar");
        return values_of(stack->scalar_derivatives(aux->at(fac.aux), fac.deriv));
      }
      case FactorKind::Metric: {
        std::vector<double> v(std::size_t(stack->n() * stack->n()));
        for (int i = 0; i < stack->n(); ++i)
          for (int j = 0; j < stack->n(); ++j)
            v[std::size_t(i * stack->n() + j)] = stack->metric().at(i, j).value();
        return v;
      }
      default:
        throw BadTerm("factor kind not valid for intrinsic evaluation");
    }
  }
};

TensorEvalResult eval_generic(const LinearCombination& L, const FactorArrays& env, const Fraction& nv,
                              const Fraction& wv, bool use_metric_contraction) {
  TensorEvalResult out;
  int n = env.n();
  std::vector<double> ginv0;
  if (use_metric_contraction) {
    ginv0.resize(std::size_t(n * n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ginv0[std::size_t(i * n + j)] = env.stack->ginv().comp[std::size_t(i * n + j)].value();
  }
  bool labels_set = false;
  for (auto& t : L.terms()) {
    // output axes in label-sorted order
    std::vector<std::string> labels;
    for (std::size_t fi = 0; fi < t.conn.size(); ++fi)
      for (auto& p : t.conn[fi])
        if (p.is_free()) labels.push_back(t.labels[std::size_t(p.label)]);
    std::sort(labels.begin(), labels.end());
    if (!labels_set) {
      out.labels = labels;
      out.value.assign(ipow(n, int(labels.size())), 0.0);
      labels_set = true;
    } else if (labels != out.labels) {
      throw BadTerm("terms carry different free-slot labels");
    }

    double coeff = (t.coeff.evaluate(nv, wv)).to_double();

    // assign an id to every edge and an output axis to every free slot
    std::vector<DArr> arrs;
    int next_edge = 0;
    std::map<std::pair<int, int>, int> edge_of;
    for (std::size_t fi = 0; fi < t.factors.size(); ++fi) {
      DArr a;
      a.v = env.values(t.factors[fi]);
      for (std::size_t s = 0; s < t.conn[fi].size(); ++s) {
        const Port& p = t.conn[fi][s];
        if (p.is_fixed()) throw BadTerm("fixed ambient directions are not valid in intrinsic evaluation");
        if (p.is_free()) {
          auto it = std::find(labels.begin(), labels.end(), t.labels[std::size_t(p.label)]);
          a.ids.push_back(-int(it - labels.begin()) - 1);
        } else {
          auto key = std::minmax(std::make_pair(int(fi), int(s)), std::make_pair(int(p.factor), int(p.slot)));
          auto ekey = std::make_pair(key.first.first * 10000 + key.first.second,
                                     key.second.first * 10000 + key.second.second);
          auto it = edge_of.find(ekey);
          int id;
          bool second_endpoint;
          if (it == edge_of.end()) {
            id = next_edge++;
            edge_of[ekey] = id;
            second_endpoint = false;
          } else {
            id = it->second;
            second_endpoint = true;
          }
          a.ids.push_back(id);
          if (second_endpoint && use_metric_contraction) raise_slot(a, a.ids.size() - 1, ginv0, n);
        }
      }
      arrs.push_back(std::move(a));
    }
    // trace self-edges, then fold the factors together
    for (auto& a : arrs) a = self_trace(std::move(a), n);
    while (arrs.size() > 1) {
      // prefer a pair with shared ids
      std::size_t bi = 0, bj = 1;
      int best = -1;
      for (std::size_t i = 0; i < arrs.size(); ++i)
        for (std::size_t j = i + 1; j < arrs.size(); ++j) {
          int s = 0;
          for (int id : arrs[i].ids)
            if (id >= 0 && std::find(arrs[j].ids.begin(), arrs[j].ids.end(), id) != arrs[j].ids.end()) ++s;
          if (s > best) {
            best = s;
            bi = i;
            bj = j;
          }
        }
      DArr merged = contract_pair(arrs[bi], arrs[bj], n);
      merged = self_trace(std::move(merged), n);
      arrs.erase(arrs.begin() + std::ptrdiff_t(bj));
      arrs[bi] = std::move(merged);
    }
    DArr& r = arrs[0];
    // permute axes into label-sorted output order
    std::vector<std::size_t> axis_of(labels.size());
    for (std::size_t k = 0; k < labels.size(); ++k) {
      int want = -int(k) - 1;
      auto it = std::find(r.ids.begin(), r.ids.end(), want);
      if (it == r.ids.end()) throw BadTerm("internal: lost output axis");
      axis_of[k] = std::size_t(it - r.ids.begin());
    }
    double term_mag = 0;
    std::vector<int> oidx(labels.size(), 0), ridx(labels.size(), 0);
    if (labels.empty()) {
      out.value[0] += coeff * r.v[0];
      term_mag = std::abs(coeff * r.v[0]);
    } else {
      do {
        for (std::size_t k = 0; k < labels.size(); ++k) ridx[axis_of[k]] = oidx[k];
        double val = coeff * r.v[flat(ridx, n)];
        out.value[flat(oidx, n)] += val;
        term_mag = std::max(term_mag, std::abs(val));
      } while (next_index(oidx, n));
    }
    out.scale += term_mag;
  }
  if (!labels_set) {
    out.value.assign(1, 0.0);
  }
  return out;
}

}  // namespace

TensorEvalResult evaluate_tensor(const LinearCombination& L, const EvalInput& in) {
  FactorArrays env;
  env.stack = in.stack;
  env.f = in.f;
  env.aux = &in.aux;
  return eval_generic(L, env, in.n_value, in.w_value, true);
}

EvalResult evaluate(const LinearCombination& L, const EvalInput& in) {
  TensorEvalResult r = evaluate_tensor(L, in);
  if (!r.labels.empty()) throw BadTerm("evaluate requires a complete contraction (free slots present)");
  return {r.value[0], r.scale};
}

// ------------------------------------------------------- linearized values

LinearizedEnv::LinearizedEnv(std::uint64_t seed, int n, int max_curv_derivs, int /*max_sym_rank*/)
    : n_(n), seed_(seed) {
  CounterRng rng(splitmix64(seed ^ 0x5afe5afeULL));
  int h_order = max_curv_derivs + 2;
  // random symmetric 2-tensor field h, then linearized curvature
  std::vector<JetPolynomial> h(std::size_t(n * n), JetPolynomial(n, h_order));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      JetPolynomial jet(n, h_order);
      for (auto& c : jet.raw()) c = rng.uniform();
      h[std::size_t(i * n + j)] = jet;
      h[std::size_t(j * n + i)] = jet;
    }
  auto d2 = [&](int a, int b, int i, int j) {
    return h[std::size_t(i * n + j)].partial(a).partial(b);
  };
  std::vector<JetPolynomial> rlin(ipow(n, 4));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          rlin[flat({i, j, k, l}, n)] =
              (d2(j, k, i, l) + d2(i, l, j, k) - d2(i, k, j, l) - d2(j, l, i, k)).scaled(0.5);
  lin_r_.resize(std::size_t(max_curv_derivs) + 1);
  for (int m = 0; m <= max_curv_derivs; ++m) {
    // layout [r1..rm i j k l]: derivative index outermost-first; the partial
    // derivative at the base point is coefficient(alpha) * alpha!
    std::vector<double>& out = lin_r_[std::size_t(m)];
    out.resize(ipow(n, m + 4));
    std::vector<int> didx(std::size_t(m), 0);
    std::vector<int> exps(std::size_t(n), 0);
    do {
      exps.assign(std::size_t(n), 0);
      double fact = 1.0;
      for (int d = 0; d < m; ++d) {
        int v = didx[std::size_t(d)];
        ++exps[std::size_t(v)];
        fact *= double(exps[std::size_t(v)]);
      }
      std::vector<int> full(std::size_t(m + 4), 0);
      for (int d = 0; d < m; ++d) full[std::size_t(d)] = didx[std::size_t(d)];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              full[std::size_t(m)] = i;
              full[std::size_t(m + 1)] = j;
              full[std::size_t(m + 2)] = k;
              full[std::size_t(m + 3)] = l;
              out[flat(full, n)] = rlin[flat({i, j, k, l}, n)].coefficient(exps) * fact;
            }
    } while (m > 0 && next_index(didx, n));
  }
  aux_vector_.resize(std::size_t(n));
  for (auto& c : aux_vector_) c = rng.uniform();
}

const std::vector<double>& LinearizedEnv::lin_riemann(int m) const {
  if (m >= int(lin_r_.size())) throw InsufficientOrder("linearized environment built with fewer derivatives");
  return lin_r_[std::size_t(m)];
}

const std::vector<double>& LinearizedEnv::sym_tensor(int p) const {
  auto it = sym_.find(p);
  if (it != sym_.end()) return it->second;
  CounterRng rng(splitmix64(seed_ + std::uint64_t(p) * 7919));
  std::vector<double> v(ipow(n_, p));
  for (auto& c : v) c = rng.uniform();
  symmetrize_all(v, p, n_);
  return sym_.emplace(p, std::move(v)).first->second;
}

double LinearizedEnv::identity_residual() const {
  const std::vector<double>& r1 = lin_r_[1];
  double res = 0, mag = 1e-300;
  for (double c : r1) mag = std::max(mag, std::abs(c));
  std::vector<int> idx(5, 0);
  do {
    int h = idx[0], i = idx[1], j = idx[2], k = idx[3], l = idx[4];
    double anti = r1[flat({h, i, j, k, l}, n_)] + r1[flat({h, j, i, k, l}, n_)];
    double bianchi = r1[flat({h, i, j, k, l}, n_)] + r1[flat({h, i, k, l, j}, n_)] + r1[flat({h, i, l, j, k}, n_)];
    double dbianchi = r1[flat({h, i, j, k, l}, n_)] + r1[flat({i, j, h, k, l}, n_)] + r1[flat({j, h, i, k, l}, n_)];
    res = std::max({res, std::abs(anti) / mag, std::abs(bianchi) / mag, std::abs(dbianchi) / mag});
  } while (next_index(idx, n_));
  return res;
}

EvalResult evaluate_linearized(const LinearCombination& L, const LinearizedEnv& env) {
  TensorEvalResult r = evaluate_linearized_tensor(L, env);
  if (!r.labels.empty()) throw BadTerm("evaluate requires a complete contraction (free slots present)");
  return {r.value[0], r.scale};
}

TensorEvalResult evaluate_linearized_tensor(const LinearCombination& L, const LinearizedEnv& env) {
  FactorArrays fa;
  fa.lin = &env;
  return eval_generic(L, fa, Fraction(std::int64_t(env.n())), Fraction(0), false);
}

double rescale_test(const LinearCombination& L, const Coefficient& bidegree_a,
                    const Coefficient& bidegree_b, const GeometryStack& stack,
                    const JetPolynomial& f, const JetPolynomial& phi, const Fraction& n_value,
                    const Fraction& w_value) {
  double a = bidegree_a.evaluate(n_value, w_value).to_double();
  double b = bidegree_b.evaluate(n_value, w_value).to_double();
  // hat g = e^{2 phi} g, hat f = e^{a phi} f
  MetricJet hat = stack.metric();
  JetPolynomial conf = phi.scaled(2.0).exp();
  for (auto& comp : hat.g) comp = comp * conf;
  GeometryStack hat_stack(hat);
  JetPolynomial hat_f = phi.scaled(a).exp() * f;

  EvalInput in1;
  in1.stack = &hat_stack;
  in1.f = &hat_f;
  in1.n_value = n_value;
  in1.w_value = w_value;
  EvalResult lhs = evaluate(L, in1);

  EvalInput in2;
  in2.stack = &stack;
  in2.f = &f;
  in2.n_value = n_value;
  in2.w_value = w_value;
  EvalResult rhs = evaluate(L, in2);

  double omega_b = std::exp(b * phi.value());
  double scale = std::max({lhs.scale, std::abs(omega_b) * rhs.scale, 1e-300});
  return std::abs(lhs.value - omega_b * rhs.value) / scale;
}

}  // namespace confop
