#include "tensor_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oracle {

namespace {

int ipow7(int k) {
  int n = 1;
  for (int i = 0; i < k; ++i) n *= 7;
  return n;
}

std::vector<int> unflatten(int flat, int k) {
  std::vector<int> idx(k);
  for (int j = k - 1; j >= 0; --j) {
    idx[j] = flat % 7;
    flat /= 7;
  }
  return idx;
}

int flatten(const std::vector<int>& idx) {
  int f = 0;
  for (int i : idx) f = 7 * f + i;
  return f;
}

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

Tensor::Tensor(int k) : rank(k), data(ipow7(k), 0.0) {}

double& Tensor::at(const std::vector<int>& idx) { return data[flatten(idx)]; }
double Tensor::at(const std::vector<int>& idx) const { return data[flatten(idx)]; }

int permutation_sign(const std::vector<int>& p) {
  int sign = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      if (p[i] == p[j]) return 0;
      if (p[i] > p[j]) sign = -sign;
    }
  return sign;
}

Tensor from_form(const g2lab::KForm& a) {
  Tensor t(a.degree());
  const auto& basis = g2lab::basis_indices(a.degree());
  for (std::size_t b = 0; b < basis.size(); ++b) {
    std::vector<int> axes = basis[b].axes();
    std::vector<int> perm(axes.size());
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::vector<int> idx(axes.size());
      for (std::size_t j = 0; j < axes.size(); ++j) idx[j] = axes[perm[j]];
      t.at(idx) = permutation_sign(perm) * a[b];
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return t;
}

g2lab::KForm to_form(const Tensor& t) {
  g2lab::KForm a(t.rank);
  const auto& basis = g2lab::basis_indices(t.rank);
  for (std::size_t b = 0; b < basis.size(); ++b) a[b] = t.at(basis[b].axes());
  return a;
}

Tensor wedge(const Tensor& a, const Tensor& b) {
  const int k = a.rank, l = b.rank, n = k + l;
  Tensor out(n);
  if (n > 7) return out;
  const double norm = 1.0 / (factorial(k) * factorial(l));
  for (int flat = 0; flat < static_cast<int>(out.data.size()); ++flat) {
    const std::vector<int> idx = unflatten(flat, n);
    if (permutation_sign(idx) == 0) continue;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double sum = 0;
    do {
      std::vector<int> ia(k), ib(l);
      for (int j = 0; j < k; ++j) ia[j] = idx[perm[j]];
      for (int j = 0; j < l; ++j) ib[j] = idx[perm[k + j]];
      sum += permutation_sign(perm) * a.at(ia) * b.at(ib);
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.data[flat] = norm * sum;
  }
  return out;
}

namespace {

/// Applies m to every slot: out_{i..} = sum_j a_{j..} prod m(j, i).
Tensor transform_slots(const Eigen::Matrix<double, 7, 7>& m, const Tensor& a) {
  Tensor cur = a;
  for (int slot = 0; slot < a.rank; ++slot) {
    Tensor next(a.rank);
    for (int flat = 0; flat < static_cast<int>(next.data.size()); ++flat) {
      std::vector<int> idx = unflatten(flat, a.rank);
      const int target = idx[slot];
      double s = 0;
      for (int j = 0; j < 7; ++j) {
        idx[slot] = j;
        s += cur.at(idx) * m(j, target);
      }
      next.data[flat] = s;
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

Tensor hodge(const Eigen::Matrix<double, 7, 7>& g, const Tensor& a) {
  const int k = a.rank;
  const Eigen::Matrix<double, 7, 7> ginv = g.inverse();
  const Tensor raised = transform_slots(ginv, a);
  Tensor out(7 - k);
  const double scale = std::sqrt(g.determinant()) / factorial(k);
  for (int flat = 0; flat < static_cast<int>(out.data.size()); ++flat) {
    const std::vector<int> jdx = unflatten(flat, 7 - k);
    if (permutation_sign(jdx) == 0) continue;
    double s = 0;
    for (int iflat = 0; iflat < static_cast<int>(raised.data.size()); ++iflat) {
      std::vector<int> full = unflatten(iflat, k);
      full.insert(full.end(), jdx.begin(), jdx.end());
      const int sign = permutation_sign(full);
      if (sign != 0) s += sign * raised.data[iflat];
    }
    out.data[flat] = scale * s;
  }
  return out;
}

Tensor pullback(const Eigen::Matrix<double, 7, 7>& m, const Tensor& a) { return transform_slots(m, a); }

}  // namespace oracle
