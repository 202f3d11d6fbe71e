#include "g2lab/forms7.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace g2lab {

namespace {

struct IndexTables {
  std::array<std::vector<MultiIndex>, 8> by_degree;
  std::array<int, 128> position{};

  IndexTables() {
    // Lexicographic order of sorted tuples: enumerate combinations recursively.
    for (int k = 0; k <= 7; ++k) {
      std::vector<int> combo(k);
      auto rec = [&](auto&& self, int start, int depth) -> void {
        if (depth == k) {
          unsigned mask = 0;
          for (int a : combo) mask |= 1u << a;
          position[mask] = static_cast<int>(by_degree[k].size());
          by_degree[k].push_back(MultiIndex::from_mask(mask));
          return;
        }
        for (int a = start; a < 7; ++a) {
          combo[depth] = a;
          self(self, a + 1, depth + 1);
        }
      };
      rec(rec, 0, 0);
    }
  }
};

const IndexTables& tables() {
  static const IndexTables t;
  return t;
}

void require_degree(int k) {
  if (k < 0 || k > 7) throw InvalidInput("form degree must lie in 0..7, got " + std::to_string(k));
}

}  // namespace

MultiIndex MultiIndex::from_mask(unsigned mask) {
  if (mask > 0x7Fu) throw InvalidInput("multi-index mask out of range");
  return MultiIndex(mask);
}

MultiIndex MultiIndex::from_axes(std::initializer_list<int> axes) {
  return from_axes(std::span<const int>(axes.begin(), axes.size()));
}

MultiIndex MultiIndex::from_axes(std::span<const int> axes) {
  unsigned mask = 0;
  int prev = 0;
  for (int a : axes) {
    if (a < 1 || a > 7) throw InvalidInput("axis label out of range 1..7: " + std::to_string(a));
    if (a <= prev) throw InvalidInput("multi-index axes must be strictly increasing");
    prev = a;
    mask |= 1u << (a - 1);
  }
  return MultiIndex(mask);
}

int MultiIndex::degree() const { return std::popcount(mask_); }

std::vector<int> MultiIndex::axes() const {
  std::vector<int> out;
  for (int a = 0; a < 7; ++a)
    if (contains(a)) out.push_back(a);
  return out;
}

int MultiIndex::position() const { return tables().position[mask_]; }

const std::vector<MultiIndex>& basis_indices(int k) {
  require_degree(k);
  return tables().by_degree[k];
}

int shuffle_sign(MultiIndex a, MultiIndex b) {
  if (a.mask() & b.mask()) return 0;
  // Count inversions: pairs (i in a, j in b) with i > j.
  int inversions = 0;
  for (int i = 0; i < 7; ++i) {
    if (!a.contains(i)) continue;
    inversions += std::popcount(b.mask() & ((1u << i) - 1u));
  }
  return (inversions & 1) ? -1 : 1;
}

// ---------------------------------------------------------------------------
// KForm

KForm::KForm(int degree) : degree_(degree) { require_degree(degree); }

KForm::KForm(int degree, std::span<const double> coeffs) : degree_(degree) {
  require_degree(degree);
  if (coeffs.size() != size())
    throw InvalidInput("coefficient vector length does not match C(7, degree)");
  std::copy(coeffs.begin(), coeffs.end(), coeffs_.begin());
}

KForm KForm::dy(std::initializer_list<int> axes, double value) {
  KForm f(static_cast<int>(axes.size()));
  f.set(MultiIndex::from_axes(axes), value);
  return f;
}

KForm KForm::scalar(double value) {
  KForm f(0);
  f[0] = value;
  return f;
}

double KForm::coeff(MultiIndex idx) const {
  if (idx.degree() != degree_) throw InvalidInput("multi-index degree mismatch");
  return coeffs_[idx.position()];
}

void KForm::set(MultiIndex idx, double value) {
  if (idx.degree() != degree_) throw InvalidInput("multi-index degree mismatch");
  coeffs_[idx.position()] = value;
}

Eigen::VectorXd KForm::to_vector() const {
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = coeffs_[i];
  return v;
}

KForm KForm::from_vector(int degree, const Eigen::VectorXd& v) {
  return KForm(degree, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

double KForm::norm() const {
  double s = 0;
  for (std::size_t i = 0; i < size(); ++i) s += coeffs_[i] * coeffs_[i];
  return std::sqrt(s);
}

bool KForm::is_finite() const {
  for (std::size_t i = 0; i < size(); ++i)
    if (!std::isfinite(coeffs_[i])) return false;
  return true;
}

int KForm::nonzero_count(double tol) const {
  int n = 0;
  for (std::size_t i = 0; i < size(); ++i)
    if (std::abs(coeffs_[i]) > tol) ++n;
  return n;
}

KForm& KForm::operator+=(const KForm& o) {
  if (o.degree_ != degree_) throw InvalidInput("cannot add forms of different degree");
  for (std::size_t i = 0; i < size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

KForm& KForm::operator-=(const KForm& o) {
  if (o.degree_ != degree_) throw InvalidInput("cannot subtract forms of different degree");
  for (std::size_t i = 0; i < size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

KForm& KForm::operator*=(double s) {
  for (std::size_t i = 0; i < size(); ++i) coeffs_[i] *= s;
  return *this;
}

// ---------------------------------------------------------------------------
// MetricTensor

MetricTensor::MetricTensor() : g_(Mat7::Identity()), inv_(Mat7::Identity()) {}

MetricTensor::MetricTensor(const Mat7& entries) : g_(entries) {
  if (!g_.allFinite()) throw InvalidInput("metric has non-finite entries");
  const double scale = std::max(1.0, g_.cwiseAbs().maxCoeff());
  if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInput("metric is not symmetric");
  g_ = 0.5 * (g_ + g_.transpose());
  Eigen::LLT<Mat7> llt(g_);
  if (llt.info() != Eigen::Success) throw InvalidInput("metric is not positive definite");
  const auto& l = llt.matrixL();
  double d = 1.0;
  for (int i = 0; i < 7; ++i) d *= l(i, i);
  det_ = d * d;
  if (!(det_ > 0.0)) throw InvalidInput("metric is not positive definite");
  inv_ = llt.solve(Mat7::Identity());
  euclidean_ = g_ == Mat7::Identity();
}

double MetricTensor::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat7> es(g_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Core operations

Eigen::MatrixXd compound_matrix(const Mat7& m, int k) {
  const auto& idx = basis_indices(k);
  const int n = static_cast<int>(idx.size());
  Eigen::MatrixXd c(n, n);
  if (k == 0) {
    c(0, 0) = 1.0;
    return c;
  }
  using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 7, 7>;
  Small sub(k, k);
  for (int r = 0; r < n; ++r) {
    const auto rows = idx[r].axes();
    for (int s = 0; s < n; ++s) {
      const auto cols = idx[s].axes();
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) sub(i, j) = m(rows[i], cols[j]);
      c(r, s) = sub.determinant();
    }
  }
  return c;
}

KForm wedge(const KForm& a, const KForm& b) {
  const int k = a.degree() + b.degree();
  if (k > 7) throw InvalidInput("wedge degree overflow: " + std::to_string(k) + " > 7");
  KForm out(k);
  const auto& ia = basis_indices(a.degree());
  const auto& ib = basis_indices(b.degree());
  for (std::size_t i = 0; i < ia.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < ib.size(); ++j) {
      const int s = shuffle_sign(ia[i], ib[j]);
      if (s == 0 || b[j] == 0.0) continue;
      out[MultiIndex::from_mask(ia[i].mask() | ib[j].mask()).position()] += s * a[i] * b[j];
    }
  }
  return out;
}

Eigen::MatrixXd hodge_matrix(const MetricTensor& g, int k) {
  require_degree(k);
  const auto& src = basis_indices(k);
  const int n = static_cast<int>(src.size());
  Eigen::MatrixXd sign_map = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const MultiIndex c = src[i].complement();
    sign_map(c.position(), i) = shuffle_sign(src[i], c);
  }
  if (g.is_euclidean()) return sign_map;
  return std::sqrt(g.determinant()) * sign_map * compound_matrix(g.inverse(), k);
}

KForm hodge(const MetricTensor& g, const KForm& a) {
  const Eigen::VectorXd out = hodge_matrix(g, a.degree()) * a.to_vector();
  return KForm::from_vector(7 - a.degree(), out);
}

KForm interior(const Vec7& v, const KForm& a) {
  if (a.degree() == 0) throw InvalidInput("interior product of a 0-form");
  KForm out(a.degree() - 1);
  const auto& idx = basis_indices(a.degree());
  for (std::size_t n = 0; n < idx.size(); ++n) {
    if (a[n] == 0.0) continue;
    const unsigned mask = idx[n].mask();
    for (int i = 0; i < 7; ++i) {
      if (!(mask & (1u << i)) || v[i] == 0.0) continue;
      const int before = std::popcount(mask & ((1u << i) - 1u));
      const double s = (before & 1) ? -1.0 : 1.0;
      out[MultiIndex::from_mask(mask & ~(1u << i)).position()] += s * v[i] * a[n];
    }
  }
  return out;
}

namespace {
void require_invertible(const Mat7& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  Eigen::FullPivLU<Mat7> lu(m);
  lu.setThreshold(1e-14);
  if (!m.allFinite() || lu.rank() < 7 || std::abs(m.determinant()) < 1e-300 * scale)
    throw InvalidInput("pullback by a singular matrix");
}
}  // namespace

KForm pullback(const Mat7& m, const KForm& a) {
  require_invertible(m);
  const Eigen::VectorXd out = compound_matrix(m, a.degree()).transpose() * a.to_vector();
  return KForm::from_vector(a.degree(), out);
}

MetricTensor pullback(const Mat7& m, const MetricTensor& g) {
  require_invertible(m);
  return MetricTensor(m.transpose() * g.entries() * m);
}

// ---------------------------------------------------------------------------
// Lie-valued forms

LieValuedKForm::LieValuedKForm(int degree, int rank) : degree_(degree), rank_(rank) {
  require_degree(degree);
  if (rank < 1 || rank > 8) throw InvalidInput("Lie algebra rank must lie in 1..8");
  coeffs_.assign(binomial7(degree), LieMat::Zero(rank, rank));
}

double LieValuedKForm::norm() const {
  double s = 0;
  for (const auto& m : coeffs_) s += m.squaredNorm();
  return std::sqrt(s);
}

double LieValuedKForm::antisymmetry_defect() const {
  double worst = 0;
  for (const auto& m : coeffs_) worst = std::max(worst, (m + m.transpose()).cwiseAbs().maxCoeff());
  return worst / std::max(1.0, norm());
}

LieValuedKForm& LieValuedKForm::operator+=(const LieValuedKForm& o) {
  if (o.degree_ != degree_ || o.rank_ != rank_) throw InvalidInput("Lie-valued form shape mismatch");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

LieValuedKForm& LieValuedKForm::operator-=(const LieValuedKForm& o) {
  if (o.degree_ != degree_ || o.rank_ != rank_) throw InvalidInput("Lie-valued form shape mismatch");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

LieValuedKForm& LieValuedKForm::operator*=(double s) {
  for (auto& m : coeffs_) m *= s;
  return *this;
}

LieValuedKForm wedge(const LieValuedKForm& a, const KForm& b) {
  const int k = a.degree() + b.degree();
  if (k > 7) throw InvalidInput("wedge degree overflow: " + std::to_string(k) + " > 7");
  LieValuedKForm out(k, a.rank());
  const auto& ia = basis_indices(a.degree());
  const auto& ib = basis_indices(b.degree());
  for (std::size_t j = 0; j < ib.size(); ++j) {
    if (b[j] == 0.0) continue;
    for (std::size_t i = 0; i < ia.size(); ++i) {
      const int s = shuffle_sign(ia[i], ib[j]);
      if (s == 0) continue;
      out[MultiIndex::from_mask(ia[i].mask() | ib[j].mask()).position()] += (s * b[j]) * a[i];
    }
  }
  return out;
}

LieValuedKForm hodge(const MetricTensor& g, const LieValuedKForm& a) {
  const Eigen::MatrixXd h = hodge_matrix(g, a.degree());
  LieValuedKForm out(7 - a.degree(), a.rank());
  for (int r = 0; r < h.rows(); ++r)
    for (int c = 0; c < h.cols(); ++c)
      if (h(r, c) != 0.0) out[r] += h(r, c) * a[c];
  return out;
}

LieValuedKForm pullback(const Mat7& m, const LieValuedKForm& a) {
  require_invertible(m);
  const Eigen::MatrixXd c = compound_matrix(m, a.degree());
  LieValuedKForm out(a.degree(), a.rank());
  for (int r = 0; r < c.rows(); ++r)
    for (int s = 0; s < c.cols(); ++s)
      if (c(r, s) != 0.0) out[s] += c(r, s) * a[r];
  return out;
}

// ---------------------------------------------------------------------------
// Text IO

void write_form(std::ostream& out, const KForm& a) {
  out << "degree " << a.degree() << '\n';
  const auto& idx = basis_indices(a.degree());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (int ax : idx[i].axes()) out << ax + 1 << ' ';
    out << a[i] << '\n';
  }
}

KForm read_form(std::istream& in) {
  std::string line;
  int degree = -1;
  KForm form(0);
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (degree < 0) {
      if (first != "degree" || !(ls >> degree) || degree < 0 || degree > 7)
        throw InvalidInput("form file: expected 'degree <k>' header at line " + std::to_string(lineno));
      form = KForm(degree);
      continue;
    }
    std::vector<int> axes;
    std::istringstream all(line);
    for (int i = 0; i < degree; ++i) {
      int a;
      if (!(all >> a)) throw InvalidInput("form file: malformed index at line " + std::to_string(lineno));
      axes.push_back(a);
    }
    double value;
    if (!(all >> value)) throw InvalidInput("form file: missing value at line " + std::to_string(lineno));
    std::string extra;
    if (all >> extra) throw InvalidInput("form file: trailing data at line " + std::to_string(lineno));
    if (!std::isfinite(value)) throw InvalidInput("form file: non-finite value at line " + std::to_string(lineno));
    const MultiIndex idx = MultiIndex::from_axes(std::span<const int>(axes));
    form.set(idx, form.coeff(idx) + value);
  }
  if (degree < 0) throw InvalidInput("form file: missing degree header");
  return form;
}

KForm read_form_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open form file: " + path);
  return read_form(in);
}

void write_form_file(const std::string& path, const KForm& a) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write form file: " + path);
  write_form(out, a);
}

}  // namespace g2lab
