#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace g2lab {

constexpr int kDim = 7;

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
// so(m) values; m <= 8 keeps everything on the stack.
using LieMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

// Rejected input: malformed degrees, singular maps, non-SPD metrics.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr int binomial7(int k) {
  constexpr int table[8] = {1, 7, 21, 35, 35, 21, 7, 1};
  return (k < 0 || k > 7) ? 0 : table[k];
}

/// Strictly increasing set of axes drawn from {0..6}, stored as a bit mask.
/// Axes are 0-based internally; text formats use 1-based labels.
class MultiIndex {
 public:
  constexpr MultiIndex() = default;
  static MultiIndex from_mask(unsigned mask);
  /// 1-based, strictly increasing axes, e.g. {1, 2, 3} for dy^{123}.
  static MultiIndex from_axes(std::initializer_list<int> axes);
  static MultiIndex from_axes(std::span<const int> axes);

  unsigned mask() const { return mask_; }
  int degree() const;
  bool contains(int axis) const { return (mask_ >> axis) & 1u; }
  std::vector<int> axes() const;
  /// Rank among degree-k indices in lexicographic order.
  int position() const;
  MultiIndex complement() const { return MultiIndex(mask_ ^ 0x7Fu); }

  friend bool operator==(MultiIndex a, MultiIndex b) { return a.mask_ == b.mask_; }

 private:
  explicit constexpr MultiIndex(unsigned mask) : mask_(mask) {}
  unsigned mask_ = 0;
};

/// Lexicographically ordered basis multi-indices of degree k.
const std::vector<MultiIndex>& basis_indices(int k);

/// Sign of the permutation that sorts the concatenation (I, J); 0 if they overlap.
int shuffle_sign(MultiIndex a, MultiIndex b);

class KForm {
 public:
  explicit KForm(int degree = 0);
  KForm(int degree, std::span<const double> coeffs);

  static KForm dy(std::initializer_list<int> axes, double value = 1.0);
  static KForm scalar(double value);

  int degree() const { return degree_; }
  std::size_t size() const { return static_cast<std::size_t>(binomial7(degree_)); }
  double operator[](std::size_t i) const { return coeffs_[i]; }
  double& operator[](std::size_t i) { return coeffs_[i]; }
  double coeff(MultiIndex idx) const;
  void set(MultiIndex idx, double value);
  std::span<const double> coeffs() const { return {coeffs_.data(), size()}; }
  std::span<double> coeffs() { return {coeffs_.data(), size()}; }
  Eigen::VectorXd to_vector() const;
  static KForm from_vector(int degree, const Eigen::VectorXd& v);

  /// Euclidean norm of the coefficient vector (|a|_{g=I}).
  double norm() const;
  bool is_finite() const;
  int nonzero_count(double tol = 0.0) const;

  KForm& operator+=(const KForm& o);
  KForm& operator-=(const KForm& o);
  KForm& operator*=(double s);
  friend KForm operator+(KForm a, const KForm& b) { return a += b; }
  friend KForm operator-(KForm a, const KForm& b) { return a -= b; }
  friend KForm operator*(KForm a, double s) { return a *= s; }
  friend KForm operator*(double s, KForm a) { return a *= s; }
  KForm operator-() const { return *this * -1.0; }

 private:
  int degree_;
  std::array<double, 35> coeffs_{};
};

/// Symmetric positive definite 7x7 metric with cached inverse and determinant.
class MetricTensor {
 public:
  MetricTensor();  // Euclidean
  explicit MetricTensor(const Mat7& entries);

  static MetricTensor identity() { return MetricTensor(); }
  const Mat7& entries() const { return g_; }
  const Mat7& inverse() const { return inv_; }
  double determinant() const { return det_; }
  bool is_euclidean() const { return euclidean_; }
  double min_eigenvalue() const;

 private:
  Mat7 g_;
  Mat7 inv_;
  double det_ = 1.0;
  bool euclidean_ = true;
};

/// k-th compound matrix: entry (I, J) = det(M[I, J]) over degree-k indices.
Eigen::MatrixXd compound_matrix(const Mat7& m, int k);

KForm wedge(const KForm& a, const KForm& b);

/// Matrix of the Hodge star Lambda^k -> Lambda^{7-k} for metric g with
/// orientation dy^{1..7}.
Eigen::MatrixXd hodge_matrix(const MetricTensor& g, int k);
KForm hodge(const MetricTensor& g, const KForm& a);

KForm interior(const Vec7& v, const KForm& a);

/// (M^* a)(v_1..v_k) = a(M v_1, .., M v_k).  Satisfies
/// pullback(M1 M2, a) = pullback(M2, pullback(M1, a)).
KForm pullback(const Mat7& m, const KForm& a);

/// Pullback of a metric, M^T g M.
MetricTensor pullback(const Mat7& m, const MetricTensor& g);

/// so(m)-valued k-form; one matrix per basis multi-index.
class LieValuedKForm {
 public:
  LieValuedKForm(int degree, int rank);

  int degree() const { return degree_; }
  int rank() const { return rank_; }
  std::size_t size() const { return coeffs_.size(); }
  const LieMat& operator[](std::size_t i) const { return coeffs_[i]; }
  LieMat& operator[](std::size_t i) { return coeffs_[i]; }
  const LieMat& coeff(MultiIndex idx) const { return coeffs_[idx.position()]; }
  LieMat& coeff(MultiIndex idx) { return coeffs_[idx.position()]; }

  /// sqrt(sum_I |M_I|_F^2).
  double norm() const;
  /// Largest |M + M^T| entry relative to max(1, norm()).
  double antisymmetry_defect() const;

  LieValuedKForm& operator+=(const LieValuedKForm& o);
  LieValuedKForm& operator-=(const LieValuedKForm& o);
  LieValuedKForm& operator*=(double s);
  friend LieValuedKForm operator+(LieValuedKForm a, const LieValuedKForm& b) { return a += b; }
  friend LieValuedKForm operator-(LieValuedKForm a, const LieValuedKForm& b) { return a -= b; }
  friend LieValuedKForm operator*(double s, LieValuedKForm a) { return a *= s; }

 private:
  int degree_;
  int rank_;
  std::vector<LieMat> coeffs_;
};

LieValuedKForm wedge(const LieValuedKForm& a, const KForm& b);
LieValuedKForm hodge(const MetricTensor& g, const LieValuedKForm& a);
LieValuedKForm pullback(const Mat7& m, const LieValuedKForm& a);

/// Text format:
///   degree <k>
///   <i_1> .. <i_k> <value>     (1-based axes, one line per nonzero coefficient)
void write_form(std::ostream& out, const KForm& a);
KForm read_form(std::istream& in);
KForm read_form_file(const std::string& path);
void write_form_file(const std::string& path, const KForm& a);

}  // namespace g2lab
