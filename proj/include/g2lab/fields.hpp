#pragma once

#include "g2lab/forms7.hpp"
#include "g2lab/g2core.hpp"
#include "g2lab/model_connection.hpp"
#include "g2lab/polynomial.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace g2lab {

/// r in [r_in, r_out].  Smooth (polynomial) fields may use r_in = 0.
struct Annulus {
  double r_in = 0.0;
  double r_out = 1.0;
  bool contains(double r) const { return r >= r_in && r <= r_out; }
};

/// Values and first derivatives of (A, sigma) at a point.
struct FieldJet {
  OneFormCoeffs a;                  // A_i
  std::array<OneFormCoeffs, 7> da;  // da[j][i] = d_j A_i
  LieMat sigma;
  std::array<LieMat, 7> dsigma;  // d_j sigma
};

/// Connection A and Higgs field sigma on an annular domain.  Chart selects the
/// local trivialization for fields on nontrivial bundles and is ignored by
/// fields on the trivial bundle.
class FieldPair {
 public:
  virtual ~FieldPair() = default;
  virtual int rank() const = 0;
  virtual Annulus domain() const = 0;
  virtual OneFormCoeffs connection(const Vec7& x, Chart c) const = 0;
  virtual LieMat higgs(const Vec7& x, Chart c) const = 0;
  /// Default: fourth-order centered differences with step 1e-4 |x|.
  virtual FieldJet jet(const Vec7& x, Chart c) const;
  FieldJet jet(const Vec7& x) const { return jet(x, preferred_chart(x)); }
};

/// Fourth-order centered-difference gradient of a 1-form valued map;
/// result[j][i] = d_j A_i.
std::array<OneFormCoeffs, 7> fd_gradient(const std::function<OneFormCoeffs(const Vec7&)>& f, const Vec7& x,
                                         double h);

class PolynomialFieldPair final : public FieldPair {
 public:
  PolynomialFieldPair(PolyLieForm a, PolyLieForm sigma, Annulus domain = {0.0, 1.0});
  int rank() const override { return a_.rank(); }
  Annulus domain() const override { return domain_; }
  OneFormCoeffs connection(const Vec7& x, Chart c) const override;
  LieMat higgs(const Vec7& x, Chart c) const override;
  using FieldPair::jet;
  FieldJet jet(const Vec7& x, Chart c) const override;
  const PolyLieForm& a() const { return a_; }
  const PolyLieForm& sigma() const { return sigma_; }

 private:
  PolyLieForm a_;
  PolyLieForm sigma_;
  Annulus domain_;
};

/// (A0, 0) for a cone connection.
class ConeFieldPair final : public FieldPair {
 public:
  ConeFieldPair(ConeConnection a0, Annulus domain);
  int rank() const override { return a0_.rank(); }
  Annulus domain() const override { return domain_; }
  OneFormCoeffs connection(const Vec7& x, Chart c) const override { return a0_.coefficients(x, c); }
  LieMat higgs(const Vec7&, Chart) const override { return LieMat::Zero(rank(), rank()); }

 private:
  ConeConnection a0_;
  Annulus domain_;
};

/// Fields given by closures (manufactured profiles, test fixtures).
class FunctionFieldPair final : public FieldPair {
 public:
  using ConnectionFn = std::function<OneFormCoeffs(const Vec7&, Chart)>;
  using HiggsFn = std::function<LieMat(const Vec7&, Chart)>;
  FunctionFieldPair(int rank, Annulus domain, ConnectionFn a, HiggsFn sigma);
  int rank() const override { return rank_; }
  Annulus domain() const override { return domain_; }
  OneFormCoeffs connection(const Vec7& x, Chart c) const override { return a_(x, c); }
  LieMat higgs(const Vec7& x, Chart c) const override { return sigma_(x, c); }

 private:
  int rank_;
  Annulus domain_;
  ConnectionFn a_;
  HiggsFn sigma_;
};

/// Radial reduction: profiles on a strictly increasing radial mesh, one f per
/// connection template plus the Higgs profile u.
struct RadialProfilePair {
  std::vector<double> mesh;
  std::vector<std::vector<double>> f;
  std::vector<double> u;

  static RadialProfilePair zeros(std::vector<double> mesh, int n_templates);
  void validate() const;
  int templates() const { return static_cast<int>(f.size()); }
  /// Piecewise-linear value and slope of a profile at r (clamped to the mesh).
  std::pair<double, double> sample(std::span<const double> values, double r) const;
};

/// Logarithmic mesh of n points on [r_in, r_out].
std::vector<double> log_mesh(double r_in, double r_out, int n);

/// Linear matches the solver's discretization; Spline (natural cubic) gives a
/// C^2 field for higher-order derivative profiling.
enum class ProfileInterpolation { Linear, Spline };

/// A = A0 + sum_k f_k(r) Theta_k, sigma = u(r) Sigma0.
class RadialProfileField final : public FieldPair {
 public:
  RadialProfileField(std::shared_ptr<const RadialAnsatz> ansatz, RadialProfilePair profiles,
                     ProfileInterpolation interp = ProfileInterpolation::Linear);
  int rank() const override { return ansatz_->model.rank(); }
  Annulus domain() const override { return {profiles_.mesh.front(), profiles_.mesh.back()}; }
  OneFormCoeffs connection(const Vec7& x, Chart c) const override;
  LieMat higgs(const Vec7& x, Chart c) const override;
  using FieldPair::jet;
  FieldJet jet(const Vec7& x, Chart c) const override;
  const RadialProfilePair& profiles() const { return profiles_; }

 private:
  /// Value and slope of profile k (k = templates() is the Higgs profile).
  std::pair<double, double> profile(int k, double r) const;

  std::shared_ptr<const RadialAnsatz> ansatz_;
  ConeConnection a0_;
  RadialProfilePair profiles_;
  ProfileInterpolation interp_;
  std::vector<std::vector<double>> curvature_;  // spline second derivatives
};

/// so(m)-valued 0- or 1-form sampled on a uniform grid over [lo, hi]^7.
struct GridLieField {
  int rank = 1;
  int degree = 0;
  int n = 0;  // points per axis
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> data;  // node-major (axis 1 slowest), component, row-major m x m

  static GridLieField sample(int rank, int degree, int n, double lo, double hi,
                             const std::function<std::vector<LieMat>(const Vec7&)>& f);
  double spacing() const { return (hi - lo) / (n - 1); }
  int components() const { return degree == 0 ? 1 : 7; }
  std::size_t node_count() const;
  Vec7 node_point(const std::array<int, 7>& idx) const;
  /// Index of the node at x; throws if x is not a grid node.
  std::array<int, 7> node_of(const Vec7& x) const;
  LieMat value(const std::array<int, 7>& idx, int component) const;
};

/// Binary layout (little-endian):
///   8 bytes  magic "G2LFIELD"
///   uint32   version (1), rank m, degree, points per axis n
///   float64  lo, hi
///   float64  n^7 * C(7,degree) * m * m coefficients, node-major with axis 1
///            slowest, then component, then row-major m x m
void write_grid_field(std::ostream& out, const GridLieField& f);
GridLieField read_grid_field(std::istream& in);
void write_grid_field_file(const std::string& path, const GridLieField& f);
GridLieField read_grid_field_file(const std::string& path);

/// Grid-backed pair; evaluates at grid nodes only, derivatives by second-order
/// centered differences.
class GridFieldPair final : public FieldPair {
 public:
  GridFieldPair(GridLieField a, GridLieField sigma);
  int rank() const override { return a_.rank; }
  Annulus domain() const override;
  OneFormCoeffs connection(const Vec7& x, Chart c) const override;
  LieMat higgs(const Vec7& x, Chart c) const override;
  using FieldPair::jet;
  FieldJet jet(const Vec7& x, Chart c) const override;
  const GridLieField& a() const { return a_; }
  const GridLieField& sigma() const { return sigma_; }

 private:
  GridLieField a_;
  GridLieField sigma_;
};

/// phi as a polynomial 3-form field; G2 data derived pointwise.
class StructureField {
 public:
  explicit StructureField(PolyFormField phi);
  const PolyFormField& phi() const { return phi_; }
  G2Structure at(const Vec7& x) const { return make_structure(phi_(x)); }

 private:
  PolyFormField phi_;
};

/// F_ij = d_i A_j - d_j A_i + [A_i, A_j].
LieValuedKForm curvature(const FieldJet& jet);
/// d_A sigma = d sigma + [A, sigma].
LieValuedKForm covariant_d(const FieldJet& jet);
/// F ^ psi + *_g (d_A sigma).
LieValuedKForm monopole_residual(const FieldJet& jet, const G2Structure& g);
/// Same with precomputed psi and degree-1 Hodge matrix.
LieValuedKForm monopole_residual(const FieldJet& jet, const KForm& psi, const Eigen::MatrixXd& hodge1);

LieValuedKForm curvature(const FieldPair& p, const Vec7& x);
LieValuedKForm covariant_d(const FieldPair& p, const Vec7& x);
LieValuedKForm monopole_residual(const FieldPair& p, const StructureField& g, const Vec7& x);

struct DecayRow {
  double r;
  int l;
  double coord_sup;  // sup over samples of |grad^l (A - A0)|
  double cov_sup;    // sup over samples of |grad_{A0}^l (A - A0)|
};

struct DecayTable {
  std::vector<DecayRow> rows;  // radii strictly decreasing
  int samples_per_sphere = 0;
  double step_fraction = 0.0;  // finite-difference step / r
  /// Smallest C with cov_sup(r, l) <= C * sum_{l' <= l} coord_sup(r, l').
  double cov_constant = 0.0;
};

constexpr double kDecayStepFraction = 1e-2;

/// Sup over `samples` sphere points of coordinate and A0-covariant derivatives
/// of A - A0 up to order max_order, by nested centered differences with step
/// kDecayStepFraction * r.
DecayTable decay_profile(const FieldPair& p, const ConeConnection& a0, std::span<const double> radii,
                         int samples_per_sphere, int max_order = 3);

/// CSV with header r,l,coord_sup,cov_sup.
void write_decay_csv(std::ostream& out, const DecayTable& t);
DecayTable read_decay_csv(std::istream& in);

}  // namespace g2lab
