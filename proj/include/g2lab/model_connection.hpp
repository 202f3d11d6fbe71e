#pragma once

#include "g2lab/forms7.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace g2lab {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Frame = Eigen::Matrix<double, 7, 6>;
using OneFormCoeffs = std::array<LieMat, 7>;

/// Stereographic charts on S^6.  North omits +e_7, South omits -e_7 (with its
/// first chart coordinate reflected so the transition lands in SO(6)).
enum class Chart { North, South };

const char* chart_name(Chart c);
/// Chart whose excluded pole is farther from the direction of x.
Chart preferred_chart(const Vec7& x);

Vec6 to_chart(Chart c, const Vec7& p);
Vec7 from_chart(Chart c, const Vec6& u);
/// Columns dp/du_a.
Frame chart_jacobian(Chart c, const Vec6& u);
/// Orthonormal frame of T_p S^6: the normalized coordinate frame of the chart.
Frame chart_frame(Chart c, const Vec7& p);
/// Directional derivative D_X of the frame field (formula extended off S^6).
Frame chart_frame_derivative(Chart c, const Vec7& p, const Vec7& x);

/// Octonionic cross product read off phi_0: <u x v, w> = phi_0(u, v, w).
Vec7 cross(const Vec7& u, const Vec7& v);

/// Bundle-valued tensors on S^6 in chart frames.
using AdjointOneForm = std::function<LieMat(Chart, const Vec7& p, const Vec7& x)>;
using AdjointSection = std::function<LieMat(Chart, const Vec7& p)>;

/// Connection on a rank-m bundle over S^6 given in the two-chart atlas.
class ChartConnection {
 public:
  using TransitionFn = std::function<LieMat(const Vec7& p)>;

  ChartConnection(std::string name, int rank, AdjointOneForm form, TransitionFn transition);

  const std::string& name() const { return name_; }
  int rank() const { return rank_; }
  /// Connection 1-form at p in S^6 applied to a tangent vector x.
  LieMat form(Chart c, const Vec7& p, const Vec7& x) const { return form_(c, p, x); }
  /// h(p) on the overlap, with A_S = h A_N h^{-1} - dh h^{-1}.
  LieMat transition(const Vec7& p) const { return transition_(p); }
  /// Six coefficient matrices A_a(u) = A(dp/du_a) at a chart point.
  std::array<LieMat, 6> chart_coefficients(Chart c, const Vec6& u) const;

  /// Constant gauge rotation of every chart frame: A -> Q^T A Q, h -> Q^T h Q.
  ChartConnection gauge_rotated(const LieMat& q) const;

  /// |A_S(x) - (h A_N(x) h^{-1} - (D_x h) h^{-1})| at p, D_x h by centered
  /// differences along the great circle through p in direction x.
  double transition_residual(const Vec7& p, const Vec7& x) const;

 private:
  std::string name_;
  int rank_;
  AdjointOneForm form_;
  TransitionFn transition_;
};

/// Cone pullback along x -> x/|x|.  Coefficients are homogeneous of degree -1
/// and have no radial component.
class ConeConnection {
 public:
  explicit ConeConnection(ChartConnection base) : base_(std::move(base)) {}

  const ChartConnection& base() const { return base_; }
  int rank() const { return base_.rank(); }
  OneFormCoeffs coefficients(const Vec7& x, Chart c) const;
  OneFormCoeffs coefficients(const Vec7& x) const { return coefficients(x, preferred_chart(x)); }

 private:
  ChartConnection base_;
};

ConeConnection pullback_to_cone(const ChartConnection& a0);

/// Pullback of an adjoint 1-form on S^6 to R^7 \ {O} (degree -1 homogeneous).
OneFormCoeffs cone_one_form(const AdjointOneForm& t, const Vec7& x, Chart c);

/// Zero connection on the trivial rank-m bundle.
ChartConnection flat_connection(int m);
/// Canonical connection of the nearly Kaehler S^6 on TS^6 (m = 6 only):
/// Levi-Civita projection corrected by -1/2 J (nabla J), J_p v = p x v.
ChartConnection canonical_connection(int m);
/// Trivial abelian model: flat connection on the trivial so(2) bundle.
ChartConnection abelian_model();

/// Curvature F_ij = d_i A_j - d_j A_i + [A_i, A_j] of the cone connection at x
/// (fourth-order centered differences, step 1e-4 |x|, fixed chart).
LieValuedKForm cone_curvature(const ConeConnection& a, const Vec7& x, Chart c);
LieValuedKForm cone_curvature(const ConeConnection& a, const Vec7& x);

struct DefectSample {
  Vec7 point;
  Chart chart;
  double defect;
  double curvature_norm;
};

struct DefectReport {
  double defect = 0.0;  // max over samples of |F ^ psi(phi)|
  std::vector<DefectSample> samples;
};

/// max |F_{A} ^ psi(phi)| over `samples` deterministic points of the unit sphere.
DefectReport instanton_defect(const ConeConnection& a0, const KForm& phi, int samples = 200);

/// Deterministic, well-spread unit vectors (Kronecker sequence mapped through
/// the inverse normal CDF).
std::vector<Vec7> sphere_points(int n, int offset = 0);

/// so(m)-valued 1-form on R^7 \ {O}, homogeneous of degree -1.
using ConeTemplate = std::function<OneFormCoeffs(const Vec7& x, Chart)>;

/// Cone pullback of a tangential template on S^6.
ConeTemplate tangential_template(AdjointOneForm t);
/// (x_i / |x|^2) Lambda(x / |x|) dx^i: a radial template built from a section.
ConeTemplate radial_template(AdjointSection lambda);

/// Angular templates for the radial reduction A = A0 + sum_k f_k(r) Theta_k,
/// sigma = u(r) Sigma0.
struct RadialAnsatz {
  ChartConnection model;
  std::vector<ConeTemplate> templates;
  std::vector<std::string> template_names;
  AdjointSection higgs_template;
};

/// Templates T(X) = 1/2 J (nabla_X J) and J T on TS^6, Higgs template J.
RadialAnsatz canonical_ansatz(int n_templates = 2);
/// Canonical templates plus the radial template of mu_K = P K - T(K p),
/// the generator of the lifted action of K in g2 on TS^6.
RadialAnsatz twisted_canonical_ansatz(const Mat7& k);
/// mu_K in the chart frame.
AdjointSection g2_moment_section(const Mat7& k);
/// Template (x_1 dx_2 - x_2 dx_1)/r^2 E and Higgs template E on the flat so(2) model.
RadialAnsatz abelian_ansatz();

/// Generator [[0,-1],[1,0]] of so(2).
LieMat so2_generator();

}  // namespace g2lab
