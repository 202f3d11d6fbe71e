#include "g2lab/model_connection.hpp"

#include "g2lab/g2core.hpp"

#include <cmath>

namespace g2lab {

const char* chart_name(Chart c) { return c == Chart::North ? "north" : "south"; }

Chart preferred_chart(const Vec7& x) { return x[6] <= 0.0 ? Chart::North : Chart::South; }

namespace {

constexpr double chart_sign(Chart c, int a) { return (c == Chart::South && a == 0) ? -1.0 : 1.0; }

}  // namespace

Vec6 to_chart(Chart c, const Vec7& p) {
  Vec6 u = p.head<6>();
  if (c == Chart::North) {
    u /= (1.0 - p[6]);
  } else {
    u /= (1.0 + p[6]);
    u[0] = -u[0];
  }
  return u;
}

Vec7 from_chart(Chart c, const Vec6& u) {
  const double n2 = u.squaredNorm();
  Vec7 p;
  p.head<6>() = 2.0 * u / (1.0 + n2);
  if (c == Chart::North) {
    p[6] = (n2 - 1.0) / (1.0 + n2);
  } else {
    p[0] = -p[0];
    p[6] = (1.0 - n2) / (1.0 + n2);
  }
  return p;
}

Frame chart_jacobian(Chart c, const Vec6& u) {
  // dp/du_a = 2/(1+|u|^2) e_a(p(u)).
  const double n2 = u.squaredNorm();
  return (2.0 / (1.0 + n2)) * chart_frame(c, from_chart(c, u));
}

Frame chart_frame(Chart c, const Vec7& p) {
  Frame e;
  const Vec6 ph = p.head<6>();
  const double den = (c == Chart::North) ? (1.0 - p[6]) : (1.0 + p[6]);
  const double last = (c == Chart::North) ? 1.0 : -1.0;
  for (int a = 0; a < 6; ++a) {
    Vec7 col;
    col.head<6>() = -ph * (p[a] / den);
    col[a] += 1.0;
    col[6] = last * p[a];
    e.col(a) = chart_sign(c, a) * col;
  }
  return e;
}

Frame chart_frame_derivative(Chart c, const Vec7& p, const Vec7& x) {
  Frame d;
  const Vec6 ph = p.head<6>();
  const Vec6 xh = x.head<6>();
  const bool north = c == Chart::North;
  const double den = north ? (1.0 - p[6]) : (1.0 + p[6]);
  // d(den)/dX = -x7 (north) or +x7 (south).
  const double dden = north ? -x[6] : x[6];
  for (int a = 0; a < 6; ++a) {
    Vec7 col;
    col.head<6>() = -(xh * p[a] + ph * x[a]) / den + ph * (p[a] * dden / (den * den));
    col[6] = (north ? 1.0 : -1.0) * x[a];
    d.col(a) = chart_sign(c, a) * col;
  }
  return d;
}

namespace {

using Tensor3 = std::array<Mat7, 7>;  // t[k](i, j) = phi0(e_i, e_j, e_k)

const Tensor3& phi0_tensor() {
  static const Tensor3 t = [] {
    Tensor3 out;
    for (auto& m : out) m.setZero();
    const KForm& phi = euclidean_phi();
    const auto& idx = basis_indices(3);
    for (std::size_t n = 0; n < idx.size(); ++n) {
      if (phi[n] == 0.0) continue;
      const auto ax = idx[n].axes();
      const int perms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}};
      const double sgn[6] = {1, 1, 1, -1, -1, -1};
      for (int s = 0; s < 6; ++s)
        out[ax[perms[s][2]]](ax[perms[s][0]], ax[perms[s][1]]) = sgn[s] * phi[n];
    }
    return out;
  }();
  return t;
}

}  // namespace

Vec7 cross(const Vec7& u, const Vec7& v) {
  const Tensor3& t = phi0_tensor();
  Vec7 w;
  for (int k = 0; k < 7; ++k) w[k] = u.dot(t[k] * v);
  return w;
}

// ---------------------------------------------------------------------------

ChartConnection::ChartConnection(std::string name, int rank, AdjointOneForm form, TransitionFn transition)
    : name_(std::move(name)), rank_(rank), form_(std::move(form)), transition_(std::move(transition)) {
  if (rank < 1 || rank > 8) throw InvalidInput("bundle rank must lie in 1..8");
}

std::array<LieMat, 6> ChartConnection::chart_coefficients(Chart c, const Vec6& u) const {
  const Vec7 p = from_chart(c, u);
  const Frame jac = chart_jacobian(c, u);
  std::array<LieMat, 6> out;
  for (int a = 0; a < 6; ++a) out[a] = form(c, p, jac.col(a));
  return out;
}

ChartConnection ChartConnection::gauge_rotated(const LieMat& q) const {
  if (q.rows() != rank_ || q.cols() != rank_) throw InvalidInput("gauge rotation has wrong rank");
  auto form = form_;
  auto trans = transition_;
  return ChartConnection(
      name_ + "+gauge", rank_,
      [form, q](Chart c, const Vec7& p, const Vec7& x) -> LieMat { return q.transpose() * form(c, p, x) * q; },
      [trans, q](const Vec7& p) -> LieMat { return q.transpose() * trans(p) * q; });
}

double ChartConnection::transition_residual(const Vec7& p, const Vec7& x) const {
  const double len = x.norm();
  if (len == 0.0) return 0.0;
  const Vec7 dir = x / len;
  auto h_at = [&](double t) { return transition(std::cos(t) * p + std::sin(t) * dir); };
  const double step = 1e-3;
  const LieMat dh = (-h_at(2 * step) + 8.0 * h_at(step) - 8.0 * h_at(-step) + h_at(-2 * step)) * (len / (12.0 * step));
  const LieMat h = transition(p);
  const LieMat hinv = h.inverse();
  const LieMat expected = h * form(Chart::North, p, x) * hinv - dh * hinv;
  return (form(Chart::South, p, x) - expected).norm();
}

OneFormCoeffs cone_one_form(const AdjointOneForm& t, const Vec7& x, Chart c) {
  const double r = x.norm();
  if (!(r > 0.0)) throw InvalidInput("cone fields are undefined at the origin");
  const Vec7 p = x / r;
  OneFormCoeffs out;
  for (int i = 0; i < 7; ++i) {
    Vec7 dpi = -p * p[i];
    dpi[i] += 1.0;
    out[i] = t(c, p, dpi / r);
  }
  return out;
}

OneFormCoeffs ConeConnection::coefficients(const Vec7& x, Chart c) const {
  return cone_one_form([this](Chart ch, const Vec7& p, const Vec7& v) { return base_.form(ch, p, v); }, x, c);
}

ConeConnection pullback_to_cone(const ChartConnection& a0) { return ConeConnection(a0); }

ChartConnection flat_connection(int m) {
  return ChartConnection(
      "flat", m, [m](Chart, const Vec7&, const Vec7&) -> LieMat { return LieMat::Zero(m, m); },
      [m](const Vec7&) -> LieMat { return LieMat::Identity(m, m); });
}

ChartConnection abelian_model() {
  return ChartConnection("abelian", 2, [](Chart, const Vec7&, const Vec7&) -> LieMat { return LieMat::Zero(2, 2); },
                         [](const Vec7&) -> LieMat { return LieMat::Identity(2, 2); });
}

LieMat so2_generator() {
  LieMat e(2, 2);
  e << 0.0, -1.0, 1.0, 0.0;
  return e;
}

namespace {

LieMat frame_matrix(const Frame& left, const Frame& right) { return left.transpose() * right; }

// T(X)Y = 1/2 p x (X x Y) in the chart frame.
LieMat torsion_template(Chart c, const Vec7& p, const Vec7& x) {
  const Frame e = chart_frame(c, p);
  Frame img;
  for (int a = 0; a < 6; ++a) img.col(a) = 0.5 * cross(p, cross(x, e.col(a)));
  return frame_matrix(e, img);
}

LieMat complex_structure(Chart c, const Vec7& p) {
  const Frame e = chart_frame(c, p);
  Frame img;
  for (int a = 0; a < 6; ++a) img.col(a) = cross(p, e.col(a));
  return frame_matrix(e, img);
}

}  // namespace

ChartConnection canonical_connection(int m) {
  if (m != 6) throw InvalidInput("canonical connection is defined on TS^6 (rank 6) only");
  auto form = [](Chart c, const Vec7& p, const Vec7& x) -> LieMat {
    const Frame e = chart_frame(c, p);
    const Frame de = chart_frame_derivative(c, p, x);
    LieMat levi_civita = frame_matrix(e, de);
    return levi_civita - torsion_template(c, p, x);
  };
  auto transition = [](const Vec7& p) -> LieMat {
    return frame_matrix(chart_frame(Chart::South, p), chart_frame(Chart::North, p));
  };
  return ChartConnection("canonical", 6, form, transition);
}

// ---------------------------------------------------------------------------

LieValuedKForm cone_curvature(const ConeConnection& a, const Vec7& x, Chart c) {
  const double h = 1e-4 * x.norm();
  const int m = a.rank();
  const OneFormCoeffs a0 = a.coefficients(x, c);
  // da[j][i] = d_j A_i
  std::array<OneFormCoeffs, 7> da;
  for (int j = 0; j < 7; ++j) {
    const Vec7 e = Vec7::Unit(j) * h;
    const OneFormCoeffs p1 = a.coefficients(x + e, c), m1 = a.coefficients(x - e, c);
    const OneFormCoeffs p2 = a.coefficients(x + 2 * e, c), m2 = a.coefficients(x - 2 * e, c);
    for (int i = 0; i < 7; ++i) da[j][i] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
  }
  LieValuedKForm f(2, m);
  const auto& idx = basis_indices(2);
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto ax = idx[n].axes();
    const int i = ax[0], j = ax[1];
    f[n] = da[i][j] - da[j][i] + a0[i] * a0[j] - a0[j] * a0[i];
  }
  return f;
}

LieValuedKForm cone_curvature(const ConeConnection& a, const Vec7& x) {
  return cone_curvature(a, x, preferred_chart(x));
}

DefectReport instanton_defect(const ConeConnection& a0, const KForm& phi, int samples) {
  if (samples < 1) throw InvalidInput("instanton defect needs at least one sample");
  const KForm psi = coassociative(phi);
  DefectReport rep;
  for (const Vec7& p : sphere_points(samples)) {
    const Chart c = preferred_chart(p);
    const LieValuedKForm f = cone_curvature(a0, p, c);
    const double d = wedge(f, psi).norm();
    rep.samples.push_back({p, c, d, f.norm()});
    rep.defect = std::max(rep.defect, d);
  }
  return rep;
}

namespace {

// Acklam's rational approximation refined by one Halley step.
double inverse_normal_cdf(double q) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  double x;
  if (q < 0.02425) {
    const double t = std::sqrt(-2 * std::log(q));
    x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1);
  } else if (q > 1 - 0.02425) {
    const double t = std::sqrt(-2 * std::log(1 - q));
    x = -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1);
  } else {
    const double s = q - 0.5, t = s * s;
    x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * s /
        (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - q;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

}  // namespace

std::vector<Vec7> sphere_points(int n, int offset) {
  // Generalized golden ratio for dimension 7: positive root of x^8 = x + 1.
  double g = 1.0;
  for (int it = 0; it < 100; ++it) g = std::pow(1.0 + g, 1.0 / 8.0);
  std::array<double, 7> alpha;
  for (int k = 0; k < 7; ++k) alpha[k] = std::fmod(std::pow(1.0 / g, k + 1), 1.0);
  std::vector<Vec7> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double idx = static_cast<double>(i + offset + 1);
    Vec7 v;
    for (int k = 0; k < 7; ++k) {
      double t = std::fmod(0.5 + idx * alpha[k], 1.0);
      t = std::min(std::max(t, 1e-12), 1.0 - 1e-12);
      v[k] = inverse_normal_cdf(t);
    }
    pts.push_back(v.normalized());
  }
  return pts;
}

ConeTemplate tangential_template(AdjointOneForm t) {
  return [t = std::move(t)](const Vec7& x, Chart c) { return cone_one_form(t, x, c); };
}

ConeTemplate radial_template(AdjointSection lambda) {
  return [lambda = std::move(lambda)](const Vec7& x, Chart c) {
    const double r2 = x.squaredNorm();
    if (!(r2 > 0.0)) throw InvalidInput("cone fields are undefined at the origin");
    const LieMat l = lambda(c, x / std::sqrt(r2));
    OneFormCoeffs out;
    for (int i = 0; i < 7; ++i) out[i] = (x[i] / r2) * l;
    return out;
  };
}

RadialAnsatz canonical_ansatz(int n_templates) {
  if (n_templates < 1 || n_templates > 2) throw InvalidInput("canonical ansatz supports 1 or 2 templates");
  RadialAnsatz a{canonical_connection(6), {}, {}, complex_structure};
  a.templates.push_back(tangential_template(torsion_template));
  a.template_names.push_back("T");
  if (n_templates == 2) {
    a.templates.push_back(tangential_template([](Chart c, const Vec7& p, const Vec7& x) -> LieMat {
      return complex_structure(c, p) * torsion_template(c, p, x);
    }));
    a.template_names.push_back("JT");
  }
  return a;
}

AdjointSection g2_moment_section(const Mat7& k) {
  return [k](Chart c, const Vec7& p) -> LieMat {
    const Frame e = chart_frame(c, p);
    return frame_matrix(e, k * e) - torsion_template(c, p, k * p);
  };
}

RadialAnsatz twisted_canonical_ansatz(const Mat7& k) {
  if ((k + k.transpose()).norm() > 1e-12 * std::max(1.0, k.norm()))
    throw InvalidInput("twist generator must be skew-symmetric");
  RadialAnsatz a = canonical_ansatz(2);
  a.templates.push_back(radial_template(g2_moment_section(k)));
  a.template_names.push_back("muK");
  return a;
}

RadialAnsatz abelian_ansatz() {
  RadialAnsatz a{abelian_model(), {}, {}, [](Chart, const Vec7&) -> LieMat { return so2_generator(); }};
  a.templates.push_back(tangential_template(
      [](Chart, const Vec7& p, const Vec7& x) -> LieMat { return (p[0] * x[1] - p[1] * x[0]) * so2_generator(); }));
  a.template_names.push_back("rotation12");
  return a;
}

}  // namespace g2lab
