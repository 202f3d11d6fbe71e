#include "g2lab/rescale.hpp"

#include "g2lab/g2core.hpp"
#include "g2lab/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace g2lab {

ScaleMap::ScaleMap(double lambda) : lambda_(lambda) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw InvalidInput("scale factor must be positive and finite");
}

PolyFormField rescale_phi(const PolyFormField& phi, const ScaleMap& s) { return phi.scaled_argument(1.0 / s.lambda()); }

// ---------------------------------------------------------------------------
// Exact suprema for quadratics

namespace {

/// min over |y| <= rho of b.y + 1/2 y^T B y (global trust-region solution).
double trust_region_min(const Vec7& b, const Mat7& B, double rho) {
  Eigen::SelfAdjointEigenSolver<Mat7> es(B);
  const Vec7 lam = es.eigenvalues();
  const Vec7 bt = es.eigenvectors().transpose() * b;
  const double scale = std::max({1.0, lam.cwiseAbs().maxCoeff(), b.norm()});
  auto model = [&](const Vec7& yt) { return bt.dot(yt) + 0.5 * yt.dot(lam.cwiseProduct(yt)); };
  auto step = [&](double mu) {
    Vec7 yt = Vec7::Zero();
    for (int i = 0; i < 7; ++i) {
      const double d = lam[i] + mu;
      if (d > 0) yt[i] = -bt[i] / d;
    }
    return yt;
  };

  const double lmin = lam[0];
  if (lmin > 1e-14 * scale) {
    const Vec7 yt = step(0.0);
    if (yt.norm() <= rho) return model(yt);
  }
  const double mu_lo = std::max(0.0, -lmin);
  // Components on the bottom eigenspace decide between the easy and the hard case.
  double bottom = 0.0;
  for (int i = 0; i < 7; ++i)
    if (lam[i] - lmin <= 1e-12 * scale) bottom = std::max(bottom, std::abs(bt[i]));
  const bool hard = bottom <= 1e-14 * scale;
  Vec7 yt;
  if (hard && step(mu_lo).norm() <= rho) {
    yt = step(mu_lo);
    const double rest = std::sqrt(std::max(0.0, rho * rho - yt.squaredNorm()));
    yt[0] += rest;
  } else {
    double lo = mu_lo, hi = mu_lo + b.norm() / rho + 1.0;
    while (step(hi).norm() > rho) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-17 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (step(mid).norm() > rho ? lo : hi) = mid;
    }
    yt = step(hi);
  }
  return std::min(0.0, model(yt));
}

}  // namespace

std::array<double, 3> quadratic_sups(const Polynomial& p, double rho) {
  if (p.degree() > 2) throw InvalidInput("exact suprema need a polynomial of degree <= 2");
  const Vec7 g = p.gradient_at_zero();
  const Mat7 H = p.hessian_at_zero();
  const double max_q = -trust_region_min(-g, -H, rho);
  const double min_q = trust_region_min(g, H, rho);
  const double s0 = std::max(std::abs(max_q), std::abs(min_q));
  const Mat7 H2 = H * H;
  const double s1 = std::sqrt(std::max(0.0, g.squaredNorm() - trust_region_min(-2.0 * H * g, -2.0 * H2, rho)));
  return {s0, s1, H.norm()};
}

// ---------------------------------------------------------------------------
// C^5 deviation

namespace {

std::vector<Exponent> exponents_of_order(int k) {
  std::vector<Exponent> out;
  Exponent e{};
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == 6) {
      e[6] = static_cast<std::uint8_t>(left);
      out.push_back(e);
      return;
    }
    for (int v = left; v >= 0; --v) {
      e[axis] = static_cast<std::uint8_t>(v);
      rec(axis + 1, left - v);
    }
  };
  rec(0, k);
  return out;
}

double multinomial(const Exponent& e) {
  double num = std::tgamma(total_degree(e) + 1.0);
  for (auto v : e) num /= std::tgamma(v + 1.0);
  return num;
}

struct DerivativeSet {
  std::vector<Polynomial> polys;
  std::vector<double> weights;
};

DerivativeSet derivative_set(const Polynomial& q, int k) {
  DerivativeSet d;
  for (const auto& e : exponents_of_order(k)) {
    Polynomial dp = k == 0 ? q : q.derivative(e);
    if (dp.is_zero()) continue;
    d.polys.push_back(std::move(dp));
    d.weights.push_back(multinomial(e));
  }
  return d;
}

/// Normalized sample points: origin plus `radial` shells of the unit ball.
std::vector<Vec7> unit_ball_grid(int points) {
  const int radial = 10;
  const int dirs = std::max(1, (points - 1) / radial);
  const auto sphere = sphere_points(dirs);
  std::vector<Vec7> out{Vec7::Zero()};
  out.reserve(1 + static_cast<std::size_t>(radial) * dirs);
  for (int r = 1; r <= radial; ++r)
    for (const auto& d : sphere) out.push_back((static_cast<double>(r) / radial) * d);
  return out;
}

double grid_sup(const DerivativeSet& d, const std::vector<Vec7>& unit_grid, double rho) {
  if (d.polys.empty()) return 0.0;
  std::vector<double> vals(unit_grid.size());
  parallel_for(unit_grid.size(), [&](std::size_t n) {
    const Vec7 y = rho * unit_grid[n];
    double s = 0;
    for (std::size_t i = 0; i < d.polys.size(); ++i) {
      const double v = d.polys[i](y);
      s += d.weights[i] * v * v;
    }
    vals[n] = std::sqrt(s);
  });
  return *std::max_element(vals.begin(), vals.end());
}

}  // namespace

C5Report c5_deviation(const PolyFormField& phi, const ScaleMap& s, double C, int grid_points) {
  if (!(C > 0)) throw InvalidInput("the constant C must be positive");
  if (grid_points < 11) throw InvalidInput("grid supremum needs at least 11 points");
  C5Report rep;
  rep.lambda = s.lambda();
  rep.C = C;
  rep.exact = phi.max_degree() <= 2;
  const double rho_y = 0.25 / s.lambda(), rho_x = 0.25;
  std::vector<Vec7> grid;
  if (!rep.exact) {
    grid = unit_ball_grid(grid_points);
    rep.grid_points = static_cast<int>(grid.size());
  }
  const PolyFormField tilde = rescale_phi(phi, s);
  for (std::size_t I = 0; I < phi.size(); ++I) {
    Polynomial q = phi[I] - Polynomial::constant(phi[I].constant_term());
    if (q.is_zero()) continue;
    Polynomial qt = tilde[I] - Polynomial::constant(tilde[I].constant_term());
    if (rep.exact) {
      const auto sy = quadratic_sups(q, rho_y);
      const auto sx = quadratic_sups(qt, rho_x);
      for (int k = 0; k < 3; ++k) {
        rep.s[k] += sy[k];
        rep.t[k] += sx[k];
      }
    } else {
      for (int k = 0; k <= 5; ++k) {
        rep.s[k] += grid_sup(derivative_set(q, k), grid, rho_y);
        rep.t[k] += grid_sup(derivative_set(qt, k), grid, rho_x);
      }
    }
  }
  double total = 0;
  for (double v : rep.s) total += v;
  rep.c_phi = C * total;
  const double lam = s.lambda();
  for (int k = 0; k <= 5; ++k) {
    rep.bound[k] = k == 0 ? rep.c_phi / lam : rep.c_phi / std::pow(lam, k);
    rep.margin[k] = rep.bound[k] - rep.t[k];
  }
  rep.c5_norm_x = *std::max_element(rep.t.begin(), rep.t.end());
  rep.c5_margin = rep.c_phi / lam - rep.c5_norm_x;
  for (double v : rep.t) rep.c5_sum_norm_x += v;
  for (int k = 0; k <= 5; ++k) {
    const double slack = 1e-12 * std::max(rep.bound[k], rep.t[k]);
    if (rep.margin[k] < -slack) {
      std::ostringstream msg;
      msg << "derivative bound violated at order " << k << ": sup " << rep.t[k] << " exceeds c_phi/lambda^k "
          << rep.bound[k] << " (lambda " << lam << ", C " << C << ")";
      throw InconsistencyError(msg.str());
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pullback of field pairs

ScaledFieldPair::ScaledFieldPair(std::shared_ptr<const FieldPair> inner, const ScaleMap& s)
    : inner_(std::move(inner)), lambda_(s.lambda()) {
  if (!inner_) throw InvalidInput("null field pair");
}

Annulus ScaledFieldPair::domain() const {
  const Annulus d = inner_->domain();
  return {d.r_in / lambda_, d.r_out / lambda_};
}

OneFormCoeffs ScaledFieldPair::connection(const Vec7& y, Chart c) const {
  OneFormCoeffs a = inner_->connection(lambda_ * y, c);
  for (auto& m : a) m *= lambda_;
  return a;
}

LieMat ScaledFieldPair::higgs(const Vec7& y, Chart c) const { return lambda_ * inner_->higgs(lambda_ * y, c); }

FieldJet ScaledFieldPair::jet(const Vec7& y, Chart c) const {
  FieldJet j = inner_->jet(lambda_ * y, c);
  const double l2 = lambda_ * lambda_;
  for (auto& m : j.a) m *= lambda_;
  for (auto& row : j.da)
    for (auto& m : row) m *= l2;
  j.sigma *= lambda_;
  for (auto& m : j.dsigma) m *= l2;
  return j;
}

std::shared_ptr<const FieldPair> pullback_monopole(std::shared_ptr<const FieldPair> a, const ScaleMap& s) {
  return std::make_shared<ScaledFieldPair>(std::move(a), s);
}

double check_star_covariance(const MetricTensor& g, const ScaleMap& s, const KForm& a) {
  const double lam = s.lambda();
  const Mat7 gamma = s.matrix();
  const MetricTensor pushed = pullback(Mat7(Mat7::Identity() / lam), MetricTensor(lam * lam * g.entries()));
  const KForm lhs = pullback(gamma, hodge(pushed, a));
  const KForm rhs = std::pow(lam, 5) * hodge(g, pullback(gamma, a));
  return (lhs - rhs).norm() / std::max(1.0, rhs.norm());
}

CovarianceReport residual_covariance(std::shared_ptr<const FieldPair> big, const PolyFormField& phi,
                                     const ScaleMap& s, int points, std::uint64_t seed, double r_max) {
  auto small = pullback_monopole(big, s);
  return residual_covariance(std::move(big), std::move(small), phi, s, points, seed, r_max);
}

CovarianceReport residual_covariance(std::shared_ptr<const FieldPair> big, std::shared_ptr<const FieldPair> small,
                                     const PolyFormField& phi, const ScaleMap& s, int points, std::uint64_t seed,
                                     double r_max) {
  if (points < 1) throw InvalidInput("covariance check needs at least one point");
  if (!big || !small) throw InvalidInput("null field pair");
  const double lam = s.lambda();
  const StructureField small_structure(phi);
  const StructureField big_structure(rescale_phi(phi, s));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::vector<Vec7> ys(points);
  for (auto& y : ys) {
    Vec7 d;
    for (int i = 0; i < 7; ++i) d[i] = normal(rng);
    y = (unif(rng) * r_max / lam) * d.normalized();
  }
  CovarianceReport rep;
  rep.samples.resize(points);
  const double l4 = std::pow(lam, 4), l6 = std::pow(lam, 6);
  parallel_for(ys.size(), [&](std::size_t n) {
    const Vec7& y = ys[n];
    const LieValuedKForm rb = l6 * monopole_residual(*big, big_structure, s(y));
    const LieValuedKForm rs = l4 * monopole_residual(*small, small_structure, y);
    const double scale = std::max(rb.norm(), rs.norm());
    rep.samples[n] = {y, rb.norm(), rs.norm(), scale > 0 ? (rb - rs).norm() / scale : 0.0};
  });
  for (const auto& smp : rep.samples) rep.max_rel_error = std::max(rep.max_rel_error, smp.rel_error);
  return rep;
}

// ---------------------------------------------------------------------------
// Decay transform

std::shared_ptr<const FieldPair> power_law_field(const RadialAnsatz& ansatz, int template_index, double theta,
                                                 double amp, Annulus domain) {
  if (template_index < 0 || template_index >= static_cast<int>(ansatz.templates.size()))
    throw InvalidInput("template index out of range");
  if (!(theta > 0 && theta < 1)) throw InvalidInput("theta must lie in (0, 1)");
  const ConeTemplate tmpl = ansatz.templates[template_index];
  double sup = 0;
  for (const Vec7& p : sphere_points(2000)) {
    const OneFormCoeffs t = tmpl(p, preferred_chart(p));
    double s = 0;
    for (const auto& m : t) s += m.squaredNorm();
    sup = std::max(sup, std::sqrt(s));
  }
  if (!(sup > 0)) throw InvalidInput("template vanishes on the sphere");
  const ConeConnection a0 = pullback_to_cone(ansatz.model);
  const double scale = amp / sup;
  const int m = ansatz.model.rank();
  return std::make_shared<FunctionFieldPair>(
      m, domain,
      [a0, tmpl, scale, theta](const Vec7& x, Chart c) {
        OneFormCoeffs a = a0.coefficients(x, c);
        const OneFormCoeffs t = tmpl(x, c);
        const double f = scale * std::pow(x.norm(), 1.0 - theta);
        for (int i = 0; i < 7; ++i) a[i] += f * t[i];
        return a;
      },
      [m](const Vec7&, Chart) { return LieMat(LieMat::Zero(m, m)); });
}

DecayTransformReport decay_transform(std::shared_ptr<const FieldPair> p, const ConeConnection& a0,
                                     const ScaleMap& s, double theta, std::span<const double> radii,
                                     int samples, int max_order) {
  DecayTransformReport rep;
  rep.expected = std::pow(s.lambda(), 1.0 - theta);
  rep.original = decay_profile(*p, a0, radii, samples, max_order);
  rep.pulled_back = decay_profile(*pullback_monopole(p, s), a0, radii, samples, max_order);
  for (std::size_t i = 0; i < rep.original.rows.size(); ++i) {
    const auto& o = rep.original.rows[i];
    const auto& q = rep.pulled_back.rows[i];
    for (auto [a, b] : {std::pair{o.coord_sup, q.coord_sup}, std::pair{o.cov_sup, q.cov_sup}}) {
      if (a == 0 && b == 0) continue;
      const double err = a > 0 ? std::abs(b / (a * rep.expected) - 1.0) : 1.0;
      rep.max_rel_error = std::max(rep.max_rel_error, err);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Shipped structures

PolyFormField g2_perturbation(double eps) {
  PolyFormField phi = PolyFormField::constant(euclidean_phi());
  const KForm psi0 = coassociative(euclidean_phi());
  for (int a = 0; a < 7; ++a) {
    const KForm c = interior(Vec7::Unit(a), psi0);
    for (std::size_t I = 0; I < c.size(); ++I)
      if (c[I] != 0.0) phi[I] += Polynomial::variable(a, eps * c[I]);
  }
  return phi;
}

PolyFormField g2_twist(double eps, const Mat7& k) {
  PolyFormField phi = PolyFormField::constant(euclidean_phi());
  for (int a = 0; a < 7; ++a)
    for (int c = 0; c < 7; ++c) {
      KForm dya(1);
      dya[a] = 1.0;
      const KForm form = wedge(dya, interior(k.col(c), euclidean_phi()));
      Exponent e{};
      ++e[a];
      ++e[c];
      for (std::size_t I = 0; I < form.size(); ++I)
        if (form[I] != 0.0) phi[I] += Polynomial::monomial(e, eps * form[I]);
    }
  return phi;
}

namespace {
Polynomial mono(std::initializer_list<int> axes, double c) {
  Exponent e{};
  for (int a : axes) ++e[a - 1];
  return Polynomial::monomial(e, c);
}
}  // namespace

std::vector<std::string> shipped_phi_names() {
  return {"euclidean", "linear-perturb", "quadratic-perturb", "cubic-perturb", "g2-perturb", "g2-twist"};
}

PolyFormField shipped_phi(const std::string& name, double eps) {
  PolyFormField phi = PolyFormField::constant(euclidean_phi());
  auto comp = [&](std::initializer_list<int> axes) -> Polynomial& {
    return phi.component(MultiIndex::from_axes(axes));
  };
  if (name == "euclidean") return phi;
  if (name == "linear-perturb") {
    comp({1, 2, 3}) += mono({1}, eps);
  } else if (name == "quadratic-perturb") {
    comp({1, 4, 5}) += mono({1, 2}, eps);
    comp({2, 4, 6}) += mono({3, 3}, 0.5 * eps);
    comp({3, 5, 6}) += mono({4}, -eps);
  } else if (name == "cubic-perturb") {
    comp({2, 5, 7}) += mono({1, 2, 3}, eps);
    comp({1, 2, 3}) += mono({5}, eps);
    comp({3, 4, 7}) += mono({6, 6}, eps);
  } else if (name == "g2-perturb") {
    return g2_perturbation(eps);
  } else if (name == "g2-twist") {
    return g2_twist(eps, g2_twist_generator());
  } else {
    throw InvalidInput("unknown structure '" + name + "'");
  }
  return phi;
}

double c0_deviation(const PolyFormField& phi, double radius) {
  if (!(radius > 0)) throw InvalidInput("radius must be positive");
  if (phi.max_degree() <= 1) {
    Eigen::MatrixXd M(phi.size(), 7);
    for (std::size_t I = 0; I < phi.size(); ++I) M.row(I) = phi[I].gradient_at_zero().transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return radius * svd.singularValues()(0);
  }
  const KForm centre = phi(Vec7::Zero());
  double sup = 0;
  for (const Vec7& u : unit_ball_grid(10001)) sup = std::max(sup, (phi(radius * u) - centre).norm());
  return sup;
}

}  // namespace g2lab
