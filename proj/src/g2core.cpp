#include "g2lab/g2core.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace g2lab {

const KForm& euclidean_phi() {
  static const KForm phi = [] {
    KForm f(3);
    f.set(MultiIndex::from_axes({1, 2, 3}), 1.0);
    f.set(MultiIndex::from_axes({1, 4, 5}), -1.0);
    f.set(MultiIndex::from_axes({1, 6, 7}), -1.0);
    f.set(MultiIndex::from_axes({2, 4, 6}), -1.0);
    f.set(MultiIndex::from_axes({2, 5, 7}), 1.0);
    f.set(MultiIndex::from_axes({3, 4, 7}), -1.0);
    f.set(MultiIndex::from_axes({3, 5, 6}), -1.0);
    return f;
  }();
  return phi;
}

namespace {

Mat7 raw_contraction(const KForm& phi) {
  std::array<KForm, 7> inner;
  for (int i = 0; i < 7; ++i) inner[i] = interior(Vec7::Unit(i), phi);
  Mat7 b;
  for (int i = 0; i < 7; ++i) {
    for (int j = i; j < 7; ++j) {
      const KForm top = wedge(wedge(inner[i], inner[j]), phi);
      b(i, j) = b(j, i) = top[0];
    }
  }
  return b;
}

double calibration() {
  // B(phi_0) is a multiple of the identity; fold that multiple (sign included)
  // into the normalization.
  static const double c = raw_contraction(euclidean_phi())(0, 0);
  return c;
}

}  // namespace

Mat7 contraction_matrix(const KForm& phi) {
  if (phi.degree() != 3) throw InvalidInput("G2 derivations need a 3-form");
  if (!phi.is_finite()) throw InvalidInput("3-form has non-finite coefficients");
  return raw_contraction(phi) / calibration();
}

MetricTensor metric_from_phi(const KForm& phi) {
  const Mat7 b = contraction_matrix(phi);
  Eigen::LLT<Mat7> llt(b);
  if (llt.info() != Eigen::Success)
    throw DegenerateStructure("3-form is not a positively oriented G2-form (contraction matrix not positive definite)");
  double logdet = 0;
  for (int i = 0; i < 7; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  if (!std::isfinite(logdet)) throw DegenerateStructure("3-form is degenerate");
  const Mat7 g = b * std::exp(-logdet / 9.0);
  try {
    return MetricTensor(0.5 * (g + g.transpose()));
  } catch (const InvalidInput& e) {
    throw DegenerateStructure(std::string("3-form induces an invalid metric: ") + e.what());
  }
}

KForm coassociative(const KForm& phi) { return hodge(metric_from_phi(phi), phi); }

G2Structure make_structure(const KForm& phi) {
  G2Structure s;
  s.phi = phi;
  s.g = metric_from_phi(phi);
  s.psi = hodge(s.g, phi);
  s.vol = KForm(7);
  s.vol[0] = std::sqrt(s.g.determinant());
  return s;
}

double nondegeneracy_margin(const KForm& phi) {
  const Mat7 b = contraction_matrix(phi);
  Eigen::SelfAdjointEigenSolver<Mat7> es(b, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  return ev.minCoeff() / top;
}

KForm lie_derivative(const Mat7& x, const KForm& a) {
  KForm out(a.degree());
  if (a.degree() == 0) return out;
  for (int i = 0; i < 7; ++i) {
    const Vec7 w = x.col(i);
    if (w.isZero()) continue;
    KForm e(1);
    e[i] = 1.0;
    out += wedge(e, interior(w, a));
  }
  return out;
}

namespace {

Mat7 cayley(const Mat7& x) {
  const Mat7 id = Mat7::Identity();
  return (id - 0.5 * x).partialPivLu().solve(id + 0.5 * x);
}

Mat7 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat7 a;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat7> qr(a);
  Mat7 q = qr.householderQ();
  const Mat7 r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 7; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

const std::array<Mat7, 21>& so7_basis() {
  static const std::array<Mat7, 21> basis = [] {
    std::array<Mat7, 21> b;
    int n = 0;
    for (int i = 0; i < 7; ++i)
      for (int j = i + 1; j < 7; ++j) {
        b[n] = Mat7::Zero();
        b[n](i, j) = 1.0;
        b[n](j, i) = -1.0;
        ++n;
      }
    return b;
  }();
  return basis;
}

struct AlignOutcome {
  Mat7 q;
  double residual;
  int iterations;
};

AlignOutcome align(const KForm& white, Mat7 q, const NormalizeOptions& opts) {
  const KForm& target = euclidean_phi();
  KForm current = pullback(q, white);
  double res = (current - target).norm();
  int it = 0;
  for (; it < opts.max_iter && res > 0.1 * opts.tol; ++it) {
    Eigen::Matrix<double, 35, 21> jac;
    for (int a = 0; a < 21; ++a) jac.col(a) = lie_derivative(so7_basis()[a], current).to_vector();
    const Eigen::VectorXd rvec = (current - target).to_vector();
    const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(-rvec);
    Mat7 x = Mat7::Zero();
    for (int a = 0; a < 21; ++a) x += step[a] * so7_basis()[a];
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Mat7 cand = q * cayley(t * x);
      const KForm moved = pullback(cand, white);
      const double r = (moved - target).norm();
      if (r < res) {
        q = cand;
        current = moved;
        res = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return {q, res, it};
}

}  // namespace

NormalizationResult normalize(const KForm& phi_at_point, const NormalizeOptions& opts) {
  const MetricTensor g = metric_from_phi(phi_at_point);
  Eigen::SelfAdjointEigenSolver<Mat7> es(g.entries());
  const Mat7 whiten =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const KForm white = pullback(whiten, phi_at_point);

  NormalizationResult best;
  best.residual = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(opts.seed);
  const int restarts = std::max(1, opts.restarts);
  for (int r = 0; r < restarts; ++r) {
    const Mat7 start = (r == 0) ? Mat7::Identity() : random_rotation(rng);
    const AlignOutcome out = align(white, start, opts);
    best.iterations += out.iterations;
    if (out.residual < best.residual) {
      best.residual = out.residual;
      best.L = whiten * out.q;
    }
    best.restarts_used = r + 1;
    if (best.residual <= opts.tol) break;
  }
  // Report the residual of the composed map itself.
  best.residual = (pullback(best.L, phi_at_point) - euclidean_phi()).norm();
  best.converged = best.residual <= opts.tol;
  return best;
}

}  // namespace g2lab

namespace g2lab {

std::vector<Mat7> g2_algebra() {
  Eigen::Matrix<double, 35, 21> jac;
  const auto& so7 = so7_basis();
  for (int a = 0; a < 21; ++a) jac.col(a) = lie_derivative(so7[a], euclidean_phi()).to_vector();
  Eigen::JacobiSVD<Eigen::Matrix<double, 35, 21>> svd(jac, Eigen::ComputeFullV);
  std::vector<Mat7> out;
  for (int c = 0; c < 21; ++c) {
    if (svd.singularValues()(c) > 1e-10) continue;
    Mat7 x = Mat7::Zero();
    for (int a = 0; a < 21; ++a) x += svd.matrixV()(a, c) * so7[a];
    out.push_back(x / x.norm());
  }
  return out;
}

Mat7 g2_twist_generator() {
  Mat7 e = Mat7::Zero();
  e(0, 1) = -1.0;
  e(1, 0) = 1.0;
  Mat7 proj = Mat7::Zero();
  for (const Mat7& b : g2_algebra()) proj += (b.cwiseProduct(e).sum()) * b;
  return proj / proj.norm();
}

}  // namespace g2lab
