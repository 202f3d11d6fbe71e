#include "g2lab/solver.hpp"

#include "g2lab/g2core.hpp"
#include "g2lab/parallel.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <iomanip>
#include <sstream>

namespace g2lab {

// ---------------------------------------------------------------------------
// Configuration

void SolverConfig::validate() const {
  if (!(theta > 0 && theta < 1)) throw InvalidInput("theta must lie in (0, 1)");
  if (!(p > -2.5 && p < theta - 2.5)) throw InvalidInput("p must lie in (-5/2, theta - 5/2)");
  if (!(delta0 > 0)) throw InvalidInput("delta0 must be positive");
  if (!(lambda > 0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be positive");
  if (!(gauge_penalty >= 0)) throw InvalidInput("gauge_penalty must be non-negative");
  if (!(tol >= 0)) throw InvalidInput("tol must be non-negative");
  if (max_iter < 0) throw InvalidInput("max_iter must be non-negative");
  if (!(r_in > 0 && r_out > r_in)) throw InvalidInput("need 0 < r_in < r_out");
  if (mesh_points < 3) throw InvalidInput("mesh_points must be at least 3");
  if (samples < 1) throw InvalidInput("samples must be positive");
  if (!(R0 > 0)) throw InvalidInput("R0 must be positive");
  if (!(C > 0)) throw InvalidInput("C must be positive");
  if (decay_radii < 4) throw InvalidInput("decay_radii must be at least 4");
  if (decay_samples < 1) throw InvalidInput("decay_samples must be positive");
  if (decay_order < 0 || decay_order > 3) throw InvalidInput("decay_order must lie in 0..3");
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw InvalidInput("config key '" + key + "': not a number: '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) throw InvalidInput("config key '" + key + "': not a number: '" + v + "'");
  return d;
}

int parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long d = 0;
  try {
    d = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw InvalidInput("config key '" + key + "': not an integer: '" + v + "'");
  }
  if (used != v.size() || d < -1000000000LL || d > 1000000000LL)
    throw InvalidInput("config key '" + key + "': not an integer: '" + v + "'");
  return static_cast<int>(d);
}

}  // namespace

bool SolverConfig::set(const std::string& key, const std::string& value) {
  struct D {
    const char* name;
    double SolverConfig::*field;
  };
  struct I {
    const char* name;
    int SolverConfig::*field;
  };
  static const D doubles[] = {{"theta", &SolverConfig::theta},
                              {"p", &SolverConfig::p},
                              {"delta0", &SolverConfig::delta0},
                              {"lambda", &SolverConfig::lambda},
                              {"gauge_penalty", &SolverConfig::gauge_penalty},
                              {"tol", &SolverConfig::tol},
                              {"r_in", &SolverConfig::r_in},
                              {"r_out", &SolverConfig::r_out},
                              {"R0", &SolverConfig::R0},
                              {"C", &SolverConfig::C}};
  static const I ints[] = {{"max_iter", &SolverConfig::max_iter},
                           {"mesh_points", &SolverConfig::mesh_points},
                           {"samples", &SolverConfig::samples},
                           {"decay_radii", &SolverConfig::decay_radii},
                           {"decay_samples", &SolverConfig::decay_samples},
                           {"decay_order", &SolverConfig::decay_order}};
  for (const auto& d : doubles)
    if (key == d.name) {
      this->*d.field = parse_double(key, value);
      return true;
    }
  for (const auto& i : ints)
    if (key == i.name) {
      this->*i.field = parse_int(key, value);
      return true;
    }
  return false;
}

PreconditionReport check_preconditions(const PolyFormField& phi, const SolverConfig& cfg) {
  cfg.validate();
  if (phi.degree() != 3) throw InvalidInput("structure must be a 3-form field");
  PreconditionReport rep;
  const ScaleMap s(cfg.lambda);
  rep.c0_deviation = c0_deviation(rescale_phi(phi, s), cfg.r_out);
  const C5Report c5 = c5_deviation(phi, s, cfg.C);
  rep.c_phi = c5.c_phi;
  rep.c_phi_over_lambda = c5.c_phi / cfg.lambda;
  rep.c0_ok = rep.c0_deviation <= cfg.delta0;
  rep.scale_ok = 0.25 / cfg.lambda < cfg.R0 / 2;
  rep.c_phi_ok = rep.c_phi_over_lambda < cfg.delta0 / 2;
  rep.phi0_euclidean = (phi(Vec7::Zero()) - euclidean_phi()).norm() <= 1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// Decay fit

const char* decay_status_name(DecayStatus s) {
  switch (s) {
    case DecayStatus::Ok: return "ok";
    case DecayStatus::ZeroField: return "zero-field";
    case DecayStatus::Degenerate: return "degenerate";
  }
  return "unknown";
}

DecayFit fit_decay_rate(const DecayTable& table, double theta) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : table.rows)
    if (row.l == 0) pts.emplace_back(row.r, row.coord_sup);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first == b.first; }), pts.end());
  if (pts.size() < 4) throw InvalidInput("decay fit needs at least 4 radii");
  if (pts.back().first < 10.0 * pts.front().first) throw InvalidInput("decay fit radii must span at least a decade");
  DecayFit fit;
  if (std::all_of(pts.begin(), pts.end(), [](auto& p) { return p.second == 0.0; })) {
    fit.status = DecayStatus::ZeroField;
    return fit;
  }
  const std::size_t n = (pts.size() + 1) / 2;
  fit.radii_used = static_cast<int>(n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pts[i].second > 0)) {
      fit.status = DecayStatus::Degenerate;
      return fit;
    }
    const double x = std::log(pts[i].first), y = std::log(pts[i].first * pts[i].second);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  fit.slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / dn;
  fit.meets_contract = fit.slope >= (1.0 - theta) - 0.1;
  return fit;
}

// ---------------------------------------------------------------------------
// Discretized least-squares problem

namespace {

/// Unit-sphere data of the model and templates at one sample direction.
struct SampleData {
  Vec7 w;
  Chart chart;
  OneFormCoeffs a0;
  std::array<OneFormCoeffs, 7> da0;
  std::vector<OneFormCoeffs> th;
  std::vector<std::array<OneFormCoeffs, 7>> dth;
  LieMat j;
  std::array<LieMat, 7> dj;
  std::vector<LieMat> div;  // sum_i d_i Theta_i + [A0_i, Theta_i]
  std::vector<LieMat> rad;  // sum_i w_i Theta_i
};

struct PointData {
  KForm psi{4};
  Eigen::MatrixXd hodge1;
};

std::array<LieMat, 7> fd_gradient_section(const AdjointSection& s, Chart c, const Vec7& x, double h) {
  std::array<LieMat, 7> d;
  auto f = [&](const Vec7& y) { return s(c, y / y.norm()); };
  for (int j = 0; j < 7; ++j) {
    const Vec7 e = Vec7::Unit(j) * h;
    d[j] = (-f(x + 2 * e) + 8.0 * f(x + e) - 8.0 * f(x - e) + f(x - 2 * e)) / (12.0 * h);
  }
  return d;
}

struct Evaluation {
  double mono = 0.0;
  double gauge = 0.0;
  Eigen::MatrixXd jc;  // compressed Jacobian
  Eigen::VectorXd c;   // compressed residual
  double objective() const { return mono + gauge; }
};

class Problem {
 public:
  Problem(const RadialAnsatz& ansatz, const StructureField& g, const SolverConfig& cfg)
      : K_(static_cast<int>(ansatz.templates.size())),
        m_(ansatz.model.rank()),
        mesh_(log_mesh(cfg.r_in, cfg.r_out, cfg.mesh_points)),
        gauge_(cfg.gauge_penalty) {
    N_ = static_cast<int>(mesh_.size());
    pairs_ = m_ * (m_ - 1) / 2;
    mono_rows_ = 7 * pairs_;
    gauge_rows_ = (K_ > 0 && gauge_ > 0) ? pairs_ : 0;
    unknowns_ = K_ * (N_ - 1) + N_;

    const ConeConnection a0(ansatz.model);
    const auto dirs = sphere_points(cfg.samples);
    samples_.resize(dirs.size());
    parallel_for(dirs.size(), [&](std::size_t s) {
      SampleData& d = samples_[s];
      d.w = dirs[s];
      d.chart = preferred_chart(d.w);
      const double h = 1e-4;
      d.a0 = a0.coefficients(d.w, d.chart);
      d.da0 = fd_gradient([&](const Vec7& y) { return a0.coefficients(y, d.chart); }, d.w, h);
      for (const auto& t : ansatz.templates) {
        d.th.push_back(t(d.w, d.chart));
        d.dth.push_back(fd_gradient([&](const Vec7& y) { return t(y, d.chart); }, d.w, h));
        LieMat div = LieMat::Zero(m_, m_), rad = LieMat::Zero(m_, m_);
        for (int i = 0; i < 7; ++i) {
          div += d.dth.back()[i][i] + d.a0[i] * d.th.back()[i] - d.th.back()[i] * d.a0[i];
          rad += d.w[i] * d.th.back()[i];
        }
        d.div.push_back(div);
        d.rad.push_back(rad);
      }
      d.j = ansatz.higgs_template(d.chart, d.w);
      d.dj = fd_gradient_section(ansatz.higgs_template, d.chart, d.w, h);
    });

    const std::size_t S = samples_.size();
    points_.resize(static_cast<std::size_t>(N_ - 1) * S);
    weights_.resize(N_ - 1);
    const double wexp = -2.0 * cfg.p - 7.0;
    for (int n = 0; n + 1 < N_; ++n) {
      const double r = midpoint(n), dr = mesh_[n + 1] - mesh_[n];
      weights_[n] = std::pow(r, wexp) * std::pow(r, 6) * dr / static_cast<double>(S);
    }
    parallel_for(points_.size(), [&](std::size_t idx) {
      const std::size_t n = idx / S, s = idx % S;
      const G2Structure st = g.at(midpoint(static_cast<int>(n)) * samples_[s].w);
      points_[idx].psi = st.psi;
      points_[idx].hodge1 = hodge_matrix(st.g, 1);
    });
  }

  int templates() const { return K_; }
  int mesh_size() const { return N_; }
  const std::vector<double>& mesh() const { return mesh_; }
  int unknowns() const { return unknowns_; }
  double midpoint(int n) const { return 0.5 * (mesh_[n] + mesh_[n + 1]); }

  Eigen::VectorXd pack(const RadialProfilePair& p) const {
    Eigen::VectorXd z(unknowns_);
    for (int k = 0; k < K_; ++k)
      for (int n = 1; n < N_; ++n) z[f_index(k, n)] = p.f[k][n];
    for (int n = 0; n < N_; ++n) z[u_index(n)] = p.u[n];
    return z;
  }

  RadialProfilePair unpack(const Eigen::VectorXd& z) const {
    RadialProfilePair p = RadialProfilePair::zeros(mesh_, K_);
    for (int k = 0; k < K_; ++k)
      for (int n = 1; n < N_; ++n) p.f[k][n] = z[f_index(k, n)];
    for (int n = 0; n < N_; ++n) p.u[n] = z[u_index(n)];
    return p;
  }

  void set_target(const RadialProfilePair& t) {
    const Eigen::VectorXd z = pack(t);
    const std::size_t S = samples_.size();
    target_.assign(points_.size() * mono_rows_, 0.0);
    parallel_for(static_cast<std::size_t>(N_ - 1), [&](std::size_t n) {
      const std::vector<double> q = scalars(z, static_cast<int>(n));
      Eigen::VectorXd rows(mono_rows_);
      for (std::size_t s = 0; s < S; ++s) {
        residual_rows(static_cast<int>(n), s, q.data(), rows.data());
        std::copy(rows.data(), rows.data() + mono_rows_, target_.begin() + ((n * S + s) * mono_rows_));
      }
    });
  }

  Evaluation evaluate(const Eigen::VectorXd& z, bool jacobian) const {
    const std::size_t S = samples_.size();
    const int L = 2 * K_ + 2;
    const int nrows = static_cast<int>(S) * (mono_rows_ + gauge_rows_);
    std::vector<double> mono(N_ - 1, 0.0), gauge(N_ - 1, 0.0);
    std::vector<Eigen::MatrixXd> rblk(jacobian ? N_ - 1 : 0);
    std::vector<Eigen::VectorXd> cblk(jacobian ? N_ - 1 : 0);
    parallel_for(static_cast<std::size_t>(N_ - 1), [&](std::size_t nn) {
      const int n = static_cast<int>(nn);
      const double sw = std::sqrt(weights_[n]), r = midpoint(n), h = mesh_[n + 1] - mesh_[n];
      const std::vector<double> q0 = scalars(z, n);
      const int nq = static_cast<int>(q0.size());
      Eigen::MatrixXd jl;
      Eigen::VectorXd rl(nrows);
      if (jacobian) jl.setZero(nrows, L);
      Eigen::VectorXd base(mono_rows_), plus(mono_rows_), minus(mono_rows_);
      std::vector<double> q = q0;
      // d(scalar)/d(local unknown): mids average, slopes difference.
      for (std::size_t s = 0; s < S; ++s) {
        const int row0 = static_cast<int>(s) * (mono_rows_ + gauge_rows_);
        residual_rows(n, s, q0.data(), base.data());
        if (!target_.empty()) base -= Eigen::Map<const Eigen::VectorXd>(&target_[(nn * S + s) * mono_rows_], mono_rows_);
        rl.segment(row0, mono_rows_) = sw * base;
        mono[n] += weights_[n] * base.squaredNorm();
        if (jacobian) {
          for (int j = 0; j < nq; ++j) {
            q[j] = q0[j] + 1.0;
            residual_rows(n, s, q.data(), plus.data());
            q[j] = q0[j] - 1.0;
            residual_rows(n, s, q.data(), minus.data());
            q[j] = q0[j];
            const Eigen::VectorXd dq = 0.5 * sw * (plus - minus);
            const auto [lo_col, hi_col] = local_columns(j);
            const bool mid = is_mid(j);
            jl.block(row0, lo_col, mono_rows_, 1) += (mid ? 0.5 : -1.0 / h) * dq;
            jl.block(row0, hi_col, mono_rows_, 1) += (mid ? 0.5 : 1.0 / h) * dq;
          }
        }
        if (gauge_rows_ > 0) {
          const SampleData& d = samples_[s];
          const double gs = std::sqrt(gauge_) * sw / (r * r);
          LieMat g = LieMat::Zero(m_, m_);
          for (int k = 0; k < K_; ++k) g -= q0[k] * d.div[k] + (q0[K_ + k] * r) * d.rad[k];
          const int grow = row0 + mono_rows_;
          int t = 0;
          for (int a = 0; a < m_; ++a)
            for (int b = a + 1; b < m_; ++b, ++t) {
              rl[grow + t] = gs * std::sqrt(2.0) * g(a, b);
              if (jacobian)
                for (int k = 0; k < K_; ++k) {
                  const double dv = -gs * std::sqrt(2.0) * d.div[k](a, b);
                  const double dp = -gs * std::sqrt(2.0) * r * d.rad[k](a, b);
                  jl(grow + t, k) += 0.5 * dv - dp / h;
                  jl(grow + t, K_ + k) += 0.5 * dv + dp / h;
                }
            }
          gauge[n] += rl.segment(grow, gauge_rows_).squaredNorm();
        }
      }
      if (jacobian) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(jl);
        rblk[n] = qr.matrixQR().topRows(L).triangularView<Eigen::Upper>();
        cblk[n] = (qr.householderQ().transpose() * rl).head(L);
      }
    });
    Evaluation ev;
    for (int n = 0; n + 1 < N_; ++n) {
      ev.mono += mono[n];
      ev.gauge += gauge[n];
    }
    if (jacobian) {
      ev.jc.setZero(static_cast<Eigen::Index>(N_ - 1) * L, unknowns_);
      ev.c.resize(static_cast<Eigen::Index>(N_ - 1) * L);
      for (int n = 0; n + 1 < N_; ++n) {
        ev.c.segment(n * L, L) = cblk[n];
        for (int col = 0; col < L; ++col) {
          const int gcol = global_column(n, col);
          if (gcol >= 0) ev.jc.block(n * L, gcol, L, 1) = rblk[n].col(col);
        }
      }
    }
    return ev;
  }

 private:
  int f_index(int k, int n) const { return n == 0 ? -1 : k * (N_ - 1) + (n - 1); }
  int u_index(int n) const { return K_ * (N_ - 1) + n; }

  /// Local unknowns of interval n: f_k(n) [k], f_k(n+1) [K+k], u(n) [2K], u(n+1) [2K+1].
  int global_column(int n, int col) const {
    if (col < K_) return f_index(col, n);
    if (col < 2 * K_) return f_index(col - K_, n + 1);
    return u_index(n + (col - 2 * K_));
  }

  /// Scalars q = (fm_0..fm_{K-1}, fp_0..fp_{K-1}, um, up).
  std::pair<int, int> local_columns(int j) const {
    if (j < K_) return {j, K_ + j};
    if (j < 2 * K_) return {j - K_, j};
    return {2 * K_, 2 * K_ + 1};
  }
  bool is_mid(int j) const { return j < K_ || j == 2 * K_; }

  std::vector<double> scalars(const Eigen::VectorXd& z, int n) const {
    const double h = mesh_[n + 1] - mesh_[n];
    std::vector<double> q(2 * K_ + 2);
    for (int k = 0; k < K_; ++k) {
      const double a = n == 0 ? 0.0 : z[f_index(k, n)], b = z[f_index(k, n + 1)];
      q[k] = 0.5 * (a + b);
      q[K_ + k] = (b - a) / h;
    }
    const double a = z[u_index(n)], b = z[u_index(n + 1)];
    q[2 * K_] = 0.5 * (a + b);
    q[2 * K_ + 1] = (b - a) / h;
    return q;
  }

  void residual_rows(int n, std::size_t s, const double* q, double* out) const {
    const SampleData& d = samples_[s];
    const PointData& pd = points_[static_cast<std::size_t>(n) * samples_.size() + s];
    const double r = midpoint(n);
    FieldJet jet;
    for (int i = 0; i < 7; ++i) {
      LieMat a = d.a0[i];
      for (int k = 0; k < K_; ++k) a += q[k] * d.th[k][i];
      jet.a[i] = a / r;
    }
    for (int j = 0; j < 7; ++j)
      for (int i = 0; i < 7; ++i) {
        LieMat v = d.da0[j][i];
        for (int k = 0; k < K_; ++k) v += q[k] * d.dth[k][j][i];
        v /= r * r;
        for (int k = 0; k < K_; ++k) v += (q[K_ + k] * d.w[j] / r) * d.th[k][i];
        jet.da[j][i] = v;
      }
    const double um = q[2 * K_], up = q[2 * K_ + 1];
    jet.sigma = um * d.j;
    for (int j = 0; j < 7; ++j) jet.dsigma[j] = (up * d.w[j]) * d.j + (um / r) * d.dj[j];
    const LieValuedKForm res = monopole_residual(jet, pd.psi, pd.hodge1);
    int t = 0;
    for (int c = 0; c < 7; ++c)
      for (int a = 0; a < m_; ++a)
        for (int b = a + 1; b < m_; ++b) out[t++] = std::sqrt(2.0) * res[c](a, b);
  }

  int K_, m_;
  std::vector<double> mesh_;
  double gauge_;
  int N_ = 0, pairs_ = 0, mono_rows_ = 0, gauge_rows_ = 0, unknowns_ = 0;
  std::vector<SampleData> samples_;
  std::vector<PointData> points_;
  std::vector<double> weights_;
  std::vector<double> target_;
};

}  // namespace

std::vector<double> decay_radii(const SolverConfig& cfg) {
  return log_mesh(cfg.r_in * 1.02, cfg.r_out / 1.02, cfg.decay_radii);
}

SolveResult solve_monopole(const PolyFormField& phi, std::shared_ptr<const RadialAnsatz> ansatz,
                           const SolverConfig& cfg, const RadialProfilePair& init, const RadialProfilePair* target) {
  const auto t_start = std::chrono::steady_clock::now();
  if (!ansatz) throw InvalidInput("null ansatz");
  SolveResult out;
  SolveReport& rep = out.report;
  rep.preconditions = check_preconditions(phi, cfg);
  if (!rep.preconditions.c0_ok) {
    std::ostringstream msg;
    msg << "structure deviation " << rep.preconditions.c0_deviation << " on B(" << cfg.r_out << ") exceeds delta0 "
        << cfg.delta0;
    throw PreconditionError(msg.str());
  }
  if (!rep.preconditions.scale_ok) throw PreconditionError("1/(4 lambda) must be smaller than R0/2");

  const StructureField g(rescale_phi(phi, ScaleMap(cfg.lambda)));
  Problem prob(*ansatz, g, cfg);
  const int K = prob.templates();

  auto check_profiles = [&](const RadialProfilePair& p, const char* what) {
    p.validate();
    if (p.templates() != K) throw InvalidInput(std::string(what) + ": template count does not match the ansatz");
    if (p.mesh.size() != prob.mesh().size()) throw InvalidInput(std::string(what) + ": mesh size does not match");
    for (std::size_t i = 0; i < p.mesh.size(); ++i)
      if (std::abs(p.mesh[i] - prob.mesh()[i]) > 1e-12 * prob.mesh()[i])
        throw InvalidInput(std::string(what) + ": mesh differs from the configured log mesh");
  };
  check_profiles(init, "initial profiles");
  for (int k = 0; k < K; ++k)
    if (init.f[k][0] != 0.0) throw InvalidInput("initial profiles must vanish at r_in");
  if (target) {
    check_profiles(*target, "target profiles");
    for (int k = 0; k < K; ++k)
      if (target->f[k][0] != 0.0) throw InvalidInput("target profiles must vanish at r_in");
  }
  if (target) prob.set_target(*target);

  Eigen::VectorXd z = prob.pack(init);
  Evaluation ev = prob.evaluate(z, true);
  rep.initial_residual = std::sqrt(ev.mono);
  rep.initial_objective = ev.objective();
  rep.history.push_back(ev.objective());
  rep.stop_reason = "max_iter";
  for (int it = 0;; ++it) {
    if (std::sqrt(ev.mono) <= cfg.tol) {
      rep.converged = true;
      rep.stop_reason = "tol";
      break;
    }
    if (it >= cfg.max_iter) break;
    const Eigen::VectorXd grad = 2.0 * ev.jc.transpose() * ev.c;
    const double phi0 = ev.objective();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ev.jc);
    const Eigen::VectorXd gn = -cod.solve(ev.c);

    auto line_search = [&](const Eigen::VectorXd& dir, double alpha0, Eigen::VectorXd& z_new,
                           Evaluation& ev_new) -> bool {
      const double slope = grad.dot(dir);
      if (!(slope < 0)) return false;
      double alpha = alpha0;
      for (int bt = 0; bt < 40; ++bt, alpha *= 0.5) {
        z_new = z + alpha * dir;
        ev_new = prob.evaluate(z_new, false);
        if (ev_new.objective() <= phi0 + 1e-4 * alpha * slope) return true;
      }
      return false;
    };

    Eigen::VectorXd z_new;
    Evaluation ev_try;
    std::string kind = "gauss-newton";
    bool ok = gn.allFinite() && line_search(gn, 1.0, z_new, ev_try);
    if (!ok) {
      kind = "gradient";
      const double gg = grad.squaredNorm();
      ok = gg > 0 && line_search(-grad, phi0 / gg, z_new, ev_try);
    }
    if (!ok) {
      rep.stop_reason = "line-search";
      break;
    }
    const bool stalled = phi0 - ev_try.objective() <= 1e-15 * phi0;
    z = z_new;
    ev = prob.evaluate(z, true);
    rep.iterations = it + 1;
    rep.history.push_back(ev.objective());
    rep.step_kinds.push_back(kind);
    if (stalled) {
      rep.stop_reason = "stagnation";
      rep.converged = std::sqrt(ev.mono) <= cfg.tol;
      break;
    }
  }
  rep.final_residual = std::sqrt(ev.mono);
  rep.final_objective = ev.objective();
  rep.gauge_term = ev.gauge;
  out.profiles = prob.unpack(z);
  for (int k = 0; k < K; ++k) rep.boundary_mismatch = std::max(rep.boundary_mismatch, std::abs(out.profiles.f[k][0]));

  const RadialProfileField field(ansatz, out.profiles, ProfileInterpolation::Spline);
  out.decay_table =
      decay_profile(field, ConeConnection(ansatz->model), decay_radii(cfg), cfg.decay_samples, cfg.decay_order);
  rep.decay = fit_decay_rate(out.decay_table, cfg.theta);
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Profile CSV

void write_profiles_csv(std::ostream& out, const RadialProfilePair& p) {
  out << "r";
  if (p.templates() == 1) {
    out << ",f";
  } else {
    for (int k = 0; k < p.templates(); ++k) out << ",f" << (k + 1);
  }
  out << ",u\n" << std::setprecision(17);
  for (std::size_t n = 0; n < p.mesh.size(); ++n) {
    out << p.mesh[n];
    for (const auto& fk : p.f) out << ',' << fk[n];
    out << ',' << p.u[n] << '\n';
  }
}

RadialProfilePair read_profiles_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("profile table: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.size() < 3 || cols.front() != "r" || cols.back() != "u")
    throw InvalidInput("profile table: unexpected header '" + line + "'");
  const int K = static_cast<int>(cols.size()) - 2;
  for (int k = 0; k < K; ++k) {
    const std::string want = K == 1 ? "f" : "f" + std::to_string(k + 1);
    if (cols[k + 1] != want) throw InvalidInput("profile table: unexpected column '" + cols[k + 1] + "'");
  }
  RadialProfilePair p;
  p.f.resize(K);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double r;
    std::vector<double> vals(K + 1);
    if (!(ls >> r)) throw InvalidInput("profile table: malformed row at line " + std::to_string(lineno));
    for (auto& v : vals)
      if (!(ls >> v)) throw InvalidInput("profile table: malformed row at line " + std::to_string(lineno));
    p.mesh.push_back(r);
    for (int k = 0; k < K; ++k) p.f[k].push_back(vals[k]);
    p.u.push_back(vals[K]);
  }
  p.validate();
  return p;
}

}  // namespace g2lab
