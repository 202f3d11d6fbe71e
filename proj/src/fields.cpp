#include "g2lab/fields.hpp"

#include "g2lab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace g2lab {

namespace {

LieMat commutator(const LieMat& a, const LieMat& b) { return a * b - b * a; }

}  // namespace

std::array<OneFormCoeffs, 7> fd_gradient(const std::function<OneFormCoeffs(const Vec7&)>& f, const Vec7& x,
                                         double h) {
  std::array<OneFormCoeffs, 7> d;
  for (int j = 0; j < 7; ++j) {
    const Vec7 e = Vec7::Unit(j) * h;
    const OneFormCoeffs p1 = f(x + e), m1 = f(x - e), p2 = f(x + 2 * e), m2 = f(x - 2 * e);
    for (int i = 0; i < 7; ++i) d[j][i] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
  }
  return d;
}

namespace {

std::array<LieMat, 7> fd_gradient0(const std::function<LieMat(const Vec7&)>& f, const Vec7& x, double h) {
  std::array<LieMat, 7> d;
  for (int j = 0; j < 7; ++j) {
    const Vec7 e = Vec7::Unit(j) * h;
    d[j] = (-f(x + 2 * e) + 8.0 * f(x + e) - 8.0 * f(x - e) + f(x - 2 * e)) / (12.0 * h);
  }
  return d;
}

double fd_step(const Vec7& x) {
  const double r = x.norm();
  return r > 0 ? 1e-4 * r : 1e-4;
}

}  // namespace

FieldJet FieldPair::jet(const Vec7& x, Chart c) const {
  FieldJet j;
  const double h = fd_step(x);
  j.a = connection(x, c);
  j.da = fd_gradient([&](const Vec7& y) { return connection(y, c); }, x, h);
  j.sigma = higgs(x, c);
  j.dsigma = fd_gradient0([&](const Vec7& y) { return higgs(y, c); }, x, h);
  return j;
}

// ---------------------------------------------------------------------------

PolynomialFieldPair::PolynomialFieldPair(PolyLieForm a, PolyLieForm sigma, Annulus domain)
    : a_(std::move(a)), sigma_(std::move(sigma)), domain_(domain) {
  if (a_.degree() != 1 || sigma_.degree() != 0) throw InvalidInput("polynomial field pair needs (1-form, 0-form)");
  if (a_.rank() != sigma_.rank()) throw InvalidInput("connection and Higgs field ranks differ");
  if (!(domain_.r_in >= 0 && domain_.r_in < domain_.r_out)) throw InvalidInput("invalid annulus");
}

OneFormCoeffs PolynomialFieldPair::connection(const Vec7& x, Chart) const {
  OneFormCoeffs out;
  for (int i = 0; i < 7; ++i) out[i] = a_.value(i, x);
  return out;
}

LieMat PolynomialFieldPair::higgs(const Vec7& x, Chart) const { return sigma_.value(0, x); }

FieldJet PolynomialFieldPair::jet(const Vec7& x, Chart c) const {
  FieldJet j;
  j.a = connection(x, c);
  for (int k = 0; k < 7; ++k)
    for (int i = 0; i < 7; ++i) j.da[k][i] = a_.derivative(i, k, x);
  j.sigma = sigma_.value(0, x);
  for (int k = 0; k < 7; ++k) j.dsigma[k] = sigma_.derivative(0, k, x);
  return j;
}

ConeFieldPair::ConeFieldPair(ConeConnection a0, Annulus domain) : a0_(std::move(a0)), domain_(domain) {
  if (!(domain_.r_in > 0 && domain_.r_in < domain_.r_out)) throw InvalidInput("cone fields need 0 < r_in < r_out");
}

FunctionFieldPair::FunctionFieldPair(int rank, Annulus domain, ConnectionFn a, HiggsFn sigma)
    : rank_(rank), domain_(domain), a_(std::move(a)), sigma_(std::move(sigma)) {
  if (!(domain_.r_in >= 0 && domain_.r_in < domain_.r_out)) throw InvalidInput("invalid annulus");
}

// ---------------------------------------------------------------------------

RadialProfilePair RadialProfilePair::zeros(std::vector<double> mesh, int n_templates) {
  RadialProfilePair p;
  const std::size_t n = mesh.size();
  p.mesh = std::move(mesh);
  p.f.assign(n_templates, std::vector<double>(n, 0.0));
  p.u.assign(n, 0.0);
  p.validate();
  return p;
}

void RadialProfilePair::validate() const {
  if (mesh.size() < 2) throw InvalidInput("radial mesh needs at least two points");
  if (!(mesh.front() > 0)) throw InvalidInput("radial mesh must be positive");
  for (std::size_t i = 1; i < mesh.size(); ++i)
    if (!(mesh[i] > mesh[i - 1])) throw InvalidInput("radial mesh must be strictly increasing");
  for (const auto& fk : f)
    if (fk.size() != mesh.size()) throw InvalidInput("profile length does not match mesh");
  if (u.size() != mesh.size()) throw InvalidInput("Higgs profile length does not match mesh");
  for (const auto& fk : f)
    for (double v : fk)
      if (!std::isfinite(v)) throw InvalidInput("non-finite connection profile value");
  for (double v : u)
    if (!std::isfinite(v)) throw InvalidInput("non-finite Higgs profile value");
}

std::pair<double, double> RadialProfilePair::sample(std::span<const double> values, double r) const {
  auto it = std::upper_bound(mesh.begin(), mesh.end(), r);
  std::size_t hi = static_cast<std::size_t>(it - mesh.begin());
  hi = std::clamp<std::size_t>(hi, 1, mesh.size() - 1);
  const std::size_t lo = hi - 1;
  const double slope = (values[hi] - values[lo]) / (mesh[hi] - mesh[lo]);
  return {values[lo] + slope * (r - mesh[lo]), slope};
}

std::vector<double> log_mesh(double r_in, double r_out, int n) {
  if (!(r_in > 0 && r_out > r_in) || n < 2) throw InvalidInput("log mesh needs 0 < r_in < r_out and n >= 2");
  std::vector<double> m(n);
  const double a = std::log(r_in), b = std::log(r_out);
  for (int i = 0; i < n; ++i) m[i] = std::exp(a + (b - a) * i / (n - 1));
  m.front() = r_in;
  m.back() = r_out;
  return m;
}

namespace {

/// Second derivatives of the natural cubic spline through (x, y).
std::vector<double> spline_curvature(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  std::vector<double> diag(n, 0.0), rhs(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    diag[i] = 2.0 * (h0 + h1);
    rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double sub = x[i] - x[i - 1];
    const double w = sub / diag[i - 1];
    diag[i] -= w * sub;
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    const double sup = x[i + 1] - x[i];
    m[i] = (rhs[i] - sup * m[i + 1]) / diag[i];
  }
  return m;
}

}  // namespace

RadialProfileField::RadialProfileField(std::shared_ptr<const RadialAnsatz> ansatz, RadialProfilePair profiles,
                                       ProfileInterpolation interp)
    : ansatz_(std::move(ansatz)), a0_(ansatz_->model), profiles_(std::move(profiles)), interp_(interp) {
  profiles_.validate();
  if (profiles_.templates() != static_cast<int>(ansatz_->templates.size()))
    throw InvalidInput("profile count does not match ansatz templates");
  if (interp_ == ProfileInterpolation::Spline) {
    for (const auto& fk : profiles_.f) curvature_.push_back(spline_curvature(profiles_.mesh, fk));
    curvature_.push_back(spline_curvature(profiles_.mesh, profiles_.u));
  }
}

std::pair<double, double> RadialProfileField::profile(int k, double r) const {
  const auto& y = k < profiles_.templates() ? profiles_.f[k] : profiles_.u;
  if (interp_ == ProfileInterpolation::Linear) return profiles_.sample(y, r);
  const auto& x = profiles_.mesh;
  const auto& m = curvature_[k];
  auto it = std::upper_bound(x.begin(), x.end(), r);
  std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - x.begin()), 1, x.size() - 1);
  const std::size_t lo = hi - 1;
  const double h = x[hi] - x[lo], a = (x[hi] - r) / h, b = (r - x[lo]) / h;
  const double v = a * y[lo] + b * y[hi] + ((a * a * a - a) * m[lo] + (b * b * b - b) * m[hi]) * h * h / 6.0;
  const double d = (y[hi] - y[lo]) / h + ((1.0 - 3.0 * a * a) * m[lo] + (3.0 * b * b - 1.0) * m[hi]) * h / 6.0;
  return {v, d};
}

OneFormCoeffs RadialProfileField::connection(const Vec7& x, Chart c) const {
  const double r = x.norm();
  OneFormCoeffs a = a0_.coefficients(x, c);
  for (int k = 0; k < profiles_.templates(); ++k) {
    const double fk = profile(k, r).first;
    if (fk == 0.0) continue;
    const OneFormCoeffs t = ansatz_->templates[k](x, c);
    for (int i = 0; i < 7; ++i) a[i] += fk * t[i];
  }
  return a;
}

LieMat RadialProfileField::higgs(const Vec7& x, Chart c) const {
  const double r = x.norm();
  return profile(profiles_.templates(), r).first * ansatz_->higgs_template(c, x / r);
}

FieldJet RadialProfileField::jet(const Vec7& x, Chart c) const {
  const double r = x.norm();
  if (!(r > 0)) throw InvalidInput("radial profile fields are undefined at the origin");
  const Vec7 w = x / r;
  const double h = fd_step(x);
  FieldJet j;
  j.a = a0_.coefficients(x, c);
  j.da = fd_gradient([&](const Vec7& y) { return a0_.coefficients(y, c); }, x, h);
  for (int k = 0; k < profiles_.templates(); ++k) {
    const auto [fk, dfk] = profile(k, r);
    const auto& tk = ansatz_->templates[k];
    const OneFormCoeffs t = tk(x, c);
    const auto dt = fd_gradient([&](const Vec7& y) { return tk(y, c); }, x, h);
    for (int i = 0; i < 7; ++i) {
      j.a[i] += fk * t[i];
      for (int q = 0; q < 7; ++q) j.da[q][i] += fk * dt[q][i] + (dfk * w[q]) * t[i];
    }
  }
  const auto [u, du] = profile(profiles_.templates(), r);
  const auto& sig = ansatz_->higgs_template;
  const LieMat s0 = sig(c, w);
  const auto ds0 = fd_gradient0([&](const Vec7& y) { return sig(c, y / y.norm()); }, x, h);
  j.sigma = u * s0;
  for (int q = 0; q < 7; ++q) j.dsigma[q] = u * ds0[q] + (du * w[q]) * s0;
  return j;
}

// ---------------------------------------------------------------------------

std::size_t GridLieField::node_count() const {
  std::size_t c = 1;
  for (int a = 0; a < 7; ++a) c *= static_cast<std::size_t>(n);
  return c;
}

Vec7 GridLieField::node_point(const std::array<int, 7>& idx) const {
  Vec7 x;
  for (int a = 0; a < 7; ++a) x[a] = lo + spacing() * idx[a];
  return x;
}

std::array<int, 7> GridLieField::node_of(const Vec7& x) const {
  std::array<int, 7> idx;
  const double h = spacing();
  for (int a = 0; a < 7; ++a) {
    const double t = (x[a] - lo) / h;
    const double k = std::round(t);
    if (std::abs(t - k) > 1e-9 || k < 0 || k > n - 1)
      throw InvalidInput("grid-backed fields are evaluated at grid nodes only");
    idx[a] = static_cast<int>(k);
  }
  return idx;
}

namespace {
std::size_t linear_node(const GridLieField& f, const std::array<int, 7>& idx) {
  std::size_t lin = 0;
  for (int a = 0; a < 7; ++a) lin = lin * static_cast<std::size_t>(f.n) + static_cast<std::size_t>(idx[a]);
  return lin;
}
}  // namespace

LieMat GridLieField::value(const std::array<int, 7>& idx, int component) const {
  const std::size_t m2 = static_cast<std::size_t>(rank) * rank;
  const std::size_t off = (linear_node(*this, idx) * components() + component) * m2;
  LieMat out(rank, rank);
  for (int r = 0; r < rank; ++r)
    for (int c = 0; c < rank; ++c) out(r, c) = data[off + r * rank + c];
  return out;
}

GridLieField GridLieField::sample(int rank, int degree, int n, double lo, double hi,
                                  const std::function<std::vector<LieMat>(const Vec7&)>& f) {
  if (n < 3 || n > 7) throw InvalidInput("grid fields use 3..7 points per axis");
  if (degree != 0 && degree != 1) throw InvalidInput("grid fields hold 0- or 1-forms");
  GridLieField g;
  g.rank = rank;
  g.degree = degree;
  g.n = n;
  g.lo = lo;
  g.hi = hi;
  const std::size_t m2 = static_cast<std::size_t>(rank) * rank;
  g.data.resize(g.node_count() * g.components() * m2);
  std::array<int, 7> idx{};
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    std::size_t rem = node;
    for (int a = 6; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % n);
      rem /= n;
    }
    const auto vals = f(g.node_point(idx));
    for (int comp = 0; comp < g.components(); ++comp)
      for (int r = 0; r < rank; ++r)
        for (int c = 0; c < rank; ++c) g.data[(node * g.components() + comp) * m2 + r * rank + c] = vals[comp](r, c);
  }
  return g;
}

namespace {

constexpr char kMagic[8] = {'G', '2', 'L', 'F', 'I', 'E', 'L', 'D'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw InvalidInput("grid field file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw InvalidInput("grid field file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void write_grid_field(std::ostream& out, const GridLieField& f) {
  out.write(kMagic, 8);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(f.rank));
  put_u32(out, static_cast<std::uint32_t>(f.degree));
  put_u32(out, static_cast<std::uint32_t>(f.n));
  put_f64(out, f.lo);
  put_f64(out, f.hi);
  for (double d : f.data) put_f64(out, d);
}

GridLieField read_grid_field(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw InvalidInput("not a grid field file");
  if (get_u32(in) != 1) throw InvalidInput("unsupported grid field version");
  GridLieField f;
  f.rank = static_cast<int>(get_u32(in));
  f.degree = static_cast<int>(get_u32(in));
  f.n = static_cast<int>(get_u32(in));
  f.lo = get_f64(in);
  f.hi = get_f64(in);
  if (f.rank < 1 || f.rank > 8 || (f.degree != 0 && f.degree != 1) || f.n < 3 || f.n > 7 || !(f.hi > f.lo))
    throw InvalidInput("grid field header out of range");
  f.data.resize(f.node_count() * f.components() * static_cast<std::size_t>(f.rank) * f.rank);
  for (auto& d : f.data) d = get_f64(in);
  return f;
}

void write_grid_field_file(const std::string& path, const GridLieField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write grid field file: " + path);
  write_grid_field(out, f);
}

GridLieField read_grid_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open grid field file: " + path);
  return read_grid_field(in);
}

GridFieldPair::GridFieldPair(GridLieField a, GridLieField sigma) : a_(std::move(a)), sigma_(std::move(sigma)) {
  if (a_.degree != 1 || sigma_.degree != 0) throw InvalidInput("grid field pair needs (1-form, 0-form)");
  if (a_.rank != sigma_.rank || a_.n != sigma_.n || a_.lo != sigma_.lo || a_.hi != sigma_.hi)
    throw InvalidInput("grid connection and Higgs field use different meshes");
}

Annulus GridFieldPair::domain() const { return {0.0, std::min(-a_.lo, a_.hi)}; }

OneFormCoeffs GridFieldPair::connection(const Vec7& x, Chart) const {
  const auto idx = a_.node_of(x);
  OneFormCoeffs out;
  for (int i = 0; i < 7; ++i) out[i] = a_.value(idx, i);
  return out;
}

LieMat GridFieldPair::higgs(const Vec7& x, Chart) const { return sigma_.value(sigma_.node_of(x), 0); }

FieldJet GridFieldPair::jet(const Vec7& x, Chart c) const {
  const auto idx = a_.node_of(x);
  for (int a = 0; a < 7; ++a)
    if (idx[a] < 1 || idx[a] > a_.n - 2) throw InvalidInput("finite-difference stencil leaves the grid");
  const double h = a_.spacing();
  FieldJet j;
  j.a = connection(x, c);
  j.sigma = higgs(x, c);
  for (int q = 0; q < 7; ++q) {
    auto up = idx, dn = idx;
    ++up[q];
    --dn[q];
    for (int i = 0; i < 7; ++i) j.da[q][i] = (a_.value(up, i) - a_.value(dn, i)) / (2 * h);
    j.dsigma[q] = (sigma_.value(up, 0) - sigma_.value(dn, 0)) / (2 * h);
  }
  return j;
}

// ---------------------------------------------------------------------------

StructureField::StructureField(PolyFormField phi) : phi_(std::move(phi)) {
  if (phi_.degree() != 3) throw InvalidInput("structure field needs a 3-form");
}

LieValuedKForm curvature(const FieldJet& j) {
  const int m = static_cast<int>(j.sigma.rows());
  LieValuedKForm f(2, m);
  const auto& idx = basis_indices(2);
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const unsigned mask = idx[n].mask();
    int i = -1, k = -1;
    for (int a = 0; a < 7; ++a)
      if (mask & (1u << a)) (i < 0 ? i : k) = a;
    f[n] = j.da[i][k] - j.da[k][i] + commutator(j.a[i], j.a[k]);
  }
  return f;
}

LieValuedKForm covariant_d(const FieldJet& j) {
  const int m = static_cast<int>(j.sigma.rows());
  LieValuedKForm d(1, m);
  for (int i = 0; i < 7; ++i) d[i] = j.dsigma[i] + commutator(j.a[i], j.sigma);
  return d;
}

LieValuedKForm monopole_residual(const FieldJet& j, const KForm& psi, const Eigen::MatrixXd& hodge1) {
  LieValuedKForm out = wedge(curvature(j), psi);
  const LieValuedKForm d = covariant_d(j);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c)
      if (hodge1(r, c) != 0.0) out[r] += hodge1(r, c) * d[c];
  return out;
}

LieValuedKForm monopole_residual(const FieldJet& j, const G2Structure& g) {
  return monopole_residual(j, g.psi, hodge_matrix(g.g, 1));
}

namespace {
void require_in_domain(const FieldPair& p, const Vec7& x) {
  const Annulus d = p.domain();
  const double r = x.norm();
  if (!d.contains(r)) throw InvalidInput("evaluation point lies outside the field's annulus");
}
}  // namespace

LieValuedKForm curvature(const FieldPair& p, const Vec7& x) {
  require_in_domain(p, x);
  return curvature(p.jet(x));
}

LieValuedKForm covariant_d(const FieldPair& p, const Vec7& x) {
  require_in_domain(p, x);
  return covariant_d(p.jet(x));
}

LieValuedKForm monopole_residual(const FieldPair& p, const StructureField& g, const Vec7& x) {
  require_in_domain(p, x);
  return monopole_residual(p.jet(x), g.at(x));
}

// ---------------------------------------------------------------------------
// Decay profiles

namespace {

using Offset = std::array<std::int8_t, 7>;
using Tensor = std::vector<LieMat>;  // (j_1 .. j_k, i) row-major, i fastest

class DerivativeLadder {
 public:
  DerivativeLadder(const FieldPair& p, const ConeConnection& a0, const Vec7& x, Chart c, double h)
      : p_(p), a0_(a0), x_(x), c_(c), h_(h) {}

  const Tensor& level(int k, const Offset& off, bool covariant) {
    if (k == 0) return base(off);
    auto& memo = covariant ? cov_ : coord_;
    const auto key = std::make_pair(k, off);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t prev = 7 * pow7(k - 1);
    Tensor out(prev * 7);
    for (int j = 0; j < 7; ++j) {
      Offset up = off, dn = off;
      ++up[j];
      --dn[j];
      const Tensor& tu = level(k - 1, up, covariant);
      const Tensor& td = level(k - 1, dn, covariant);
      for (std::size_t n = 0; n < prev; ++n) {
        const std::size_t prefix = n / 7, i = n % 7;
        out[(prefix * 7 + j) * 7 + i] = (tu[n] - td[n]) / (2 * h_);
      }
    }
    if (covariant) {
      const Tensor& centre = level(k - 1, off, true);
      const OneFormCoeffs& a0 = a0_at(off);
      for (int j = 0; j < 7; ++j)
        for (std::size_t n = 0; n < prev; ++n) {
          const std::size_t prefix = n / 7, i = n % 7;
          out[(prefix * 7 + j) * 7 + i] += commutator(a0[j], centre[n]);
        }
    }
    return memo.emplace(key, std::move(out)).first->second;
  }

 private:
  static std::size_t pow7(int k) {
    std::size_t v = 1;
    for (int i = 0; i < k; ++i) v *= 7;
    return v;
  }

  Vec7 point(const Offset& off) const {
    Vec7 y = x_;
    for (int a = 0; a < 7; ++a) y[a] += h_ * off[a];
    return y;
  }

  const OneFormCoeffs& a0_at(const Offset& off) {
    auto it = a0_cache_.find(off);
    if (it == a0_cache_.end()) it = a0_cache_.emplace(off, a0_.coefficients(point(off), c_)).first;
    return it->second;
  }

  const Tensor& base(const Offset& off) {
    if (auto it = base_.find(off); it != base_.end()) return it->second;
    const OneFormCoeffs a = p_.connection(point(off), c_);
    const OneFormCoeffs& a0 = a0_at(off);
    Tensor t(7);
    for (int i = 0; i < 7; ++i) t[i] = a[i] - a0[i];
    return base_.emplace(off, std::move(t)).first->second;
  }

  const FieldPair& p_;
  const ConeConnection& a0_;
  Vec7 x_;
  Chart c_;
  double h_;
  std::map<std::pair<int, Offset>, Tensor> coord_, cov_;
  std::map<Offset, Tensor> base_;
  std::map<Offset, OneFormCoeffs> a0_cache_;
};

double tensor_norm(const Tensor& t) {
  double s = 0;
  for (const auto& m : t) s += m.squaredNorm();
  return std::sqrt(s);
}

}  // namespace

DecayTable decay_profile(const FieldPair& p, const ConeConnection& a0, std::span<const double> radii,
                         int samples_per_sphere, int max_order) {
  if (radii.empty()) throw InvalidInput("decay profile needs at least one radius");
  if (samples_per_sphere < 1) throw InvalidInput("decay profile needs at least one sample per sphere");
  if (max_order < 0 || max_order > 3) throw InvalidInput("decay profile orders lie in 0..3");
  if (p.rank() != a0.rank()) throw InvalidInput("field and model connection ranks differ");
  std::vector<double> rs(radii.begin(), radii.end());
  std::sort(rs.begin(), rs.end(), std::greater<>());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  const Annulus dom = p.domain();
  for (double r : rs)
    if (!(r > 0) || !dom.contains(r)) throw InvalidInput("decay radius outside the field's annulus");

  const auto dirs = sphere_points(samples_per_sphere);
  const int orders = max_order + 1;
  // sup[(ri * samples + s) * orders + l] per (coord, cov)
  std::vector<double> coord(rs.size() * dirs.size() * orders, 0.0), cov(coord.size(), 0.0);
  parallel_for(rs.size() * dirs.size(), [&](std::size_t n) {
    const std::size_t ri = n / dirs.size(), s = n % dirs.size();
    const Vec7 x = rs[ri] * dirs[s];
    DerivativeLadder ladder(p, a0, x, preferred_chart(x), kDecayStepFraction * rs[ri]);
    for (int l = 0; l < orders; ++l) {
      coord[n * orders + l] = tensor_norm(ladder.level(l, Offset{}, false));
      cov[n * orders + l] = tensor_norm(ladder.level(l, Offset{}, true));
    }
  });

  DecayTable t;
  t.samples_per_sphere = samples_per_sphere;
  t.step_fraction = kDecayStepFraction;
  for (std::size_t ri = 0; ri < rs.size(); ++ri) {
    double coord_cum = 0;
    for (int l = 0; l < orders; ++l) {
      double cs = 0, vs = 0;
      for (std::size_t s = 0; s < dirs.size(); ++s) {
        const std::size_t n = ri * dirs.size() + s;
        cs = std::max(cs, coord[n * orders + l]);
        vs = std::max(vs, cov[n * orders + l]);
      }
      t.rows.push_back({rs[ri], l, cs, vs});
      coord_cum += cs;
      if (coord_cum > 0) t.cov_constant = std::max(t.cov_constant, vs / coord_cum);
    }
  }
  return t;
}

void write_decay_csv(std::ostream& out, const DecayTable& t) {
  out << "r,l,coord_sup,cov_sup\n" << std::setprecision(17);
  for (const auto& row : t.rows) out << row.r << ',' << row.l << ',' << row.coord_sup << ',' << row.cov_sup << '\n';
}

DecayTable read_decay_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("decay table: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "r,l,coord_sup,cov_sup") throw InvalidInput("decay table: unexpected header '" + line + "'");
  DecayTable t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    DecayRow row{};
    if (!(ls >> row.r >> row.l >> row.coord_sup >> row.cov_sup))
      throw InvalidInput("decay table: malformed row at line " + std::to_string(lineno));
    if (row.l < 0 || row.coord_sup < 0 || row.cov_sup < 0 || !(row.r > 0))
      throw InvalidInput("decay table: out-of-range value at line " + std::to_string(lineno));
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace g2lab
