#include "g2lab/polynomial.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace g2lab {

int total_degree(const Exponent& e) {
  int d = 0;
  for (auto v : e) d += v;
  return d;
}

Polynomial Polynomial::constant(double c) {
  Polynomial p;
  p.add_term(Exponent{}, c);
  return p;
}

Polynomial Polynomial::variable(int axis, double coeff) {
  if (axis < 0 || axis >= 7) throw InvalidInput("polynomial variable index out of range");
  Exponent e{};
  e[axis] = 1;
  return monomial(e, coeff);
}

Polynomial Polynomial::monomial(const Exponent& e, double coeff) {
  Polynomial p;
  p.add_term(e, coeff);
  return p;
}

void Polynomial::add_term(const Exponent& e, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::operator()(const Vec7& x) const {
  double sum = 0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (int i = 0; i < 7; ++i)
      for (int k = 0; k < e[i]; ++k) t *= x[i];
    sum += t;
  }
  return sum;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
  return d;
}

double Polynomial::constant_term() const {
  auto it = terms_.find(Exponent{});
  return it == terms_.end() ? 0.0 : it->second;
}

Polynomial Polynomial::derivative(int axis) const {
  Polynomial out;
  for (const auto& [e, c] : terms_) {
    if (e[axis] == 0) continue;
    Exponent f = e;
    f[axis] -= 1;
    out.add_term(f, c * e[axis]);
  }
  return out;
}

Polynomial Polynomial::derivative(const Exponent& orders) const {
  Polynomial out = *this;
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < orders[i]; ++k) out = out.derivative(i);
  return out;
}

Polynomial Polynomial::scaled_argument(double s) const {
  Polynomial out;
  for (const auto& [e, c] : terms_) out.add_term(e, c * std::pow(s, total_degree(e)));
  return out;
}

Vec7 Polynomial::gradient_at_zero() const {
  Vec7 g = Vec7::Zero();
  for (int i = 0; i < 7; ++i) {
    Exponent e{};
    e[i] = 1;
    auto it = terms_.find(e);
    if (it != terms_.end()) g[i] = it->second;
  }
  return g;
}

Mat7 Polynomial::hessian_at_zero() const {
  Mat7 h = Mat7::Zero();
  for (int i = 0; i < 7; ++i)
    for (int j = i; j < 7; ++j) {
      Exponent e{};
      e[i] += 1;
      e[j] += 1;
      auto it = terms_.find(e);
      if (it == terms_.end()) continue;
      const double v = (i == j) ? 2.0 * it->second : it->second;
      h(i, j) = h(j, i) = v;
    }
  return h;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ea, ca] : a.terms_)
    for (const auto& [eb, cb] : b.terms_) {
      Exponent e;
      for (int i = 0; i < 7; ++i) e[i] = static_cast<std::uint8_t>(ea[i] + eb[i]);
      out.add_term(e, ca * cb);
    }
  return out;
}

// ---------------------------------------------------------------------------

PolyFormField::PolyFormField(int degree) : degree_(degree) {
  if (degree < 0 || degree > 7) throw InvalidInput("form degree must lie in 0..7");
  comps_.resize(binomial7(degree));
}

PolyFormField PolyFormField::constant(const KForm& a) {
  PolyFormField f(a.degree());
  for (std::size_t i = 0; i < a.size(); ++i) f.comps_[i] = Polynomial::constant(a[i]);
  return f;
}

int PolyFormField::max_degree() const {
  int d = -1;
  for (const auto& p : comps_) d = std::max(d, p.degree());
  return d;
}

KForm PolyFormField::operator()(const Vec7& x) const {
  KForm out(degree_);
  for (std::size_t i = 0; i < comps_.size(); ++i) out[i] = comps_[i](x);
  return out;
}

PolyFormField PolyFormField::scaled_argument(double s) const {
  PolyFormField out(degree_);
  for (std::size_t i = 0; i < comps_.size(); ++i) out.comps_[i] = comps_[i].scaled_argument(s);
  return out;
}

PolyFormField& PolyFormField::operator+=(const PolyFormField& o) {
  if (o.degree_ != degree_) throw InvalidInput("polynomial form degree mismatch");
  for (std::size_t i = 0; i < comps_.size(); ++i) comps_[i] += o.comps_[i];
  return *this;
}

void write_polyform(std::ostream& out, const PolyFormField& f) {
  out << "polyform " << f.degree() << '\n' << std::setprecision(17);
  const auto& idx = basis_indices(f.degree());
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (const auto& [e, c] : f[i].terms()) {
      for (int ax : idx[i].axes()) out << ax + 1 << ' ';
      out << c;
      for (auto v : e) out << ' ' << static_cast<int>(v);
      out << '\n';
    }
  }
}

PolyFormField read_polyform(std::istream& in) {
  std::string line;
  int degree = -1;
  PolyFormField f(0);
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (degree < 0) {
      if (first != "polyform" || !(ls >> degree) || degree < 0 || degree > 7)
        throw InvalidInput("polyform file: expected 'polyform <k>' header at line " + std::to_string(lineno));
      f = PolyFormField(degree);
      continue;
    }
    std::istringstream all(line);
    std::vector<int> axes(degree);
    for (auto& a : axes)
      if (!(all >> a)) throw InvalidInput("polyform file: malformed index at line " + std::to_string(lineno));
    double c;
    if (!(all >> c) || !std::isfinite(c))
      throw InvalidInput("polyform file: bad coefficient at line " + std::to_string(lineno));
    Exponent e{};
    for (auto& v : e) {
      int k;
      if (!(all >> k) || k < 0 || k > 20)
        throw InvalidInput("polyform file: bad exponent at line " + std::to_string(lineno));
      v = static_cast<std::uint8_t>(k);
    }
    f.component(MultiIndex::from_axes(std::span<const int>(axes))) += Polynomial::monomial(e, c);
  }
  if (degree < 0) throw InvalidInput("polyform file: missing header");
  return f;
}

PolyFormField read_polyform_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open form file: " + path);
  std::string first;
  in >> first;
  in.seekg(0);
  if (first == "degree") return PolyFormField::constant(read_form(in));
  return read_polyform(in);
}

// ---------------------------------------------------------------------------

PolyLieForm::PolyLieForm(int degree, int rank) : degree_(degree), rank_(rank) {
  if (degree != 0 && degree != 1) throw InvalidInput("PolyLieForm supports degrees 0 and 1");
  comps_.resize(degree == 0 ? 1 : 7);
}

void PolyLieForm::add(int component, const Polynomial& p, const LieMat& m) {
  if (m.rows() != rank_ || m.cols() != rank_) throw InvalidInput("Lie coefficient has wrong rank");
  Term t{p, {}, m};
  for (int j = 0; j < 7; ++j) t.dp[j] = p.derivative(j);
  comps_.at(component).push_back(std::move(t));
}

LieMat PolyLieForm::value(int component, const Vec7& x) const {
  LieMat out = LieMat::Zero(rank_, rank_);
  for (const auto& t : comps_.at(component)) out += t.p(x) * t.m;
  return out;
}

LieMat PolyLieForm::derivative(int component, int axis, const Vec7& x) const {
  LieMat out = LieMat::Zero(rank_, rank_);
  for (const auto& t : comps_.at(component)) out += t.dp[axis](x) * t.m;
  return out;
}

PolyLieForm PolyLieForm::pullback_scaled(double s) const {
  PolyLieForm out(degree_, rank_);
  const double factor = degree_ == 1 ? s : 1.0;
  for (std::size_t c = 0; c < comps_.size(); ++c)
    for (const auto& t : comps_[c]) out.add(static_cast<int>(c), t.p.scaled_argument(s) * factor, t.m);
  return out;
}

PolyLieForm& PolyLieForm::operator*=(double s) {
  for (auto& comp : comps_)
    for (auto& t : comp) t.m *= s;
  return *this;
}

}  // namespace g2lab
