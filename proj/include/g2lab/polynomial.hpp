#pragma once

#include "g2lab/forms7.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace g2lab {

using Exponent = std::array<std::uint8_t, 7>;

int total_degree(const Exponent& e);

/// Real polynomial in seven variables, stored as a sorted monomial table.
class Polynomial {
 public:
  Polynomial() = default;
  static Polynomial constant(double c);
  static Polynomial variable(int axis, double coeff = 1.0);  // 0-based axis
  static Polynomial monomial(const Exponent& e, double coeff);

  double operator()(const Vec7& x) const;
  int degree() const;  // -1 for the zero polynomial
  bool is_zero() const { return terms_.empty(); }
  double constant_term() const;
  const std::map<Exponent, double>& terms() const { return terms_; }

  Polynomial derivative(int axis) const;
  Polynomial derivative(const Exponent& orders) const;
  /// q(x) = p(s x).
  Polynomial scaled_argument(double s) const;
  Vec7 gradient_at_zero() const;
  Mat7 hessian_at_zero() const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

 private:
  void add_term(const Exponent& e, double c);
  std::map<Exponent, double> terms_;
};

/// k-form whose coefficient functions are polynomials in y_1..y_7.
class PolyFormField {
 public:
  explicit PolyFormField(int degree = 3);
  static PolyFormField constant(const KForm& a);

  int degree() const { return degree_; }
  std::size_t size() const { return comps_.size(); }
  const Polynomial& operator[](std::size_t i) const { return comps_[i]; }
  Polynomial& operator[](std::size_t i) { return comps_[i]; }
  Polynomial& component(MultiIndex idx) { return comps_[idx.position()]; }
  const Polynomial& component(MultiIndex idx) const { return comps_[idx.position()]; }
  int max_degree() const;

  KForm operator()(const Vec7& x) const;
  /// Coefficient functions composed with x -> s x.
  PolyFormField scaled_argument(double s) const;

  PolyFormField& operator+=(const PolyFormField& o);

 private:
  int degree_;
  std::vector<Polynomial> comps_;
};

/// Text format:
///   polyform <k>
///   <i_1> .. <i_k> <coeff> <e_1> .. <e_7>     one monomial per line
void write_polyform(std::ostream& out, const PolyFormField& f);
PolyFormField read_polyform(std::istream& in);
/// Accepts either the polyform format or a constant form file ("degree <k>").
PolyFormField read_polyform_file(const std::string& path);

/// so(m)-valued k-form (k = 0 or 1) with polynomial coefficients:
/// component I is sum_t p_t(x) M_t.
class PolyLieForm {
 public:
  PolyLieForm(int degree, int rank);

  int degree() const { return degree_; }
  int rank() const { return rank_; }
  void add(int component, const Polynomial& p, const LieMat& m);

  LieMat value(int component, const Vec7& x) const;
  LieMat derivative(int component, int axis, const Vec7& x) const;
  /// Same field pulled back by x -> s x: coefficients s^k p(s x).
  PolyLieForm pullback_scaled(double s) const;
  PolyLieForm& operator*=(double s);

 private:
  struct Term {
    Polynomial p;
    std::array<Polynomial, 7> dp;
    LieMat m;
  };
  int degree_;
  int rank_;
  std::vector<std::vector<Term>> comps_;
};

}  // namespace g2lab
