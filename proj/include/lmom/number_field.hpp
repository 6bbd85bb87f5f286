#pragma once

#include <array>
#include <string>
#include <vector>

#include "lmom/common.hpp"

namespace lmom::number_field {

class TotallyRealField;

/* element of F written over the integral basis (1, omega); coordinates are
   exact rationals, so arithmetic, traces, norms and sign tests never round */
class FieldElement {
 public:
  FieldElement() = default;
  FieldElement(const TotallyRealField* F, Rat a, Rat b);

  const TotallyRealField& field() const;
  const Rat& a() const { return a_; }
  const Rat& b() const { return b_; }

  bool is_zero() const { return a_ == 0 && b_ == 0; }
  bool is_rational() const { return b_ == 0; }
  bool is_integral() const;

  FieldElement operator-() const;
  FieldElement operator+(const FieldElement& o) const;
  FieldElement operator-(const FieldElement& o) const;
  FieldElement operator*(const FieldElement& o) const;
  FieldElement operator/(const FieldElement& o) const;
  FieldElement operator*(const Rat& c) const;
  FieldElement operator/(const Rat& c) const;
  bool operator==(const FieldElement& o) const;
  bool operator!=(const FieldElement& o) const { return !(*this == o); }

  FieldElement conj() const;  // nontrivial Galois conjugate; identity over Q
  Rat trace() const;
  Rat norm() const;
  FieldElement inverse() const;
  FieldElement pow(long e) const;

  std::string str() const;  // "a" or "a+b*w", exact rationals

 private:
  const TotallyRealField* F_ = nullptr;
  Rat a_, b_;
};

/* F = Q or Q(sqrt d), d > 1 squarefree.  Instances are interned and live for
   the whole process, so elements may hold plain pointers to their field.
   omega = sqrt(d) for d = 2,3 mod 4 and (1+sqrt(d))/2 for d = 1 mod 4;
   omega satisfies omega^2 = t*omega - m with t = Tr(omega), m = N(omega). */
class TotallyRealField {
 public:
  static const TotallyRealField& rationals();
  static const TotallyRealField& real_quadratic(long d);

  int degree() const { return deg_; }
  long d() const { return d_; }
  long discriminant() const { return disc_; }
  const Rat& omega_trace() const { return omega_t_; }
  const Rat& omega_norm() const { return omega_m_; }

  FieldElement element(Rat a, Rat b = Rat(0)) const;
  FieldElement from_int(long a) const { return element(Rat(a)); }
  FieldElement zero() const { return element(Rat(0)); }
  FieldElement one() const { return element(Rat(1)); }
  FieldElement omega() const;
  FieldElement sqrt_d() const;  // embeddings (+sqrt d, -sqrt d); error over Q

  /* real embeddings; index 0 sends omega to its larger image */
  std::vector<double> embed(const FieldElement& x) const;
  double embed1(const FieldElement& x) const;
  mpf_class embed_mpf(const FieldElement& x, int j, int digits) const;
  int sign_at(const FieldElement& x, int j) const;  // exact
  bool is_totally_positive(const FieldElement& x) const;

  /* unit group data; all trivial over Q */
  const FieldElement& fundamental_unit() const { return eps0_; }  // sigma1 > 1
  int fundamental_unit_norm() const { return eps0_norm_; }
  const FieldElement& eps_plus() const { return eps_plus_; }
  double log_eps_plus1() const { return log_eps_plus1_; }
  double regulator() const { return regulator_; }

  std::vector<FieldElement> unit_square_cosets() const;
  std::vector<FieldElement> totally_positive_units(int count) const;

  /* power of eps_plus that balances the embeddings of xi around |N(xi)|^{1/2};
     ties resolved toward the lexicographically smaller embedding vector */
  FieldElement balance_unit(const FieldElement& xi) const;
  FieldElement balanced_representative(const FieldElement& xi) const;
  double balance_c1() const { return balance_c1_; }
  double balance_c2() const { return balance_c2_; }

  /* sum of |N(eta)|^{-delta} over the balanced totally positive unit orbit,
     i.e. sum_m eps_plus_1^(-delta*|2m|) ... closed form 1 + 2/(e1^delta - 1)
     with e1 = sigma1(eps_plus); equals 1 over Q */
  double unit_sum(double delta) const;

  bool operator==(const TotallyRealField& o) const {
    return deg_ == o.deg_ && d_ == o.d_;
  }

 private:
  explicit TotallyRealField(long d);  // d = 0 builds Q

  int deg_ = 1;
  long d_ = 0;
  long disc_ = 1;
  Rat omega_t_, omega_m_;  // omega^2 = t*omega - m
  /* omega = (w0 + w1*sqrt d)/2 */
  long w0_ = 0, w1_ = 0;
  std::array<double, 2> omega_emb_{0.0, 0.0};
  FieldElement eps0_, eps_plus_;
  int eps0_norm_ = 1;
  double regulator_ = 0.0, log_eps_plus1_ = 0.0;
  double balance_c1_ = 1.0, balance_c2_ = 1.0;
};

}  // namespace lmom::number_field
