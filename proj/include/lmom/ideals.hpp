#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lmom/number_field.hpp"

namespace lmom::ideals {

using number_field::FieldElement;
using number_field::TotallyRealField;

/* Fractional ideal as an O_F-stable full lattice over the basis (1, omega),
   stored in scaled integer Hermite form: span{ (a,0)/den, (c + g*omega)/den }
   with a,g >= 1, 0 <= c < a, gcd(a,c,g,den) = 1.  Over Q the lattice is the
   single positive rational a/den.  The form is canonical, so equality is
   componentwise. */
class FractionalIdeal {
 public:
  static FractionalIdeal ring_of_integers(const TotallyRealField& F);
  static FractionalIdeal principal(const FieldElement& x);
  static FractionalIdeal from_generators(const TotallyRealField& F,
                                         const std::vector<FieldElement>& gens);
  static FractionalIdeal different(const TotallyRealField& F);

  const TotallyRealField& field() const { return *F_; }
  Rat norm() const;
  bool is_integral() const { return den_ == 1; }
  bool is_ring() const;
  bool contains(const FieldElement& x) const;
  bool divides(const FractionalIdeal& other) const;  // other/this integral

  FractionalIdeal operator*(const FractionalIdeal& o) const;
  FractionalIdeal operator+(const FractionalIdeal& o) const;  // ideal gcd
  FractionalIdeal inverse() const;
  FractionalIdeal conj() const;
  FractionalIdeal scale(const FieldElement& x) const;  // (x) * this
  FractionalIdeal pow(long e) const;
  bool operator==(const FractionalIdeal& o) const;
  bool operator!=(const FractionalIdeal& o) const { return !(*this == o); }

  /* Z-basis vectors as field elements; size = degree */
  std::vector<FieldElement> basis() const;
  std::string key() const;  // canonical text form, usable as a map key

  /* default-constructed ideals are placeholders; assign before use */
  FractionalIdeal() = default;

 private:
  const TotallyRealField* F_ = nullptr;
  Int den_{1}, a_{1}, c_{0}, g_{1};
  friend FractionalIdeal hnf_from_rows(const TotallyRealField& F,
                                       std::vector<std::array<Rat, 2>> rows);
};

struct PrimeIdeal {
  FractionalIdeal ideal;
  long p = 0;       // rational prime below
  int e = 1, f = 1; // ramification index, residue degree
};

/* prime ideals above p, each once (no multiplicity) */
std::vector<PrimeIdeal> prime_ideals_above(const TotallyRealField& F, long p);

/* factorization of an integral ideal; exponents >= 1 */
std::vector<std::pair<PrimeIdeal, int>> factor(const FractionalIdeal& I);

long divisor_count(const FractionalIdeal& I);

/* number of integral ideals of each norm 1..nmax */
std::vector<long> count_ideals_by_norm(const TotallyRealField& F, long nmax);

/* same, restricted to ideals coprime to every prime in avoid */
std::vector<long> count_ideals_by_norm_coprime(
    const TotallyRealField& F, long nmax,
    const std::vector<PrimeIdeal>& avoid);

/* all integral ideals of norm exactly n, deterministically ordered */
std::vector<FractionalIdeal> ideals_of_norm(const TotallyRealField& F, long n);

/* narrow ray classes at the infinite places; reps[0] is the ring itself */
struct NarrowClassTable {
  const TotallyRealField* F = nullptr;
  std::vector<FractionalIdeal> reps;
  long h_plus = 1, h_wide = 1;
  int class_index(const FractionalIdeal& I) const;
};

NarrowClassTable narrow_class_table(const TotallyRealField& F);

/* totally positive generator in balanced canonical form, if one exists */
std::optional<FieldElement> narrow_generator(const FractionalIdeal& I);

/* wide principality: any generator, balanced, sign-canonical (sigma1 > 0) */
std::optional<FieldElement> wide_generator(const FractionalIdeal& I);

/* canonical totally positive generator; throws DataError when the ideal is
   not narrowly principal */
FieldElement totally_positive_generator(const FractionalIdeal& I);

/* write integral m as (nu) * reps[i] with nu totally positive:
   returns (nu, i) where (nu) = m * reps[i]^{-1} */
std::pair<FieldElement, int> split_ideal(const FractionalIdeal& m,
                                         const NarrowClassTable& T);

/* Residue pairs for exponential sums: x runs over the invertible classes of
   L/(L*iq) with L = a * D^{-1} * cid^{-1} and iq = (c) * cid; xbar lies in
   M/(M*iq), M = L^{-1}, with x*xbar = 1 mod iq.  Enumeration order is the
   deterministic Hermite box. */
struct ResidueSystem {
  const TotallyRealField* F = nullptr;
  FractionalIdeal L, M, iq;
  long modulus_norm = 0;                 // N(iq)
  std::vector<FieldElement> x, xbar;     // invertible classes only
};

inline constexpr long kResidueModulusCap = 1000000;

ResidueSystem residue_domain(const FractionalIdeal& a, const FieldElement& c,
                             const FractionalIdeal& cid);

/* invertibility by the ideal test: (x)L^{-1} + iq = O; used to cross-check
   the constructive solver */
bool residue_invertible_gcd_test(const ResidueSystem& rs,
                                 const FieldElement& x);

}  // namespace lmom::ideals
