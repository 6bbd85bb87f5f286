#pragma once

#include <map>
#include <string>
#include <vector>

#include "lmom/analysis.hpp"
#include "lmom/common.hpp"
#include "lmom/ideals.hpp"
#include "lmom/number_field.hpp"

namespace lmom::rankin_selberg {

using analysis::CutoffFunction;
using ideals::FractionalIdeal;
using ideals::PrimeIdeal;
using number_field::TotallyRealField;

/* Hecke eigenform data in the unitary normalization: C(O) = 1, coefficients
   multiplicative across coprime ideals, and at primes away from the level
   C(P^{r+1}) = C(P) C(P^r) - C(P^{r-1}).  Arithmetic Fourier coefficients
   a(m) convert to this scale as a(m) / N(m)^{(k-1)/2}.

   Build with make_eigenform + set_prime_seed + extend_coefficients; after
   that the tables are treated as immutable, so shared use across threads
   is safe. */
struct Eigenform {
  const TotallyRealField* field = nullptr;
  std::vector<int> weight;  // one even weight >= 2 per real embedding
  FractionalIdeal level;    // integral
  std::string label;
  long coverage = 1;        // table lists every ideal of norm <= coverage

  std::map<std::string, double> prime_seed;  // prime ideal key -> C(P)
  std::map<std::string, double> table;       // ideal key -> C
  /* same data grouped by norm, for convolution sums over N(ideal) = m */
  std::map<long, std::vector<std::pair<std::string, double>>> by_norm;

  double coefficient(const FractionalIdeal& m) const;
};

Eigenform make_eigenform(const TotallyRealField& F, std::vector<int> weight,
                         const FractionalIdeal& level, std::string label);

void set_prime_seed(Eigenform& f, const PrimeIdeal& P, double c);

/* tabulates C on every integral ideal of norm <= up_to: prime powers by the
   Hecke recursion (C(Q^r) = C(Q)^r at primes dividing the level), the rest
   by multiplicativity.  Throws DataError when a required prime seed is
   missing or a value breaks the divisor bound |C(m)| <= tau(m). */
Eigenform extend_coefficients(const Eigenform& f, long up_to);

/* convolution pair; levels must be coprime and the forms distinct (the
   convolution of a form with itself picks up a pole at the edge and is out
   of scope here) */
struct RSPair {
  const Eigenform* f = nullptr;  // level q
  const Eigenform* g = nullptr;  // level n
  FractionalIdeal nq;            // n q
  std::vector<int> k, l;         // weights of f and of g
  std::vector<double> b;         // cached b_m, index m; b[0] unused
  long b_len = 0;
};

RSPair make_rs_pair(const Eigenform& f, const Eigenform& g);

/* Dirichlet coefficients of L(f x g, s) = sum_m b_m m^{-s}:
     b_m = sum_{d^2 | m} a_d * sum_{N(ideal) = m/d^2} C_f C_g
   where a_d counts integral ideals of norm d coprime to both levels. */
void ensure_rs_coefficients(RSPair& pair, long len);
double rs_coefficient(RSPair& pair, long m);

/* prod_j (2 pi)^{-2s - max(kj,lj)} Gamma(s + |kj-lj|/2) Gamma(s-1+(kj+lj)/2);
   real on the real axis, domain_error at the Gamma poles */
cplx l_infinity(cplx s, const std::vector<int>& k, const std::vector<int>& l);

/* number of terms the central-value sum keeps for this scaling */
long afe_truncation_length(const RSPair& pair, const CutoffFunction& cfg,
                           double X);

/* L(f x g, 1/2) as the balanced smoothed sum
     sum_m b_m / sqrt(m) [V(y_m / X) + V(y_m X)],  y_m = (4 pi^2)^n m / Q,
   Q = N(D)^2 N(n q).  The value is independent of X and of the test
   function inside cfg up to the truncation budget of 1e-8. */
double afe_central_value(RSPair& pair, const CutoffFunction& cfg,
                         double X = 1.0);

/* residual |Lambda(s) - Lambda(1-s)| / |Lambda(1/2)| with both sides
   assembled from the shifted integrals at X = 5/4; s real in [0.4, 0.6],
   zero by construction at s = 1/2.  len_cap > 0 shortens the series to at
   most that many terms, for truncation ablations. */
double check_functional_equation(RSPair& pair, double s, long len_cap = 0);

}  // namespace lmom::rankin_selberg
