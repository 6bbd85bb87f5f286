#pragma once

#include <limits>
#include <string>
#include <vector>

#include "lmom/common.hpp"
#include "lmom/ideals.hpp"
#include "lmom/number_field.hpp"
#include "lmom/rankin_selberg.hpp"

namespace lmom::petersson {

using ideals::FractionalIdeal;
using ideals::PrimeIdeal;
using number_field::FieldElement;
using number_field::TotallyRealField;
using rankin_selberg::Eigenform;

/* member of an orthogonal basis of the weight-k cusp forms at level q:
   either a newform carrying its own coefficient table, or the level raise
   of a form g of coprime level, whose coefficients come from the two-term
   rule C(m) = scale * (-C_g(q) C_g(m) / (N(q)+1) + C_g(m q^{-1}) [q | m]) */
struct BasisForm {
  const Eigenform* form = nullptr;
  bool lifted = false;
  PrimeIdeal lift_prime;
  double lift_scale = 0.0;  // sqrt(N(q) / rho_factor(g, q))
  std::string label;

  double coefficient(const FractionalIdeal& m) const;
  FractionalIdeal level() const;
};

BasisForm newform_member(const Eigenform& f);

/* rho = 1 - N(q) (C_g(q) / (N(q)+1))^2, the norm defect of the raised pair
   {g, g_q}; strictly positive whenever |C_g(q)| <= 2, and the inverse of
   (1 - N(q)^{-2}) (1 + N(q)^{-1}) L_q(sym^2 g, 1) */
double rho_factor(const Eigenform& g, const PrimeIdeal& q);

/* local symmetric-square factor at q in the unitary normalization: with
   lam = C_g(q) and Q = N(q), [(1 - 1/Q)(1 - (lam^2-2)/Q + 1/Q^2)]^{-1} */
double sym2_local_factor(const Eigenform& g, const PrimeIdeal& q);

/* prod over the distinct primes l dividing d of (1 + 1/N(l)) */
double psi_factor(const FractionalIdeal& d);

/* raise g to level q * level(g); the scale makes the raised form have the
   same Petersson norm as g viewed at the raised level, so both carry the
   same harmonic weight.  Throws std::invalid_argument when q divides the
   level of g. */
BasisForm oldform_lift(const Eigenform& g, const PrimeIdeal& q);

struct HarmonicBasis {
  std::vector<BasisForm> forms;
  std::vector<double> weights;  // omega_f, all positive
  std::string provenance;       // "solved" or "supplied"
  double solve_residual = 0.0;  // max |spectral - geometric| over fit pairs
};

/* weighted spectral average sum_f omega_f C_f(m) C_f(p) */
double spectral_side(const HarmonicBasis& basis, const FractionalIdeal& m,
                     const FractionalIdeal& p);

/* geometric side of the same average over an orthogonal basis of weight-k
   level-q forms:

     [m = p] + C sum_{(c) cid in q, N <= cutoff} sum_{eps} sum_{eta}
               Kl(eps nu, a; xi, b; c eta, cid) / N((c) cid)
               * prod_j J_{k_j - 1}(4 pi sqrt(sigma_j(eps nu xi gen))
                                    / |sigma_j(c eta)|)

   with C = (-1)^{sum k_j / 2} 2^{n-1} pi^n / sqrt(|d_F|).  The Fourier
   indices are normalized by the different D: nu and xi are the balanced
   totally positive generators of m D^{-1} and p D^{-1} relative to their
   narrow class representatives a and b, the Kloosterman residues run over
   the integral classes (a cid^{-1} / a cid^{-1} (c) cid)^x, and gen
   generates a b cid^{-2}.  eps runs over the totally positive units mod
   squares, eta over the totally positive unit tower, c over one
   representative per sign class of the generators of each ideal, and cid
   over the narrow classes with cid^2 equivalent to [a][b].  Over Q this is
   the classical formula with S(m, p; c); over the desk quadratic fields
   h+ = 1, so cid = O and (nu) = m D^{-1} outright.  Weight (4,4) over
   Q(sqrt5) at level (1), where no cusp form exists, pins both the index
   normalization and C: the full sum cancels the diagonal to zero. */
struct GeometricSideSpec {
  const TotallyRealField* field = nullptr;
  std::vector<int> weight;
  FractionalIdeal level;  // q, integral
  FractionalIdeal m, p;   // integral
  double cutoff = 0.0;    // keep ideals (c) cid with N <= cutoff; 0 = none
  /* throw BudgetError when the certified tail bound exceeds this */
  double tail_tolerance = std::numeric_limits<double>::infinity();
  /* optional replacement generators for m D^{-1} and p D^{-1} relative to
     their narrow class representatives: any totally positive generator of
     the same ideal.  The total is invariant under the choice because the
     unit sums absorb it; the default is the canonical balanced one. */
  FieldElement nu_override, xi_override;
};

struct GeometricValue {
  double value = 0.0;
  /* certified bound on the dropped mass: the ideals beyond the cutoff
     (via the Weil bound against the Bessel power bound, infinite when the
     cutoff sits below the Bessel transition) plus the truncated ends of
     the unit towers */
  double tail_bound = 0.0;
  long terms = 0;  // Kloosterman evaluations
};

GeometricValue geometric_side(const GeometricSideSpec& spec);

struct TracePair {
  FractionalIdeal m, p;
};

/* least-squares fit of the weights omega_f from geometric values at the
   given pairs; cutoff and tail_tolerance control the geometric sums.  The
   basis must be nonempty, share one field, weight and level, and needs at
   least as many pairs as forms.  Throws DataError on rank deficiency or a
   nonpositive solved weight. */
HarmonicBasis solve_harmonic_weights(std::vector<BasisForm> forms,
                                     const std::vector<TracePair>& pairs,
                                     double cutoff,
                                     double tail_tolerance =
                                         std::numeric_limits<double>::infinity());

}  // namespace lmom::petersson
