#pragma once

#include <vector>

#include "lmom/common.hpp"
#include "lmom/ideals.hpp"
#include "lmom/number_field.hpp"

namespace lmom::analysis {

using ideals::FractionalIdeal;
using number_field::TotallyRealField;

/* principal-branch log-gamma, ~1e-13 relative on the strips we use */
cplx log_gamma(cplx z);
double digamma(double x);

/* J_u(x) to 1e-12 absolute for x <= 1e3: alternating series in extended
   precision below the crossover, Hankel asymptotic beyond */
double bessel_j(int u, double x);

/* low-precision vertical-line integral form of J_u, kept as a test oracle;
   0 < sigma < u */
double bessel_j_contour(int u, double x, double sigma);

/* prod_j Gamma(s+u+A_j) Gamma(s+u-1+B_j) / (Gamma(s+A_j) Gamma(s-1+B_j))
   with A_j = |k_j - l_j|/2 and B_j = (k_j + l_j)/2 */
cplx gamma_ratio(cplx s, cplx u, const std::vector<int>& k,
                 const std::vector<int>& l);

struct CutoffFunction {
  std::vector<int> k, l;
  enum class TestFn { one, gauss } g = TestFn::one;
  double sigma0 = 1.5;   /* right-contour abscissa, 0 < sigma0 <= 3/2 */
  double step = 0.1;     /* trapezoid step in t */
  double tmax = 200.0;   /* give up past this height */
};

CutoffFunction make_cutoff(const std::vector<int>& k,
                           const std::vector<int>& l,
                           CutoffFunction::TestFn g = CutoffFunction::TestFn::one,
                           double sigma0 = 1.5, double step = 0.1,
                           double tmax = 200.0);

/* V_{1/2}(y) = (1/2 pi i) int y^{-u} gamma_ratio(1/2,u) G(u) du/u on the
   sigma0 line; for small y the contour is shifted left of u = 0 so the
   value rides on the residue 1 instead of a y^{-sigma0} amplification */
double cutoff_v(double y, const CutoffFunction& cfg);

/* same integral with gamma_ratio taken at a real point s in [0.25, 1.75]
   instead of 1/2; cutoff_v(y, cfg) == cutoff_v_general(0.5, y, cfg) */
double cutoff_v_general(double s, double y, const CutoffFunction& cfg);

/* min over a grid of abscissas A of y^{-A} int |integrand|, a certified
   decay envelope for V used to pick series truncation points */
double cutoff_tail_bound(double y, const CutoffFunction& cfg);

/* Euler-Maclaurin Hurwitz zeta, the workhorse for every L-value here */
cplx hurwitz_zeta(cplx s, double x);
cplx riemann_zeta(cplx s);
/* L(s, chi_D) for the real primitive character of fundamental discriminant D */
cplx dirichlet_l(cplx s, long fund_disc);
cplx dedekind_zeta(const TotallyRealField& F, cplx s);

/* expansion data of zeta_F^{(m)}(1+2u) = zeta_F(1+2u) prod_{l|m}(1-Nl^{-1-2u})
   around u = 0 */
struct ZetaData {
  const TotallyRealField* F = nullptr;
  double gamma_m1 = 0;  /* residue of zeta_F at 1 = 2 Res_{u=0} zeta_F(2u+1) */
  double gamma_0 = 0;   /* constant term of zeta_F(1+t) - gamma_m1/t */
  std::vector<double> euler_norms;  /* N(l) over distinct primes l | m */
  double euler_at_zero() const;
  double euler_derivative_at_zero() const;
  cplx euler_poly(cplx u) const;
};

ZetaData zeta_data(const TotallyRealField& F, const FractionalIdeal& m);

/* residue at u = 0 of X^{-u} gamma_ratio(1/2,u) zeta_F^{(nq)}(1+2u)/u with
   X = 4^n pi^{2n} N(p)/N(D^2 n q), split exactly as
   value = slope*log(Nq) + constant + correction where slope and constant are
   q-free and correction carries the O(log Nq / Nq) Euler-factor residue */
struct ResidueExpansion {
  double value = 0, slope = 0, constant = 0, correction = 0;
};

ResidueExpansion residue_main_term(const TotallyRealField& F,
                                   const FractionalIdeal& n,
                                   const FractionalIdeal& p,
                                   const std::vector<int>& k,
                                   const std::vector<int>& l, double nq);

/* (1/2 pi i) int_{(sigma)} X^{-u} gamma_ratio(1/2,u) zeta_F^{(nq)}(1+2u)/u du;
   the sigma = 3/2 and sigma = -1/4 values differ by exactly the residue
   above, and the left line is the q^{-1/4}-size correction term */
double contour_integral_term(const TotallyRealField& F,
                             const FractionalIdeal& n,
                             const FractionalIdeal& p,
                             const std::vector<int>& k,
                             const std::vector<int>& l, double nq,
                             double sigma);

}  // namespace lmom::analysis
