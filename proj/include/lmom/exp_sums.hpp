#pragma once

#include <cstdint>

#include "lmom/common.hpp"
#include "lmom/ideals.hpp"
#include "lmom/number_field.hpp"

namespace lmom::exp_sums {

using ideals::FractionalIdeal;
using number_field::FieldElement;
using number_field::TotallyRealField;

/* data for Kl(nu,a; xi,b; c,cid): nu in a^{-1}, xi in b^{-1}, (c)cid integral,
   and gen is a totally positive generator of a*b*cid^{-2} */
struct KloostermanParams {
  FieldElement nu, xi, c, gen;
  FractionalIdeal a, b, cid;
};

/* validates memberships and picks the canonical generator; throws
   std::invalid_argument on a membership violation and DataError when
   a*b*cid^{-2} has no totally positive generator */
KloostermanParams make_params(const FieldElement& nu, const FractionalIdeal& a,
                              const FieldElement& xi, const FractionalIdeal& b,
                              const FieldElement& c, const FractionalIdeal& cid);

/* same but with a caller-chosen generator (unit multiples of the canonical
   one are the intended use); the generator is checked exactly */
KloostermanParams make_params_with_generator(
    const FieldElement& nu, const FractionalIdeal& a, const FieldElement& xi,
    const FractionalIdeal& b, const FieldElement& c,
    const FractionalIdeal& cid, const FieldElement& gen);

/* parameters for the trace formula's geometric sum, where the coefficient
   ideals factor through the different D of F: m = (nu) a D and p = (xi) b D,
   so nu and xi lie in (a D)^{-1} and (b D)^{-1}.  The stored lattices fold D
   in, which puts the residues x in (a cid^{-1} / a cid^{-1} (c) cid)^x and
   keeps every phase an integer-trace class; gen generates a b cid^{-2}.
   Over Q with a = b = cid = (1) the sum equals the classical S(nu, xi; c). */
KloostermanParams make_params_geometric(
    const FieldElement& nu, const FractionalIdeal& a, const FieldElement& xi,
    const FractionalIdeal& b, const FieldElement& c,
    const FractionalIdeal& cid);

/* sum of exp(2 pi i Tr((nu x + xi gen xbar)/c)) over the invertible residues
   x of a D^{-1} c^{-1} modulo a D^{-1} c, with x xbar = 1 mod (c)cid; phases
   are exact rationals reduced mod 1 before any float conversion */
cplx kloosterman(const KloostermanParams& p);

/* always walks the residue-system path; the integer fast path taken by
   kloosterman over the rationals must agree with this to 1e-9 */
cplx kloosterman_direct(const KloostermanParams& p);

/* number of terms in the sum, for reporting */
long kloosterman_domain_size(const KloostermanParams& p);

/* N(gcd((nu)a,(xi)b,(c)cid))^{1/2} tau((c)cid) N((c)cid)^{1/2} */
double weil_bound(const KloostermanParams& p);

/* S(m,n;c) over the rationals by direct loop; oracle for the fast path */
double classical_kloosterman(long m, long n, long c);

/* residue systems are memoized across calls; stats let tests and the CLI
   confirm reuse */
struct ResidueCacheStats {
  std::uint64_t hits = 0, misses = 0;
  std::size_t systems = 0, elements = 0;
};
ResidueCacheStats residue_cache_stats();
void residue_cache_clear();

}  // namespace lmom::exp_sums
