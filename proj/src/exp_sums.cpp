#include "lmom/exp_sums.hpp"

#include <cmath>
#include <list>
#include <memory>
#include <mutex>
#include <numeric>
#include <unordered_map>

namespace lmom::exp_sums {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/* ---------- residue-system memoization ---------- */

struct CacheEntry {
  std::shared_ptr<const ideals::ResidueSystem> rs;
  std::list<std::string>::iterator pos;
};

std::mutex cache_mu;
std::list<std::string> cache_order;  /* front = most recently used */
std::unordered_map<std::string, CacheEntry> cache_map;
std::size_t cache_elements = 0;
std::uint64_t cache_hits = 0, cache_misses = 0;

/* bounds total kept residues, not byte size; enough for the geometric-side
   sweeps which revisit the same modulus for every coefficient pair */
constexpr std::size_t kCacheElementCap = 4000000;

std::string system_key(const FractionalIdeal& a, const FieldElement& c,
                       const FractionalIdeal& cid) {
  const auto& F = a.field();
  return std::to_string(F.degree()) + ":" + std::to_string(F.d()) + "#" +
         a.key() + "#" + c.str() + "#" + cid.key();
}

std::shared_ptr<const ideals::ResidueSystem> fetch_system(
    const FractionalIdeal& a, const FieldElement& c,
    const FractionalIdeal& cid) {
  std::string key = system_key(a, c, cid);
  std::lock_guard<std::mutex> lk(cache_mu);
  auto it = cache_map.find(key);
  if (it != cache_map.end()) {
    ++cache_hits;
    cache_order.splice(cache_order.begin(), cache_order, it->second.pos);
    return it->second.rs;
  }
  ++cache_misses;
  auto rs = std::make_shared<const ideals::ResidueSystem>(
      ideals::residue_domain(a, c, cid));
  cache_order.push_front(key);
  cache_map.emplace(key, CacheEntry{rs, cache_order.begin()});
  cache_elements += rs->x.size();
  while (cache_elements > kCacheElementCap && cache_map.size() > 1) {
    const std::string& victim = cache_order.back();
    auto vit = cache_map.find(victim);
    cache_elements -= vit->second.rs->x.size();
    cache_map.erase(vit);
    cache_order.pop_back();
  }
  return rs;
}

/* ---------- fast path over the rationals ---------- */

bool fast_path_ok(const KloostermanParams& p) {
  if (p.a.field().degree() != 1) return false;
  if (!p.a.is_ring() || !p.b.is_ring() || !p.cid.is_ring()) return false;
  Rat nu = p.nu.a(), xi = p.xi.a(), c = p.c.a();
  if (nu.get_den() != 1 || xi.get_den() != 1 || c.get_den() != 1) return false;
  return mpz_fits_slong_p(Int(c.get_num()).get_mpz_t()) != 0;
}

long egcd_inverse(long x, long c) {
  /* x coprime to c >= 2, result in [0, c) */
  long r0 = c, r1 = x, s0 = 0, s1 = 1;
  while (r1 != 0) {
    long q = r0 / r1;
    long r2 = r0 - q * r1;
    r0 = r1;
    r1 = r2;
    long s2 = s0 - q * s1;
    s0 = s1;
    s1 = s2;
  }
  return ((s0 % c) + c) % c;
}

cplx kloosterman_fast(const KloostermanParams& p) {
  Int nu_z(p.nu.a().get_num()), xi_z(Rat(p.xi.a() * p.gen.a()).get_num());
  Int c_z(p.c.a().get_num());
  bool neg = c_z < 0;
  if (neg) c_z = -c_z;
  if (c_z > ideals::kResidueModulusCap)
    throw std::invalid_argument("kloosterman modulus exceeds cap");
  long c = c_z.get_si();
  if (c == 1) return {1.0, 0.0};
  long m = mpz_fdiv_ui(nu_z.get_mpz_t(), static_cast<unsigned long>(c));
  long n = mpz_fdiv_ui(xi_z.get_mpz_t(), static_cast<unsigned long>(c));
  double sgn = neg ? -1.0 : 1.0;
  csum total = parallel_block_sum<csum>(c, 4096, [&](long lo, long hi) {
    csum acc;
    for (long x = lo; x < hi; ++x) {
      if (std::gcd(x, c) != 1) continue;
      long xb = egcd_inverse(x, c);
      long r = (m * x + n * xb) % c;
      double th = sgn * kTwoPi * (static_cast<double>(r) / c);
      acc.re += std::cos(th);
      acc.im += std::sin(th);
    }
    return acc;
  });
  return total.value();
}

}  // namespace

KloostermanParams make_params(const FieldElement& nu, const FractionalIdeal& a,
                              const FieldElement& xi, const FractionalIdeal& b,
                              const FieldElement& c,
                              const FractionalIdeal& cid) {
  FieldElement gen =
      ideals::totally_positive_generator(a * b * cid.pow(-2));
  return make_params_with_generator(nu, a, xi, b, c, cid, gen);
}

KloostermanParams make_params_geometric(
    const FieldElement& nu, const FractionalIdeal& a, const FieldElement& xi,
    const FractionalIdeal& b, const FieldElement& c,
    const FractionalIdeal& cid) {
  if (nu.is_zero() || xi.is_zero() || c.is_zero())
    throw std::invalid_argument("kloosterman parameters must be nonzero");
  const auto& F = a.field();
  const FractionalIdeal D = FractionalIdeal::different(F);
  if (!(a * D).inverse().contains(nu))
    throw std::invalid_argument("nu is not in the inverse of a D");
  if (!(b * D).inverse().contains(xi))
    throw std::invalid_argument("xi is not in the inverse of b D");
  if (!cid.scale(c).is_integral())
    throw std::invalid_argument("(c)cid is not an integral ideal");
  FieldElement gen = ideals::totally_positive_generator(a * b * cid.pow(-2));
  return KloostermanParams{nu, xi, c, gen, a * D, b * D, cid};
}

KloostermanParams make_params_with_generator(
    const FieldElement& nu, const FractionalIdeal& a, const FieldElement& xi,
    const FractionalIdeal& b, const FieldElement& c,
    const FractionalIdeal& cid, const FieldElement& gen) {
  if (nu.is_zero() || xi.is_zero() || c.is_zero())
    throw std::invalid_argument("kloosterman parameters must be nonzero");
  if (!a.inverse().contains(nu))
    throw std::invalid_argument("nu is not in the inverse of a");
  if (!b.inverse().contains(xi))
    throw std::invalid_argument("xi is not in the inverse of b");
  if (!cid.scale(c).is_integral())
    throw std::invalid_argument("(c)cid is not an integral ideal");
  const auto& F = a.field();
  if (!F.is_totally_positive(gen))
    throw std::invalid_argument("generator is not totally positive");
  if (!(FractionalIdeal::principal(gen) == a * b * cid.pow(-2)))
    throw std::invalid_argument("generator does not generate a*b*cid^{-2}");
  return KloostermanParams{nu, xi, c, gen, a, b, cid};
}

cplx kloosterman_direct(const KloostermanParams& p) {
  auto rs = fetch_system(p.a, p.c, p.cid);
  FieldElement xig = p.xi * p.gen;
  FieldElement cinv = p.c.inverse();
  long n = static_cast<long>(rs->x.size());
  csum total = parallel_block_sum<csum>(n, 256, [&](long lo, long hi) {
    csum acc;
    for (long i = lo; i < hi; ++i) {
      auto k = static_cast<size_t>(i);
      FieldElement t = (p.nu * rs->x[k] + xig * rs->xbar[k]) * cinv;
      Rat tr = t.trace();
      /* exact reduction mod 1 before the only float conversion */
      Int r;
      mpz_fdiv_r(r.get_mpz_t(), tr.get_num().get_mpz_t(),
                 tr.get_den().get_mpz_t());
      double th = kTwoPi * mpq_class(Rat(r, tr.get_den())).get_d();
      acc.re += std::cos(th);
      acc.im += std::sin(th);
    }
    return acc;
  });
  return total.value();
}

cplx kloosterman(const KloostermanParams& p) {
  if (fast_path_ok(p)) return kloosterman_fast(p);
  return kloosterman_direct(p);
}

long kloosterman_domain_size(const KloostermanParams& p) {
  if (fast_path_ok(p)) {
    Int c_z(p.c.a().get_num());
    if (c_z < 0) c_z = -c_z;
    if (c_z > ideals::kResidueModulusCap)
      throw std::invalid_argument("kloosterman modulus exceeds cap");
    long c = c_z.get_si(), phi = c;
    for (long q = 2; q * q <= c; ++q) {
      if (c % q == 0) {
        phi -= phi / q;
        while (c % q == 0) c /= q;
      }
    }
    if (c > 1) phi -= phi / c;
    return phi;
  }
  return static_cast<long>(fetch_system(p.a, p.c, p.cid)->x.size());
}

double weil_bound(const KloostermanParams& p) {
  FractionalIdeal ga = p.a.scale(p.nu);
  FractionalIdeal gb = p.b.scale(p.xi);
  FractionalIdeal gc = p.cid.scale(p.c);
  FractionalIdeal g = ga + gb + gc;
  double ng = to_double(g.norm());
  double nc = to_double(gc.norm());
  return std::sqrt(ng) * static_cast<double>(ideals::divisor_count(gc)) *
         std::sqrt(nc);
}

double classical_kloosterman(long m, long n, long c) {
  if (c < 1) throw std::invalid_argument("classical modulus must be positive");
  if (c == 1) return 1.0;
  long mr = ((m % c) + c) % c, nr = ((n % c) + c) % c;
  kahan acc;
  for (long x = 1; x < c; ++x) {
    if (std::gcd(x, c) != 1) continue;
    long xb = egcd_inverse(x, c);
    long r = (mr * x + nr * xb) % c;
    acc.add(std::cos(kTwoPi * (static_cast<double>(r) / c)));
  }
  return acc.value();
}

ResidueCacheStats residue_cache_stats() {
  std::lock_guard<std::mutex> lk(cache_mu);
  return {cache_hits, cache_misses, cache_map.size(), cache_elements};
}

void residue_cache_clear() {
  std::lock_guard<std::mutex> lk(cache_mu);
  cache_order.clear();
  cache_map.clear();
  cache_elements = 0;
  cache_hits = cache_misses = 0;
}

}  // namespace lmom::exp_sums
