#include "lmom/rankin_selberg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <stdexcept>

namespace lmom::rankin_selberg {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTailBudget = 1e-8;

bool is_rational_prime(long p) {
  if (p < 2) return false;
  for (long q = 2; q * q <= p; ++q)
    if (p % q == 0) return false;
  return true;
}

long norm_of(const FractionalIdeal& I) {
  return mpz_class(Rat(I.norm()).get_num()).get_si();
}

void check_weight_vector(const TotallyRealField& F,
                         const std::vector<int>& k) {
  if (static_cast<int>(k.size()) != F.degree())
    throw std::invalid_argument("one weight per real embedding expected");
  for (int kj : k)
    if (kj < 2 || kj % 2 != 0)
      throw std::invalid_argument("weights must be even and at least 2");
}

bool near_gamma_pole(cplx z) {
  return std::abs(z.imag()) < 1e-10 && z.real() < 0.5 &&
         std::abs(z.real() - std::round(z.real())) < 1e-9 &&
         std::llround(z.real()) <= 0;
}

}  // namespace

double Eigenform::coefficient(const FractionalIdeal& m) const {
  if (!m.is_integral())
    throw std::invalid_argument("coefficients live on integral ideals");
  auto it = table.find(m.key());
  if (it == table.end())
    throw DataError("no coefficient stored at an ideal of norm " +
                    std::to_string(norm_of(m)) + " for " + label);
  return it->second;
}

Eigenform make_eigenform(const TotallyRealField& F, std::vector<int> weight,
                         const FractionalIdeal& level, std::string label) {
  check_weight_vector(F, weight);
  if (!level.is_integral() || Rat(level.norm()) < 1)
    throw std::invalid_argument("level must be a nonzero integral ideal");
  Eigenform f;
  f.field = &F;
  f.weight = std::move(weight);
  f.level = level;
  f.label = std::move(label);
  FractionalIdeal O = FractionalIdeal::ring_of_integers(F);
  f.table[O.key()] = 1.0;
  f.by_norm[1].push_back({O.key(), 1.0});
  return f;
}

void set_prime_seed(Eigenform& f, const PrimeIdeal& P, double c) {
  f.prime_seed[P.ideal.key()] = c;
}

Eigenform extend_coefficients(const Eigenform& f, long up_to) {
  if (up_to < 1) throw std::invalid_argument("coverage bound must be positive");
  const TotallyRealField& F = *f.field;
  Eigenform out = f;
  out.table.clear();
  out.by_norm.clear();
  out.coverage = up_to;
  FractionalIdeal O = FractionalIdeal::ring_of_integers(F);
  out.table[O.key()] = 1.0;
  out.by_norm[1].push_back({O.key(), 1.0});

  /* prime-power blocks, one per prime ideal of norm <= up_to, sorted by
     prime norm so the assembly below can stop early */
  struct PrimePower {
    FractionalIdeal ideal;
    long norm;
    double c;
    long tau;
  };
  std::vector<std::vector<PrimePower>> blocks;
  for (long p = 2; p <= up_to; ++p) {
    if (!is_rational_prime(p)) continue;
    for (const auto& P : ideals::prime_ideals_above(F, p)) {
      long np = norm_of(P.ideal);
      if (np > up_to) continue;
      auto it = f.prime_seed.find(P.ideal.key());
      if (it == f.prime_seed.end())
        throw DataError("missing Hecke seed at a prime of norm " +
                        std::to_string(np) + " for " + f.label);
      double cp = it->second;
      bool at_level = P.ideal.divides(f.level);
      std::vector<PrimePower> pw;
      double prev = 1.0, cur = cp;
      FractionalIdeal Pr = P.ideal;
      for (long nr = np; nr <= up_to;) {
        pw.push_back({Pr, nr, cur, static_cast<long>(pw.size()) + 2});
        if (nr > up_to / np) break;
        nr *= np;
        Pr = Pr * P.ideal;
        double next = at_level ? cur * cp : cp * cur - prev;
        prev = cur;
        cur = next;
      }
      blocks.push_back(std::move(pw));
    }
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& a, const auto& b) {
              return a.front().norm < b.front().norm ||
                     (a.front().norm == b.front().norm &&
                      a.front().ideal.key() < b.front().ideal.key());
            });

  /* multiplicative assembly: walk distinct primes in increasing norm, so
     every ideal is reached exactly once */
  auto store = [&](const FractionalIdeal& I, long n, double c, long tau) {
    if (std::abs(c) > static_cast<double>(tau) + 1e-9)
      throw DataError("coefficient exceeds the divisor bound at norm " +
                      std::to_string(n) + " for " + f.label);
    out.table[I.key()] = c;
    out.by_norm[n].push_back({I.key(), c});
  };
  std::function<void(size_t, const FractionalIdeal&, long, double, long)> rec =
      [&](size_t i, const FractionalIdeal& I, long n, double c, long tau) {
        if (n > 1) store(I, n, c, tau);
        for (size_t j = i; j < blocks.size(); ++j) {
          if (blocks[j].front().norm > up_to / n) break;
          for (const auto& pw : blocks[j]) {
            if (pw.norm > up_to / n) break;
            rec(j + 1, I * pw.ideal, n * pw.norm, c * pw.c, tau * pw.tau);
          }
        }
      };
  rec(0, O, 1, 1.0, 1);
  return out;
}

RSPair make_rs_pair(const Eigenform& f, const Eigenform& g) {
  if (f.field != g.field)
    throw std::invalid_argument("pair must live over one field");
  if (f.label == g.label && f.weight == g.weight &&
      f.level.key() == g.level.key())
    throw std::invalid_argument("pair must consist of two distinct forms");
  const TotallyRealField& F = *f.field;
  FractionalIdeal O = FractionalIdeal::ring_of_integers(F);
  if ((f.level + g.level).key() != O.key())
    throw std::invalid_argument("levels must be coprime");
  RSPair pair;
  pair.f = &f;
  pair.g = &g;
  pair.nq = f.level * g.level;
  pair.k = f.weight;
  pair.l = g.weight;
  return pair;
}

void ensure_rs_coefficients(RSPair& pair, long len) {
  if (len < 1) throw std::invalid_argument("length must be positive");
  if (len <= pair.b_len) return;
  long cov = std::min(pair.f->coverage, pair.g->coverage);
  if (len > cov)
    throw DataError("coefficient tables stop at norm " + std::to_string(cov) +
                    " but the sum needs " + std::to_string(len) + " terms");
  const TotallyRealField& F = *pair.f->field;

  /* S[m] = sum over ideals of norm m of C_f C_g */
  std::vector<double> S(static_cast<size_t>(len) + 1, 0.0);
  for (const auto& [n, bucket] : pair.f->by_norm) {
    if (n > len) break;
    for (const auto& [key, cf] : bucket) {
      auto it = pair.g->table.find(key);
      if (it == pair.g->table.end())
        throw DataError("tables of " + pair.f->label + " and " +
                        pair.g->label + " list different ideals");
      S[static_cast<size_t>(n)] += cf * it->second;
    }
  }

  long dmax = static_cast<long>(std::sqrt(static_cast<double>(len)));
  while ((dmax + 1) * (dmax + 1) <= len) ++dmax;
  while (dmax * dmax > len) --dmax;
  std::vector<PrimeIdeal> avoid;
  for (const auto& pe : ideals::factor(pair.nq)) avoid.push_back(pe.first);
  auto a = ideals::count_ideals_by_norm_coprime(F, dmax, avoid);

  pair.b.assign(static_cast<size_t>(len) + 1, 0.0);
  for (long d = 1; d <= dmax; ++d) {
    if (a[static_cast<size_t>(d)] == 0) continue;
    double ad = static_cast<double>(a[static_cast<size_t>(d)]);
    for (long m = d * d; m <= len; m += d * d)
      pair.b[static_cast<size_t>(m)] += ad * S[static_cast<size_t>(m / (d * d))];
  }
  pair.b_len = len;
}

double rs_coefficient(RSPair& pair, long m) {
  if (m < 1) throw std::invalid_argument("index must be positive");
  ensure_rs_coefficients(pair, m);
  return pair.b[static_cast<size_t>(m)];
}

cplx l_infinity(cplx s, const std::vector<int>& k, const std::vector<int>& l) {
  if (k.size() != l.size() || k.empty())
    throw std::invalid_argument("weight vectors must match and be nonempty");
  cplx acc = 0.0;
  for (size_t j = 0; j < k.size(); ++j) {
    if (k[j] % 2 != 0 || l[j] % 2 != 0)
      throw std::invalid_argument("weights must be even");
    double aj = 0.5 * std::abs(k[j] - l[j]);
    double bj = 0.5 * (k[j] + l[j]);
    cplx za = s + aj, zb = s - 1.0 + bj;
    if (near_gamma_pole(za) || near_gamma_pole(zb))
      throw std::domain_error("archimedean factor pole");
    acc += -(2.0 * s + static_cast<double>(std::max(k[j], l[j]))) *
               std::log(2.0 * kPi) +
           analysis::log_gamma(za) + analysis::log_gamma(zb);
  }
  return std::exp(acc);
}

namespace {

/* Q = N(D)^2 N(n q), the conductor scale in y_m = (4 pi^2)^n m / Q */
double conductor_scale(const RSPair& pair) {
  const TotallyRealField& F = *pair.f->field;
  double nd = to_double(FractionalIdeal::different(F).norm());
  return nd * nd * to_double(pair.nq.norm());
}

/* first m where the decay envelope of V times a crude divisor-growth
   majorant of sum_{m' > m} |b_{m'}| / sqrt(m') drops below the budget,
   then doubled */
long truncation_core(const RSPair& pair, const CutoffFunction& cfg,
                     double X) {
  const TotallyRealField& F = *pair.f->field;
  double base = std::pow(4.0 * kPi * kPi, F.degree()) / conductor_scale(pair);
  double shrink = std::min(X, 1.0 / X);
  long m = 4;
  while (true) {
    double env = 60.0 * std::pow(static_cast<double>(m), 5.0 / 6.0);
    if (analysis::cutoff_tail_bound(base * m * shrink, cfg) * env <
        kTailBudget)
      break;
    long next = static_cast<long>(1.3 * static_cast<double>(m)) + 1;
    if (next > 50000000)
      throw BudgetError("central-value truncation grew past the desk scale");
    m = next;
  }
  return 2 * m;
}

void check_pair_cutoff(const RSPair& pair, const CutoffFunction& cfg) {
  if (cfg.k != pair.k || cfg.l != pair.l)
    throw std::invalid_argument("cutoff weights must match the pair");
}

/* sum_m b_m m^{-s} V_s(y_m / X) over the cached coefficients */
double smoothed_series(RSPair& pair, const CutoffFunction& cfg, double s,
                       double X, long len) {
  double base = std::pow(4.0 * kPi * kPi, pair.f->field->degree()) /
                conductor_scale(pair);
  const std::vector<double>& b = pair.b;
  return parallel_block_sum<double>(len, 256, [&](long lo, long hi) {
    kahan acc;
    for (long i = lo; i < hi; ++i) {
      long m = i + 1;
      double bm = b[static_cast<size_t>(m)];
      if (bm == 0.0) continue;
      acc.add(bm * std::pow(static_cast<double>(m), -s) *
              analysis::cutoff_v_general(s, base * m / X, cfg));
    }
    return acc.value();
  });
}

}  // namespace

long afe_truncation_length(const RSPair& pair, const CutoffFunction& cfg,
                           double X) {
  if (X <= 0.0) throw std::invalid_argument("scaling X must be positive");
  check_pair_cutoff(pair, cfg);
  return truncation_core(pair, cfg, X);
}

double afe_central_value(RSPair& pair, const CutoffFunction& cfg, double X) {
  if (X <= 0.0) throw std::invalid_argument("scaling X must be positive");
  check_pair_cutoff(pair, cfg);
  long len = truncation_core(pair, cfg, X);
  ensure_rs_coefficients(pair, len);
  double base = std::pow(4.0 * kPi * kPi, pair.f->field->degree()) /
                conductor_scale(pair);
  const std::vector<double>& b = pair.b;
  return parallel_block_sum<double>(len, 256, [&](long lo, long hi) {
    kahan acc;
    for (long i = lo; i < hi; ++i) {
      long m = i + 1;
      double bm = b[static_cast<size_t>(m)];
      if (bm == 0.0) continue;
      double y = base * m;
      acc.add(bm / std::sqrt(static_cast<double>(m)) *
              (analysis::cutoff_v(y / X, cfg) + analysis::cutoff_v(y * X, cfg)));
    }
    return acc.value();
  });
}

double check_functional_equation(RSPair& pair, double s, long len_cap) {
  if (s < 0.4 || s > 0.6)
    throw std::invalid_argument("probe point must lie in [0.4, 0.6]");
  const double X = 1.25;
  CutoffFunction cfg = analysis::make_cutoff(pair.k, pair.l);
  /* extra coverage over the central truncation pays for the m^{-s} shift */
  long len = truncation_core(pair, cfg, X);
  len += len / 2;
  if (len_cap > 0) len = std::min(len, len_cap);
  ensure_rs_coefficients(pair, len);
  double q_scale = conductor_scale(pair);
  auto shifted = [&](double sp, double xp) {
    double linf = std::real(l_infinity(cplx(sp, 0.0), pair.k, pair.l));
    return std::pow(q_scale, sp) * linf *
           smoothed_series(pair, cfg, sp, xp, len);
  };
  double lam_s = shifted(s, X) + shifted(1.0 - s, 1.0 / X);
  double lam_1ms = shifted(1.0 - s, X) + shifted(s, 1.0 / X);
  double lam_half = shifted(0.5, X) + shifted(0.5, 1.0 / X);
  return std::abs(lam_s - lam_1ms) / std::abs(lam_half);
}

}  // namespace lmom::rankin_selberg
