#include "lmom/petersson.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

#include "lmom/analysis.hpp"
#include "lmom/exp_sums.hpp"

namespace lmom::petersson {

namespace {

constexpr double kPi = 3.14159265358979323846;
/* terms whose certified bound falls below this are skipped and the bound is
   charged to the tail instead of paying for the Kloosterman sum */
constexpr double kTermEps = 1e-18;

double to_double(const Rat& r) { return r.get_d(); }

long ideal_norm_long(const FractionalIdeal& I) {
  Rat n = I.norm();
  if (n.get_den() != 1) throw std::invalid_argument("integral ideal expected");
  if (!n.get_num().fits_slong_p())
    throw BudgetError("ideal norm exceeds the long range");
  return n.get_num().get_si();
}

/* tau_4(n) = sum_{ab=n} d(a) d(b); multiplicative with C(a+3,3) at p^a */
double tau4(long n) {
  double out = 1.0;
  for (long p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    long a = 0;
    while (n % p == 0) n /= p, ++a;
    out *= static_cast<double>((a + 1) * (a + 2) * (a + 3)) / 6.0;
  }
  if (n > 1) out *= 4.0;
  return out;
}

struct UnitData {
  std::vector<FieldElement> eps_cosets;  // O^{x+} / O^{x2}
  std::vector<FieldElement> sign_reps;   // generator orbits mod +-O^{x+}
  FieldElement eps_plus;
  double e1 = 1.0;  // sigma1(eps_plus) >= 1; == 1 over Q
};

UnitData unit_data(const TotallyRealField& F) {
  UnitData u;
  u.eps_cosets = F.unit_square_cosets();
  u.eps_plus = F.eps_plus();
  u.e1 = std::exp(F.log_eps_plus1());
  /* the generators of a principal ideal fall into [O^x : O^{x+}] orbits
     under the totally positive units; -1 pairs the orbits up, leaving one
     representative (two when the fundamental unit has norm -1), each
     standing for both signs */
  u.sign_reps.push_back(F.one());
  if (F.degree() > 1 && F.fundamental_unit_norm() == -1)
    u.sign_reps.push_back(F.fundamental_unit());
  return u;
}

struct IdealPartial {
  double value = 0.0;  // sum over sign reps, eps cosets and the unit tower
  double tail = 0.0;   // certified bound on every skipped or cut term
  long terms = 0;
};

}  // namespace

double BasisForm::coefficient(const FractionalIdeal& m) const {
  if (!form) throw std::invalid_argument("empty basis member");
  if (!lifted) return form->coefficient(m);
  const FractionalIdeal& q = lift_prime.ideal;
  double Q = to_double(q.norm());
  double v = -form->coefficient(q) * form->coefficient(m) / (Q + 1.0);
  if (q.divides(m)) v += form->coefficient(m * q.inverse());
  return lift_scale * v;
}

FractionalIdeal BasisForm::level() const {
  if (!form) throw std::invalid_argument("empty basis member");
  if (!lifted) return form->level;
  return form->level * lift_prime.ideal;
}

BasisForm newform_member(const Eigenform& f) {
  BasisForm b;
  b.form = &f;
  b.label = f.label;
  return b;
}

double rho_factor(const Eigenform& g, const PrimeIdeal& q) {
  if (q.ideal.divides(g.level))
    throw std::invalid_argument("rho factor needs a prime away from the level");
  double Q = to_double(q.ideal.norm());
  double lam = g.coefficient(q.ideal);
  double rho = 1.0 - Q * (lam / (Q + 1.0)) * (lam / (Q + 1.0));
  if (!(rho > 0.0))
    throw DataError("norm defect is not positive at " + q.ideal.key() +
                    " for " + g.label);
  return rho;
}

double sym2_local_factor(const Eigenform& g, const PrimeIdeal& q) {
  double Q = to_double(q.ideal.norm());
  double lam = g.coefficient(q.ideal);
  double euler =
      (1.0 - 1.0 / Q) * (1.0 - (lam * lam - 2.0) / Q + 1.0 / (Q * Q));
  return 1.0 / euler;
}

double psi_factor(const FractionalIdeal& d) {
  if (!d.is_integral())
    throw std::invalid_argument("psi runs over integral ideals");
  double out = 1.0;
  for (const auto& [P, e] : ideals::factor(d))
    out *= 1.0 + 1.0 / to_double(P.ideal.norm());
  return out;
}

BasisForm oldform_lift(const Eigenform& g, const PrimeIdeal& q) {
  if (q.p <= 0) throw std::invalid_argument("lift prime is unset");
  if (q.ideal.divides(g.level))
    throw std::invalid_argument("lift prime divides the level of " + g.label);
  BasisForm b;
  b.form = &g;
  b.lifted = true;
  b.lift_prime = q;
  /* scale = sqrt(N(q)/rho): with it the raised form keeps the Petersson
     norm of g viewed at the raised level, hence the same harmonic weight;
     the solver tests pin this down numerically */
  double Q = to_double(q.ideal.norm());
  b.lift_scale = std::sqrt(Q / rho_factor(g, q));
  b.label = g.label + "~" + q.ideal.key();
  return b;
}

double spectral_side(const HarmonicBasis& basis, const FractionalIdeal& m,
                     const FractionalIdeal& p) {
  if (basis.forms.size() != basis.weights.size())
    throw std::invalid_argument("basis weights do not match its forms");
  kahan acc;
  for (size_t i = 0; i < basis.forms.size(); ++i)
    acc.add(basis.weights[i] * basis.forms[i].coefficient(m) *
            basis.forms[i].coefficient(p));
  return acc.value();
}

GeometricValue geometric_side(const GeometricSideSpec& spec) {
  if (!spec.field) throw std::invalid_argument("geometric side needs a field");
  const TotallyRealField& F = *spec.field;
  const int n = F.degree();
  if (static_cast<int>(spec.weight.size()) != n)
    throw std::invalid_argument("weight vector does not match the degree");
  for (int k : spec.weight)
    if (k < 4 || k % 2)
      throw std::invalid_argument("weights must be even and at least 4");
  if (!spec.m.is_integral() || !spec.p.is_integral() ||
      !spec.level.is_integral())
    throw std::invalid_argument("m, p and the level must be integral");
  if (!(spec.cutoff >= 0.0) || !(spec.tail_tolerance > 0.0))
    throw std::invalid_argument("cutoff and tail tolerance must be positive");

  ideals::NarrowClassTable T = ideals::narrow_class_table(F);
  /* the Fourier indices carry the inverse different: m = (nu) a D with a the
     narrow class representative of m D^{-1}, and likewise for p */
  const FractionalIdeal D = FractionalIdeal::different(F);
  const FractionalIdeal md = spec.m * D.inverse();
  const FractionalIdeal pd = spec.p * D.inverse();
  auto split_normalized = [&](const FractionalIdeal& I) {
    for (size_t i = 0; i < T.reps.size(); ++i)
      if (auto g = ideals::narrow_generator(I * T.reps[i].inverse()))
        return std::pair<FieldElement, int>(*g, static_cast<int>(i));
    throw DataError("ideal matches no narrow class rep");
  };
  auto [nu_can, class_m] = split_normalized(md);
  auto [xi_can, class_p] = split_normalized(pd);
  FieldElement nu = nu_can, xi = xi_can;
  if (!spec.nu_override.is_zero()) {
    if (!F.is_totally_positive(spec.nu_override) ||
        FractionalIdeal::principal(spec.nu_override) * T.reps[class_m] != md)
      throw std::invalid_argument("nu override does not generate m D^{-1}");
    nu = spec.nu_override;
  }
  if (!spec.xi_override.is_zero()) {
    if (!F.is_totally_positive(spec.xi_override) ||
        FractionalIdeal::principal(spec.xi_override) * T.reps[class_p] != pd)
      throw std::invalid_argument("xi override does not generate p D^{-1}");
    xi = spec.xi_override;
  }
  const FractionalIdeal a = T.reps[class_m], b = T.reps[class_p];

  int khalf = std::accumulate(spec.weight.begin(), spec.weight.end(), 0) / 2;
  const double abs_c =
      std::pow(2.0, n - 1) * std::pow(kPi, n) /
      std::sqrt(static_cast<double>(std::labs(F.discriminant())));
  const double C = khalf % 2 ? -abs_c : abs_c;

  GeometricValue out;
  out.value = (spec.m == spec.p) ? 1.0 : 0.0;

  const UnitData units = unit_data(F);
  const long qn = ideal_norm_long(spec.level);
  const double sqrt_g = std::sqrt(to_double((spec.m + spec.p).norm()));

  /* c-classes: narrow classes cid with cid^2 equivalent to a b */
  std::vector<FractionalIdeal> classes;
  const FractionalIdeal ab = a * b;
  for (const FractionalIdeal& cc : T.reps)
    if (ideals::narrow_generator(ab * cc.pow(2).inverse()).has_value())
      classes.push_back(cc);

  /* work list: one entry per (class, ideal (c) cid inside the level) */
  struct Job {
    const FractionalIdeal* cls = nullptr;
    FractionalIdeal dd;
    FieldElement c0;  // generator of dd * cls^{-1}, balanced
    long norm = 0;
  };
  std::vector<Job> jobs;
  const long cut = static_cast<long>(std::floor(spec.cutoff));
  for (long nn = qn; nn <= cut; nn += qn)
    for (const FractionalIdeal& dd : ideals::ideals_of_norm(F, nn)) {
      if (!spec.level.divides(dd)) continue;
      for (const FractionalIdeal& cls : classes)
        if (auto w = ideals::wide_generator(dd * cls.inverse()))
          jobs.push_back({&cls, dd, *w, nn});
    }

  /* per-ideal work: sign reps x eps cosets x the eta tower; every term the
     bound lets us skip is charged to the tail, so the returned value plus
     tail always brackets the full lattice sum over this ideal */
  auto run_job = [&](const Job& job) -> IdealPartial {
    IdealPartial part;
    const double norm_dd = static_cast<double>(job.norm);
    const double weil_uniform =
        sqrt_g * static_cast<double>(ideals::divisor_count(job.dd)) *
        std::sqrt(norm_dd);
    const std::vector<double> exi = F.embed(xi);
    kahan acc;
    for (const FieldElement& srep : units.sign_reps) {
      FieldElement base = job.c0 * srep;
      for (const FieldElement& eps : units.eps_cosets) {
        FieldElement nu_e = nu * eps;
        const std::vector<double> enu = F.embed(nu_e);
        std::vector<double> egen;
        auto ensure_gen = [&](const FieldElement& c_elem) {
          if (!egen.empty()) return;
          auto params =
              exp_sums::make_params_geometric(nu_e, a, xi, b, c_elem, *job.cls);
          egen = F.embed(params.gen);
        };
        /* prod_j min(1, x_j^{k_j-1}); watch_j reports one argument */
        auto power_bound = [&](const FieldElement& c_elem, int watch_j,
                               double* watch_arg) {
          std::vector<double> ec = F.embed(c_elem);
          double prod = 1.0;
          for (int j = 0; j < n; ++j) {
            double arg = 4.0 * kPi *
                         std::sqrt(enu[j] * exi[j] * egen[j]) /
                         std::fabs(ec[j]);
            if (j == watch_j && watch_arg) *watch_arg = arg;
            prod *= std::min(1.0, std::pow(arg, spec.weight[j] - 1));
          }
          return prod;
        };
        auto term_at = [&](const FieldElement& c_elem) {
          auto params =
              exp_sums::make_params_geometric(nu_e, a, xi, b, c_elem, *job.cls);
          cplx z = exp_sums::kloosterman(params);
          if (std::fabs(z.imag()) > 1e-6)
            throw DataError("kloosterman sum lost reality");
          ++part.terms;
          std::vector<double> ec = F.embed(c_elem);
          double prod = 1.0;
          for (int j = 0; j < n; ++j)
            prod *= analysis::bessel_j(
                spec.weight[j] - 1,
                4.0 * kPi * std::sqrt(enu[j] * exi[j] * egen[j]) /
                    std::fabs(ec[j]));
          return z.real() / norm_dd * prod;
        };
        ensure_gen(base);
        if (n == 1) {
          double cap = power_bound(base, -1, nullptr) * weil_uniform / norm_dd;
          if (cap < kTermEps)
            part.tail += 2.0 * cap;
          else
            acc.add(2.0 * term_at(base));
          continue;
        }
        /* eta = eps_plus^t walked both ways; in the +t direction
           sigma1(c eta) grows, so once the first Bessel argument sits
           under 1/e1 the power bound contracts by e1^{-(k_1-1)} per step,
           and symmetrically for -t */
        for (int dir : {+1, -1}) {
          FieldElement step =
              dir > 0 ? units.eps_plus : units.eps_plus.inverse();
          FieldElement c_elem = dir > 0 ? base : base * step;
          int watch = dir > 0 ? 0 : 1;
          double contract = std::pow(units.e1, spec.weight[watch] - 1);
          for (int t = 0;; ++t) {
            if (t > 400) throw BudgetError("unit tower failed to contract");
            double arg = 0.0;
            double cap = power_bound(c_elem, watch, &arg) * weil_uniform /
                         norm_dd;
            if (cap < kTermEps) {
              if (arg * units.e1 <= 1.0) {
                /* contracted from here on: geometric remainder */
                part.tail += 2.0 * cap * (1.0 + 1.0 / (contract - 1.0));
                break;
              }
              part.tail += 2.0 * cap;  // skip this term, keep walking
            } else {
              acc.add(2.0 * term_at(c_elem));
            }
            c_elem = c_elem * step;
          }
        }
      }
    }
    part.value = acc.value();
    return part;
  };

  /* deterministic parallel reduction: fixed-size blocks folded in order,
     worker exceptions carried back to the caller */
  const long kBlock = 16;
  const long njobs = static_cast<long>(jobs.size());
  const long nblocks = (njobs + kBlock - 1) / kBlock;
  std::vector<IdealPartial> blocks(static_cast<size_t>(nblocks));
  auto run_block = [&](long bi) {
    kahan v, tl;
    long tm = 0;
    for (long i = bi * kBlock; i < std::min(njobs, (bi + 1) * kBlock); ++i) {
      IdealPartial p = run_job(jobs[static_cast<size_t>(i)]);
      v.add(p.value);
      tl.add(p.tail);
      tm += p.terms;
    }
    blocks[static_cast<size_t>(bi)] = {v.value(), tl.value(), tm};
  };
  int nthreads = static_cast<int>(
      std::min<long>(hardware_threads(), std::max(1L, nblocks)));
  if (nthreads > 1) {
    std::atomic<long> next{0};
    std::vector<std::exception_ptr> errs(static_cast<size_t>(nthreads));
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (long bi = next++; bi < nblocks; bi = next++) run_block(bi);
        } catch (...) {
          errs[static_cast<size_t>(w)] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  } else {
    for (long bi = 0; bi < nblocks; ++bi) run_block(bi);
  }
  kahan csum_all, skipped;
  for (const IdealPartial& p : blocks) {
    csum_all.add(p.value);
    skipped.add(p.tail);
    out.terms += p.terms;
  }
  out.value += C * csum_all.value();
  double tail = abs_c * skipped.value();

  /* certified bound on the ideals past the cutoff: the Weil bound against
     prod_j min(1, x_j^{k_j-1}), summed in closed form; infinite until the
     cutoff clears the Bessel transition */
  const double inf = std::numeric_limits<double>::infinity();
  if (n == 1) {
    const double B = 4.0 * kPi * std::sqrt(to_double(spec.m.norm()) *
                                           to_double(spec.p.norm()));
    const int K = spec.weight[0] - 1;
    const long Tq = cut / qn;  // the tail is c = qn t over t > Tq
    if (B >= static_cast<double>(qn) * static_cast<double>(Tq + 1)) {
      tail = inf;
    } else {
      double s = Tq >= 1 ? std::pow(static_cast<double>(Tq), 1 - K) / (K - 1)
                         : 1.0 + 1.0 / (K - 1);
      tail += 4.0 * abs_c * sqrt_g * std::pow(B / static_cast<double>(qn), K) * s;
    }
  } else {
    /* at a balanced representative every Bessel argument is at most
       Bq / sqrt(N(dd)) */
    double emax = 0.0;
    for (const FractionalIdeal& cls : classes) {
      FieldElement mu =
          ideals::totally_positive_generator(ab * cls.pow(2).inverse());
      std::vector<double> egen = F.embed(mu);
      std::vector<double> exi = F.embed(xi);
      double cls_norm = to_double(cls.norm());
      for (const FieldElement& eps : units.eps_cosets) {
        std::vector<double> enu = F.embed(nu * eps);
        for (int j = 0; j < n; ++j)
          emax = std::max(emax, enu[j] * exi[j] * egen[j] * cls_norm);
      }
    }
    const double Bq = 4.0 * kPi * std::sqrt(emax * units.e1);
    const int K1 = spec.weight[0] - 1, K2 = spec.weight[1] - 1;
    const int Kmin = std::min(K1, K2);
    const long n0 = qn * (cut / qn + 1);
    if (Bq >= std::sqrt(static_cast<double>(n0))) {
      tail = inf;
    } else {
      const double le1 = std::log(units.e1);
      const double reps_eps = 2.0 *
                              static_cast<double>(units.sign_reps.size()) *
                              static_cast<double>(units.eps_cosets.size());
      /* sum over the unit tower of the power bound when both arguments
         start at most y < 1: a flat window of 2t*+1 steps around the
         crossover plus two contracting ends */
      auto eta_majorant = [&](double y) {
        double tstar = std::max(0.0, std::ceil(std::log(1.0 / y) / le1));
        double m = (2.0 * tstar + 1.0) * std::pow(y, K1 + K2) *
                   std::pow(units.e1, std::abs(K1 - K2) * tstar);
        m += std::pow(y, 2 * K1) / (std::pow(units.e1, K1) - 1.0);
        m += std::pow(y, 2 * K2) / (std::pow(units.e1, K2) - 1.0);
        return m;
      };
      kahan win;
      const long Xw = std::max(16 * cut, cut + 4096);
      for (long m = n0; m <= Xw; m += qn) {
        double y = Bq / std::sqrt(static_cast<double>(m));
        win.add(tau4(m) / std::sqrt(static_cast<double>(m)) *
                eta_majorant(y));
      }
      tail += abs_c * reps_eps * sqrt_g * win.value();
      /* closing bound past the sieve window: tau_4(n) <= 8n and the eta
         majorant <= (c_t n^{1/4} + geometric ends) y^{2 Kmin} */
      double ct = (4.0 / le1 + 3.0) * std::pow(units.e1, std::abs(K1 - K2));
      double geom = 2.0 / (std::pow(units.e1, Kmin) - 1.0);
      double pw = 0.75 - static_cast<double>(Kmin);
      tail += abs_c * reps_eps * sqrt_g * 8.0 * (ct + geom) *
              std::pow(Bq, 2 * Kmin) *
              std::pow(static_cast<double>(Xw), pw + 1.0) / (-(pw + 1.0));
    }
  }

  out.tail_bound = tail;
  if (out.tail_bound > spec.tail_tolerance)
    throw BudgetError("geometric tail bound " +
                      std::to_string(out.tail_bound) +
                      " exceeds the requested tolerance");
  return out;
}

HarmonicBasis solve_harmonic_weights(std::vector<BasisForm> forms,
                                     const std::vector<TracePair>& pairs,
                                     double cutoff, double tail_tolerance) {
  if (forms.empty()) throw std::invalid_argument("empty basis");
  if (!forms[0].form || !forms[0].form->field)
    throw std::invalid_argument("basis member has no form data");
  const TotallyRealField& F = *forms[0].form->field;
  const FractionalIdeal level = forms[0].level();
  for (const BasisForm& f : forms) {
    if (!f.form || f.form->field != &F ||
        f.form->weight != forms[0].form->weight)
      throw std::invalid_argument("basis mixes fields or weights");
    if (f.level() != level)
      throw std::invalid_argument("basis mixes levels");
  }
  if (pairs.size() < forms.size())
    throw std::invalid_argument("need at least as many pairs as forms");

  const long P = static_cast<long>(pairs.size());
  const long Fn = static_cast<long>(forms.size());
  Eigen::MatrixXd A(P, Fn);
  Eigen::VectorXd rhs(P);
  GeometricSideSpec gs;
  gs.field = &F;
  gs.weight = forms[0].form->weight;
  gs.level = level;
  gs.cutoff = cutoff;
  gs.tail_tolerance = tail_tolerance;
  for (long i = 0; i < P; ++i) {
    gs.m = pairs[static_cast<size_t>(i)].m;
    gs.p = pairs[static_cast<size_t>(i)].p;
    rhs(i) = geometric_side(gs).value;
    for (long j = 0; j < Fn; ++j)
      A(i, j) = forms[static_cast<size_t>(j)].coefficient(gs.m) *
                forms[static_cast<size_t>(j)].coefficient(gs.p);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < Fn)
    throw DataError("pair set is rank deficient for this basis");
  Eigen::VectorXd w = qr.solve(rhs);
  HarmonicBasis basis;
  basis.forms = std::move(forms);
  basis.provenance = "solved";
  for (long j = 0; j < Fn; ++j) {
    if (!(w(j) > 0.0))
      throw DataError("solved harmonic weight is not positive for " +
                      basis.forms[static_cast<size_t>(j)].label);
    basis.weights.push_back(w(j));
  }
  basis.solve_residual = (A * w - rhs).cwiseAbs().maxCoeff();
  return basis;
}

}  // namespace lmom::petersson
