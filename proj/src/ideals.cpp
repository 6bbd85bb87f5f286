#include "lmom/ideals.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace lmom::ideals {

/* ---------- construction and canonical form ---------- */

static Int rat_num(const Rat& r) { return r.get_num(); }
static Int rat_den(const Rat& r) { return r.get_den(); }

static Int int_gcd(const Int& x, const Int& y) {
  Int g;
  mpz_gcd(g.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
  return g;
}

static Int int_lcm(const Int& x, const Int& y) {
  Int g;
  mpz_lcm(g.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
  return g;
}

static Int int_mod(const Int& x, const Int& m) {
  Int r;
  mpz_fdiv_r(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t());
  return r;
}

FractionalIdeal hnf_from_rows(const TotallyRealField& F,
                              std::vector<std::array<Rat, 2>> rows) {
  FractionalIdeal I;
  I.F_ = &F;
  if (F.degree() == 1) {
    Rat acc(0);
    for (auto& r : rows) {
      if (r[1] != 0) throw std::invalid_argument("omega row over Q");
      if (r[0] == 0) continue;
      if (acc == 0) {
        acc = abs(r[0]);
      } else {
        Rat o = abs(r[0]);
        acc = Rat(int_gcd(rat_num(acc) * rat_den(o), rat_num(o) * rat_den(acc)),
                  rat_den(acc) * rat_den(o));
        acc.canonicalize();
      }
    }
    if (acc == 0) throw std::invalid_argument("zero ideal");
    acc.canonicalize();  /* callers may hand in unreduced fractions */
    I.a_ = rat_num(acc);
    I.den_ = rat_den(acc);
    I.c_ = 0;
    I.g_ = 1;
    return I;
  }

  Int den(1);
  for (auto& r : rows) {
    den = int_lcm(den, rat_den(r[0]));
    den = int_lcm(den, rat_den(r[1]));
  }
  /* running column-gcd witness (c0, g) plus collected pure-rational content */
  Int g(0), c0(0), a(0);
  for (auto& r : rows) {
    Int u = rat_num(r[0] * den);
    Int w = rat_num(r[1] * den);
    if (w == 0) {
      a = int_gcd(a, u);
      continue;
    }
    if (g == 0) {
      if (w < 0) {
        w = -w;
        u = -u;
      }
      g = w;
      c0 = u;
      continue;
    }
    Int gg, s, t;
    mpz_gcdext(gg.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), g.get_mpz_t(),
               w.get_mpz_t());
    Int left = (w / gg) * c0 - (g / gg) * u;
    a = int_gcd(a, left);
    c0 = s * c0 + t * u;
    g = gg;
  }
  if (g == 0 || a == 0)
    throw std::invalid_argument("ideal lattice not of full rank");
  if (a < 0) a = -a;
  c0 = int_mod(c0, a);
  Int content = int_gcd(int_gcd(a, c0), g);
  Int red = int_gcd(content, den);
  if (red > 1) {
    a /= red;
    c0 /= red;
    g /= red;
    den /= red;
  }
  I.den_ = den;
  I.a_ = a;
  I.c_ = c0;
  I.g_ = g;
  return I;
}

FractionalIdeal FractionalIdeal::ring_of_integers(const TotallyRealField& F) {
  std::vector<FieldElement> gens = {F.one()};
  return from_generators(F, gens);
}

FractionalIdeal FractionalIdeal::principal(const FieldElement& x) {
  if (x.is_zero()) throw std::invalid_argument("principal ideal of zero");
  return from_generators(x.field(), {x});
}

FractionalIdeal FractionalIdeal::from_generators(
    const TotallyRealField& F, const std::vector<FieldElement>& gens) {
  if (gens.empty()) throw std::invalid_argument("no generators");
  std::vector<std::array<Rat, 2>> rows;
  for (const auto& x : gens) {
    if (!(x.field() == F))
      throw std::invalid_argument("generator from another field");
    if (x.is_zero()) continue;
    rows.push_back({x.a(), x.b()});
    if (F.degree() == 2) {
      FieldElement xo = x * F.omega();
      rows.push_back({xo.a(), xo.b()});
    }
  }
  if (rows.empty()) throw std::invalid_argument("all generators are zero");
  return hnf_from_rows(F, rows);
}

FractionalIdeal FractionalIdeal::different(const TotallyRealField& F) {
  if (F.degree() == 1) return principal(F.one());
  /* derivative of the minimal polynomial at omega: 2*omega - Tr(omega) */
  FieldElement d = F.omega() * Rat(2) - F.element(F.omega_trace());
  return principal(d);
}

Rat FractionalIdeal::norm() const {
  Rat n = (F_->degree() == 1) ? Rat(a_, den_) : Rat(a_ * g_, den_ * den_);
  n.canonicalize();
  return n;
}

bool FractionalIdeal::is_ring() const {
  if (F_->degree() == 1) return den_ == 1 && a_ == 1;
  return den_ == 1 && a_ == 1 && c_ == 0 && g_ == 1;
}

bool FractionalIdeal::contains(const FieldElement& x) const {
  if (!(x.field() == *F_))
    throw std::invalid_argument("element from another field");
  if (F_->degree() == 1) {
    Rat q = x.a() * Rat(den_, a_);
    q.canonicalize();
    return rat_den(q) == 1;
  }
  Rat mu = x.b() * Rat(den_, g_);
  mu.canonicalize();
  if (rat_den(mu) != 1) return false;
  Rat lam = (x.a() * den_ - mu * c_) / a_;
  lam.canonicalize();
  return rat_den(lam) == 1;
}

bool FractionalIdeal::divides(const FractionalIdeal& other) const {
  return (other * inverse()).is_integral();
}

std::vector<FieldElement> FractionalIdeal::basis() const {
  if (F_->degree() == 1) return {F_->element(Rat(a_, den_))};
  return {F_->element(Rat(a_, den_)),
          F_->element(Rat(c_, den_), Rat(g_, den_))};
}

FractionalIdeal FractionalIdeal::operator*(const FractionalIdeal& o) const {
  if (!(*F_ == *o.F_)) throw std::invalid_argument("ideal field mismatch");
  if (F_->degree() == 1) {
    std::vector<std::array<Rat, 2>> rows = {
        {Rat(a_ * o.a_, den_ * o.den_), Rat(0)}};
    return hnf_from_rows(*F_, rows);
  }
  auto b1 = basis(), b2 = o.basis();
  std::vector<std::array<Rat, 2>> rows;
  for (const auto& u : b1)
    for (const auto& v : b2) {
      FieldElement p = u * v;
      rows.push_back({p.a(), p.b()});
    }
  return hnf_from_rows(*F_, rows);
}

FractionalIdeal FractionalIdeal::operator+(const FractionalIdeal& o) const {
  if (!(*F_ == *o.F_)) throw std::invalid_argument("ideal field mismatch");
  std::vector<std::array<Rat, 2>> rows;
  for (const auto& v : basis()) rows.push_back({v.a(), v.b()});
  for (const auto& v : o.basis()) rows.push_back({v.a(), v.b()});
  return hnf_from_rows(*F_, rows);
}

FractionalIdeal FractionalIdeal::conj() const {
  if (F_->degree() == 1) return *this;
  std::vector<std::array<Rat, 2>> rows;
  for (const auto& v : basis()) {
    FieldElement c = v.conj();
    rows.push_back({c.a(), c.b()});
  }
  return hnf_from_rows(*F_, rows);
}

FractionalIdeal FractionalIdeal::inverse() const {
  if (F_->degree() == 1)
    return principal(F_->element(Rat(den_) / Rat(a_)));
  /* I * conj(I) = N(I) O, so I^{-1} = conj(I)/N(I); degree 2 only */
  Rat n = norm();
  FractionalIdeal cj = conj();
  std::vector<std::array<Rat, 2>> rows;
  for (const auto& v : cj.basis()) rows.push_back({v.a() / n, v.b() / n});
  return hnf_from_rows(*F_, rows);
}

FractionalIdeal FractionalIdeal::scale(const FieldElement& x) const {
  if (x.is_zero()) throw std::invalid_argument("scaling ideal by zero");
  std::vector<std::array<Rat, 2>> rows;
  for (const auto& v : basis()) {
    FieldElement p = v * x;
    rows.push_back({p.a(), p.b()});
  }
  return hnf_from_rows(*F_, rows);
}

FractionalIdeal FractionalIdeal::pow(long e) const {
  FractionalIdeal base = *this;
  if (e < 0) {
    base = inverse();
    e = -e;
  }
  FractionalIdeal r = ring_of_integers(*F_);
  while (e > 0) {
    if (e & 1) r = r * base;
    base = base * base;
    e >>= 1;
  }
  return r;
}

bool FractionalIdeal::operator==(const FractionalIdeal& o) const {
  if (!(*F_ == *o.F_)) throw std::invalid_argument("ideal field mismatch");
  if (F_->degree() == 1) return den_ == o.den_ && a_ == o.a_;
  return den_ == o.den_ && a_ == o.a_ && c_ == o.c_ && g_ == o.g_;
}

std::string FractionalIdeal::key() const {
  std::string s = den_.get_str();
  s += ":";
  s += a_.get_str();
  if (F_->degree() == 2) {
    s += ":";
    s += c_.get_str();
    s += ":";
    s += g_.get_str();
  }
  return s;
}

/* ---------- primes, factoring, counting ---------- */

static bool is_prime_long(long p) {
  if (p < 2) return false;
  mpz_class z(p);
  return mpz_probab_prime_p(z.get_mpz_t(), 30) != 0;
}

std::vector<PrimeIdeal> prime_ideals_above(const TotallyRealField& F, long p) {
  if (!is_prime_long(p)) throw std::invalid_argument("p is not prime");
  std::vector<PrimeIdeal> out;
  if (F.degree() == 1) {
    out.push_back({FractionalIdeal::principal(F.from_int(p)), p, 1, 1});
    return out;
  }
  /* roots of x^2 - t x + m mod p */
  long t = mpz_class(F.omega_trace().get_num()).get_si();
  long m = mpz_class(F.omega_norm().get_num()).get_si();
  std::vector<long> roots;
  for (long y = 0; y < p; ++y) {
    long v = ((y * y - t * y + m) % p + p) % p;
    if (v == 0) roots.push_back(y);
  }
  auto prime_from_root = [&](long y) {
    /* lattice (p, c + omega) with c = -y mod p */
    long c = ((-y) % p + p) % p;
    return FractionalIdeal::from_generators(
        F, {F.from_int(p), F.element(Rat(c), Rat(1))});
  };
  bool ramified = (F.discriminant() % p == 0);
  if (ramified) {
    if (roots.size() != 1)
      throw std::runtime_error("ramified prime with wrong root count");
    out.push_back({prime_from_root(roots[0]), p, 2, 1});
  } else if (roots.size() == 2) {
    out.push_back({prime_from_root(roots[0]), p, 1, 1});
    out.push_back({prime_from_root(roots[1]), p, 1, 1});
  } else if (roots.empty()) {
    out.push_back({FractionalIdeal::principal(F.from_int(p)), p, 1, 2});
  } else {
    throw std::runtime_error("unexpected root structure");
  }
  return out;
}

std::vector<std::pair<PrimeIdeal, int>> factor(const FractionalIdeal& I) {
  if (!I.is_integral()) throw std::invalid_argument("factor needs an integral ideal");
  const auto& F = I.field();
  Rat nr = I.norm();
  Int n = nr.get_num();
  std::vector<std::pair<PrimeIdeal, int>> out;
  if (n == 1) return out;
  /* trial-divide the norm */
  std::vector<long> ps;
  Int rem = n;
  for (long p = 2; Int(p) * p <= rem; ++p) {
    if (rem % p == 0) {
      ps.push_back(p);
      while (rem % p == 0) rem /= p;
    }
  }
  if (rem > 1) ps.push_back(rem.get_si());
  for (long p : ps) {
    for (const auto& P : prime_ideals_above(F, p)) {
      int v = 0;
      FractionalIdeal J = I * P.ideal.inverse();
      while (J.is_integral()) {
        ++v;
        J = J * P.ideal.inverse();
      }
      if (v > 0) out.push_back({P, v});
    }
  }
  return out;
}

long divisor_count(const FractionalIdeal& I) {
  long d = 1;
  for (const auto& [P, e] : factor(I)) d *= (e + 1);
  return d;
}

/* solutions of y^2 - t y + m = 0 mod a, counted resp. listed by direct scan */
static long root_count_mod(long a, long t, long m) {
  if (a == 1) return 1;
  long cnt = 0;
  for (long y = 0; y < a; ++y) {
    long v = ((y % a) * (y % a) - (t % a) * y + m) % a;
    if (((v % a) + a) % a == 0) ++cnt;
  }
  return cnt;
}

std::vector<long> count_ideals_by_norm(const TotallyRealField& F, long nmax) {
  std::vector<long> out(static_cast<size_t>(nmax) + 1, 0);
  if (nmax < 1) return out;
  if (F.degree() == 1) {
    for (long n = 1; n <= nmax; ++n) out[static_cast<size_t>(n)] = 1;
    return out;
  }
  long t = mpz_class(F.omega_trace().get_num()).get_si();
  long m = mpz_class(F.omega_norm().get_num()).get_si();
  /* r[a] = number of primitive ideals of norm a */
  std::vector<long> r(static_cast<size_t>(nmax) + 1, 0);
  for (long a = 1; a <= nmax; ++a) r[static_cast<size_t>(a)] = root_count_mod(a, t, m);
  for (long n = 1; n <= nmax; ++n) {
    long s = 0;
    for (long g = 1; g * g <= n; ++g)
      if (n % (g * g) == 0) s += r[static_cast<size_t>(n / (g * g))];
    out[static_cast<size_t>(n)] = s;
  }
  return out;
}

std::vector<long> count_ideals_by_norm_coprime(
    const TotallyRealField& F, long nmax, const std::vector<PrimeIdeal>& avoid) {
  auto base = count_ideals_by_norm(F, nmax);
  if (avoid.empty()) return base;
  /* inclusion-exclusion over subsets of the distinct primes to avoid:
     multiplication by a squarefree product of distinct primes is a bijection
     onto the ideals it divides */
  size_t k = avoid.size();
  if (k > 20) throw std::invalid_argument("too many primes to avoid");
  std::vector<long> nrm(k);
  for (size_t i = 0; i < k; ++i) {
    Rat np = avoid[i].ideal.norm();
    nrm[i] = mpz_class(np.get_num()).get_si();
  }
  std::vector<long> out(static_cast<size_t>(nmax) + 1, 0);
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    long prod = 1;
    int sgn = 1;
    bool ok = true;
    for (size_t i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        sgn = -sgn;
        if (prod > nmax / nrm[i] + 1) { ok = false; break; }
        prod *= nrm[i];
      }
    if (!ok || prod > nmax) continue;
    for (long n = prod; n <= nmax; n += prod)
      out[static_cast<size_t>(n)] += sgn * base[static_cast<size_t>(n / prod)];
  }
  return out;
}

std::vector<FractionalIdeal> ideals_of_norm(const TotallyRealField& F, long n) {
  if (n < 1) throw std::invalid_argument("norm must be positive");
  std::vector<FractionalIdeal> out;
  if (F.degree() == 1) {
    out.push_back(FractionalIdeal::principal(F.from_int(n)));
    return out;
  }
  long t = mpz_class(F.omega_trace().get_num()).get_si();
  long m = mpz_class(F.omega_norm().get_num()).get_si();
  for (long g = 1; g * g <= n; ++g) {
    if (n % (g * g) != 0) continue;
    long a = n / (g * g);
    for (long y = 0; y < a; ++y) {
      long v = (((y % a) * (y % a) - (t % a) * y + m) % a + a) % a;
      if (a > 1 && v != 0) continue;
      long c = ((-y) % a + a) % a;
      std::vector<std::array<Rat, 2>> rows = {{Rat(g) * a, Rat(0)},
                                              {Rat(g) * c, Rat(g)}};
      out.push_back(hnf_from_rows(F, rows));
    }
  }
  return out;
}

/* ---------- generators and narrow classes ---------- */

/* all lattice elements with |norm| = N(I), up to the balanced search box */
static std::vector<FieldElement> norm_matched(const FractionalIdeal& I) {
  const auto& F = I.field();
  Rat N = I.norm();
  auto bas = I.basis();
  if (F.degree() == 1) return {bas[0]};
  /* quadratic form of the coordinates */
  Rat qa = bas[0].norm();
  Rat qc = bas[1].norm();
  Rat qb = (bas[0] * bas[1].conj()).trace();
  /* box: balanced generators satisfy |sigma_j| <= c2 sqrt(N) */
  double R = F.balance_c2() * std::sqrt(to_double(N));
  auto e1 = F.embed(bas[0]), e2 = F.embed(bas[1]);
  double det = e1[0] * e2[1] - e1[1] * e2[0];
  double B1 = (std::fabs(e2[1]) + std::fabs(e2[0])) * R / std::fabs(det);
  double B2 = (std::fabs(e1[1]) + std::fabs(e1[0])) * R / std::fabs(det);
  long bi = static_cast<long>(B1 * 1.05) + 2;
  long bj = static_cast<long>(B2 * 1.05) + 2;
  std::vector<FieldElement> hits;
  for (long i = -bi; i <= bi; ++i)
    for (long j = -bj; j <= bj; ++j) {
      if (i == 0 && j == 0) continue;
      Rat nn = qa * i * i + qb * i * j + qc * j * j;
      if (nn == N || nn == -N)
        hits.push_back(bas[0] * Rat(i) + bas[1] * Rat(j));
    }
  return hits;
}

static bool lex_less(const std::vector<double>& x, const std::vector<double>& y) {
  for (size_t k = 0; k < x.size(); ++k) {
    if (x[k] < y[k] - 1e-12) return true;
    if (x[k] > y[k] + 1e-12) return false;
  }
  return false;
}

std::optional<FieldElement> narrow_generator(const FractionalIdeal& I) {
  const auto& F = I.field();
  if (F.degree() == 1) return F.element(I.norm());  /* positive rational */
  Rat N = I.norm();
  std::optional<FieldElement> best;
  std::vector<double> best_emb;
  auto consider = [&](const FieldElement& x) {
    if (!F.is_totally_positive(x)) return;
    FieldElement b = F.balanced_representative(x);
    auto e = F.embed(b);
    if (!best || lex_less(e, best_emb)) {
      best = b;
      best_emb = e;
    }
  };
  const auto& eps0 = F.fundamental_unit();
  for (const auto& x : norm_matched(I)) {
    Rat nn = x.norm();
    if (nn == N) {
      consider(x);
      consider(-x);
    } else if (F.fundamental_unit_norm() == -1) {
      /* mixed-sign element: a norm -1 unit repairs the signs */
      consider(x * eps0);
      consider(-(x * eps0));
    }
  }
  return best;
}

std::optional<FieldElement> wide_generator(const FractionalIdeal& I) {
  const auto& F = I.field();
  if (F.degree() == 1) return F.element(I.norm());
  std::optional<FieldElement> best;
  std::vector<double> best_emb;
  auto consider = [&](const FieldElement& x) {
    FieldElement b = F.balanced_representative(x);
    if (F.sign_at(b, 0) < 0) b = -b;
    auto e = F.embed(b);
    if (!best || lex_less(e, best_emb)) {
      best = b;
      best_emb = e;
    }
  };
  for (const auto& x : norm_matched(I)) consider(x);
  return best;
}

FieldElement totally_positive_generator(const FractionalIdeal& I) {
  auto g = narrow_generator(I);
  if (!g) throw DataError("ideal is not narrowly principal");
  return *g;
}

NarrowClassTable narrow_class_table(const TotallyRealField& F) {
  NarrowClassTable T;
  T.F = &F;
  T.reps.push_back(FractionalIdeal::ring_of_integers(F));
  if (F.degree() == 1) return T;

  /* wide classes from the Minkowski box */
  long bound = static_cast<long>(std::sqrt(static_cast<double>(F.discriminant())) / 2.0) + 1;
  std::vector<FractionalIdeal> wide = {T.reps[0]};
  for (long n = 2; n <= bound; ++n) {
    for (const auto& I : ideals_of_norm(F, n)) {
      bool known = false;
      for (const auto& R : wide)
        if (wide_generator(I * R.inverse())) {
          known = true;
          break;
        }
      if (!known) wide.push_back(I);
    }
  }
  T.h_wide = static_cast<long>(wide.size());

  if (F.fundamental_unit_norm() == -1) {
    T.reps = wide;
    T.h_plus = T.h_wide;
    return T;
  }
  /* norm +1 fundamental unit: each wide class splits in two; the canonical
     twist is (sqrt d), principal with only mixed-sign generators */
  FractionalIdeal twist = FractionalIdeal::principal(F.sqrt_d());
  if (narrow_generator(twist))
    throw std::runtime_error("twist ideal unexpectedly narrowly principal");
  T.reps.clear();
  for (const auto& R : wide) {
    T.reps.push_back(R);
    T.reps.push_back(R * twist);
  }
  T.h_plus = 2 * T.h_wide;
  /* paranoia: reps must be pairwise inequivalent */
  for (size_t i = 0; i < T.reps.size(); ++i)
    for (size_t j = i + 1; j < T.reps.size(); ++j)
      if (narrow_generator(T.reps[i] * T.reps[j].inverse()))
        throw std::runtime_error("narrow class reps collide");
  return T;
}

int NarrowClassTable::class_index(const FractionalIdeal& I) const {
  for (size_t i = 0; i < reps.size(); ++i)
    if (narrow_generator(I * reps[i].inverse())) return static_cast<int>(i);
  throw std::runtime_error("ideal matches no narrow class rep");
}

std::pair<FieldElement, int> split_ideal(const FractionalIdeal& m,
                                         const NarrowClassTable& T) {
  if (!m.is_integral()) throw std::invalid_argument("split_ideal needs an integral ideal");
  for (size_t i = 0; i < T.reps.size(); ++i) {
    auto g = narrow_generator(m * T.reps[i].inverse());
    if (g) return {*g, static_cast<int>(i)};
  }
  throw DataError("ideal matches no narrow class rep");
}

/* ---------- residue systems ---------- */

/* coordinates of x in the Z-basis of lattice L; integers iff x in L */
static bool lattice_coords(const FractionalIdeal& L, const FieldElement& x,
                           Int& i, Int& j) {
  auto b = L.basis();
  const auto& F = L.field();
  if (F.degree() == 1) {
    Rat q = x.a() / b[0].a();
    q.canonicalize();
    if (rat_den(q) != 1) return false;
    i = rat_num(q);
    j = 0;
    return true;
  }
  /* b[0] = (a0, 0), b[1] = (c0, g0) rational */
  Rat mu = x.b() / b[1].b();
  mu.canonicalize();
  if (rat_den(mu) != 1) return false;
  Rat lam = (x.a() - mu * b[1].a()) / b[0].a();
  lam.canonicalize();
  if (rat_den(lam) != 1) return false;
  i = rat_num(lam);
  j = rat_num(mu);
  return true;
}

/* row Hermite form of [[r00,r01],[r10,r11]]: [[h00,0],[h10,h11]], h00,h11>0 */
static void row_hnf_2x2(Int r00, Int r01, Int r10, Int r11, Int& h00, Int& h10,
                        Int& h11) {
  if (r01 == 0 && r11 == 0) throw std::runtime_error("rank-deficient box");
  /* eliminate the second column into the second row */
  Int g, s, t;
  mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), r01.get_mpz_t(),
             r11.get_mpz_t());
  Int n0 = r01 / g, n1 = r11 / g;
  Int top0 = n1 * r00 - n0 * r10;      /* second coord is 0 */
  Int bot0 = s * r00 + t * r10;
  Int bot1 = g;                        /* = s*r01 + t*r11 */
  if (top0 == 0) throw std::runtime_error("rank-deficient box");
  if (top0 < 0) top0 = -top0;
  if (bot1 < 0) {
    bot1 = -bot1;
    bot0 = -bot0;
  }
  h00 = top0;
  h10 = bot0;
  h11 = bot1;
}

/* particular integer solution of C z = (1,0), or nothing */
static std::optional<std::array<Int, 4>> solve_two_by_four(
    std::array<std::array<Int, 4>, 2> C) {
  /* column operations tracked in U */
  std::array<std::array<Int, 4>, 4> U{};
  for (int i = 0; i < 4; ++i) U[i][i] = 1;
  auto colcombo = [&](int i, int j) {
    /* combine columns i and j so that C[0][i] <- gcd, C[0][j] <- 0 */
    if (C[0][j] == 0) return;
    if (C[0][i] == 0) {
      for (int r = 0; r < 2; ++r) std::swap(C[r][i], C[r][j]);
      for (int r = 0; r < 4; ++r) std::swap(U[r][i], U[r][j]);
      return;
    }
    Int g, s, t;
    mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), C[0][i].get_mpz_t(),
               C[0][j].get_mpz_t());
    Int ai = C[0][i] / g, aj = C[0][j] / g;
    for (int r = 0; r < 2; ++r) {
      Int ni = s * C[r][i] + t * C[r][j];
      Int nj = -aj * C[r][i] + ai * C[r][j];
      C[r][i] = ni;
      C[r][j] = nj;
    }
    for (int r = 0; r < 4; ++r) {
      Int ni = s * U[r][i] + t * U[r][j];
      Int nj = -aj * U[r][i] + ai * U[r][j];
      U[r][i] = ni;
      U[r][j] = nj;
    }
  };
  for (int j = 1; j < 4; ++j) colcombo(0, j);
  if (C[0][0] == 0) return std::nullopt;
  /* second stage on row 1, columns 1..3 (first row already zero there) */
  auto colcombo1 = [&](int i, int j) {
    if (C[1][j] == 0) return;
    if (C[1][i] == 0) {
      for (int r = 0; r < 2; ++r) std::swap(C[r][i], C[r][j]);
      for (int r = 0; r < 4; ++r) std::swap(U[r][i], U[r][j]);
      return;
    }
    Int g, s, t;
    mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), C[1][i].get_mpz_t(),
               C[1][j].get_mpz_t());
    Int ai = C[1][i] / g, aj = C[1][j] / g;
    for (int r = 0; r < 2; ++r) {
      Int ni = s * C[r][i] + t * C[r][j];
      Int nj = -aj * C[r][i] + ai * C[r][j];
      C[r][i] = ni;
      C[r][j] = nj;
    }
    for (int r = 0; r < 4; ++r) {
      Int ni = s * U[r][i] + t * U[r][j];
      Int nj = -aj * U[r][i] + ai * U[r][j];
      U[r][i] = ni;
      U[r][j] = nj;
    }
  };
  for (int j = 2; j < 4; ++j) colcombo1(1, j);
  /* solve H y = (1,0) with H = [[C00, 0],[C10, C11]] lower triangular */
  Int h = C[0][0];
  if (!(h == 1 || h == -1)) return std::nullopt;
  Int y0 = h;  /* 1/h = h for h = +-1 */
  Int y1(0);
  Int need = -C[1][0] * y0;
  if (C[1][1] == 0) {
    if (need != 0) return std::nullopt;
  } else {
    if (need % C[1][1] != 0) return std::nullopt;
    y1 = need / C[1][1];
  }
  std::array<Int, 4> z;
  for (int r = 0; r < 4; ++r) z[static_cast<size_t>(r)] = U[r][0] * y0 + U[r][1] * y1;
  return z;
}

ResidueSystem residue_domain(const FractionalIdeal& a, const FieldElement& c,
                             const FractionalIdeal& cid) {
  const auto& F = a.field();
  if (!(F == cid.field()) || !(F == c.field()))
    throw std::invalid_argument("residue domain field mismatch");
  if (c.is_zero()) throw std::invalid_argument("modulus element is zero");
  ResidueSystem rs;
  rs.F = &F;
  FractionalIdeal D = FractionalIdeal::different(F);
  rs.iq = cid.scale(c);
  if (!rs.iq.is_integral())
    throw std::invalid_argument("(c)*cid must be integral");
  rs.L = a * D.inverse() * cid.inverse();
  rs.M = rs.L.inverse();
  Rat nq = rs.iq.norm();
  Int nqz = nq.get_num();
  if (nqz > kResidueModulusCap)
    throw std::invalid_argument("residue modulus exceeds cap");
  rs.modulus_norm = nqz.get_si();

  auto lb = rs.L.basis();
  auto mb = rs.M.basis();
  auto ib = rs.iq.basis();

  if (F.degree() == 1) {
    /* x = k * l, k in [0, n); inverse by rational extgcd mod n*l ... i.e.
       solve s * (x*w) = 1 mod n with x*w integer */
    long n = rs.modulus_norm;
    for (long k = 0; k < n; ++k) {
      FieldElement x = lb[0] * Rat(k);
      Rat prod = (x * mb[0]).a();  /* integer */
      Int pz = prod.get_num();
      Int g, s, t;
      mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), pz.get_mpz_t(),
                 Int(n).get_mpz_t());
      if (g != 1 && g != -1) continue;
      Int sv = s * g; /* normalize sign so that s*pz = 1 mod n */
      sv = int_mod(sv, Int(n));
      rs.x.push_back(x);
      rs.xbar.push_back(mb[0] * Rat(sv));
    }
    return rs;
  }

  /* box of L/(L iq): rows of the transition matrix are the coordinates of
     the Lq basis in the L basis */
  FractionalIdeal Lq = rs.L * rs.iq;
  FractionalIdeal Mq = rs.M * rs.iq;
  auto lqb = Lq.basis();
  auto mqb = Mq.basis();
  Int t00, t01, t10, t11;
  if (!lattice_coords(rs.L, lqb[0], t00, t01) ||
      !lattice_coords(rs.L, lqb[1], t10, t11))
    throw std::runtime_error("sublattice coordinates not integral");
  Int h00, h10, h11;
  row_hnf_2x2(t00, t01, t10, t11, h00, h10, h11);
  if (h00 * h11 != nqz) throw std::runtime_error("box size mismatch");

  /* box of M/(M iq) for canonical xbar reduction */
  Int s00, s01, s10, s11;
  if (!lattice_coords(rs.M, mqb[0], s00, s01) ||
      !lattice_coords(rs.M, mqb[1], s10, s11))
    throw std::runtime_error("sublattice coordinates not integral");
  Int k00, k10, k11;
  row_hnf_2x2(s00, s01, s10, s11, k00, k10, k11);

  /* integral ideal basis of iq in O coordinates */
  std::array<std::array<Int, 2>, 2> u;
  u[0] = {rat_num(ib[0].a()), rat_num(ib[0].b())};
  u[1] = {rat_num(ib[1].a()), rat_num(ib[1].b())};

  for (Int i(0); i < h00; i += 1) {
    for (Int j(0); j < h11; j += 1) {
      FieldElement x = lb[0] * Rat(i) + lb[1] * Rat(j);
      /* products x*w_k are in O: integer coordinates */
      FieldElement xw1 = x * mb[0], xw2 = x * mb[1];
      std::array<std::array<Int, 4>, 2> C;
      C[0] = {rat_num(xw1.a()), rat_num(xw2.a()), u[0][0], u[1][0]};
      C[1] = {rat_num(xw1.b()), rat_num(xw2.b()), u[0][1], u[1][1]};
      auto z = solve_two_by_four(C);
      if (!z) continue;
      /* canonical reduction of xbar coordinates into the M box */
      Int zs = (*z)[0], zt = (*z)[1];
      Int q1 = floor_div(zt, k11);
      zs -= q1 * k10;
      zt -= q1 * k11;
      Int q2 = floor_div(zs, k00);
      zs -= q2 * k00;
      FieldElement xb = mb[0] * Rat(zs) + mb[1] * Rat(zt);
      rs.x.push_back(x);
      rs.xbar.push_back(xb);
    }
  }
  return rs;
}

bool residue_invertible_gcd_test(const ResidueSystem& rs,
                                 const FieldElement& x) {
  if (x.is_zero()) return false;
  FractionalIdeal xi = FractionalIdeal::principal(x) * rs.M;
  return (xi + rs.iq).is_ring();
}

}  // namespace lmom::ideals
