#include "lmom/number_field.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace lmom::number_field {

/* ---------- FieldElement ---------- */

FieldElement::FieldElement(const TotallyRealField* F, Rat a, Rat b)
    : F_(F), a_(std::move(a)), b_(std::move(b)) {
  a_.canonicalize();
  b_.canonicalize();
  if (F_->degree() == 1 && b_ != 0)
    throw std::invalid_argument("rational field element with omega part");
}

const TotallyRealField& FieldElement::field() const {
  if (!F_) throw std::invalid_argument("uninitialized field element");
  return *F_;
}

bool FieldElement::is_integral() const {
  return a_.get_den() == 1 && b_.get_den() == 1;
}

static void check_same_field(const FieldElement& x, const FieldElement& y) {
  if (!(x.field() == y.field()))
    throw std::invalid_argument("field elements from different fields");
}

FieldElement FieldElement::operator-() const {
  return FieldElement(F_, -a_, -b_);
}

FieldElement FieldElement::operator+(const FieldElement& o) const {
  check_same_field(*this, o);
  return FieldElement(F_, a_ + o.a_, b_ + o.b_);
}

FieldElement FieldElement::operator-(const FieldElement& o) const {
  check_same_field(*this, o);
  return FieldElement(F_, a_ - o.a_, b_ - o.b_);
}

FieldElement FieldElement::operator*(const FieldElement& o) const {
  check_same_field(*this, o);
  /* omega^2 = t*omega - m */
  const Rat& t = F_->omega_trace();
  const Rat& m = F_->omega_norm();
  Rat bb = b_ * o.b_;
  return FieldElement(F_, a_ * o.a_ - m * bb, a_ * o.b_ + b_ * o.a_ + t * bb);
}

FieldElement FieldElement::operator/(const FieldElement& o) const {
  return *this * o.inverse();
}

FieldElement FieldElement::operator*(const Rat& c) const {
  return FieldElement(F_, a_ * c, b_ * c);
}

FieldElement FieldElement::operator/(const Rat& c) const {
  if (c == 0) throw std::invalid_argument("division by zero");
  return FieldElement(F_, a_ / c, b_ / c);
}

bool FieldElement::operator==(const FieldElement& o) const {
  check_same_field(*this, o);
  return a_ == o.a_ && b_ == o.b_;
}

FieldElement FieldElement::conj() const {
  if (F_->degree() == 1) return *this;
  /* conjugate of omega is t - omega */
  return FieldElement(F_, a_ + F_->omega_trace() * b_, -b_);
}

Rat FieldElement::trace() const {
  if (F_->degree() == 1) return a_;
  return 2 * a_ + F_->omega_trace() * b_;
}

Rat FieldElement::norm() const {
  if (F_->degree() == 1) return a_;
  return a_ * a_ + F_->omega_trace() * a_ * b_ + F_->omega_norm() * b_ * b_;
}

FieldElement FieldElement::inverse() const {
  if (is_zero()) throw std::invalid_argument("inverse of zero");
  if (F_->degree() == 1) return FieldElement(F_, Rat(1) / a_, Rat(0));
  Rat n = norm();
  FieldElement c = conj();
  return FieldElement(F_, c.a() / n, c.b() / n);
}

FieldElement FieldElement::pow(long e) const {
  FieldElement base = *this;
  if (e < 0) {
    base = inverse();
    e = -e;
  }
  FieldElement r = F_->one();
  while (e > 0) {
    if (e & 1) r = r * base;
    base = base * base;
    e >>= 1;
  }
  return r;
}

std::string FieldElement::str() const {
  if (F_ == nullptr) return "<null>";
  if (b_ == 0) return a_.get_str();
  std::string s = a_.get_str();
  s += (b_ > 0 ? "+" : "-");
  Rat ab = abs(b_);
  if (ab != 1) {
    s += ab.get_str();
    s += "*";
  }
  s += "w";
  return s;
}

/* ---------- field construction ---------- */

static bool squarefree(long d) {
  for (long p = 2; p * p <= d; ++p)
    if (d % (p * p) == 0) return false;
  return true;
}

/* Pell solution: fundamental unit x + y*sqrt(d) of Z[sqrt d], sigma1 > 1,
   via the continued fraction of sqrt(d); returns norm (-1)^period */
static int pell_unit(long d, Int& x, Int& y) {
  Int D(d);
  Int a0 = isqrt(D);
  Int P(0), Q(1), a = a0;
  Int pm1(1), p0 = a0, qm1(0), q0(1);
  int ell = 0;
  for (;;) {
    ++ell;
    P = a * Q - P;
    Q = (D - P * P) / Q;
    a = (P + a0) / Q;
    if (a == 2 * a0) break;
    Int p1 = a * p0 + pm1, q1 = a * q0 + qm1;
    pm1 = p0;
    p0 = p1;
    qm1 = q0;
    q0 = q1;
    if (ell > 100000) throw std::runtime_error("pell period overflow");
  }
  x = p0;
  y = q0;
  return (ell % 2 == 0) ? 1 : -1;
}

/* integer cube root candidate of n >= 1 */
static Int icbrt(const Int& n) {
  Int r;
  mpz_root(r.get_mpz_t(), n.get_mpz_t(), 3);
  return r;
}

TotallyRealField::TotallyRealField(long d) {
  if (d == 0) {
    deg_ = 1;
    d_ = 0;
    disc_ = 1;
    omega_t_ = 0;
    omega_m_ = 0;
    eps0_ = one();
    eps_plus_ = one();
    eps0_norm_ = 1;
    return;
  }
  if (d <= 1) throw std::domain_error("d must exceed 1");
  if (!squarefree(d)) throw std::domain_error("d must be squarefree");
  deg_ = 2;
  d_ = d;
  long r = d % 4;
  if (r == 1) {
    disc_ = d;
    w0_ = 1;
    w1_ = 1;
    omega_t_ = 1;
    omega_m_ = Rat(1 - d) / 4;
  } else {
    disc_ = 4 * d;
    w0_ = 0;
    w1_ = 2;
    omega_t_ = 0;
    omega_m_ = Rat(-d);
  }

  /* embeddings of omega through 256-bit sqrt, rounded once to double */
  mpf_class sd(0, 256);
  mpf_sqrt_ui(sd.get_mpf_t(), static_cast<unsigned long>(d));
  mpf_class o1 = (mpf_class(w0_, 256) + w1_ * sd) / 2;
  mpf_class o2 = (mpf_class(w0_, 256) - w1_ * sd) / 2;
  omega_emb_ = {o1.get_d(), o2.get_d()};

  /* fundamental unit: Pell gives the unit of Z[sqrt d]; for d = 1 mod 4 the
     full ring may be index 3 above that, detected by an exact cube root */
  Int px, py;
  int pn = pell_unit(d, px, py);
  Rat ex(px), ey(py);
  /* x + y*sqrt d in (1, omega) coordinates */
  auto from_sqrtd_coords = [&](Rat x, Rat y) {
    if (r == 1) return FieldElement(this, x - y, 2 * y);
    return FieldElement(this, x, y);
  };
  eps0_ = from_sqrtd_coords(ex, ey);
  eps0_norm_ = pn;
  if (r == 1) {
    /* try eps = (t + b*sqrt d)/2 with eps^3 = x + y*sqrt d, N(eps) = pn:
       expanding gives t^3 - 3*pn*t = 8x ... over half-integers; clear the
       halves by writing eps = (t + b sqrt d)/2, then t^3 + 3 d t b^2 = 8x and
       3 t^2 b + d b^3 = 8y with t^2 - d b^2 = 4*pn, which reduces to
       t^3 - 3*pn*t = 2x after eliminating b^2 = (t^2-4pn)/d */
    Int n3 = Int(pn);
    Int rhs = 2 * px;
    /* solve t^3 - 3*n*t = 2x over Z; t is near cbrt(2x) */
    Int t0 = icbrt(rhs);
    bool found = false;
    for (Int t = t0 - 2; t <= t0 + 2; t += 1) {
      if (t <= 0) continue;
      if (t * t * t - 3 * n3 * t != rhs) continue;
      Int den = t * t - n3;
      if (den == 0) continue;
      Int num = 2 * py;
      if (num % den != 0) continue;
      Int b = num / den;
      if ((t - b) % 2 != 0) continue;
      if (t * t - b * b * d != 4 * n3) continue;
      eps0_ = from_sqrtd_coords(Rat(t) / 2, Rat(b) / 2);
      found = true;
      break;
    }
    (void)found; /* index 1 when no cube root exists; eps0_ already set */
  }

  eps_plus_ = (eps0_norm_ == -1) ? eps0_ * eps0_ : eps0_;
  regulator_ = std::log(embed1(eps0_));
  log_eps_plus1_ = std::log(embed1(eps_plus_));
  balance_c1_ = std::exp(-0.5 * log_eps_plus1_);
  balance_c2_ = std::exp(0.5 * log_eps_plus1_);
}

const TotallyRealField& TotallyRealField::rationals() {
  static TotallyRealField q(0);
  return q;
}

const TotallyRealField& TotallyRealField::real_quadratic(long d) {
  static std::mutex mu;
  static std::map<long, std::unique_ptr<TotallyRealField>> pool;
  std::lock_guard<std::mutex> lock(mu);
  auto it = pool.find(d);
  if (it == pool.end()) {
    auto f = std::unique_ptr<TotallyRealField>(new TotallyRealField(d));
    it = pool.emplace(d, std::move(f)).first;
  }
  return *it->second;
}

FieldElement TotallyRealField::element(Rat a, Rat b) const {
  return FieldElement(this, std::move(a), std::move(b));
}

FieldElement TotallyRealField::omega() const {
  if (deg_ == 1) throw std::domain_error("omega undefined over Q");
  return element(Rat(0), Rat(1));
}

FieldElement TotallyRealField::sqrt_d() const {
  if (deg_ == 1) throw std::domain_error("sqrt_d undefined over Q");
  /* sqrt d = (2*omega - w0)/w1 */
  return element(Rat(-w0_) / w1_, Rat(2) / w1_);
}

std::vector<double> TotallyRealField::embed(const FieldElement& x) const {
  if (deg_ == 1) return {to_double(x.a())};
  double a = to_double(x.a()), b = to_double(x.b());
  return {a + b * omega_emb_[0], a + b * omega_emb_[1]};
}

double TotallyRealField::embed1(const FieldElement& x) const {
  if (deg_ == 1) return to_double(x.a());
  return to_double(x.a()) + to_double(x.b()) * omega_emb_[0];
}

mpf_class TotallyRealField::embed_mpf(const FieldElement& x, int j,
                                      int digits) const {
  int bits = static_cast<int>(digits * 3.33) + 32;
  if (deg_ == 1) return mpf_class(x.a(), bits);
  if (j < 0 || j > 1) throw std::invalid_argument("embedding index");
  mpf_class sd(0, bits);
  mpf_sqrt_ui(sd.get_mpf_t(), static_cast<unsigned long>(d_));
  if (j == 1) sd = -sd;
  mpf_class om = (mpf_class(w0_, bits) + w1_ * sd) / 2;
  return mpf_class(x.a(), bits) + mpf_class(x.b(), bits) * om;
}

/* exact sign of A + B*sqrt(d) */
static int surd_sign(const Rat& A, const Rat& B, long d) {
  if (B == 0) return sgn(A);
  if (A == 0) return sgn(B);
  if (A > 0 && B > 0) return 1;
  if (A < 0 && B < 0) return -1;
  Rat lhs = A * A, rhs = B * B * d;
  if (A > 0) return lhs > rhs ? 1 : -1;  /* B < 0 */
  return rhs > lhs ? 1 : -1;             /* A < 0, B > 0 */
}

int TotallyRealField::sign_at(const FieldElement& x, int j) const {
  if (deg_ == 1) return sgn(x.a());
  if (j < 0 || j > 1) throw std::invalid_argument("embedding index");
  Rat A = x.a() + x.b() * w0_ / 2;
  Rat B = x.b() * w1_ / 2;
  if (j == 1) B = -B;
  return surd_sign(A, B, d_);
}

bool TotallyRealField::is_totally_positive(const FieldElement& x) const {
  for (int j = 0; j < deg_; ++j)
    if (sign_at(x, j) <= 0) return false;
  return true;
}

std::vector<FieldElement> TotallyRealField::unit_square_cosets() const {
  if (deg_ == 1 || eps0_norm_ == -1) return {one()};
  return {one(), eps0_};
}

std::vector<FieldElement> TotallyRealField::totally_positive_units(
    int count) const {
  if (count < 1) throw std::invalid_argument("count must be positive");
  if (deg_ == 1) return {one()};
  std::vector<FieldElement> out;
  out.push_back(one());
  FieldElement inv = eps_plus_.inverse();
  long k = 1;
  while (static_cast<int>(out.size()) < count) {
    out.push_back(eps_plus_.pow(k));
    if (static_cast<int>(out.size()) < count) out.push_back(inv.pow(k));
    ++k;
  }
  out.resize(static_cast<size_t>(count));
  return out;
}

FieldElement TotallyRealField::balance_unit(const FieldElement& xi) const {
  if (xi.is_zero()) throw std::invalid_argument("balance of zero");
  if (deg_ == 1) return one();
  auto emb = embed(xi);
  double l1 = std::log(std::fabs(emb[0])), l2 = std::log(std::fabs(emb[1]));
  double lam = log_eps_plus1_;
  long m0 = std::lround(-(l1 - l2) / (2 * lam));
  /* imbalance of eps^m * xi is |m*lam + (l1-l2)/2|; scan the neighborhood to
     be safe against rounding, tie-break toward the smaller embedding vector */
  double best = 0;
  long bestm = 0;
  bool have = false;
  for (long m = m0 - 1; m <= m0 + 1; ++m) {
    double imb = std::fabs(m * lam + (l1 - l2) / 2);
    if (!have || imb < best - 1e-12) {
      best = imb;
      bestm = m;
      have = true;
    } else if (imb <= best + 1e-12) {
      /* tie: smaller first embedding means smaller m */
      if (m < bestm) bestm = m;
    }
  }
  return eps_plus_.pow(bestm);
}

FieldElement TotallyRealField::balanced_representative(
    const FieldElement& xi) const {
  return xi * balance_unit(xi);
}

double TotallyRealField::unit_sum(double delta) const {
  if (!(delta > 0)) throw std::domain_error("unit_sum needs delta > 0");
  if (deg_ == 1) return 1.0;
  double e1 = std::exp(log_eps_plus1_);
  return 1.0 + 2.0 / (std::pow(e1, delta) - 1.0);
}

}  // namespace lmom::number_field
