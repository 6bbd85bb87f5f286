#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <gmpxx.h>

namespace lmom {

using Int = mpz_class;
using Rat = mpq_class;
using cplx = std::complex<double>;

/* thrown when a requested accuracy cannot be certified within configured limits */
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* thrown on malformed, failed-validation, or unavailable eigenform data */
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/* compensated accumulator; the summation order is always deterministic here,
   compensation just keeps long sums from drifting */
struct kahan {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

struct kahan_cplx {
  kahan re, im;
  void add(cplx z) {
    re.add(z.real());
    im.add(z.imag());
  }
  cplx value() const { return {re.value(), im.value()}; }
};

int hardware_threads();

/* Splits [0,n) into fixed-size blocks, evaluates f(lo,hi) -> T on worker
   threads, then folds the per-block partials sequentially in block order.
   Identical result to a serial loop regardless of thread count: thread
   scheduling only affects who computes a block, never the fold order. */
template <class T, class F>
T parallel_block_sum(std::int64_t n, std::int64_t block, F&& f) {
  if (n <= 0) return T{};
  if (block <= 0) block = 1;
  std::int64_t nblocks = (n + block - 1) / block;
  int nthreads = hardware_threads();
  if (nblocks == 1 || nthreads <= 1) {
    T acc{};
    for (std::int64_t b = 0; b < nblocks; ++b) {
      std::int64_t lo = b * block, hi = std::min(n, lo + block);
      acc = acc + f(lo, hi);
    }
    return acc;
  }
  std::vector<T> partial(static_cast<size_t>(nblocks));
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::int64_t b = next.fetch_add(1);
      if (b >= nblocks) break;
      std::int64_t lo = b * block, hi = std::min(n, lo + block);
      partial[static_cast<size_t>(b)] = f(lo, hi);
    }
  };
  int use = static_cast<int>(std::min<std::int64_t>(nthreads, nblocks));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(use));
  for (int i = 0; i < use; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  T acc{};
  for (auto& p : partial) acc = acc + p;
  return acc;
}

/* pair-of-doubles monoid for parallel_block_sum when two totals ride along */
struct dsum2 {
  double a = 0.0, b = 0.0;
  dsum2 operator+(const dsum2& o) const { return {a + o.a, b + o.b}; }
};

struct csum {
  double re = 0.0, im = 0.0;
  csum operator+(const csum& o) const { return {re + o.re, im + o.im}; }
  cplx value() const { return {re, im}; }
};

inline double to_double(const Rat& q) { return mpq_class(q).get_d(); }

/* exact floor of num/den for mpz, den > 0 */
inline Int floor_div(const Int& num, const Int& den) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

inline Int isqrt(const Int& n) {
  Int r;
  mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
  return r;
}

inline bool is_square(const Int& n) {
  return n >= 0 && mpz_perfect_square_p(n.get_mpz_t()) != 0;
}

}  // namespace lmom
