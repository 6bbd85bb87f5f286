#include "lmom/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <utility>

#include <unistd.h>

#include "httplib.h"

#include "lmom/ideals.hpp"
#include "lmom/number_field.hpp"

namespace lmom::data_io {

namespace fs = std::filesystem;
using ideals::FractionalIdeal;
using ideals::PrimeIdeal;
using number_field::TotallyRealField;

namespace {

bool is_prime_long(long n) {
  if (n < 2) return false;
  for (long q = 2; q * q <= n; ++q)
    if (n % q == 0) return false;
  return true;
}

bool valid_label(const std::string& s) {
  if (s.empty() || !std::isalnum(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
              c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

bool plain_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '\n') return false;
  return true;
}

long parse_long_token(const std::string& tok, const char* what) {
  if (tok.empty() || (!std::isdigit(static_cast<unsigned char>(tok[0])) && tok[0] != '-'))
    throw DataError(std::string("malformed ") + what + " '" + tok + "'");
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (errno != 0 || end != tok.c_str() + tok.size())
    throw DataError(std::string("malformed ") + what + " '" + tok + "'");
  return v;
}

Rat parse_rat_token(const std::string& tok) {
  for (char c : tok) {
    bool ok = std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '/';
    if (!ok) throw DataError("malformed eigenvalue '" + tok + "'");
  }
  Rat v;
  try {
    v = Rat(tok, 10);
  } catch (const std::invalid_argument&) {
    throw DataError("malformed eigenvalue '" + tok + "'");
  }
  if (sgn(v.get_den()) == 0) throw DataError("zero denominator in eigenvalue '" + tok + "'");
  v.canonicalize();
  return v;
}

std::string rat_str(const Rat& v) {
  Rat c = v;
  c.canonicalize();
  return c.get_str();
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t parse_hex16(const std::string& tok) {
  if (tok.size() != 16) throw DataError("checksum field must be 16 hex digits");
  std::uint64_t h = 0;
  for (char c : tok) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else throw DataError("checksum field must be 16 lowercase hex digits");
    h = (h << 4) | static_cast<std::uint64_t>(d);
  }
  return h;
}

long norm_long(const FractionalIdeal& I) {
  Rat n = I.norm();
  if (n.get_den() != 1) throw DataError("ideal with non-integral norm in a record context");
  return n.get_num().get_si();
}

/* rational prime under a prime-ideal norm p^f, f <= 2 */
long prime_below_norm(long n) {
  if (is_prime_long(n)) return n;
  long r = std::lround(std::sqrt(static_cast<double>(n)));
  for (long s = std::max(2L, r - 1); s <= r + 1; ++s)
    if (s * s == n && is_prime_long(s)) return s;
  throw DataError("eigenvalue norm " + std::to_string(n) + " is not a prime power of residue degree at most 2");
}

/* semantic checks shared by serialize and parse; returns the ap entries
   sorted by (norm, key) with duplicates rejected */
std::vector<PrimeEigenvalue> validate_record(const EigenformRecord& r) {
  if (!valid_label(r.label)) throw DataError("bad label '" + r.label + "'");
  const TotallyRealField& F = record_field(r);
  if (static_cast<int>(r.weight.size()) != F.degree())
    throw DataError("record '" + r.label + "' lists " + std::to_string(r.weight.size()) +
                    " weight components for a degree " + std::to_string(F.degree()) + " field");
  for (int k : r.weight)
    if (k < 2 || k % 2 != 0)
      throw DataError("record '" + r.label + "' has a weight component that is not an even integer >= 2");
  if (r.level_norm < 1) throw DataError("record '" + r.label + "' has level norm < 1");
  if (!plain_token(r.level_key)) throw DataError("record '" + r.label + "' has a malformed level key");
  if (r.normalization != "arithmetic")
    throw DataError("record '" + r.label + "' carries normalization tag '" + r.normalization +
                    "'; arithmetic is the only storable normalization");

  std::vector<PrimeEigenvalue> ap = r.ap;
  for (auto& pe : ap) {
    if (pe.norm < 2) throw DataError("record '" + r.label + "' has a prime norm < 2");
    long p = prime_below_norm(pe.norm);
    if (F.degree() == 1 && pe.norm != p)
      throw DataError("record '" + r.label + "' lists a composite prime norm over Q");
    if (!plain_token(pe.key)) throw DataError("record '" + r.label + "' has a malformed prime key");
    if (sgn(pe.value.get_den()) == 0)
      throw DataError("record '" + r.label + "' has an eigenvalue with zero denominator");
    if (F.degree() == 1) {
      /* Deligne bound, checked exactly: a_p^2 <= 4 p^{k-1} */
      Int pw;
      mpz_ui_pow_ui(pw.get_mpz_t(), static_cast<unsigned long>(p),
                    static_cast<unsigned long>(r.weight[0] - 1));
      Rat lhs = pe.value * pe.value;
      if (lhs > Rat(4) * Rat(pw))
        throw DataError("record '" + r.label + "' breaks the Deligne bound at p=" + std::to_string(p) +
                        ": a_p^2 > 4 p^{k-1}");
    }
  }
  std::sort(ap.begin(), ap.end(), [](const PrimeEigenvalue& a, const PrimeEigenvalue& b) {
    return a.norm != b.norm ? a.norm < b.norm : a.key < b.key;
  });
  for (size_t i = 1; i < ap.size(); ++i)
    if (ap[i].norm == ap[i - 1].norm && ap[i].key == ap[i - 1].key)
      throw DataError("record '" + r.label + "' lists the prime of norm " +
                      std::to_string(ap[i].norm) + " twice");
  return ap;
}

void require_coverage(const EigenformRecord& r, long up_to) {
  long cov = coverage_limit(r);
  if (cov < up_to)
    throw DataError("insufficient coefficients: record '" + r.label + "' seeds every prime of norm <= " +
                    std::to_string(cov) + " but norm " + std::to_string(up_to) + " is needed");
}

std::mutex& lock_for_label(const std::string& label) {
  static std::mutex registry_mu;
  static std::map<std::string, std::unique_ptr<std::mutex>> locks;
  std::lock_guard<std::mutex> g(registry_mu);
  auto& slot = locks[label];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void touch(const fs::path& p) {
  std::error_code ec;
  fs::last_write_time(p, fs::file_time_type::clock::now(), ec);
}

}  // namespace

const TotallyRealField& record_field(const EigenformRecord& r) {
  if (r.field_tag == "QQ") return TotallyRealField::rationals();
  if (r.field_tag.size() >= 2 && r.field_tag[0] == 'Q') {
    const std::string ds = r.field_tag.substr(1);
    bool digits = !ds.empty();
    for (char c : ds) digits = digits && std::isdigit(static_cast<unsigned char>(c));
    if (digits) {
      long d = parse_long_token(ds, "field tag");
      try {
        return TotallyRealField::real_quadratic(d);
      } catch (const std::exception& e) {
        throw DataError("unsupported field tag '" + r.field_tag + "': " + e.what());
      }
    }
  }
  throw DataError("unsupported field tag '" + r.field_tag + "'");
}

std::string serialize(const EigenformRecord& r) {
  std::vector<PrimeEigenvalue> ap = validate_record(r);
  std::string body = "eigenform-record v1\n";
  body += "label " + r.label + "\n";
  body += "field " + r.field_tag + "\n";
  body += "weight";
  for (int k : r.weight) body += " " + std::to_string(k);
  body += "\n";
  body += "level " + std::to_string(r.level_norm) + " " + r.level_key + "\n";
  body += "normalization " + r.normalization + "\n";
  for (const auto& pe : ap)
    body += "ap " + std::to_string(pe.norm) + " " + pe.key + " " + rat_str(pe.value) + "\n";
  return body + "checksum " + hex16(fnv1a64(body)) + "\n";
}

EigenformRecord parse_record(std::string_view text, const std::string& source) {
  auto fail = [](size_t line, const std::string& msg) -> void {
    throw DataError("parse error at line " + std::to_string(line) + ": " + msg);
  };
  if (text.empty() || text.back() != '\n')
    throw DataError("parse error: record does not end with a newline");
  if (text.find('\r') != std::string_view::npos)
    throw DataError("parse error: record contains carriage returns");

  std::vector<std::string> lines;
  for (size_t pos = 0; pos < text.size();) {
    size_t nl = text.find('\n', pos);
    lines.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.size() < 7) throw DataError("parse error: truncated record");

  /* the checksum line covers every byte before it, so verify it first to
     separate transport corruption from content errors */
  const std::string& last = lines.back();
  if (last.rfind("checksum ", 0) != 0) fail(lines.size(), "missing checksum line");
  std::uint64_t stated = parse_hex16(last.substr(9));
  std::uint64_t actual = fnv1a64(text.substr(0, text.size() - last.size() - 1));
  if (stated != actual)
    throw DataError("checksum mismatch: file says " + hex16(stated) + " but the content hashes to " +
                    hex16(actual));

  auto tokens = [&](size_t i) {
    std::vector<std::string> out;
    const std::string& s = lines[i];
    size_t pos = 0;
    while (pos <= s.size()) {
      size_t sp = s.find(' ', pos);
      std::string tok = s.substr(pos, sp - pos);
      if (tok.empty()) fail(i + 1, "malformed spacing");
      out.push_back(std::move(tok));
      if (sp == std::string::npos) break;
      pos = sp + 1;
    }
    return out;
  };

  if (lines[0] != "eigenform-record v1") fail(1, "unrecognized format or version line");

  EigenformRecord r;
  r.source = source;

  auto t1 = tokens(1);
  if (t1.size() != 2 || t1[0] != "label") fail(2, "expected 'label <name>'");
  r.label = t1[1];

  auto t2 = tokens(2);
  if (t2.size() != 2 || t2[0] != "field") fail(3, "expected 'field <tag>'");
  r.field_tag = t2[1];

  auto t3 = tokens(3);
  if (t3.size() < 2 || t3.size() > 3 || t3[0] != "weight") fail(4, "expected 'weight <k> [<k>]'");
  for (size_t j = 1; j < t3.size(); ++j) {
    long k = parse_long_token(t3[j], "weight");
    if (k < 2 || k > 1000) fail(4, "weight out of range");
    r.weight.push_back(static_cast<int>(k));
  }

  auto t4 = tokens(4);
  if (t4.size() != 3 || t4[0] != "level") fail(5, "expected 'level <norm> <key>'");
  r.level_norm = parse_long_token(t4[1], "level norm");
  r.level_key = t4[2];

  auto t5 = tokens(5);
  if (t5.size() != 2 || t5[0] != "normalization") fail(6, "expected 'normalization <tag>'");
  r.normalization = t5[1];

  size_t i = 6;
  for (; i + 1 < lines.size(); ++i) {
    auto tv = tokens(i);
    if (tv[0] != "ap") fail(i + 1, "expected an 'ap' line or the checksum line");
    if (tv.size() != 4) fail(i + 1, "expected 'ap <norm> <key> <value>'");
    PrimeEigenvalue pe;
    pe.norm = parse_long_token(tv[1], "prime norm");
    pe.key = tv[2];
    pe.value = parse_rat_token(tv[3]);
    if (!r.ap.empty()) {
      const auto& prev = r.ap.back();
      if (pe.norm < prev.norm || (pe.norm == prev.norm && pe.key <= prev.key))
        fail(i + 1, "ap lines must be strictly sorted by (norm, key)");
    }
    r.ap.push_back(std::move(pe));
  }

  validate_record(r);
  r.checksum = stated;
  return r;
}

EigenformRecord load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_record(buf.str(), "file");
}

void write_file(const EigenformRecord& r, const std::string& path) {
  std::string text = serialize(r);
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot move record into place at '" + path + "'");
  }
}

long coverage_limit(const EigenformRecord& r) {
  const TotallyRealField& F = record_field(r);
  std::set<std::pair<long, std::string>> have;
  for (const auto& pe : r.ap) have.insert({pe.norm, pe.key});

  /* first prime-ideal norm the record misses; scanning rational primes in
     order is enough because any prime above p has norm >= p */
  long min_missing = std::numeric_limits<long>::max();
  for (long p = 2; p <= min_missing; ++p) {
    if (!is_prime_long(p)) continue;
    for (const auto& P : ideals::prime_ideals_above(F, p)) {
      long n = norm_long(P.ideal);
      if (n < min_missing && !have.count({n, P.ideal.key()})) min_missing = n;
    }
  }
  return min_missing - 1;
}

rankin_selberg::Eigenform to_eigenform(const EigenformRecord& r, long up_to) {
  validate_record(r);
  const TotallyRealField& F = record_field(r);

  FractionalIdeal level = [&]() {
    for (const auto& I : ideals::ideals_of_norm(F, r.level_norm))
      if (I.key() == r.level_key) return I;
    throw DataError("record '" + r.label + "': level key '" + r.level_key +
                    "' matches no integral ideal of norm " + std::to_string(r.level_norm));
  }();

  /* the unitary seed divides by N(P)^{(k-1)/2}, which only makes sense for
     one k; the desk corpus is parallel weight throughout */
  for (int k : r.weight)
    if (k != r.weight[0])
      throw DataError("record '" + r.label + "' has non-parallel weight; no stored normalization covers that case");
  const double expo = 0.5 * (r.weight[0] - 1);

  auto f = rankin_selberg::make_eigenform(F, r.weight, level, r.label);
  for (const auto& pe : r.ap) {
    long p = prime_below_norm(pe.norm);
    bool found = false;
    for (const auto& P : ideals::prime_ideals_above(F, p)) {
      if (P.ideal.key() != pe.key) continue;
      if (norm_long(P.ideal) != pe.norm)
        throw DataError("record '" + r.label + "': stored norm " + std::to_string(pe.norm) +
                        " disagrees with the prime at key '" + pe.key + "'");
      double c = pe.value.get_d() / std::pow(static_cast<double>(pe.norm), expo);
      rankin_selberg::set_prime_seed(f, P, c);
      found = true;
      break;
    }
    if (!found)
      throw DataError("record '" + r.label + "': key '" + pe.key + "' matches no prime above " +
                      std::to_string(p));
  }

  require_coverage(r, up_to);
  return rankin_selberg::extend_coefficients(f, up_to);
}

EigenformRecord fetch_remote(const std::string& label, long up_to,
                             const FetchOptions& opt) {
  if (!valid_label(label)) throw std::invalid_argument("malformed label '" + label + "'");
  if (opt.cache_dir.empty()) throw std::invalid_argument("fetch_remote needs a cache_dir");
  if (up_to < 1) throw std::invalid_argument("up_to must be positive");

  /* serialize work per label; concurrent fetches of different labels run freely */
  std::lock_guard<std::mutex> hold(lock_for_label(label));

  const fs::path cached = fs::path(opt.cache_dir) / (label + ".eigenform");
  auto from_cache = [&]() {
    EigenformRecord rec = load_file(cached.string());
    if (rec.label != label)
      throw DataError("cache entry for '" + label + "' holds label '" + rec.label + "'");
    require_coverage(rec, up_to);
    rec.source = "cache";
    touch(cached);
    return rec;
  };

  if (opt.offline) {
    if (fs::exists(cached)) return from_cache();
    throw DataError("offline, and label '" + label + "' is not in the cache");
  }

  std::string endpoint = opt.endpoint;
  if (endpoint.empty()) {
    const char* env = std::getenv("HMFDESK_ENDPOINT");
    if (env) endpoint = env;
  }
  if (endpoint.empty())
    throw std::invalid_argument("no endpoint configured and HMFDESK_ENDPOINT is unset");

  httplib::Client client(endpoint);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(10, 0);
  auto res = client.Get("/eigenform/" + label + "?up_to=" + std::to_string(up_to));

  if (!res || res->status >= 500) {
    if (fs::exists(cached)) return from_cache();
    throw DataError("could not reach '" + endpoint + "' for label '" + label +
                    "', and it is not cached");
  }
  if (res->status == 404) throw DataError("unknown label '" + label + "'");
  if (res->status != 200)
    throw DataError("endpoint '" + endpoint + "' answered status " +
                    std::to_string(res->status) + " for label '" + label + "'");

  EigenformRecord rec = parse_record(res->body, "remote");
  if (rec.label != label)
    throw DataError("endpoint returned label '" + rec.label + "' when asked for '" + label + "'");
  require_coverage(rec, up_to);

  std::error_code ec;
  fs::create_directories(opt.cache_dir, ec);
  write_file(rec, cached.string());
  return rec;
}

long cache_gc(const std::string& cache_dir, std::uint64_t max_bytes) {
  if (!fs::is_directory(cache_dir)) return 0;

  struct Entry {
    fs::path path;
    std::uint64_t size;
    fs::file_time_type mtime;
  };
  std::vector<Entry> entries;
  std::uint64_t total = 0;
  for (const auto& de : fs::directory_iterator(cache_dir)) {
    if (!de.is_regular_file() || de.path().extension() != ".eigenform") continue;
    Entry e{de.path(), de.file_size(), fs::last_write_time(de.path())};
    total += e.size;
    entries.push_back(std::move(e));
  }
  if (total <= max_bytes) return 0;

  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.mtime != b.mtime ? a.mtime < b.mtime : a.path < b.path;
  });
  long evicted = 0;
  for (const auto& e : entries) {
    if (total <= max_bytes) break;
    std::error_code ec;
    if (fs::remove(e.path, ec)) {
      total -= e.size;
      ++evicted;
    }
  }
  return evicted;
}

}  // namespace lmom::data_io
