#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"

#include "lmom/data_io.hpp"
#include "lmom/ideals.hpp"
#include "lmom/number_field.hpp"

using namespace lmom;
using data_io::EigenformRecord;
using data_io::FetchOptions;
using data_io::PrimeEigenvalue;
using number_field::TotallyRealField;
namespace fs = std::filesystem;

namespace {

/* independent checksum oracle: FNV-1a 64 written out from the published
   definition, so the library constant cannot drift unnoticed */
std::uint64_t fnv_oracle(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < s.size(); ++i) {
    h = h ^ static_cast<unsigned char>(s[i]);
    h = h * 0x100000001b3ULL;
  }
  return h;
}

std::string with_checksum(const std::string& body) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv_oracle(body)));
  return body + "checksum " + std::string(buf) + "\n";
}

const char* kDeltaBody =
    "eigenform-record v1\n"
    "label QQ-1.12-a\n"
    "field QQ\n"
    "weight 12\n"
    "level 1 1:1\n"
    "normalization arithmetic\n"
    "ap 2 1:2 -24\n"
    "ap 3 1:3 252\n"
    "ap 5 1:5 4830\n"
    "ap 7 1:7 -16744\n"
    "ap 11 1:11 534612\n"
    "ap 13 1:13 -577738\n"
    "ap 17 1:17 -6905934\n"
    "ap 19 1:19 10661420\n";

const char* kDeltaText =
    "eigenform-record v1\n"
    "label QQ-1.12-a\n"
    "field QQ\n"
    "weight 12\n"
    "level 1 1:1\n"
    "normalization arithmetic\n"
    "ap 2 1:2 -24\n"
    "ap 3 1:3 252\n"
    "ap 5 1:5 4830\n"
    "ap 7 1:7 -16744\n"
    "ap 11 1:11 534612\n"
    "ap 13 1:13 -577738\n"
    "ap 17 1:17 -6905934\n"
    "ap 19 1:19 10661420\n"
    "checksum c68d662c335bab96\n";

EigenformRecord delta_record() {
  EigenformRecord r;
  r.label = "QQ-1.12-a";
  r.field_tag = "QQ";
  r.weight = {12};
  r.level_norm = 1;
  r.level_key = "1:1";
  const long ps[] = {2, 3, 5, 7, 11, 13, 17, 19};
  const long tau[] = {-24, 252, 4830, -16744, 534612, -577738, -6905934, 10661420};
  for (int i = 0; i < 8; ++i)
    r.ap.push_back({ps[i], "1:" + std::to_string(ps[i]), Rat(tau[i])});
  return r;
}

/* degree 2 example over Q(sqrt 5): inert 2 and 3, ramified 5, split 11,
   with made-up eigenvalues inside the unitary divisor bound */
EigenformRecord q5_record() {
  const auto& F5 = TotallyRealField::real_quadratic(5);
  EigenformRecord r;
  r.label = "Q5-1.4-test";
  r.field_tag = "Q5";
  r.weight = {4, 4};
  r.level_norm = 1;
  r.level_key = ideals::ideals_of_norm(F5, 1)[0].key();
  auto p2 = ideals::prime_ideals_above(F5, 2);
  auto p3 = ideals::prime_ideals_above(F5, 3);
  auto p5 = ideals::prime_ideals_above(F5, 5);
  auto p11 = ideals::prime_ideals_above(F5, 11);
  REQUIRE(p11.size() == 2);
  std::string k11a = p11[0].ideal.key(), k11b = p11[1].ideal.key();
  if (k11b < k11a) std::swap(k11a, k11b);
  r.ap.push_back({4, p2[0].ideal.key(), Rat(6)});
  r.ap.push_back({5, p5[0].ideal.key(), Rat(-10)});
  r.ap.push_back({9, p3[0].ideal.key(), Rat(14)});
  r.ap.push_back({11, k11a, Rat(20)});
  r.ap.push_back({11, k11b, Rat(-32)});
  return r;
}

void check_same(const EigenformRecord& a, const EigenformRecord& b) {
  CHECK(a.label == b.label);
  CHECK(a.field_tag == b.field_tag);
  CHECK(a.weight == b.weight);
  CHECK(a.level_norm == b.level_norm);
  CHECK(a.level_key == b.level_key);
  CHECK(a.normalization == b.normalization);
  REQUIRE(a.ap.size() == b.ap.size());
  for (size_t i = 0; i < a.ap.size(); ++i) {
    CHECK(a.ap[i].norm == b.ap[i].norm);
    CHECK(a.ap[i].key == b.ap[i].key);
    CHECK(a.ap[i].value == b.ap[i].value);
  }
}

template <class Fn>
std::string message_of(Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

bool mentions(const std::string& msg, const char* what) {
  return msg.find(what) != std::string::npos;
}

std::string make_temp_dir() {
  std::string tmpl = (fs::temp_directory_path() / "lmom-dataio-XXXXXX").string();
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  char* got = mkdtemp(buf.data());
  REQUIRE(got != nullptr);
  return std::string(got);
}

void age_file(const fs::path& p, int minutes_ago) {
  fs::last_write_time(p, fs::file_time_type::clock::now() -
                             std::chrono::minutes(minutes_ago));
}

/* exact q-expansion oracle, same pentagonal construction as in the
   convolution tests; it never touches the record machinery */
std::vector<mpz_class> poly_mul(const std::vector<mpz_class>& a,
                                const std::vector<mpz_class>& b, size_t n) {
  std::vector<mpz_class> out(n + 1, 0);
  for (size_t i = 0; i <= n && i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (size_t j = 0; j + i <= n && j < b.size(); ++j)
      out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<mpz_class> delta_qexp(size_t n) {
  std::vector<mpz_class> phi(n + 1, 0);
  for (long k = -200; k <= 200; ++k) {
    long e = k * (3 * k - 1) / 2;
    if (e >= 0 && e <= static_cast<long>(n))
      phi[static_cast<size_t>(e)] += (k % 2 == 0) ? 1 : -1;
  }
  auto p2 = poly_mul(phi, phi, n);
  auto p4 = poly_mul(p2, p2, n);
  auto p8 = poly_mul(p4, p4, n);
  auto p16 = poly_mul(p8, p8, n);
  auto p24 = poly_mul(p16, p8, n);
  std::vector<mpz_class> d(n + 1, 0);
  for (size_t i = 1; i <= n; ++i) d[i] = p24[i - 1];
  return d;
}

}  // namespace

TEST_CASE("checksum algorithm matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv_oracle("") == fnv1a64(""));
  CHECK(fnv_oracle("a") == fnv1a64("a"));
  CHECK(fnv_oracle("foobar") == fnv1a64("foobar"));
  CHECK(fnv_oracle(kDeltaBody) == 0xc68d662c335bab96ULL);
  CHECK(with_checksum(kDeltaBody) == kDeltaText);
}

TEST_CASE("canonical record text parses and round-trips byte for byte") {
  auto r = data_io::parse_record(kDeltaText, "file");
  CHECK(r.label == "QQ-1.12-a");
  CHECK(r.field_tag == "QQ");
  CHECK(r.weight == std::vector<int>{12});
  CHECK(r.level_norm == 1);
  CHECK(r.level_key == "1:1");
  CHECK(r.normalization == "arithmetic");
  CHECK(r.source == "file");
  CHECK(r.checksum == 0xc68d662c335bab96ULL);
  REQUIRE(r.ap.size() == 8);
  CHECK(r.ap[0].norm == 2);
  CHECK(r.ap[0].key == "1:2");
  CHECK(r.ap[0].value == Rat(-24));
  CHECK(r.ap[7].value == Rat(10661420));

  CHECK(data_io::serialize(r) == kDeltaText);
  CHECK(data_io::serialize(delta_record()) == kDeltaText);
  check_same(r, delta_record());

  auto dir = make_temp_dir();
  auto path = dir + "/delta.eigenform";
  data_io::write_file(r, path);
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    CHECK(bytes == kDeltaText);
  }
  auto back = data_io::load_file(path);
  check_same(back, r);
  CHECK(back.checksum == r.checksum);
  CHECK(back.source == "file");

  /* eigenvalues stay exact rationals through the text form */
  EigenformRecord q;
  q.label = "QQ-9.4-frac";
  q.field_tag = "QQ";
  q.weight = {4};
  q.level_norm = 9;
  q.level_key = "1:9";
  q.ap.push_back({2, "1:2", Rat(-7) / Rat(2)});
  q.ap.push_back({5, "1:5", Rat(3)});
  auto text = data_io::serialize(q);
  CHECK(mentions(text, "ap 2 1:2 -7/2\n"));
  auto qq = data_io::parse_record(text, "file");
  CHECK(qq.ap[0].value == Rat(-7) / Rat(2));
  check_same(qq, q);

  /* values not in lowest terms normalize on the way in */
  auto loose = with_checksum(
      "eigenform-record v1\nlabel QQ-9.4-frac\nfield QQ\nweight 4\n"
      "level 9 1:9\nnormalization arithmetic\nap 2 1:2 -14/4\n");
  auto ql = data_io::parse_record(loose, "file");
  CHECK(ql.ap[0].value == Rat(-7) / Rat(2));
  CHECK(mentions(data_io::serialize(ql), "ap 2 1:2 -7/2\n"));

  fs::remove_all(dir);
}

TEST_CASE("parse rejects malformed, corrupted, and out-of-bound records") {
  auto swap_once = [](std::string s, const std::string& from, const std::string& to) {
    auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
  };
  const std::string body = kDeltaBody;

  /* transport-level damage surfaces as a checksum problem */
  CHECK_THROWS_AS(data_io::parse_record(swap_once(kDeltaText, "252", "253"), "file"), DataError);
  CHECK(mentions(message_of([&] {
          data_io::parse_record(swap_once(kDeltaText, "c68d", "d68d"), "file");
        }),
        "checksum mismatch"));

  /* structural damage */
  CHECK(mentions(message_of([&] {
          std::string cut(kDeltaText);
          cut.pop_back();
          data_io::parse_record(cut, "file");
        }),
        "newline"));
  CHECK(mentions(message_of([&] { data_io::parse_record(body, "file"); }),
                 "missing checksum line"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "eigenform-record v1", "eigenform-record v2")), "file");
        }),
        "version"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record("eigenform-record v1\nlabel x\nchecksum 0000000000000000\n", "file");
        }),
        "truncated"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "level 1 1:1", "level 1  1:1")), "file");
        }),
        "spacing"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(body + "extra line\n"), "file");
        }),
        "expected an 'ap' line"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "weight 12", "weight twelve")), "file");
        }),
        "malformed weight"));
  CHECK(mentions(message_of([&] {
          std::string cr(kDeltaText);
          cr.insert(cr.find('\n'), "\r");
          data_io::parse_record(cr, "file");
        }),
        "carriage"));

  /* ordering and duplicates */
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(swap_once(body, "ap 2 1:2 -24\n", ""), "ap 3 1:3 252\n", "ap 3 1:3 252\nap 2 1:2 -24\n")), "file");
        }),
        "sorted"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "ap 3 1:3 252\n", "ap 3 1:3 252\nap 3 1:3 252\n")), "file");
        }),
        "sorted"));

  /* content validation */
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "ap 3 1:3 252", "ap 4 1:4 252")), "file");
        }),
        "composite"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "ap 5 1:5 4830", "ap 6 1:6 4830")), "file");
        }),
        "prime power"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "-24", "abc")), "file");
        }),
        "malformed eigenvalue"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "-24", "1.5")), "file");
        }),
        "malformed eigenvalue"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "-24", "5/0")), "file");
        }),
        "zero denominator"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "weight 12", "weight 11")), "file");
        }),
        "even"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "weight 12", "weight 12 12")), "file");
        }),
        "degree"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "level 1 1:1", "level 0 1:1")), "file");
        }),
        "level norm"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "field QQ", "field Q12")), "file");
        }),
        "field tag"));
  CHECK(mentions(message_of([&] {
          data_io::parse_record(with_checksum(swap_once(body, "normalization arithmetic", "normalization unitary")), "file");
        }),
        "storable"));

  /* the Deligne bound is enforced exactly: at k = 12, p = 2 the edge is
     2 * 2^{5.5} = 90.50..., so 90 passes and 91 fails */
  auto with_a2 = [&](const char* v) {
    return with_checksum(swap_once(body, "ap 2 1:2 -24", std::string("ap 2 1:2 ") + v));
  };
  CHECK_NOTHROW((void)data_io::parse_record(with_a2("90"), "file"));
  CHECK(mentions(message_of([&] { data_io::parse_record(with_a2("91"), "file"); }),
                 "Deligne"));
  CHECK(mentions(message_of([&] { data_io::parse_record(with_a2("1000000"), "file"); }),
                 "Deligne"));

  /* serialize guards the same invariants on the way out */
  auto bad = delta_record();
  bad.weight = {12, 12};
  CHECK_THROWS_AS((void)data_io::serialize(bad), DataError);
  bad = delta_record();
  bad.normalization = "unitary";
  CHECK_THROWS_AS((void)data_io::serialize(bad), DataError);
  bad = delta_record();
  bad.label = "no/slash";
  CHECK_THROWS_AS((void)data_io::serialize(bad), DataError);
  bad = delta_record();
  bad.ap[0].value = Rat(91);
  CHECK_THROWS_AS((void)data_io::serialize(bad), DataError);
}

TEST_CASE("coverage limit scans prime ideals in norm order") {
  CHECK(data_io::coverage_limit(delta_record()) == 22);
  CHECK(data_io::coverage_limit(q5_record()) == 18);

  EigenformRecord e;
  e.label = "empty-q";
  e.field_tag = "QQ";
  e.weight = {2};
  e.level_norm = 1;
  e.level_key = "1:1";
  CHECK(data_io::coverage_limit(e) == 1);

  e.field_tag = "Q5";
  e.weight = {2, 2};
  e.level_key = "1:1:0:1";
  CHECK(data_io::coverage_limit(e) == 3);  // the smallest prime norm in Q(sqrt 5) is 4

  /* dropping one split prime above 11 pulls the limit down to 10 */
  auto q = q5_record();
  q.ap.pop_back();
  CHECK(data_io::coverage_limit(q) == 10);
}

TEST_CASE("records build unitary eigenform tables") {
  const auto& Q = TotallyRealField::rationals();
  auto rec = delta_record();
  auto f = data_io::to_eigenform(rec, 22);

  CHECK(f.label == "QQ-1.12-a");
  CHECK(f.coefficient(ideals::ideals_of_norm(Q, 1)[0]) == 1.0);
  CHECK(std::abs(f.coefficient(ideals::ideals_of_norm(Q, 2)[0]) -
                 (-24.0 / std::pow(2.0, 5.5))) <= 1e-16);
  CHECK(std::abs(f.coefficient(ideals::ideals_of_norm(Q, 4)[0]) - (-0.71875)) <= 1e-15);
  CHECK(std::abs(f.coefficient(ideals::ideals_of_norm(Q, 12)[0]) -
                 (-0.43033978397930439)) <= 1e-15);

  /* the full table against the exact q-expansion */
  auto tau = delta_qexp(22);
  double worst = 0.0;
  for (long n = 2; n <= 22; ++n) {
    double want = tau[static_cast<size_t>(n)].get_d() / std::pow(static_cast<double>(n), 5.5);
    double got = f.coefficient(ideals::ideals_of_norm(Q, n)[0]);
    worst = std::max(worst, std::abs(got - want));
  }
  CHECK(worst <= 1e-14);

  CHECK(mentions(message_of([&] { (void)data_io::to_eigenform(rec, 30); }),
                 "insufficient coefficients"));

  auto tampered = rec;
  tampered.normalization = "unitary";
  CHECK(mentions(message_of([&] { (void)data_io::to_eigenform(tampered, 10); }),
                 "storable"));

  tampered = rec;
  tampered.level_key = "9:9";
  CHECK(mentions(message_of([&] { (void)data_io::to_eigenform(tampered, 10); }),
                 "matches no integral ideal"));

  tampered = rec;
  tampered.ap[0].key = "1:9";
  CHECK(mentions(message_of([&] { (void)data_io::to_eigenform(tampered, 10); }),
                 "matches no prime above 2"));

  auto q5 = q5_record();
  auto tq = q5;
  tq.weight = {4, 6};
  CHECK(mentions(message_of([&] { (void)data_io::to_eigenform(tq, 10); }),
                 "non-parallel"));

  /* degree 2 seeds land on the right primes and propagate multiplicatively */
  const auto& F5 = TotallyRealField::real_quadratic(5);
  auto g = data_io::to_eigenform(q5, 18);
  CHECK(std::abs(g.coefficient(ideals::ideals_of_norm(F5, 4)[0]) - 0.75) <= 1e-16);
  CHECK(std::abs(g.coefficient(ideals::ideals_of_norm(F5, 5)[0]) -
                 (-10.0 / std::pow(5.0, 1.5))) <= 1e-16);
  CHECK(std::abs(g.coefficient(ideals::ideals_of_norm(F5, 9)[0]) - 14.0 / 27.0) <= 1e-15);
  auto p11 = ideals::prime_ideals_above(F5, 11);
  std::string k11a = p11[0].ideal.key(), k11b = p11[1].ideal.key();
  const auto& first = k11a < k11b ? p11[0] : p11[1];
  const auto& second = k11a < k11b ? p11[1] : p11[0];
  CHECK(std::abs(g.coefficient(first.ideal) - 20.0 / std::pow(11.0, 1.5)) <= 1e-15);
  CHECK(std::abs(g.coefficient(second.ideal) - (-32.0 / std::pow(11.0, 1.5))) <= 1e-15);
  CHECK(std::abs(g.coefficient(ideals::ideals_of_norm(F5, 16)[0]) -
                 (0.75 * 0.75 - 1.0)) <= 1e-15);

  /* quadratic records survive the file layer unchanged */
  auto dir = make_temp_dir();
  data_io::write_file(q5, dir + "/q5.eigenform");
  check_same(data_io::load_file(dir + "/q5.eigenform"), q5);
  fs::remove_all(dir);
}

TEST_CASE("fetch writes through the cache and the cache serves offline") {
  const std::string label = "QQ-1.12-a";
  const std::string text = kDeltaText;

  httplib::Server server;
  server.Get(R"(/eigenform/QQ-1\.12-a)",
             [&](const httplib::Request&, httplib::Response& res) {
               res.set_content(text, "text/plain");
             });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread runner([&] { server.listen_after_bind(); });
  while (!server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  const std::string endpoint = "http://127.0.0.1:" + std::to_string(port);

  auto dir_a = make_temp_dir();
  FetchOptions opt{endpoint, dir_a, false};

  auto rec = data_io::fetch_remote(label, 20, opt);
  CHECK(rec.source == "remote");
  CHECK(data_io::serialize(rec) == text);
  {
    std::ifstream in(dir_a + "/" + label + ".eigenform", std::ios::binary);
    REQUIRE(in.good());
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    CHECK(bytes == text);
  }

  CHECK(mentions(message_of([&] { (void)data_io::fetch_remote("QQ-9.99-zz", 5, opt); }),
                 "unknown label"));
  CHECK(mentions(message_of([&] { (void)data_io::fetch_remote(label, 40, opt); }),
                 "insufficient coefficients"));
  CHECK_THROWS_AS((void)data_io::fetch_remote("../evil", 5, opt), std::invalid_argument);
  CHECK_THROWS_AS((void)data_io::fetch_remote(label, 5, FetchOptions{endpoint, "", false}),
                  std::invalid_argument);

  /* offline service from the cache, endpoint not even consulted */
  auto off = data_io::fetch_remote(label, 20, FetchOptions{"", dir_a, true});
  CHECK(off.source == "cache");
  check_same(off, rec);

  auto dir_b = make_temp_dir();
  CHECK(mentions(message_of([&] {
          (void)data_io::fetch_remote(label, 20, FetchOptions{"", dir_b, true});
        }),
        "not in the cache"));

  /* endpoint resolution through the environment */
  setenv("HMFDESK_ENDPOINT", endpoint.c_str(), 1);
  auto via_env = data_io::fetch_remote(label, 20, FetchOptions{"", dir_b, false});
  CHECK(via_env.source == "remote");
  CHECK(fs::exists(dir_b + "/" + label + ".eigenform"));
  unsetenv("HMFDESK_ENDPOINT");

  auto dir_c = make_temp_dir();
  CHECK_THROWS_AS((void)data_io::fetch_remote(label, 20, FetchOptions{"", dir_c, false}),
                  std::invalid_argument);

  server.stop();
  runner.join();

  /* with the endpoint dead, a cached label still resolves */
  auto fallback = data_io::fetch_remote(label, 20, FetchOptions{endpoint, dir_a, false});
  CHECK(fallback.source == "cache");
  check_same(fallback, rec);
  CHECK(mentions(message_of([&] {
          (void)data_io::fetch_remote(label, 20, FetchOptions{endpoint, dir_c, false});
        }),
        "could not reach"));

  /* concurrent reads of one label are serialized and all succeed */
  std::atomic<int> good{0};
  std::vector<std::thread> readers;
  for (int i = 0; i < 8; ++i)
    readers.emplace_back([&] {
      auto r = data_io::fetch_remote(label, 20, FetchOptions{"", dir_a, true});
      if (r.label == label && r.source == "cache") ++good;
    });
  for (auto& t : readers) t.join();
  CHECK(good == 8);

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  fs::remove_all(dir_c);
}

TEST_CASE("cache eviction is least recently used and spares other files") {
  auto dir = make_temp_dir();

  EigenformRecord base;
  base.field_tag = "QQ";
  base.weight = {2};
  base.level_norm = 1;
  base.level_key = "1:1";

  std::vector<std::string> labels;
  for (int i = 0; i < 10; ++i) {
    base.label = "gcrec-" + std::to_string(i);
    labels.push_back(base.label);
    data_io::write_file(base, dir + "/" + base.label + ".eigenform");
    age_file(dir + "/" + base.label + ".eigenform", 100 - i);
  }
  {
    std::ofstream keep(dir + "/notes.txt");
    keep << "not a record and never counted\n";
  }
  std::uint64_t one = fs::file_size(dir + "/gcrec-0.eigenform");
  for (const auto& l : labels)
    CHECK(fs::file_size(dir + "/" + l + ".eigenform") == one);

  CHECK(data_io::cache_gc(dir, 20 * one) == 0);
  CHECK(data_io::cache_gc(dir, 5 * one) == 5);
  for (int i = 0; i < 5; ++i) CHECK(!fs::exists(dir + "/gcrec-" + std::to_string(i) + ".eigenform"));
  for (int i = 5; i < 10; ++i) CHECK(fs::exists(dir + "/gcrec-" + std::to_string(i) + ".eigenform"));
  CHECK(fs::exists(dir + "/notes.txt"));
  CHECK(data_io::cache_gc(dir, 5 * one) == 0);

  auto empty = make_temp_dir();
  CHECK(data_io::cache_gc(empty, 1) == 0);
  CHECK(data_io::cache_gc(empty + "/does-not-exist", 1) == 0);

  /* an offline read counts as use: the touched record stops being the
     eviction candidate */
  auto lru = make_temp_dir();
  for (const char* l : {"gca", "gcb", "gcc"}) {
    base.label = l;
    data_io::write_file(base, lru + "/" + std::string(l) + ".eigenform");
  }
  age_file(lru + "/gca.eigenform", 30);
  age_file(lru + "/gcb.eigenform", 20);
  age_file(lru + "/gcc.eigenform", 10);
  (void)data_io::fetch_remote("gca", 1, FetchOptions{"", lru, true});
  std::uint64_t small = fs::file_size(lru + "/gcb.eigenform");
  CHECK(data_io::cache_gc(lru, 4 * small) == 0);
  CHECK(data_io::cache_gc(lru, 2 * small) == 1);
  CHECK(fs::exists(lru + "/gca.eigenform"));
  CHECK(!fs::exists(lru + "/gcb.eigenform"));
  CHECK(fs::exists(lru + "/gcc.eigenform"));

  fs::remove_all(dir);
  fs::remove_all(empty);
  fs::remove_all(lru);
}
