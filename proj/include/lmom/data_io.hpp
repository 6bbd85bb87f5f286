#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lmom/common.hpp"
#include "lmom/rankin_selberg.hpp"

namespace lmom::data_io {

/* one stored Hecke eigenvalue: a_P at the prime ideal with the given norm,
   identified by its canonical key.  Values are exact rationals so a record
   round-trips byte for byte; for classical newforms they are integers. */
struct PrimeEigenvalue {
  long norm = 0;
  std::string key;
  Rat value{0};
};

/* on-disk description of a Hecke eigenform.

   Records always carry eigenvalues in the arithmetic normalization (the tag
   is part of the format, and "arithmetic" is the only storable value: the
   unitary coefficients a_P / N(P)^{(k-1)/2} are irrational, so a record that
   claims to hold them is rejected outright).  to_eigenform performs the
   conversion once, on load; there is no record-to-record conversion.

   source says where this instance came from at runtime (file, remote,
   cache) and is not serialized. */
struct EigenformRecord {
  std::string label;
  std::string field_tag;  // "QQ", or "Q<d>" for Q(sqrt d)
  std::vector<int> weight;
  long level_norm = 1;
  std::string level_key;
  std::vector<PrimeEigenvalue> ap;  // strictly sorted by (norm, key)
  std::string normalization = "arithmetic";
  std::string source = "file";
  std::uint64_t checksum = 0;
};

/* resolves the field tag; throws DataError on an unknown or malformed tag */
const number_field::TotallyRealField& record_field(const EigenformRecord& r);

/* canonical text form: fixed line order, eigenvalues in lowest terms, ap
   lines sorted, and a trailing "checksum <16 hex>" line computed over every
   preceding line (each including its newline).  serialize validates the
   record and always emits the same bytes for the same mathematical content. */
std::string serialize(const EigenformRecord& r);

/* strict parse of the canonical form.  Rejects wrong version lines, out of
   order or duplicate ap entries, malformed numbers, checksum mismatches, and
   any eigenvalue over Q that breaks the Deligne bound a_p^2 <= 4 p^{k-1}
   (checked exactly).  source is recorded in the returned struct. */
EigenformRecord parse_record(std::string_view text, const std::string& source);

EigenformRecord load_file(const std::string& path);

/* write-to-temp then rename, so readers never observe a partial record */
void write_file(const EigenformRecord& r, const std::string& path);

/* largest L such that the record seeds every prime ideal of norm <= L */
long coverage_limit(const EigenformRecord& r);

/* builds the unitary-normalized eigenform and extends its coefficient table
   to cover all ideals of norm <= up_to.  Requires the arithmetic tag, keys
   that match actual prime ideals of the resolved field, and enough stored
   primes (coverage_limit >= up_to). */
rankin_selberg::Eigenform to_eigenform(const EigenformRecord& r, long up_to);

struct FetchOptions {
  std::string endpoint;   // "http://host:port"; empty means $HMFDESK_ENDPOINT
  std::string cache_dir;  // required; records land here as <label>.eigenform
  bool offline = false;   // never touch the network, serve from cache only
};

/* GET <endpoint>/eigenform/<label>?up_to=<n>, validate, write through to the
   cache, and return the record.  A network failure falls back to the cache
   when the label is present there; a 404 means the label does not exist and
   is reported as such.  Offline mode reads the cache only.  Fetches of the
   same label are serialized process-wide; cache reads bump the file's mtime
   so eviction sees recency of use. */
EigenformRecord fetch_remote(const std::string& label, long up_to,
                             const FetchOptions& opt);

/* evicts least-recently-used *.eigenform files until the cache fits under
   max_bytes; other files are neither counted nor touched.  Returns the
   number of files removed. */
long cache_gc(const std::string& cache_dir, std::uint64_t max_bytes);

}  // namespace lmom::data_io
