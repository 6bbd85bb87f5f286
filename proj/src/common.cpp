#include "lmom/common.hpp"

#include <cstdlib>

namespace lmom {

int hardware_threads() {
  /* LMOM_THREADS=1 forces serial execution; results are identical either way */
  if (const char* e = std::getenv("LMOM_THREADS")) {
    int v = std::atoi(e);
    if (v >= 1) return v;
  }
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : static_cast<int>(h);
}

}  // namespace lmom
