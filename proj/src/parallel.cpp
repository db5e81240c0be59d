#include "fdadapt/parallel.hpp"

#include <cstdlib>
#include <string>

namespace fdadapt {

std::size_t default_workers() {
  const char* env = std::getenv("FDA_ADAPT_WORKERS");
  if (!env || !*env) return 1;
  try {
    const long v = std::stol(env);
    return v > 0 ? static_cast<std::size_t>(v) : 1;
  } catch (...) {
    return 1;
  }
}

}  // namespace fdadapt
