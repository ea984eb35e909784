#include "simskip/common.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <thread>

namespace simskip {

std::size_t worker_count() {
  std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SIMSKIP_THREADS"); env != nullptr && *env != '\0') {
    std::size_t cap = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), cap);
    if (ec == std::errc() && cap > 0) {
      return cap;
    }
  }
  return hw;
}

}  // namespace simskip
