#include "twqr/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

#include "twqr/error.hpp"

namespace twqr {

unsigned resolve_threads(std::optional<int> requested) {
  if (requested) {
    if (*requested < 1) throw Error(ErrorCode::InvalidConfig, "thread count must be positive");
    return static_cast<unsigned>(*requested);
  }
  if (const char* env = std::getenv("TWQR_THREADS"); env && *env) {
    int value = 0;
    const char* end = env + std::strlen(env);
    const auto res = std::from_chars(env, end, value);
    if (res.ec != std::errc{} || res.ptr != end || value < 1) {
      throw Error(ErrorCode::InvalidConfig, std::string("TWQR_THREADS must be a positive integer, got '") + env + "'");
    }
    return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace twqr
