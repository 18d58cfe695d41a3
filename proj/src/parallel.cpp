#include "ellipsekit/parallel.hpp"

#include <cstdlib>
#include <string>

namespace ellipsekit {

int default_thread_count() {
  if (const char* env = std::getenv("ELLIPSEKIT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace ellipsekit
