#include "boxfuse/parallel.hpp"

#include <cstdlib>
#include <string>

namespace boxfuse {

unsigned resolve_thread_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BOXFUSE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace boxfuse
