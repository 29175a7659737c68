#include "biofeed/util/parallel.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace biofeed {

int workers_from_env(int fallback) {
    const char* v = std::getenv("BIOFEED_WORKERS");
    if (v == nullptr || *v == '\0') return fallback;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) throw std::invalid_argument("BIOFEED_WORKERS must be an integer in [1, 1024]");
    return static_cast<int>(n);
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace biofeed
