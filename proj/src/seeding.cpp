#include "skillmem/seeding.hpp"

#include <limits>

namespace skillmem {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose) {
    return splitmix64(master ^ fnv1a64(purpose));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index) {
    return splitmix64(derive_seed(master, purpose) + index * 0x9E3779B97F4A7C15ULL);
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

}  // namespace skillmem
