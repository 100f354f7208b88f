#ifndef M3NET_SEED_HPP_
#define M3NET_SEED_HPP_

#include <cstdint>
#include <random>

namespace m3net {

/// Independent child seed for stream `index` of `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 gen(seq);
    return gen();
}

} // namespace m3net

#endif // M3NET_SEED_HPP_
