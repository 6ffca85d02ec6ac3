#include "cwmtsne/random.hpp"

#include <numeric>
#include <stdexcept>

namespace cwmtsne {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t RandomSource::split_seed(std::uint64_t parent, std::uint64_t child_index) noexcept {
    return splitmix64(parent ^ splitmix64(child_index + 0x9e3779b97f4a7c15ULL));
}

std::size_t RandomSource::index(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("RandomSource::index: empty range");
    }
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::vector<std::size_t> RandomSource::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) {
        throw std::invalid_argument("RandomSource::sample_without_replacement: k > n");
    }
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + index(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

} // namespace cwmtsne
