#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace cwmtsne {

/// Seeded 64-bit Mersenne Twister. Same seed, same build => same stream.
/// Not thread-safe; parallel consumers each take a child().
class RandomSource {
public:
    static constexpr std::string_view algorithm = "mt19937_64";

    explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    /// Independent source seeded with split_seed(seed(), child_index). The
    /// parent stream is not advanced.
    RandomSource child(std::uint64_t child_index) const { return RandomSource(split_seed(seed_, child_index)); }

    std::mt19937_64& engine() noexcept { return engine_; }

    /// child_seed = splitmix64(parent ^ splitmix64(index + golden-ratio constant)).
    static std::uint64_t split_seed(std::uint64_t parent, std::uint64_t child_index) noexcept;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace cwmtsne
