#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace hybgnn {

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent seed for a named consumer ("init", "shuffle", ...)
// so adding draws to one stream never perturbs another.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream);
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index);

// Portable generator: all distributions are implemented here rather than via
// <random> distributions, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform();  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    std::size_t below(std::size_t n);  // uniform integer in [0, n)

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hybgnn
