#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace fedleak {

std::uint64_t splitmix64(std::uint64_t x);

/// Child seed for a named stream, e.g. derive_seed(master, {kClientStream, id, round}).
/// Depends only on its arguments, so streams are independent of execution order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// Stream tags used with derive_seed.
enum StreamTag : std::uint64_t {
    kInitStream = 1,
    kPartitionStream = 2,
    kClientStream = 3,
    kSelectionStream = 4,
    kNoiseStream = 5,
    kSnapshotStream = 6,
};

/// Seeded generator with portable distributions.
///
/// The standard <random> distributions are implementation-defined; these are
/// not, so a given seed gives the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0,1) with 24 bits of mantissa.
    float uniform01() { return static_cast<float>(engine_() >> 40) * 0x1.0p-24f; }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller, standard normal.
    float normal();

    // Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fedleak
