#pragma once

#include <cstdint>
#include <random>

namespace kpz {

/// Independent purposes a trajectory draws randomness for.
enum class Channel : std::uint32_t {
    dynamics = 1,
    bridge = 2,
    initial = 3,
    she = 4,
    auxiliary = 5,
};

/**
 * Deterministic random substream. The engine state is derived from the
 * master seed, a stream index (normally the trajectory index) and a channel,
 * so every trajectory owns noise that does not depend on scheduling.
 */
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream, Channel channel = Channel::dynamics) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          static_cast<std::uint32_t>(channel)};
        engine_.seed(seq);
    }

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace kpz
