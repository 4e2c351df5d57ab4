#pragma once

#include <cstdint>
#include <random>

namespace epinn {

// splitmix64 step; used to derive decorrelated stream seeds from one run seed
// so that e.g. parameter init and noise injection never share a stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Named sub-streams of a run seed. Listed explicitly so adding a consumer
// never silently shifts another stream.
enum class Stream : std::uint64_t {
    base_init = 1,
    epinet_init = 2,
    prior_init = 3,
    sensor_noise = 4,
    sensor_location = 5,
    epistemic_index = 6,
    dropout_mask = 7,
    hmc = 8,
    mc_predict = 9,
    colloc_location = 10,
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, Stream stream) : engine_(mix_seed(seed, static_cast<std::uint64_t>(stream))) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
    bool bernoulli(double p_true) { return uniform_(engine_) < p_true; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace epinn
