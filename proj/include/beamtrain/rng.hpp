#pragma once

#include <cstdint>
#include <limits>

namespace beamtrain {

// Identifies one independent random substream: a run seed, a sweep point,
// a trial, and a user within the trial.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t point = 0;
    std::uint64_t trial = 0;
    std::uint64_t user = 0;
};

// Counter-based generator: the n-th output is a SplitMix64 finalizer applied
// to key + n * golden-gamma, so a substream is fully determined by its key and
// trials can be generated in any order or on any thread.
// Satisfies UniformRandomBitGenerator.
class SubstreamEngine {
  public:
    using result_type = std::uint64_t;

    explicit SubstreamEngine(const StreamKey& key) : key_(derive_key(key)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + (++counter_) * kGamma); }

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t derive_key(const StreamKey& k) {
        std::uint64_t h = mix(k.seed ^ 0x6a09e667f3bcc909ULL);
        h = mix(h ^ (k.point + 0x3c6ef372fe94f82bULL));
        h = mix(h ^ (k.trial + 0xa54ff53a5f1d36f1ULL));
        h = mix(h ^ (k.user + 0x510e527fade682d1ULL));
        return h;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace beamtrain
