#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace tcgan {

// Error taxonomy. Shape/geometry/contract come out of the tensor engine,
// parse/invariant out of file ingestion, config/data out of the CLI layer
// (exit codes 1 and 2 respectively).
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};
struct GeometryError : std::runtime_error {
    explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};
struct InvariantError : std::runtime_error {
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// splitmix64 step; used to derive independent child seeds from one root seed
// so parallel repetitions stay deterministic.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded random stream. Distribution objects are constructed per call so a
// stream's output depends only on the engine state, never on leftover
// distribution caches.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean, double sigma) {
        return std::normal_distribution<double>(mean, sigma)(engine_);
    }
    // uniform integer in [0, n)
    std::uint64_t index(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }
    Rng child(std::uint64_t salt) { return Rng(mix_seed(engine_(), salt)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace tcgan
