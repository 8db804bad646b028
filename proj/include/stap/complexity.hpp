#pragma once

// Algorithm tags and the multiplication-count model (one complex multiply = 1).

#include "matrix_core.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace stap {

enum class Algorithm {
    kOptimal,
    kSmiMvdr,
    kLrEvd,
    kLrEvdCsm,
    kLrKrylov,
    kLrJio,
    kLrJidf,
    kSaMvdr,
    kKaMvdr,
};

inline constexpr std::array<Algorithm, 9> kAllAlgorithms = {
    Algorithm::kOptimal, Algorithm::kSmiMvdr, Algorithm::kLrEvd,  Algorithm::kLrEvdCsm,
    Algorithm::kLrKrylov, Algorithm::kLrJio,  Algorithm::kLrJidf, Algorithm::kSaMvdr,
    Algorithm::kKaMvdr,
};

inline constexpr std::string_view algorithm_tag(Algorithm a) {
    switch (a) {
        case Algorithm::kOptimal: return "optimal";
        case Algorithm::kSmiMvdr: return "smi-mvdr";
        case Algorithm::kLrEvd: return "lr-evd";
        case Algorithm::kLrEvdCsm: return "lr-evd-csm";
        case Algorithm::kLrKrylov: return "lr-krylov";
        case Algorithm::kLrJio: return "lr-jio";
        case Algorithm::kLrJidf: return "lr-jidf";
        case Algorithm::kSaMvdr: return "sa-mvdr";
        case Algorithm::kKaMvdr: return "ka-mvdr";
    }
    return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view tag) {
    for (const auto a : kAllAlgorithms) {
        if (algorithm_tag(a) == tag) {
            return a;
        }
    }
    return std::nullopt;
}

struct ComplexityParams {
    std::uint64_t m = 64;
    std::uint64_t d = 6;
    std::uint64_t branches = 8;
    std::uint64_t interpolator_len = 8;
    std::uint64_t snapshots = 64;
    std::uint64_t iterations = 5;
};

/// Polynomial multiplication counts:
///   SMI       K M^2 + M^3 + M^2 + M
///   LR-EVD    K M^2 + 10 M^3 + D M^2 + D^3     (CSM variant costs the same)
///   LR-Krylov K M^2 + D M^2 + D^2 M + D^3
///   LR-JIO    it (M^2 + D M^2 + D^3)
///   LR-JIDF   B it (M I + D I^2 + D^3 + I^3)
///   SA        it (M^3 + M^2)
///   KA        2 M^3 + M^2
/// The optimal (clairvoyant) beamformer is costed as SMI without the estimation term.
inline std::uint64_t multiplication_count(Algorithm algorithm, const ComplexityParams& p) {
    if (p.m == 0 || p.d == 0 || p.branches == 0 || p.interpolator_len == 0 || p.snapshots == 0 ||
        p.iterations == 0) {
        throw ModelError("multiplication_count: parameters must be positive");
    }
    const std::uint64_t m = p.m;
    const std::uint64_t d = p.d;
    const std::uint64_t i = p.interpolator_len;
    const std::uint64_t k = p.snapshots;
    const std::uint64_t it = p.iterations;
    switch (algorithm) {
        case Algorithm::kOptimal: return m * m * m + m * m + m;
        case Algorithm::kSmiMvdr: return k * m * m + m * m * m + m * m + m;
        case Algorithm::kLrEvd:
        case Algorithm::kLrEvdCsm: return k * m * m + 10 * m * m * m + d * m * m + d * d * d;
        case Algorithm::kLrKrylov: return k * m * m + d * m * m + d * d * m + d * d * d;
        case Algorithm::kLrJio: return it * (m * m + d * m * m + d * d * d);
        case Algorithm::kLrJidf: return p.branches * it * (m * i + d * i * i + d * d * d + i * i * i);
        case Algorithm::kSaMvdr: return it * (m * m * m + m * m);
        case Algorithm::kKaMvdr: return 2 * m * m * m + m * m;
    }
    return 0;
}

}  // namespace stap
