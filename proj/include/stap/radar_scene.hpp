#pragma once

// Airborne side-looking array interference scene: steering vectors, clutter /
// jammer / noise covariance synthesis and snapshot generation under H0/H1.
//
// Element ordering of a space-time snapshot is sensor-major: index n*J + m for
// sensor n and pulse m, i.e. steering = kron(spatial, temporal).

#include "matrix_core.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stap {

inline constexpr double kSpeedOfLight = 299792458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

struct JammerSpec {
    double azimuth_deg = 0.0;
    double jnr_db = 40.0;

    bool operator==(const JammerSpec&) const = default;
};

/// Thrown for configuration invariant violations; `field()` names the offending field.
class ValidationError : public ModelError {
public:
    ValidationError(std::string field, const std::string& message)
        : ModelError(field + ": " + message), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Platform, array, waveform and scene parameters. Defaults are the airborne
/// reference system: 8 sensors, 8 pulses, 450 MHz, 300 Hz PRF, 75 m/s, 9 km.
struct RadarConfig {
    double carrier_frequency_hz = 450e6;
    double prf_hz = 300.0;
    double platform_velocity_mps = 75.0;
    double platform_height_m = 9000.0;  // kept for reference; flat-earth model ignores it
    std::size_t num_sensors = 8;
    std::size_t num_pulses = 8;
    std::optional<double> element_spacing_m;  // half wavelength when unset
    double cnr_db = 40.0;
    double noise_power = 1.0;
    std::vector<JammerSpec> jammers;
    std::size_t clutter_patches = 361;
    std::size_t range_ambiguities = 1;
    std::uint64_t master_seed = 1;

    bool operator==(const RadarConfig&) const = default;

    [[nodiscard]] double wavelength_m() const { return kSpeedOfLight / carrier_frequency_hz; }
    [[nodiscard]] double spacing_m() const { return element_spacing_m.value_or(0.5 * wavelength_m()); }
    [[nodiscard]] Index num_elements() const {
        return static_cast<Index>(num_sensors * num_pulses);
    }
    /// Slope of the clutter ridge in (spatial, Doppler) frequency: 2v / (d f_r).
    [[nodiscard]] double clutter_slope() const {
        return 2.0 * platform_velocity_mps / (spacing_m() * prf_hz);
    }
    /// Normalized spatial frequency (d/lambda) sin(azimuth), zero elevation.
    [[nodiscard]] double spatial_frequency(double azimuth_deg) const {
        return spacing_m() / wavelength_m() * std::sin(azimuth_deg * kPi / 180.0);
    }

    void validate() const {
        if (num_sensors < 1) throw ValidationError("num_sensors", "must be >= 1");
        if (num_pulses < 1) throw ValidationError("num_pulses", "must be >= 1");
        if (!(carrier_frequency_hz > 0.0)) throw ValidationError("carrier_frequency_hz", "must be > 0");
        if (!(prf_hz > 0.0)) throw ValidationError("prf_hz", "must be > 0");
        if (element_spacing_m && !(*element_spacing_m > 0.0)) {
            throw ValidationError("element_spacing_m", "must be > 0");
        }
        if (!(noise_power > 0.0)) throw ValidationError("noise_power", "must be > 0");
        // -inf dB switches clutter off
        if (std::isnan(cnr_db) || cnr_db == std::numeric_limits<double>::infinity()) {
            throw ValidationError("cnr_db", "must be finite or -inf");
        }
        if (!std::isfinite(platform_velocity_mps)) {
            throw ValidationError("platform_velocity_mps", "must be finite");
        }
        if (clutter_patches < 1) throw ValidationError("clutter_patches", "must be >= 1");
        if (range_ambiguities < 1) throw ValidationError("range_ambiguities", "must be >= 1");
        for (const auto& jammer : jammers) {
            if (!(jammer.azimuth_deg >= -90.0 && jammer.azimuth_deg <= 90.0)) {
                throw ValidationError("azimuth_deg", "jammer azimuth must lie in [-90, 90]");
            }
            if (!std::isfinite(jammer.jnr_db)) throw ValidationError("jnr_db", "must be finite");
        }
    }
};

/// Reference configuration plus the two 40 dB barrage jammers at -45 and 60 degrees.
inline RadarConfig reference_scene() {
    RadarConfig cfg;
    cfg.jammers = {{-45.0, 40.0}, {60.0, 40.0}};
    return cfg;
}

struct TargetSpec {
    double azimuth_deg = 0.0;
    double doppler_hz = 100.0;
    double snr_db = 10.0;

    bool operator==(const TargetSpec&) const = default;

    [[nodiscard]] double normalized_doppler(const RadarConfig& cfg) const {
        return doppler_hz / cfg.prf_hz;
    }
    /// True when |f_d / f_r| > 0.5, i.e. the Doppler aliases.
    [[nodiscard]] bool doppler_aliased(const RadarConfig& cfg) const {
        return std::abs(normalized_doppler(cfg)) > 0.5;
    }
};

struct CovarianceSet {
    ComplexMatrix r_clutter;
    ComplexMatrix r_jammer;
    ComplexMatrix r_noise;
    ComplexMatrix r_total;
};

enum class Hypothesis { kH0, kH1 };

struct Snapshot {
    ComplexVector data;
    Hypothesis label = Hypothesis::kH0;
};

inline ComplexVector spatial_steering(double vartheta, Index n) {
    ComplexVector b(n);
    for (Index k = 0; k < n; ++k) {
        b(k) = std::exp(-kJ * (2.0 * kPi * static_cast<double>(k) * vartheta));
    }
    return b;
}

inline ComplexVector temporal_steering(double varpi, Index j) {
    ComplexVector a(j);
    for (Index k = 0; k < j; ++k) {
        a(k) = std::exp(-kJ * (2.0 * kPi * static_cast<double>(k) * varpi));
    }
    return a;
}

/// Unit-energy space-time steering kron(b, a) / sqrt(M). Target power is applied
/// when snapshots are drawn, not here.
inline ComplexVector target_steering(const RadarConfig& cfg, const TargetSpec& tgt) {
    const auto b = spatial_steering(cfg.spatial_frequency(tgt.azimuth_deg),
                                    static_cast<Index>(cfg.num_sensors));
    const auto a = temporal_steering(tgt.normalized_doppler(cfg), static_cast<Index>(cfg.num_pulses));
    return kron(b, a) / std::sqrt(static_cast<double>(cfg.num_elements()));
}

/// Sum of equal-power patches spread evenly over azimuth [-90, 90) on the clutter
/// ridge, scaled so trace(R_c)/M = noise_power * CNR.
inline ComplexMatrix clutter_covariance(const RadarConfig& cfg) {
    cfg.validate();
    const Index m = cfg.num_elements();
    const auto n_sensors = static_cast<Index>(cfg.num_sensors);
    const auto n_pulses = static_cast<Index>(cfg.num_pulses);
    const double slope = cfg.clutter_slope();
    const std::size_t total_patches = cfg.clutter_patches * cfg.range_ambiguities;
    // each u = kron(b, a) has ||u||^2 = M, so trace = sum(xi) * M
    const double patch_power = cfg.noise_power * db_to_linear(cfg.cnr_db) /
                               static_cast<double>(total_patches);

    ComplexMatrix rc = ComplexMatrix::Zero(m, m);
    // Flat earth, zero elevation: every range ring has the same angle-Doppler locus.
    for (std::size_t ring = 0; ring < cfg.range_ambiguities; ++ring) {
        for (std::size_t l = 0; l < cfg.clutter_patches; ++l) {
            const double azimuth =
                -90.0 + 180.0 * static_cast<double>(l) / static_cast<double>(cfg.clutter_patches);
            const double vartheta = cfg.spatial_frequency(azimuth);
            const ComplexVector u = kron(spatial_steering(vartheta, n_sensors),
                                         temporal_steering(slope * vartheta, n_pulses));
            rc.noalias() += patch_power * (u * u.adjoint());
        }
    }
    return rc;
}

/// Barrage jammers: sum_q xi_q (b_q b_q^H) kron I_J, xi_q per element relative to noise.
inline ComplexMatrix jammer_covariance(const RadarConfig& cfg) {
    cfg.validate();
    const Index m = cfg.num_elements();
    const auto n_sensors = static_cast<Index>(cfg.num_sensors);
    const auto n_pulses = static_cast<Index>(cfg.num_pulses);
    ComplexMatrix rj = ComplexMatrix::Zero(m, m);
    const ComplexMatrix identity = ComplexMatrix::Identity(n_pulses, n_pulses);
    for (const auto& jammer : cfg.jammers) {
        const double power = cfg.noise_power * db_to_linear(jammer.jnr_db);
        const ComplexVector b = spatial_steering(cfg.spatial_frequency(jammer.azimuth_deg), n_sensors);
        const ComplexMatrix spatial = b * b.adjoint();
        rj += power * kron(spatial, identity);
    }
    return rj;
}

inline CovarianceSet total_covariance(const RadarConfig& cfg) {
    CovarianceSet cov;
    const Index m = cfg.num_elements();
    cov.r_clutter = clutter_covariance(cfg);
    cov.r_jammer = jammer_covariance(cfg);
    cov.r_noise = cfg.noise_power * ComplexMatrix::Identity(m, m);
    cov.r_total = cov.r_clutter + cov.r_jammer + cov.r_noise;
    return cov;
}

/// Draws H0/H1 snapshots from a fixed covariance set. Factorizes R_total once.
class SnapshotGenerator {
public:
    explicit SnapshotGenerator(const ComplexMatrix& r_total) : coloring_(r_total) {}

    /// H0 when `target` is empty. Under H1 the target term is a * sqrt(xi_t * M) * s
    /// with a circular complex standard normal (Swerling I).
    [[nodiscard]] Snapshot draw(Rng& rng, const ComplexVector* steering = nullptr,
                                double snr_db = 0.0) const {
        Snapshot snap;
        snap.data = coloring_.draw(rng);
        if (steering != nullptr) {
            const double amplitude =
                std::sqrt(db_to_linear(snr_db) * static_cast<double>(steering->size()));
            snap.data += complex_normal(rng) * amplitude * (*steering);
            snap.label = Hypothesis::kH1;
        }
        return snap;
    }

    [[nodiscard]] std::vector<Snapshot> draw_training(std::size_t count, Rng& rng) const {
        std::vector<Snapshot> out;
        out.reserve(count);
        for (std::size_t k = 0; k < count; ++k) {
            out.push_back(draw(rng));
        }
        return out;
    }

    [[nodiscard]] const ColoringFactor& coloring() const noexcept { return coloring_; }

private:
    ColoringFactor coloring_;
};

/// One snapshot; pass `tgt` (with the matching steering) for H1.
inline Snapshot draw_snapshot(const CovarianceSet& cov, const RadarConfig& cfg,
                              const std::optional<TargetSpec>& tgt, Rng& rng) {
    const SnapshotGenerator gen(cov.r_total);
    if (!tgt) {
        return gen.draw(rng);
    }
    const ComplexVector s = target_steering(cfg, *tgt);
    return gen.draw(rng, &s, tgt->snr_db);
}

/// Stacks snapshot data as columns of an M x K matrix.
inline ComplexMatrix snapshot_matrix(std::span<const Snapshot> snapshots) {
    if (snapshots.empty()) {
        throw ModelError("snapshot list is empty");
    }
    const Index m = snapshots.front().data.size();
    ComplexMatrix x(m, static_cast<Index>(snapshots.size()));
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        if (snapshots[k].data.size() != m) {
            throw ModelError("snapshot " + std::to_string(k) + " has inconsistent length");
        }
        x.col(static_cast<Index>(k)) = snapshots[k].data;
    }
    return x;
}

/// loading * I + (1/K) sum_k r(k) r(k)^H.
inline ComplexMatrix sample_covariance(std::span<const Snapshot> snapshots, double loading) {
    if (snapshots.empty()) {
        throw ModelError("sample_covariance: need at least one snapshot");
    }
    const ComplexMatrix x = snapshot_matrix(snapshots);
    ComplexMatrix r = (x * x.adjoint()) / static_cast<double>(x.cols());
    r = hermitian_part(r);
    r.diagonal().array() += loading;
    return r;
}

}  // namespace stap
