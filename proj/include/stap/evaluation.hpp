#pragma once

// SINR / detection metrics and the Monte-Carlo experiments: SINR against training
// size, SINR against target Doppler, Pd against SNR, and multiplication counts.

#include "beamformers.hpp"
#include "complexity.hpp"
#include "radar_scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace stap {

// ---------------------------------------------------------------------------
// Metrics

/// 10 log10(xi_t M |w^H s|^2 / (w^H R w)), s unit-norm, R interference-plus-noise.
inline double sinr_db(const ComplexVector& w, const ComplexMatrix& r, const ComplexVector& s,
                      double xi_t) {
    if (w.size() != s.size() || r.rows() != s.size()) {
        throw ModelError("sinr: dimension mismatch");
    }
    if (w.squaredNorm() == 0.0) {
        throw ModelError("sinr: weight vector is zero");
    }
    const double noise = output_power(w, r);
    if (!(noise > 0.0)) {
        throw NumericError("sinr: w^H R w is not positive");
    }
    const double signal = xi_t * static_cast<double>(s.size()) * std::norm(w.dot(s));
    return linear_to_db(signal / noise);
}

inline double sinr_db(const ComplexVector& w, const CovarianceSet& cov, const ComplexVector& s,
                      double xi_t) {
    return sinr_db(w, cov.r_total, s, xi_t);
}

/// Square-law threshold: under H0 |w^H r|^2 is exponential with mean w^H R w.
inline double detection_threshold(const ComplexVector& w, const ComplexMatrix& r, double pfa) {
    if (!(pfa > 0.0 && pfa <= 1.0)) {
        throw ModelError("detection_threshold: pfa must lie in (0, 1]");
    }
    return output_power(w, r) * std::log(1.0 / pfa);
}

/// Swerling-I detection probability for a square-law detector: pfa^(1/(1+SINR)).
inline double pd_analytic(double sinr_linear, double pfa) {
    if (sinr_linear < 0.0) {
        throw ModelError("pd_analytic: SINR must be >= 0");
    }
    if (std::isinf(sinr_linear)) {
        return 1.0;
    }
    return std::pow(pfa, 1.0 / (1.0 + sinr_linear));
}

/// Three-sigma binomial half-width for a proportion estimated from `trials` draws.
inline double binomial_3sigma(double p, std::size_t trials) {
    return 3.0 * std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
}

// ---------------------------------------------------------------------------
// Deterministic worker pool: run indices are dealt round-robin, results are stored
// by index, so output does not depend on the thread count.

inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += threads) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------
// Experiment results

struct SinrPoint {
    double x = 0.0;  // snapshots used, or target Doppler in Hz
    double sinr_db = 0.0;
    double std_db = 0.0;
    std::size_t run_count = 0;
    std::size_t failures = 0;
};

struct DetectionPoint {
    double snr_db = 0.0;
    double pd = 0.0;
    double pd_analytic = 0.0;  // mean Swerling-I prediction at the achieved SINR
    double pfa_target = 0.0;
    std::size_t trials = 0;
    std::size_t failures = 0;
};

struct ComplexityPoint {
    Algorithm algorithm = Algorithm::kSmiMvdr;
    std::uint64_t m = 0;
    std::uint64_t multiplications = 0;
};

template <typename Point>
struct Curve {
    Algorithm algorithm = Algorithm::kSmiMvdr;
    std::vector<Point> points;
};

struct ExperimentSettings {
    std::vector<Algorithm> algorithms;
    AlgorithmParams params;
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
};

namespace detail {

inline std::vector<Algorithm> with_optimal_first(const std::vector<Algorithm>& algorithms) {
    std::vector<Algorithm> out{Algorithm::kOptimal};
    for (const auto a : algorithms) {
        if (a != Algorithm::kOptimal) out.push_back(a);
    }
    return out;
}

inline bool needs_prior(const std::vector<Algorithm>& algorithms) {
    return std::find(algorithms.begin(), algorithms.end(), Algorithm::kKaMvdr) != algorithms.end();
}

/// Mean / std of the finite entries; NaN marks a failed design.
inline SinrPoint summarize(double x, const std::vector<double>& values) {
    SinrPoint p;
    p.x = x;
    double sum = 0.0;
    for (const double v : values) {
        if (std::isnan(v)) {
            ++p.failures;
        } else {
            sum += v;
            ++p.run_count;
        }
    }
    if (p.run_count == 0) {
        p.sinr_db = std::numeric_limits<double>::quiet_NaN();
        return p;
    }
    p.sinr_db = sum / static_cast<double>(p.run_count);
    double var = 0.0;
    for (const double v : values) {
        if (!std::isnan(v)) var += (v - p.sinr_db) * (v - p.sinr_db);
    }
    p.std_db = p.run_count > 1 ? std::sqrt(var / static_cast<double>(p.run_count - 1)) : 0.0;
    return p;
}

inline double design_and_score(Algorithm algorithm, const DesignInputs& in, const ComplexVector& s,
                               const AlgorithmParams& params, const ComplexMatrix& r_true,
                               double xi_t) {
    try {
        const auto weights = design_beamformer(algorithm, in, s, params);
        return sinr_db(weights.w, r_true, s, xi_t);
    } catch (const NumericError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace detail

/// SINR against training size. For every run K_max H0 snapshots are drawn once; at
/// each K in `k_grid` every algorithm is designed on the first K of them (sample
/// covariance loaded by params.loading) and scored against the true covariance.
/// The first curve is always the clairvoyant optimum.
inline std::vector<Curve<SinrPoint>> run_sinr_vs_snapshots(const RadarConfig& cfg,
                                                           const TargetSpec& target,
                                                           const ExperimentSettings& settings,
                                                           std::vector<std::size_t> k_grid) {
    if (settings.runs < 1) throw ModelError("runs must be >= 1");
    if (k_grid.empty()) throw ModelError("snapshot grid is empty");
    std::sort(k_grid.begin(), k_grid.end());
    if (k_grid.front() < 1) throw ModelError("snapshot grid entries must be >= 1");

    const auto algorithms = detail::with_optimal_first(settings.algorithms);
    const CovarianceSet cov = total_covariance(cfg);
    const SnapshotGenerator generator(cov.r_total);
    const ComplexVector s = target_steering(cfg, target);
    const double xi_t = db_to_linear(target.snr_db);
    std::optional<KaPrior> prior;
    if (detail::needs_prior(algorithms)) prior = ka_prior(cfg, settings.params.ka_mismatch);
    const std::size_t k_max = k_grid.back();
    const Index m = cfg.num_elements();

    // sinr[run][alg][k]
    std::vector<std::vector<std::vector<double>>> sinr(
        settings.runs, std::vector<std::vector<double>>(algorithms.size(), std::vector<double>(k_grid.size())));

    parallel_for(settings.runs, settings.threads, [&](std::size_t run) {
        Rng rng = make_rng(settings.seed, run);
        const auto training = generator.draw_training(k_max, rng);
        ComplexMatrix accum = ComplexMatrix::Zero(m, m);
        std::size_t used = 0;
        for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
            const std::size_t k = k_grid[ki];
            for (; used < k; ++used) {
                accum.noalias() += training[used].data * training[used].data.adjoint();
            }
            ComplexMatrix r_hat = hermitian_part(accum) / static_cast<double>(k);
            r_hat.diagonal().array() += settings.params.loading;
            DesignInputs in;
            in.training = std::span<const Snapshot>(training.data(), k);
            in.r_hat = &r_hat;
            in.r_true = &cov.r_total;
            in.prior = prior ? &*prior : nullptr;
            in.noise_power = cfg.noise_power;
            for (std::size_t a = 0; a < algorithms.size(); ++a) {
                sinr[run][a][ki] =
                    detail::design_and_score(algorithms[a], in, s, settings.params, cov.r_total, xi_t);
            }
        }
    });

    std::vector<Curve<SinrPoint>> curves;
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        Curve<SinrPoint> curve{algorithms[a], {}};
        for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
            std::vector<double> values;
            for (std::size_t run = 0; run < settings.runs; ++run) values.push_back(sinr[run][a][ki]);
            curve.points.push_back(detail::summarize(static_cast<double>(k_grid[ki]), values));
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

/// SINR against target Doppler at a fixed look angle. Each run draws one block of
/// `k_train` H0 snapshots; every Doppler cell redesigns on that block.
inline std::vector<Curve<SinrPoint>> run_sinr_vs_doppler(const RadarConfig& cfg,
                                                         const TargetSpec& target,
                                                         const ExperimentSettings& settings,
                                                         const std::vector<double>& doppler_grid,
                                                         std::size_t k_train) {
    if (settings.runs < 1) throw ModelError("runs must be >= 1");
    if (doppler_grid.empty()) throw ModelError("Doppler grid is empty");
    if (k_train < 1) throw ModelError("training size must be >= 1");

    const auto algorithms = detail::with_optimal_first(settings.algorithms);
    const CovarianceSet cov = total_covariance(cfg);
    const SnapshotGenerator generator(cov.r_total);
    const double xi_t = db_to_linear(target.snr_db);
    std::optional<KaPrior> prior;
    if (detail::needs_prior(algorithms)) prior = ka_prior(cfg, settings.params.ka_mismatch);

    std::vector<ComplexVector> steering;
    for (const double fd : doppler_grid) {
        TargetSpec t = target;
        t.doppler_hz = fd;
        steering.push_back(target_steering(cfg, t));
    }

    std::vector<std::vector<std::vector<double>>> sinr(
        settings.runs,
        std::vector<std::vector<double>>(algorithms.size(), std::vector<double>(doppler_grid.size())));

    parallel_for(settings.runs, settings.threads, [&](std::size_t run) {
        Rng rng = make_rng(settings.seed, run);
        const auto training = generator.draw_training(k_train, rng);
        const ComplexMatrix r_hat = sample_covariance(training, settings.params.loading);
        DesignInputs in;
        in.training = training;
        in.r_hat = &r_hat;
        in.r_true = &cov.r_total;
        in.prior = prior ? &*prior : nullptr;
        in.noise_power = cfg.noise_power;
        for (std::size_t f = 0; f < doppler_grid.size(); ++f) {
            for (std::size_t a = 0; a < algorithms.size(); ++a) {
                sinr[run][a][f] = detail::design_and_score(algorithms[a], in, steering[f],
                                                           settings.params, cov.r_total, xi_t);
            }
        }
    });

    std::vector<Curve<SinrPoint>> curves;
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        Curve<SinrPoint> curve{algorithms[a], {}};
        for (std::size_t f = 0; f < doppler_grid.size(); ++f) {
            std::vector<double> values;
            for (std::size_t run = 0; run < settings.runs; ++run) values.push_back(sinr[run][a][f]);
            curve.points.push_back(detail::summarize(doppler_grid[f], values));
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

/// Probability of detection against per-element SNR. Per run: one block of `k_train`
/// H0 snapshots designs every algorithm; `trials` H1 draws (shared across the SNR
/// grid) are thresholded with the clairvoyant H0 mean w^H R w for the given pfa.
inline std::vector<Curve<DetectionPoint>> run_pd_vs_snr(const RadarConfig& cfg,
                                                        const TargetSpec& target,
                                                        const ExperimentSettings& settings,
                                                        const std::vector<double>& snr_grid_db,
                                                        std::size_t k_train, std::size_t trials,
                                                        double pfa) {
    if (settings.runs < 1) throw ModelError("runs must be >= 1");
    if (trials < 1) throw ModelError("trials must be >= 1");
    if (snr_grid_db.empty()) throw ModelError("SNR grid is empty");
    if (!(pfa > 0.0 && pfa < 1.0)) throw ModelError("pfa must lie in (0, 1)");

    const auto algorithms = detail::with_optimal_first(settings.algorithms);
    const CovarianceSet cov = total_covariance(cfg);
    const SnapshotGenerator generator(cov.r_total);
    const ComplexVector s = target_steering(cfg, target);
    const double m = static_cast<double>(cfg.num_elements());
    std::optional<KaPrior> prior;
    if (detail::needs_prior(algorithms)) prior = ka_prior(cfg, settings.params.ka_mismatch);
    const std::size_t n_alg = algorithms.size();
    const std::size_t n_snr = snr_grid_db.size();

    // per run: detections[alg][snr], analytic[alg][snr], failed[alg]
    struct RunResult {
        std::vector<std::vector<std::size_t>> detections;
        std::vector<std::vector<double>> analytic;
        std::vector<bool> failed;
    };
    std::vector<RunResult> results(settings.runs);

    parallel_for(settings.runs, settings.threads, [&](std::size_t run) {
        Rng rng = make_rng(settings.seed, run);
        RunResult& res = results[run];
        res.detections.assign(n_alg, std::vector<std::size_t>(n_snr, 0));
        res.analytic.assign(n_alg, std::vector<double>(n_snr, 0.0));
        res.failed.assign(n_alg, false);

        const auto training = generator.draw_training(k_train, rng);
        const ComplexMatrix r_hat = sample_covariance(training, settings.params.loading);
        DesignInputs in;
        in.training = training;
        in.r_hat = &r_hat;
        in.r_true = &cov.r_total;
        in.prior = prior ? &*prior : nullptr;
        in.noise_power = cfg.noise_power;

        std::vector<ComplexVector> weights(n_alg);
        std::vector<Complex> gain(n_alg);
        std::vector<double> threshold(n_alg, 0.0);
        for (std::size_t a = 0; a < n_alg; ++a) {
            try {
                weights[a] = design_beamformer(algorithms[a], in, s, settings.params).w;
                gain[a] = weights[a].dot(s);
                const double mu = output_power(weights[a], cov.r_total);
                threshold[a] = detection_threshold(weights[a], cov.r_total, pfa);
                for (std::size_t k = 0; k < n_snr; ++k) {
                    const double sinr_lin = db_to_linear(snr_grid_db[k]) * m * std::norm(gain[a]) / mu;
                    res.analytic[a][k] = pd_analytic(sinr_lin, pfa);
                }
            } catch (const NumericError&) {
                res.failed[a] = true;
            }
        }

        std::vector<double> amplitude(n_snr);
        for (std::size_t k = 0; k < n_snr; ++k) amplitude[k] = std::sqrt(db_to_linear(snr_grid_db[k]) * m);
        for (std::size_t t = 0; t < trials; ++t) {
            const ComplexVector v = generator.coloring().draw(rng);
            const Complex a_t = complex_normal(rng);
            for (std::size_t a = 0; a < n_alg; ++a) {
                if (res.failed[a]) continue;
                const Complex u = weights[a].dot(v);
                const Complex g = a_t * gain[a];
                for (std::size_t k = 0; k < n_snr; ++k) {
                    if (std::norm(amplitude[k] * g + u) > threshold[a]) ++res.detections[a][k];
                }
            }
        }
    });

    std::vector<Curve<DetectionPoint>> curves;
    for (std::size_t a = 0; a < n_alg; ++a) {
        Curve<DetectionPoint> curve{algorithms[a], {}};
        for (std::size_t k = 0; k < n_snr; ++k) {
            DetectionPoint p;
            p.snr_db = snr_grid_db[k];
            p.pfa_target = pfa;
            std::size_t detections = 0;
            double analytic = 0.0;
            std::size_t ok_runs = 0;
            for (const auto& res : results) {
                if (res.failed[a]) {
                    ++p.failures;
                    continue;
                }
                ++ok_runs;
                detections += res.detections[a][k];
                analytic += res.analytic[a][k];
            }
            p.trials = ok_runs * trials;
            p.pd = p.trials > 0 ? static_cast<double>(detections) / static_cast<double>(p.trials)
                                : std::numeric_limits<double>::quiet_NaN();
            p.pd_analytic = ok_runs > 0 ? analytic / static_cast<double>(ok_runs)
                                        : std::numeric_limits<double>::quiet_NaN();
            curve.points.push_back(p);
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

/// Fraction of `trials` H0 draws whose square-law statistic exceeds the threshold.
inline double empirical_false_alarm_rate(const ComplexVector& w, const ComplexMatrix& r, double pfa,
                                         std::size_t trials, Rng& rng) {
    const ColoringFactor coloring(r);
    const double threshold = detection_threshold(w, r, pfa);
    std::size_t alarms = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        if (std::norm(w.dot(coloring.draw(rng))) > threshold) ++alarms;
    }
    return static_cast<double>(alarms) / static_cast<double>(trials);
}

/// SNR (dB) where a Pd curve first reaches `pd_level`, linearly interpolated between
/// grid points; empty when the curve never gets there.
inline std::optional<double> snr_for_pd(const std::vector<DetectionPoint>& curve, double pd_level) {
    for (std::size_t k = 0; k < curve.size(); ++k) {
        if (curve[k].pd >= pd_level) {
            if (k == 0) return curve[0].snr_db;
            const auto& lo = curve[k - 1];
            const auto& hi = curve[k];
            const double t = (pd_level - lo.pd) / (hi.pd - lo.pd);
            return lo.snr_db + t * (hi.snr_db - lo.snr_db);
        }
    }
    return std::nullopt;
}

/// Multiplication counts over `m_grid`. The estimation block is K = M snapshots.
inline std::vector<Curve<ComplexityPoint>> run_complexity_sweep(const std::vector<Algorithm>& algorithms,
                                                                const std::vector<std::uint64_t>& m_grid,
                                                                const ComplexityParams& fixed) {
    std::vector<Curve<ComplexityPoint>> curves;
    for (const auto a : algorithms) {
        Curve<ComplexityPoint> curve{a, {}};
        for (const auto m : m_grid) {
            ComplexityParams p = fixed;
            p.m = m;
            p.snapshots = m;
            curve.points.push_back({a, m, multiplication_count(a, p)});
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

}  // namespace stap
