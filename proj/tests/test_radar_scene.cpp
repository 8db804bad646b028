#include <stap/radar_scene.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace stap;

namespace {

std::size_t count_above(const ComplexMatrix& r, double rel) {
    const RealVector values = eigenvalues_descending(r);
    std::size_t count = 0;
    for (Index k = 0; k < values.size(); ++k) {
        if (values(k) > rel * values(0)) ++count;
    }
    return count;
}

double max_hermitian_defect(const ComplexMatrix& r) {
    return (r - r.adjoint()).cwiseAbs().maxCoeff();
}

RadarConfig small_config(std::size_t n, std::size_t j) {
    RadarConfig cfg;
    cfg.num_sensors = n;
    cfg.num_pulses = j;
    return cfg;
}

}  // namespace

TEST(Steering, SpatialExamples) {
    EXPECT_LT((spatial_steering(0.0, 4) - ComplexVector::Ones(4)).norm(), 1e-15);
    const ComplexVector half = spatial_steering(0.5, 2);
    EXPECT_NEAR(std::abs(half(0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(half(1) + 1.0), 0.0, 1e-15);
    const ComplexVector quarter = spatial_steering(0.25, 4);
    const Complex expected[] = {1.0, -kJ, -1.0, kJ};
    for (Index k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(quarter(k) - expected[k]), 0.0, 1e-15);
}

TEST(Steering, TemporalExamples) {
    EXPECT_LT((temporal_steering(0.0, 5) - ComplexVector::Ones(5)).norm(), 1e-15);
    EXPECT_LT((temporal_steering(1.0, 5) - ComplexVector::Ones(5)).norm(), 1e-13);
    const ComplexVector third = temporal_steering(1.0 / 3.0, 3);
    EXPECT_NEAR(std::abs(third(1) - std::exp(-kJ * (2.0 * kPi / 3.0))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(third(2) - std::exp(-kJ * (4.0 * kPi / 3.0))), 0.0, 1e-15);
}

TEST(Steering, UnitModulusEntries) {
    for (const double f : {-0.37, 0.0, 0.11, 0.5}) {
        const ComplexVector b = spatial_steering(f, 7);
        for (Index k = 0; k < b.size(); ++k) EXPECT_NEAR(std::abs(b(k)), 1.0, 1e-14);
    }
}

TEST(Steering, TargetSingleElementIsOne) {
    const auto s = target_steering(small_config(1, 1), {0.0, 37.0, 10.0});
    ASSERT_EQ(s.size(), 1);
    EXPECT_NEAR(std::abs(s(0)), 1.0, 1e-15);
}

TEST(Steering, TargetBoresightZeroDoppler) {
    const RadarConfig cfg;
    const auto s = target_steering(cfg, {0.0, 0.0, 10.0});
    const double expected = 1.0 / std::sqrt(64.0);
    for (Index k = 0; k < s.size(); ++k) EXPECT_NEAR(std::abs(s(k) - expected), 0.0, 1e-15);
}

TEST(Steering, TargetHalfSpatialFrequencyByHand) {
    // d = lambda/2 and azimuth 90 deg give vartheta = 0.5
    const auto s = target_steering(small_config(2, 2), {90.0, 0.0, 0.0});
    const double expected[] = {0.5, 0.5, -0.5, -0.5};
    for (Index k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(s(k) - expected[k]), 0.0, 1e-15);
}

TEST(Steering, TargetIsNormalizedKronecker) {
    const RadarConfig cfg;
    const TargetSpec tgt{17.0, 63.0, 10.0};
    const auto s = target_steering(cfg, tgt);
    EXPECT_NEAR(s.norm(), 1.0, 1e-12);
    const ComplexVector expected =
        kron(spatial_steering(cfg.spatial_frequency(17.0), 8), temporal_steering(63.0 / 300.0, 8)) / 8.0;
    EXPECT_LT((s - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Target, AliasingIsFlaggedNotRejected) {
    const RadarConfig cfg;
    EXPECT_FALSE((TargetSpec{0.0, 100.0, 10.0}.doppler_aliased(cfg)));
    EXPECT_TRUE((TargetSpec{0.0, 200.0, 10.0}.doppler_aliased(cfg)));
    EXPECT_NO_THROW(target_steering(cfg, {0.0, 200.0, 10.0}));
}

TEST(Config, ReferenceDerivedQuantities) {
    const RadarConfig cfg;
    EXPECT_NEAR(cfg.wavelength_m(), 0.6662, 1e-4);
    EXPECT_NEAR(cfg.clutter_slope(), 1.501, 1e-3);
    EXPECT_EQ(cfg.num_elements(), 64);
}

TEST(Config, ValidationNamesField) {
    RadarConfig cfg;
    cfg.num_sensors = 0;
    try {
        cfg.validate();
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "num_sensors");
    }
    cfg = RadarConfig{};
    cfg.prf_hz = 0.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = RadarConfig{};
    cfg.jammers = {{95.0, 40.0}};
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Clutter, SinglePatchIsRankOneAllOnes) {
    RadarConfig cfg = small_config(2, 3);
    cfg.clutter_patches = 1;
    cfg.cnr_db = 0.0;
    // the only patch sits at -90 deg; zero velocity keeps its Doppler at 0 and
    // a spacing of one wavelength folds vartheta = -1 onto all-ones
    cfg.platform_velocity_mps = 0.0;
    cfg.element_spacing_m = cfg.wavelength_m();
    const ComplexMatrix rc = clutter_covariance(cfg);
    const ComplexMatrix expected = ComplexMatrix::Ones(6, 6);
    EXPECT_LT((rc - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(rc.trace().real() / 6.0, 1.0, 1e-12);
    EXPECT_EQ(count_above(rc, 1e-10), 1U);
}

TEST(Clutter, HermitianPsdAndTraceNormalized) {
    for (const double cnr : {0.0, 20.0, 40.0}) {
        RadarConfig cfg;
        cfg.cnr_db = cnr;
        const ComplexMatrix rc = clutter_covariance(cfg);
        EXPECT_LE(max_hermitian_defect(rc), 1e-12 * rc.norm());
        const double target = db_to_linear(cnr);
        EXPECT_LE(std::abs(rc.trace().real() / 64.0 - target), 1e-9 * target);
        const RealVector values = eigenvalues_descending(rc);
        EXPECT_GE(values.minCoeff(), -1e-10 * values(0));
    }
}

TEST(Clutter, ReferenceEigenCountRegression) {
    // Brennan neighborhood is 8 + 1.501 * 7 = 18.5; the 361-patch synthesis measures 23
    const std::size_t count = count_above(clutter_covariance(RadarConfig{}), 1e-6);
    EXPECT_EQ(count, 23U);
}

TEST(Clutter, DisabledWithMinusInfinityCnr) {
    RadarConfig cfg;
    cfg.cnr_db = -std::numeric_limits<double>::infinity();
    EXPECT_EQ(clutter_covariance(cfg).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(total_covariance(cfg).r_total, ComplexMatrix(ComplexMatrix::Identity(64, 64)));
}

TEST(Jammer, NoJammersGivesZero) {
    EXPECT_EQ(jammer_covariance(RadarConfig{}).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Jammer, BroadsideUnitJammer) {
    RadarConfig cfg = small_config(2, 1);
    cfg.jammers = {{0.0, 0.0}};
    ComplexMatrix expected(2, 2);
    expected << 1.0, 1.0, 1.0, 1.0;
    EXPECT_LT((jammer_covariance(cfg) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Jammer, ReferenceGeometryRank) {
    const ComplexMatrix rj = jammer_covariance(reference_scene());
    EXPECT_LE(max_hermitian_defect(rj), 1e-12 * rj.norm());
    EXPECT_EQ(count_above(rj, 1e-6), 16U);
}

TEST(TotalCovariance, SumOfComponentsAndPositiveDefinite) {
    const RadarConfig cfg = reference_scene();
    const CovarianceSet cov = total_covariance(cfg);
    EXPECT_LE((cov.r_total - (cov.r_clutter + cov.r_jammer + cov.r_noise)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(eigenvalues_descending(cov.r_total).minCoeff(), cfg.noise_power * (1.0 - 1e-10));
}

TEST(TotalCovariance, ReferenceTraceRegression) {
    // noise 1 + clutter 1e4 + two 40 dB jammers of per-element power 1e4 each
    const CovarianceSet cov = total_covariance(reference_scene());
    EXPECT_NEAR(cov.r_total.trace().real() / 64.0, 30001.0, 1e-9 * 30001.0);
}

TEST(Snapshots, ZeroCovarianceDrawIsZero) {
    CovarianceSet cov;
    cov.r_total = ComplexMatrix::Zero(4, 4);
    Rng rng = make_rng(1);
    const Snapshot snap = draw_snapshot(cov, small_config(2, 2), std::nullopt, rng);
    EXPECT_EQ(snap.label, Hypothesis::kH0);
    EXPECT_EQ(snap.data.norm(), 0.0);
}

TEST(Snapshots, StrongTargetAlignsWithSteering) {
    RadarConfig cfg = small_config(4, 4);
    cfg.cnr_db = -std::numeric_limits<double>::infinity();
    const CovarianceSet cov = total_covariance(cfg);
    const TargetSpec tgt{10.0, 40.0, 80.0};
    const ComplexVector s = target_steering(cfg, tgt);
    Rng rng = make_rng(2);
    const Snapshot snap = draw_snapshot(cov, cfg, tgt, rng);
    EXPECT_EQ(snap.label, Hypothesis::kH1);
    EXPECT_GT(std::abs(s.dot(snap.data)) / snap.data.norm(), 1.0 - 1e-6);
}

TEST(Snapshots, EmpiricalCovarianceMatchesUnderBothHypotheses) {
    RadarConfig cfg = small_config(2, 2);
    cfg.cnr_db = 10.0;
    cfg.jammers = {{30.0, 5.0}};
    const CovarianceSet cov = total_covariance(cfg);
    const TargetSpec tgt{0.0, 60.0, 3.0};
    const ComplexVector s = target_steering(cfg, tgt);
    const SnapshotGenerator gen(cov.r_total);
    const std::size_t draws = 100000;
    const ComplexMatrix h1_expected =
        cov.r_total + db_to_linear(tgt.snr_db) * 4.0 * (s * s.adjoint());

    for (const bool target_present : {false, true}) {
        Rng rng = make_rng(3, target_present ? 1 : 0);
        ComplexMatrix acc = ComplexMatrix::Zero(4, 4);
        for (std::size_t t = 0; t < draws; ++t) {
            const Snapshot snap =
                target_present ? gen.draw(rng, &s, tgt.snr_db) : gen.draw(rng);
            acc.noalias() += snap.data * snap.data.adjoint();
        }
        acc /= static_cast<double>(draws);
        const ComplexMatrix& expected = target_present ? h1_expected : cov.r_total;
        for (Index i = 0; i < 4; ++i) {
            for (Index j = 0; j < 4; ++j) {
                const double sigma = std::sqrt(expected(i, i).real() * expected(j, j).real() /
                                               static_cast<double>(draws));
                EXPECT_LE(std::abs(acc(i, j) - expected(i, j)), 3.0 * std::sqrt(2.0) * sigma)
                    << (target_present ? "H1 " : "H0 ") << i << "," << j;
            }
        }
    }
}

TEST(SampleCovariance, SingleSnapshotOuterProduct) {
    Snapshot snap;
    snap.data = ComplexVector(2);
    snap.data << 1.0, kJ;
    const std::vector<Snapshot> one{snap};
    ComplexMatrix expected(2, 2);
    expected << 1.0, -kJ, kJ, 1.0;
    EXPECT_LT((sample_covariance(one, 0.0) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SampleCovariance, ZeroSnapshotsGiveLoading) {
    std::vector<Snapshot> zeros(3);
    for (auto& z : zeros) z.data = ComplexVector::Zero(4);
    EXPECT_LT((sample_covariance(zeros, 0.01) - 0.01 * ComplexMatrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(SampleCovariance, WhiteDrawsConvergeToIdentity) {
    const SnapshotGenerator gen(ComplexMatrix::Identity(4, 4));
    Rng rng = make_rng(4);
    const auto snaps = gen.draw_training(10000, rng);
    const ComplexMatrix r = sample_covariance(snaps, 0.0);
    EXPECT_LT((r - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(SampleCovariance, EmptyListIsModelError) {
    EXPECT_THROW(sample_covariance(std::vector<Snapshot>{}, 0.01), ModelError);
}
