#include "test_support.hpp"

#include <stap/matrix_core.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace stap;
using stap::testing::random_hermitian;
using stap::testing::random_hpd;
using stap::testing::random_matrix;

namespace {

ComplexMatrix diag(std::initializer_list<Complex> values) {
    ComplexMatrix d = ComplexMatrix::Zero(static_cast<Index>(values.size()), static_cast<Index>(values.size()));
    Index k = 0;
    for (const auto v : values) d(k, k) = v, ++k;
    return d;
}

ComplexVector vec(std::initializer_list<Complex> values) {
    ComplexVector v(static_cast<Index>(values.size()));
    Index k = 0;
    for (const auto x : values) v(k++) = x;
    return v;
}

ComplexMatrix reconstruct(const std::vector<EigenPair>& pairs, Index n) {
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (const auto& p : pairs) out += p.value * (p.vector * p.vector.adjoint());
    return out;
}

}  // namespace

TEST(HermitianEvd, IdentityGivesUnitEigenvaluesAndOrthonormalVectors) {
    const auto pairs = hermitian_evd(ComplexMatrix::Identity(3, 3));
    ASSERT_EQ(pairs.size(), 3U);
    ComplexMatrix v(3, 3);
    for (Index k = 0; k < 3; ++k) {
        EXPECT_NEAR(pairs[static_cast<std::size_t>(k)].value, 1.0, 1e-14);
        v.col(k) = pairs[static_cast<std::size_t>(k)].vector;
    }
    EXPECT_LT((v.adjoint() * v - ComplexMatrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(HermitianEvd, DiagonalMatrix) {
    const auto pairs = hermitian_evd(diag({3.0, 1.0}));
    EXPECT_NEAR(pairs[0].value, 3.0, 1e-14);
    EXPECT_NEAR(pairs[1].value, 1.0, 1e-14);
    EXPECT_NEAR(std::abs(pairs[0].vector(0)), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(pairs[1].vector(1)), 1.0, 1e-12);
}

TEST(HermitianEvd, TwoByTwoCharacteristicPolynomial) {
    ComplexMatrix a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    const auto pairs = hermitian_evd(a);
    EXPECT_NEAR(pairs[0].value, 3.0, 1e-13);
    EXPECT_NEAR(pairs[1].value, 1.0, 1e-13);
    // eigenvectors proportional to [1, 1] and [1, -1]
    EXPECT_NEAR(std::abs(pairs[0].vector(0) - pairs[0].vector(1)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(pairs[1].vector(0) + pairs[1].vector(1)), 0.0, 1e-12);
}

TEST(HermitianEvd, RejectsNonSquareAndNonHermitian) {
    EXPECT_THROW(hermitian_evd(ComplexMatrix::Zero(2, 3)), ModelError);
    ComplexMatrix a(2, 2);
    a << 1.0, 2.0, 0.0, 1.0;
    EXPECT_THROW(hermitian_evd(a), ModelError);
}

TEST(HermitianEvd, ReconstructionAndOrderingOnRandomMatrices) {
    Rng rng = make_rng(11);
    for (const Index n : {1, 2, 5, 16, 33, 64}) {
        const ComplexMatrix a = random_hermitian(n, rng);
        const auto pairs = hermitian_evd(a);
        EXPECT_LE(relative_frobenius(reconstruct(pairs, n), a), 1e-8) << "n=" << n;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            EXPECT_NEAR(pairs[k].vector.norm(), 1.0, 1e-10);
            if (k > 0) {
                EXPECT_GE(pairs[k - 1].value, pairs[k].value);
            }
        }
    }
}

TEST(HermitianEvd, PsdInputHasNoMaterialNegativeEigenvalue) {
    Rng rng = make_rng(12);
    const ComplexMatrix a = random_matrix(10, 3, rng);
    const ComplexMatrix psd = hermitian_part(a * a.adjoint());
    const auto values = eigenvalues_descending(psd);
    EXPECT_GE(values.minCoeff(), -1e-10 * values(0));
}

TEST(HpdSolve, IdentityReturnsRightHandSide) {
    const ComplexVector b = vec({{1.0, 2.0}, {-3.0, 0.5}, {0.0, -1.0}});
    EXPECT_LT((hpd_solve(ComplexMatrix::Identity(3, 3), b) - b).norm(), 1e-15);
}

TEST(HpdSolve, DiagonalMatrix) {
    const ComplexVector x = hpd_solve(diag({2.0, 4.0}), vec({2.0, 4.0}));
    EXPECT_NEAR(std::abs(x(0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(x(1) - 1.0), 0.0, 1e-15);
}

TEST(HpdSolve, ComplexTwoByTwoByHand) {
    ComplexMatrix a(2, 2);
    a << 2.0, kJ, -kJ, 2.0;
    const ComplexVector x = hpd_solve(a, vec({1.0, 0.0}));
    // inverse = [[2, -j], [j, 2]] / 3
    EXPECT_NEAR(std::abs(x(0) - Complex(2.0 / 3.0, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(x(1) - Complex(0.0, 1.0 / 3.0)), 0.0, 1e-15);
}

TEST(HpdSolve, NotPositiveDefiniteReportsPivot) {
    const ComplexMatrix a = diag({1.0, 2.0, -1.0, 4.0});
    try {
        hpd_solve(a, ComplexVector::Ones(4));
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 2);
    }
    ComplexMatrix singular(2, 2);
    singular << 1.0, 1.0, 1.0, 1.0;
    try {
        hpd_solve(singular, ComplexVector::Ones(2));
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 1);
    }
}

TEST(HpdSolve, ResidualAndAgreementWithExplicitInverse) {
    Rng rng = make_rng(13);
    for (const Index n : {1, 2, 4, 8, 16}) {
        const ComplexMatrix a = random_hpd(n, rng);
        const ComplexVector b = complex_normal_vector(n, rng);
        const ComplexVector x = hpd_solve(a, b);
        EXPECT_LE((a * x - b).norm(), 1e-8 * b.norm());
        const ComplexVector via_inverse = Cholesky(a).inverse() * b;
        EXPECT_LE((x - via_inverse).norm(), 1e-8 * x.norm());
    }
}

TEST(Kron, VectorDefinition) {
    const ComplexVector out = kron(vec({1.0, 2.0}), vec({1.0, -1.0}));
    EXPECT_LT((out - vec({1.0, -1.0, 2.0, -2.0})).norm(), 1e-15);
}

TEST(Kron, IdentityBlocks) {
    const ComplexMatrix i2 = ComplexMatrix::Identity(2, 2);
    EXPECT_EQ(kron(i2, i2), ComplexMatrix(ComplexMatrix::Identity(4, 4)));
}

TEST(Kron, SwapTimesDiagonal) {
    ComplexMatrix swap(2, 2);
    swap << 0.0, 1.0, 1.0, 0.0;
    ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
    expected(0, 2) = 1.0;
    expected(1, 3) = 2.0;
    expected(2, 0) = 1.0;
    expected(3, 1) = 2.0;
    EXPECT_EQ(kron(swap, diag({1.0, 2.0})), expected);
}

TEST(Kron, MixedProductAndBilinearity) {
    Rng rng = make_rng(14);
    for (const Index n : {2, 3}) {
        const ComplexMatrix a = random_matrix(n, n, rng);
        const ComplexMatrix b = random_matrix(n, n, rng);
        const ComplexMatrix c = random_matrix(n, n, rng);
        const ComplexMatrix d = random_matrix(n, n, rng);
        const ComplexMatrix lhs = kron(a, b) * kron(c, d);
        const ComplexMatrix rhs = kron(ComplexMatrix(a * c), ComplexMatrix(b * d));
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));

        const Complex alpha{0.3, -1.2};
        const ComplexMatrix lin = kron(ComplexMatrix(alpha * a + c), b);
        const ComplexMatrix split = alpha * kron(a, b) + kron(c, b);
        EXPECT_LE((lin - split).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, split.cwiseAbs().maxCoeff()));
    }
}

TEST(Hankel, ThreeByTwoLayout) {
    const Complex a{1.0, 1.0}, b{2.0, 0.0}, c{0.0, 3.0};
    const ComplexMatrix h = hankel_from_vector(vec({a, b, c}), 2);
    ComplexMatrix expected(3, 2);
    expected << a, b, b, c, c, 0.0;
    EXPECT_EQ(h, expected);
}

TEST(Hankel, WidthOneCopiesColumn) {
    const ComplexVector x = vec({1.0, {0.0, 2.0}, -3.0});
    EXPECT_EQ(ComplexVector(hankel_from_vector(x, 1).col(0)), x);
}

TEST(Hankel, FourByThreeLayout) {
    ComplexMatrix expected(4, 3);
    expected << 1, 2, 3, 2, 3, 4, 3, 4, 0, 4, 0, 0;
    EXPECT_EQ(hankel_from_vector(vec({1.0, 2.0, 3.0, 4.0}), 3), expected);
}

TEST(Hankel, RejectsWidthOutOfRange) {
    EXPECT_THROW(hankel_from_vector(vec({1.0, 2.0}), 0), ModelError);
    EXPECT_THROW(hankel_from_vector(vec({1.0, 2.0}), 3), ModelError);
}

TEST(Hankel, ConstantAntiDiagonals) {
    Rng rng = make_rng(15);
    const ComplexVector x = complex_normal_vector(9, rng);
    const ComplexMatrix h = hankel_from_vector(x, 5);
    for (Index r = 0; r + 1 < h.rows(); ++r) {
        for (Index c = 1; c < h.cols(); ++c) {
            if (r + c < x.size()) {
                EXPECT_EQ(h(r, c), h(r + 1, c - 1));
            }
        }
    }
}

TEST(ColoredSample, ZeroCovarianceGivesZeroVector) {
    Rng rng = make_rng(16);
    EXPECT_EQ(colored_sample(ComplexMatrix::Zero(3, 3), rng), ComplexVector(ComplexVector::Zero(3)));
}

TEST(ColoredSample, WhiteAndDiagonalVariances) {
    const std::size_t draws = 100000;
    for (const auto& r : {ComplexMatrix(2.5 * ComplexMatrix::Identity(3, 3)), diag({4.0, 1.0})}) {
        Rng rng = make_rng(17);
        const ColoringFactor factor(r);
        RealVector power = RealVector::Zero(r.rows());
        for (std::size_t t = 0; t < draws; ++t) power += factor.draw(rng).cwiseAbs2();
        power /= static_cast<double>(draws);
        for (Index k = 0; k < r.rows(); ++k) {
            EXPECT_NEAR(power(k), r(k, k).real(), 0.05 * r(k, k).real());
        }
    }
}

TEST(ColoredSample, EmpiricalCovarianceWithinThreeSigma) {
    Rng rng = make_rng(18);
    const ComplexMatrix r = random_hpd(4, rng, 0.5);
    const ColoringFactor factor(r);
    const std::size_t draws = 100000;
    ComplexMatrix acc = ComplexMatrix::Zero(4, 4);
    for (std::size_t t = 0; t < draws; ++t) {
        const ComplexVector x = factor.draw(rng);
        acc.noalias() += x * x.adjoint();
    }
    acc /= static_cast<double>(draws);
    // std of a sample-covariance entry is sqrt(R_ii R_jj / K) for circular Gaussians
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j < 4; ++j) {
            const double sigma = std::sqrt(r(i, i).real() * r(j, j).real() / static_cast<double>(draws));
            EXPECT_LE(std::abs(acc(i, j) - r(i, j)), 3.0 * sigma * std::sqrt(2.0)) << i << "," << j;
        }
    }
}

TEST(ColoredSample, RankDeficientCovarianceIsAccepted) {
    Rng rng = make_rng(19);
    const ComplexVector u = complex_normal_vector(5, rng);
    const ComplexMatrix r = u * u.adjoint();
    const ComplexVector x = colored_sample(r, rng);
    // every draw lies on span{u}
    const Complex coeff = u.dot(x) / u.squaredNorm();
    EXPECT_LE((x - coeff * u).norm(), 1e-10 * x.norm());
}

TEST(ColoredSample, NegativeEigenvalueIsNumericError) {
    Rng rng = make_rng(20);
    EXPECT_THROW(colored_sample(diag({1.0, -0.5}), rng), NumericError);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
    Rng a = make_rng(42, 3);
    Rng b = make_rng(42, 3);
    Rng c = make_rng(42, 4);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
}
