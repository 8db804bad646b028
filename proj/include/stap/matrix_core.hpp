#pragma once

// Dense complex linear-algebra kernels shared by the scene synthesis,
// the beamformer designs and the Monte-Carlo harness.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace stap {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Malformed input: wrong shapes, out-of-range parameters, bad configuration.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: non-PD matrix, non-convergence, non-finite values.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cholesky breakdown; `pivot()` is the zero-based row whose pivot was <= 0.
class NotPositiveDefinite : public NumericError {
public:
    NotPositiveDefinite(Index pivot, double value)
        : NumericError("matrix is not positive definite: pivot " + std::to_string(pivot) +
                       " = " + std::to_string(value)),
          pivot_(pivot) {}

    [[nodiscard]] Index pivot() const noexcept { return pivot_; }

private:
    Index pivot_;
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kJ{0.0, 1.0};

// Relative tolerance used when checking Hermitian symmetry of op inputs.
inline constexpr double kHermitianTolerance = 1e-10;

struct EigenPair {
    double value = 0.0;
    ComplexVector vector;
};

inline double max_abs(const ComplexMatrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// max|A - A^H| <= tol * max|A| (absolute 1e-12 when A is zero).
inline bool is_hermitian(const ComplexMatrix& a, double tol = 1e-12) {
    if (a.rows() != a.cols()) {
        return false;
    }
    const double scale = max_abs(a);
    const double bound = scale > 0.0 ? tol * scale : 1e-12;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= bound;
}

/// Averages A with its adjoint; used after products like S^H R S.
inline ComplexMatrix hermitian_part(const ComplexMatrix& a) {
    return 0.5 * (a + a.adjoint());
}

inline void require_square_hermitian(const ComplexMatrix& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw ModelError(std::string(what) + ": matrix must be square and non-empty (got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ")");
    }
    if (!is_hermitian(a, kHermitianTolerance)) {
        throw ModelError(std::string(what) + ": matrix is not Hermitian");
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
inline std::vector<EigenPair> hermitian_evd(const ComplexMatrix& a) {
    require_square_hermitian(a, "hermitian_evd");
    const Eigen::MatrixXcd col_major = hermitian_part(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(col_major);
    if (solver.info() != Eigen::Success) {
        throw NumericError("hermitian_evd: eigen-solver failed to converge");
    }
    const Index n = a.rows();
    std::vector<EigenPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n));
    // Eigen returns ascending order.
    for (Index k = n - 1; k >= 0; --k) {
        pairs.push_back({solver.eigenvalues()(k), solver.eigenvectors().col(k)});
    }
    return pairs;
}

inline RealVector eigenvalues_descending(const ComplexMatrix& a) {
    const auto pairs = hermitian_evd(a);
    RealVector values(static_cast<Index>(pairs.size()));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        values(static_cast<Index>(k)) = pairs[k].value;
    }
    return values;
}

/// Lower-triangular Cholesky factor A = L L^H of a Hermitian positive-definite matrix.
/// Factor once, solve many right-hand sides.
class Cholesky {
public:
    explicit Cholesky(const ComplexMatrix& a) : lower_(ComplexMatrix::Zero(a.rows(), a.cols())) {
        if (a.rows() != a.cols() || a.rows() == 0) {
            throw ModelError("hpd_solve: matrix must be square and non-empty");
        }
        const Index n = a.rows();
        const double scale = a.diagonal().cwiseAbs().maxCoeff();
        for (Index j = 0; j < n; ++j) {
            Complex diag = a(j, j);
            for (Index k = 0; k < j; ++k) {
                diag -= lower_(j, k) * std::conj(lower_(j, k));
            }
            const double pivot = diag.real();
            if (!(pivot > 1e-14 * scale) || !std::isfinite(pivot)) {
                throw NotPositiveDefinite(j, pivot);
            }
            const double root = std::sqrt(pivot);
            lower_(j, j) = root;
            for (Index i = j + 1; i < n; ++i) {
                Complex acc = a(i, j);
                for (Index k = 0; k < j; ++k) {
                    acc -= lower_(i, k) * std::conj(lower_(j, k));
                }
                lower_(i, j) = acc / root;
            }
        }
    }

    [[nodiscard]] Index size() const noexcept { return lower_.rows(); }
    [[nodiscard]] const ComplexMatrix& lower() const noexcept { return lower_; }

    [[nodiscard]] ComplexVector solve(const ComplexVector& b) const {
        const Index n = size();
        if (b.size() != n) {
            throw ModelError("hpd_solve: right-hand side length " + std::to_string(b.size()) +
                             " does not match matrix size " + std::to_string(n));
        }
        ComplexVector y(n);
        for (Index i = 0; i < n; ++i) {
            Complex acc = b(i);
            for (Index k = 0; k < i; ++k) {
                acc -= lower_(i, k) * y(k);
            }
            y(i) = acc / lower_(i, i);
        }
        ComplexVector x(n);
        for (Index i = n - 1; i >= 0; --i) {
            Complex acc = y(i);
            for (Index k = i + 1; k < n; ++k) {
                acc -= std::conj(lower_(k, i)) * x(k);
            }
            x(i) = acc / lower_(i, i);
        }
        return x;
    }

    [[nodiscard]] ComplexMatrix inverse() const {
        const Index n = size();
        ComplexMatrix inv(n, n);
        for (Index j = 0; j < n; ++j) {
            inv.col(j) = solve(ComplexVector::Unit(n, j));
        }
        return hermitian_part(inv);
    }

private:
    ComplexMatrix lower_;
};

/// Solves A x = b for Hermitian positive-definite A.
inline ComplexVector hpd_solve(const ComplexMatrix& a, const ComplexVector& b) {
    if (a.rows() != a.cols()) {
        throw ModelError("hpd_solve: matrix must be square");
    }
    if (!is_hermitian(a, kHermitianTolerance)) {
        throw ModelError("hpd_solve: matrix is not Hermitian");
    }
    return Cholesky(a).solve(b);
}

/// Kronecker product; entry (i*rows_B + k, j*cols_B + l) = A(i,j) * B(k,l).
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
    ComplexVector out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

/// M x width Hankel matrix with entry (m, i) = x[m + i], zero past the end of x.
inline ComplexMatrix hankel_from_vector(const ComplexVector& x, Index width) {
    const Index m = x.size();
    if (width < 1 || width > m) {
        throw ModelError("hankel_from_vector: width " + std::to_string(width) +
                         " outside [1, " + std::to_string(m) + "]");
    }
    ComplexMatrix h = ComplexMatrix::Zero(m, width);
    for (Index r = 0; r < m; ++r) {
        for (Index c = 0; c < width && r + c < m; ++c) {
            h(r, c) = x(r + c);
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Random sampling

using Rng = std::mt19937_64;

/// Private generator for one Monte-Carlo worker, derived from (master_seed, stream).
inline Rng make_rng(std::uint64_t master_seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32U),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32U), 0x5354'4150U};
    return Rng(seq);
}

/// Circular complex standard normal: E|z|^2 = 1.
inline Complex complex_normal(Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

inline ComplexVector complex_normal_vector(Index n, Rng& rng) {
    ComplexVector z(n);
    for (Index i = 0; i < n; ++i) {
        z(i) = complex_normal(rng);
    }
    return z;
}

/// Square-root factor L (R = L L^H) built from the eigendecomposition, with
/// eigenvalues below 1e-12 * lambda_max clamped to zero. Works for rank-deficient R.
class ColoringFactor {
public:
    explicit ColoringFactor(const ComplexMatrix& r) {
        require_square_hermitian(r, "colored_sample");
        const Index n = r.rows();
        factor_ = ComplexMatrix::Zero(n, n);
        if (max_abs(r) == 0.0) {
            return;
        }
        const auto pairs = hermitian_evd(r);
        const double lambda_max = pairs.front().value;
        if (lambda_max <= 0.0) {
            throw NumericError("colored_sample: covariance has no positive eigenvalue");
        }
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const double lambda = pairs[k].value;
            if (lambda < -1e-10 * lambda_max) {
                throw NumericError("colored_sample: negative eigenvalue " + std::to_string(lambda) +
                                   " (lambda_max " + std::to_string(lambda_max) + ")");
            }
            if (lambda > 1e-12 * lambda_max) {
                factor_.col(static_cast<Index>(k)) = std::sqrt(lambda) * pairs[k].vector;
            }
        }
    }

    [[nodiscard]] Index size() const noexcept { return factor_.rows(); }
    [[nodiscard]] const ComplexMatrix& factor() const noexcept { return factor_; }

    [[nodiscard]] ComplexVector draw(Rng& rng) const {
        return factor_ * complex_normal_vector(size(), rng);
    }

private:
    ComplexMatrix factor_;
};

/// One draw with covariance R. Prefer ColoringFactor when drawing repeatedly.
inline ComplexVector colored_sample(const ComplexMatrix& r, Rng& rng) {
    return ColoringFactor(r).draw(rng);
}

/// ||A - B||_F / ||B||_F, falling back to the absolute norm when B is zero.
inline double relative_frobenius(const ComplexMatrix& a, const ComplexMatrix& b) {
    const double ref = b.norm();
    const double diff = (a - b).norm();
    return ref > 0.0 ? diff / ref : diff;
}

}  // namespace stap
