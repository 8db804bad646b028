#pragma once

// Space-time beamformer designs. Every design returns a full-length weight w
// (M x 1) normalized to the distortionless constraint w^H s = 1.

#include "complexity.hpp"
#include "matrix_core.hpp"
#include "radar_scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace stap {

struct BeamformerWeights {
    ComplexVector w;
    std::string algorithm;
    std::optional<std::size_t> rank_d;
    std::map<std::string, double> hyperparams;
    std::uint64_t multiplication_count = 0;
    // Objective per iteration for the iterative designs (empty otherwise).
    std::vector<double> objective_trace;
};

/// |w^H s - 1|
inline double distortionless_error(const ComplexVector& w, const ComplexVector& s) {
    return std::abs(w.dot(s) - Complex{1.0, 0.0});
}

/// Output power w^H R w.
inline double output_power(const ComplexVector& w, const ComplexMatrix& r) {
    return w.dot(r * w).real();
}

/// y = w^H r
inline Complex beamform_output(const BeamformerWeights& weights, const Snapshot& snapshot) {
    if (weights.w.size() != snapshot.data.size()) {
        throw ModelError("beamform_output: weight length " + std::to_string(weights.w.size()) +
                         " does not match snapshot length " + std::to_string(snapshot.data.size()));
    }
    return weights.w.dot(snapshot.data);
}

namespace detail {

/// R^{-1} s / (s^H R^{-1} s) from a factored R.
inline ComplexVector normalized_solution(const Cholesky& chol, const ComplexVector& s) {
    const ComplexVector x = chol.solve(s);
    const Complex gain = s.dot(x);
    if (!(gain.real() > 0.0) || !std::isfinite(gain.real())) {
        throw NumericError("MVDR normalization s^H R^-1 s is not positive");
    }
    return x / gain;
}

/// MVDR in a (possibly reduced) space; on a Cholesky breakdown retries once with
/// diagonal loading 1e-6 * trace / dim.
inline ComplexVector loaded_mvdr(const ComplexMatrix& r, const ComplexVector& s,
                                 bool* loaded = nullptr) {
    try {
        return normalized_solution(Cholesky(r), s);
    } catch (const NotPositiveDefinite&) {
        ComplexMatrix reg = r;
        const double level = 1e-6 * r.trace().real() / static_cast<double>(r.rows());
        reg.diagonal().array() += level > 0.0 ? level : 1e-12;
        if (loaded != nullptr) {
            *loaded = true;
        }
        return normalized_solution(Cholesky(reg), s);
    }
}

inline void require_finite(const ComplexVector& v, const std::string& what) {
    if (!v.allFinite()) {
        throw NumericError(what + ": non-finite value");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full-rank MVDR

inline BeamformerWeights mvdr_weights(const ComplexMatrix& r, const ComplexVector& s) {
    if (r.rows() != s.size()) {
        throw ModelError("mvdr_weights: covariance is " + std::to_string(r.rows()) +
                         "x" + std::to_string(r.cols()) + " but steering has length " +
                         std::to_string(s.size()));
    }
    require_square_hermitian(r, "mvdr_weights");
    BeamformerWeights out;
    out.w = detail::normalized_solution(Cholesky(r), s);
    out.algorithm = std::string(algorithm_tag(Algorithm::kSmiMvdr));
    return out;
}

// ---------------------------------------------------------------------------
// Rank reduction

enum class BasisMethod { kEvdPc, kEvdCsm, kKrylov, kJio, kJidfBranch };

inline std::string_view basis_method_tag(BasisMethod m) {
    switch (m) {
        case BasisMethod::kEvdPc: return "evd-pc";
        case BasisMethod::kEvdCsm: return "evd-csm";
        case BasisMethod::kKrylov: return "krylov";
        case BasisMethod::kJio: return "jio";
        case BasisMethod::kJidfBranch: return "jidf-branch";
    }
    return "unknown";
}

struct RankReduction {
    ComplexMatrix basis;  // M x D, columns span the reduced subspace
    BasisMethod method = BasisMethod::kEvdPc;
    std::size_t requested_rank = 0;
    bool degenerate = false;  // Krylov stagnation: fewer columns than requested

    [[nodiscard]] std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }

    /// Smallest singular value > 1e-10 * largest.
    [[nodiscard]] bool full_column_rank() const {
        const Eigen::MatrixXcd dense = basis;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dense);
        const auto& sv = svd.singularValues();
        return sv.size() > 0 && sv(sv.size() - 1) > 1e-10 * sv(0);
    }
};

/// Low-rank MVDR inside the span of S_D; returns the composite weight S_D w_D.
inline BeamformerWeights lr_mvdr_weights(const RankReduction& reduction, const ComplexMatrix& r,
                                         const ComplexVector& s) {
    const ComplexMatrix& basis = reduction.basis;
    if (basis.rows() != s.size() || r.rows() != s.size()) {
        throw ModelError("lr_mvdr_weights: dimension mismatch");
    }
    const ComplexMatrix r_d = hermitian_part(basis.adjoint() * r * basis);
    const ComplexVector s_d = basis.adjoint() * s;
    BeamformerWeights out;
    try {
        out.w = basis * detail::normalized_solution(Cholesky(r_d), s_d);
    } catch (const NumericError& err) {
        throw NumericError("lr_mvdr_weights (" + std::string(basis_method_tag(reduction.method)) +
                           " basis): reduced covariance is rank deficient: " + err.what());
    }
    out.rank_d = reduction.rank();
    return out;
}

enum class EvdSelection { kPrincipalComponents, kCrossSpectralMetric };

/// pc: eigenvectors of the D largest eigenvalues. csm: the D eigenvectors with the
/// largest cross-spectral metric |v^H s|^2 / lambda.
inline RankReduction evd_basis(const ComplexMatrix& r, const ComplexVector& s, std::size_t d,
                               EvdSelection selection) {
    const auto m = static_cast<std::size_t>(r.rows());
    if (d < 1 || d > m) {
        throw ModelError("evd_basis: rank " + std::to_string(d) + " outside [1, " +
                         std::to_string(m) + "]");
    }
    const auto pairs = hermitian_evd(r);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    if (selection == EvdSelection::kCrossSpectralMetric) {
        std::vector<double> metric(pairs.size());
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            if (!(pairs[k].value > 0.0)) {
                throw NumericError("evd_basis: cross-spectral metric needs a positive-definite matrix");
            }
            metric[k] = std::norm(pairs[k].vector.dot(s)) / pairs[k].value;
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return metric[a] > metric[b]; });
    }
    RankReduction out;
    out.method = selection == EvdSelection::kPrincipalComponents ? BasisMethod::kEvdPc
                                                                  : BasisMethod::kEvdCsm;
    out.requested_rank = d;
    out.basis.resize(r.rows(), static_cast<Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
        out.basis.col(static_cast<Index>(k)) = pairs[order[k]].vector;
    }
    return out;
}

/// Orthonormal basis of span{q, Rq, ..., R^{D-1} q}, q = s/||s||, by modified
/// Gram-Schmidt with one re-orthogonalization pass. Stops early (degenerate = true)
/// when a new direction falls below 1e-10 of its pre-orthogonalization norm.
inline RankReduction krylov_basis(const ComplexMatrix& r, const ComplexVector& s, std::size_t d) {
    const Index m = r.rows();
    if (d < 1 || d > static_cast<std::size_t>(m)) {
        throw ModelError("krylov_basis: rank " + std::to_string(d) + " outside [1, " +
                         std::to_string(m) + "]");
    }
    const double s_norm = s.norm();
    if (!(s_norm > 0.0)) {
        throw ModelError("krylov_basis: steering vector is zero");
    }
    ComplexMatrix q(m, static_cast<Index>(d));
    q.col(0) = s / s_norm;
    Index cols = 1;
    bool degenerate = false;
    for (Index k = 1; k < static_cast<Index>(d); ++k) {
        ComplexVector x = r * q.col(k - 1);
        const double before = x.norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (Index c = 0; c < k; ++c) {
                x -= q.col(c).dot(x) * q.col(c);
            }
        }
        const double after = x.norm();
        if (!(after > 1e-10 * before)) {
            degenerate = true;
            break;
        }
        q.col(k) = x / after;
        cols = k + 1;
    }
    RankReduction out;
    out.method = BasisMethod::kKrylov;
    out.requested_rank = d;
    out.degenerate = degenerate;
    out.basis = q.leftCols(cols);
    return out;
}

// ---------------------------------------------------------------------------
// Joint iterative optimization of S_D and w_D

struct JioResult {
    RankReduction reduction;
    BeamformerWeights weights;
};

/// Alternates the S_D fixed-point update
///   S_D = R^{-1} s w_D^H G / (w_D^H G w_D  s^H R^{-1} s),  G = (w_D w_D^H + rho I)^{-1},
/// rho = 1e-6 ||w_D||^2, with the reduced MVDR update of w_D. S_D(0) is the first D
/// identity columns. objective_trace holds w^H R w after initialization and each pass.
inline JioResult jio_design(const ComplexMatrix& r, const ComplexVector& s, std::size_t d,
                            std::size_t iterations) {
    const Index m = r.rows();
    if (d < 1 || d > static_cast<std::size_t>(m)) {
        throw ModelError("jio_design: rank " + std::to_string(d) + " outside [1, " +
                         std::to_string(m) + "]");
    }
    if (iterations < 1) {
        throw ModelError("jio_design: iterations must be >= 1");
    }
    require_square_hermitian(r, "jio_design");
    const auto dim = static_cast<Index>(d);
    const Cholesky chol(r);
    const ComplexVector r_inv_s = chol.solve(s);
    const double s_r_inv_s = s.dot(r_inv_s).real();
    if (!(s_r_inv_s > 0.0)) {
        throw NumericError("jio_design: s^H R^-1 s is not positive");
    }

    ComplexMatrix basis = ComplexMatrix::Identity(m, dim);
    bool loaded = false;
    auto update_w = [&](const ComplexMatrix& sd) {
        const ComplexMatrix r_d = hermitian_part(sd.adjoint() * r * sd);
        const ComplexVector s_d = sd.adjoint() * s;
        return detail::loaded_mvdr(r_d, s_d, &loaded);
    };

    ComplexVector w_d = update_w(basis);
    ComplexVector w = basis * w_d;
    std::vector<double> trace{output_power(w, r)};

    for (std::size_t iter = 1; iter <= iterations; ++iter) {
        const double rho = 1e-6 * w_d.squaredNorm();
        ComplexMatrix gram = w_d * w_d.adjoint();
        gram.diagonal().array() += rho;
        // g = G w_D (G Hermitian), so w_D^H G = g^H
        const ComplexVector g = Cholesky(hermitian_part(gram)).solve(w_d);
        const double denom = w_d.dot(g).real() * s_r_inv_s;
        basis = (r_inv_s * g.adjoint()) / denom;

        w_d = update_w(basis);
        w = basis * w_d;
        if (!w.allFinite()) {
            throw NumericError("jio_design: non-finite weight at iteration " + std::to_string(iter));
        }
        trace.push_back(output_power(w, r));
    }

    JioResult out;
    out.reduction.basis = basis;
    out.reduction.method = BasisMethod::kJio;
    out.reduction.requested_rank = d;
    out.weights.w = w;
    out.weights.algorithm = std::string(algorithm_tag(Algorithm::kLrJio));
    out.weights.rank_d = d;
    out.weights.hyperparams = {{"rank", static_cast<double>(d)},
                               {"iterations", static_cast<double>(iterations)},
                               {"reduced_loading_used", loaded ? 1.0 : 0.0}};
    out.weights.objective_trace = std::move(trace);
    return out;
}

// ---------------------------------------------------------------------------
// Joint interpolation, decimation and filtering

struct JidfParams {
    std::size_t branches = 8;
    std::size_t interpolator_len = 8;
    std::size_t rank = 6;
    std::size_t iterations = 5;
    double loading = 0.01;  // added to the time-averaged R_w and R_v
};

struct JidfBranch {
    ComplexVector interpolator;       // v_b, length I
    std::vector<Index> pattern;       // z_{b,d}, length D
    ComplexVector reduced_weights;    // w_{D,b}, length D
    double output_power = 0.0;        // time average of |y_b|^2 over the design data
};

struct JidfDesign {
    std::size_t branches = 0;
    std::size_t interpolator_len = 0;
    std::size_t rank = 0;
    std::vector<JidfBranch> branch;
    std::size_t selected_branch = 0;
};

struct JidfResult {
    JidfDesign design;
    BeamformerWeights weights;
};

/// Decimation positions z_{b,d} = floor(M (d-1) / D) + (b-1), d = 1..D, for the
/// zero-based branch index `branch` = b-1. Rejects positions past M-1 or duplicates.
inline std::vector<Index> decimation_pattern(Index m, std::size_t d, std::size_t branch) {
    if (d < 1 || d > static_cast<std::size_t>(m)) {
        throw ModelError("decimation_pattern: rank " + std::to_string(d) + " outside [1, " +
                         std::to_string(m) + "]");
    }
    std::vector<Index> z(d);
    for (std::size_t k = 0; k < d; ++k) {
        const Index base = (m * static_cast<Index>(k)) / static_cast<Index>(d);
        z[k] = std::min<Index>(base + static_cast<Index>(branch), m - 1);
    }
    for (std::size_t k = 1; k < d; ++k) {
        if (z[k] <= z[k - 1]) {
            throw ModelError("decimation_pattern: branch " + std::to_string(branch + 1) +
                             " produces duplicate positions after clamping; reduce the branch count");
        }
    }
    return z;
}

/// M x D rank-reduction matrix of one branch: column d holds conj(v) starting at z_d,
/// so that S^H r = D (Hankel(r) v).
inline ComplexMatrix jidf_branch_basis(Index m, const JidfBranch& branch) {
    const auto d = static_cast<Index>(branch.pattern.size());
    const Index len = branch.interpolator.size();
    ComplexMatrix basis = ComplexMatrix::Zero(m, d);
    for (Index k = 0; k < d; ++k) {
        for (Index i = 0; i < len && branch.pattern[static_cast<std::size_t>(k)] + i < m; ++i) {
            basis(branch.pattern[static_cast<std::size_t>(k)] + i, k) = std::conj(branch.interpolator(i));
        }
    }
    return basis;
}

namespace detail {

// (Hankel(x) v)[z_d] = sum_i x[z_d + i] v_i for every snapshot column of x.
inline ComplexMatrix decimated_interpolation(const ComplexMatrix& x, const std::vector<Index>& z,
                                             const ComplexVector& v) {
    const Index m = x.rows();
    ComplexMatrix out = ComplexMatrix::Zero(static_cast<Index>(z.size()), x.cols());
    for (std::size_t d = 0; d < z.size(); ++d) {
        for (Index i = 0; i < v.size() && z[d] + i < m; ++i) {
            out.row(static_cast<Index>(d)) += v(i) * x.row(z[d] + i);
        }
    }
    return out;
}

// (Hankel(x)^H D^H w)[i] = sum_d conj(x[z_d + i]) w_d for every snapshot column.
inline ComplexMatrix interpolator_regressors(const ComplexMatrix& x, const std::vector<Index>& z,
                                             const ComplexVector& w, Index len) {
    const Index m = x.rows();
    ComplexMatrix out = ComplexMatrix::Zero(len, x.cols());
    for (Index i = 0; i < len; ++i) {
        for (std::size_t d = 0; d < z.size(); ++d) {
            if (z[d] + i < m) {
                out.row(i) += w(static_cast<Index>(d)) * x.row(z[d] + i).conjugate();
            }
        }
    }
    return out;
}

inline ComplexMatrix time_average(const ComplexMatrix& regressors, double loading) {
    ComplexMatrix r = hermitian_part(regressors * regressors.adjoint()) /
                      static_cast<double>(regressors.cols());
    r.diagonal().array() += loading;
    return r;
}

}  // namespace detail

/// Designs every branch by alternating the reduced-weight and interpolator MVDR
/// updates over time averages of the design snapshots, then keeps the branch with
/// the smallest average output power.
inline JidfResult jidf_design(std::span<const Snapshot> snapshots, const ComplexVector& s,
                              const JidfParams& params) {
    const Index m = s.size();
    const ComplexMatrix x = snapshot_matrix(snapshots);
    if (x.rows() != m) {
        throw ModelError("jidf_design: snapshot length does not match steering length");
    }
    if (params.branches < 1) throw ModelError("jidf_design: branches must be >= 1");
    if (params.interpolator_len < 1 || params.interpolator_len > static_cast<std::size_t>(m)) {
        throw ModelError("jidf_design: interpolator length outside [1, M]");
    }
    if (params.iterations < 1) throw ModelError("jidf_design: iterations must be >= 1");
    const auto len = static_cast<Index>(params.interpolator_len);
    const ComplexMatrix steering_col = s;

    JidfResult out;
    out.design.branches = params.branches;
    out.design.interpolator_len = params.interpolator_len;
    out.design.rank = params.rank;
    bool loaded = false;

    double best_power = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < params.branches; ++b) {
        JidfBranch branch;
        branch.pattern = decimation_pattern(m, params.rank, b);
        branch.interpolator = ComplexVector::Unit(len, 0);

        auto update_w = [&]() {
            const ComplexMatrix rw = detail::decimated_interpolation(x, branch.pattern, branch.interpolator);
            const ComplexVector sw =
                detail::decimated_interpolation(steering_col, branch.pattern, branch.interpolator).col(0);
            branch.reduced_weights = detail::loaded_mvdr(detail::time_average(rw, params.loading), sw, &loaded);
            detail::require_finite(branch.reduced_weights, "jidf_design");
            return rw;
        };

        for (std::size_t iter = 0; iter < params.iterations; ++iter) {
            update_w();
            const ComplexMatrix rv =
                detail::interpolator_regressors(x, branch.pattern, branch.reduced_weights, len);
            const ComplexVector sv =
                detail::interpolator_regressors(steering_col, branch.pattern, branch.reduced_weights, len).col(0);
            branch.interpolator = detail::loaded_mvdr(detail::time_average(rv, params.loading), sv, &loaded);
            detail::require_finite(branch.interpolator, "jidf_design");
        }
        const ComplexMatrix rw = update_w();
        const ComplexVector y = rw.adjoint() * branch.reduced_weights;  // conj(y_b(k))
        branch.output_power = y.squaredNorm() / static_cast<double>(x.cols());

        if (branch.output_power < best_power) {
            best_power = branch.output_power;
            out.design.selected_branch = b;
        }
        out.design.branch.push_back(std::move(branch));
    }

    const JidfBranch& chosen = out.design.branch[out.design.selected_branch];
    out.weights.w = jidf_branch_basis(m, chosen) * chosen.reduced_weights;
    out.weights.algorithm = std::string(algorithm_tag(Algorithm::kLrJidf));
    out.weights.rank_d = params.rank;
    out.weights.hyperparams = {{"branches", static_cast<double>(params.branches)},
                               {"interpolator_len", static_cast<double>(params.interpolator_len)},
                               {"rank", static_cast<double>(params.rank)},
                               {"iterations", static_cast<double>(params.iterations)},
                               {"loading", params.loading},
                               {"selected_branch", static_cast<double>(out.design.selected_branch)},
                               {"fallback_loading_used", loaded ? 1.0 : 0.0}};
    return out;
}

// ---------------------------------------------------------------------------
// Sparsity-aware MVDR (reweighted l1)

struct SaParams {
    double lambda = 1.0;
    double epsilon = 0.1;
    std::size_t iterations = 10;
};

/// w^H R w + lambda ||w||_1
inline double sa_l1_objective(const ComplexMatrix& r, const ComplexVector& w, double lambda) {
    return output_power(w, r) + lambda * w.cwiseAbs().sum();
}

/// w^H R w + 2 lambda sum(|w_m| - eps ln(1 + |w_m|/eps)): the function the
/// Lambda = diag(1/(|w|+eps)) reweighting majorizes and therefore never increases.
inline double sa_surrogate_objective(const ComplexMatrix& r, const ComplexVector& w, double lambda,
                                     double epsilon) {
    double penalty = 0.0;
    for (Index k = 0; k < w.size(); ++k) {
        const double a = std::abs(w(k));
        penalty += a - epsilon * std::log1p(a / epsilon);
    }
    return output_power(w, r) + 2.0 * lambda * penalty;
}

/// Iterates w = (R + lambda Lambda)^{-1} s / (s^H (R + lambda Lambda)^{-1} s) with
/// Lambda = diag(1/(|w_m| + eps)), starting from the lambda = 0 solution. Stops at the
/// iteration budget or when the relative weight change drops to 1e-8.
/// objective_trace records the surrogate objective of each iterate.
inline BeamformerWeights sa_mvdr_weights(const ComplexMatrix& r, const ComplexVector& s,
                                         const SaParams& params) {
    if (params.lambda < 0.0) throw ModelError("sa_mvdr_weights: lambda must be >= 0");
    if (!(params.epsilon > 0.0)) throw ModelError("sa_mvdr_weights: epsilon must be > 0");
    if (params.iterations < 1) throw ModelError("sa_mvdr_weights: iterations must be >= 1");
    BeamformerWeights out = mvdr_weights(r, s);
    out.objective_trace.push_back(sa_surrogate_objective(r, out.w, params.lambda, params.epsilon));
    std::size_t used = 0;
    for (std::size_t iter = 0; iter < params.iterations; ++iter) {
        ComplexMatrix reg = r;
        for (Index k = 0; k < reg.rows(); ++k) {
            reg(k, k) += params.lambda / (std::abs(out.w(k)) + params.epsilon);
        }
        ComplexVector next = detail::normalized_solution(Cholesky(reg), s);
        const double change = (next - out.w).norm() / out.w.norm();
        out.w = std::move(next);
        ++used;
        out.objective_trace.push_back(sa_surrogate_objective(r, out.w, params.lambda, params.epsilon));
        if (change <= 1e-8) {
            break;
        }
    }
    out.algorithm = std::string(algorithm_tag(Algorithm::kSaMvdr));
    out.hyperparams = {{"lambda", params.lambda},
                       {"epsilon", params.epsilon},
                       {"iterations", static_cast<double>(params.iterations)},
                       {"iterations_used", static_cast<double>(used)}};
    return out;
}

/// Picks lambda from `grid` by two-fold cross-validation on the training block:
/// designs on the even / odd halves are scored by output power on the other half.
inline double sa_select_lambda(std::span<const Snapshot> training, const ComplexVector& s,
                               const std::vector<double>& grid, double epsilon,
                               std::size_t iterations, double loading) {
    if (grid.empty()) {
        throw ModelError("sa_select_lambda: empty lambda grid");
    }
    if (training.size() < 2) {
        return grid[grid.size() / 2];
    }
    std::vector<Snapshot> even;
    std::vector<Snapshot> odd;
    for (std::size_t k = 0; k < training.size(); ++k) {
        (k % 2 == 0 ? even : odd).push_back(training[k]);
    }
    const ComplexMatrix r_even = sample_covariance(even, loading);
    const ComplexMatrix r_odd = sample_covariance(odd, loading);
    double best = grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (const double lambda : grid) {
        const SaParams p{lambda, epsilon, iterations};
        const double score = output_power(sa_mvdr_weights(r_even, s, p).w, r_odd) +
                             output_power(sa_mvdr_weights(r_odd, s, p).w, r_even);
        if (score < best_score) {
            best_score = score;
            best = lambda;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Knowledge-aided MVDR

/// Scene perturbation used to synthesize the prior: velocity scaled by (1 + velocity_delta)
/// and CNR shifted by cnr_delta_db.
struct KaMismatch {
    double velocity_delta = 0.05;
    double cnr_delta_db = -3.0;

    bool operator==(const KaMismatch&) const = default;
};

struct KaPrior {
    ComplexMatrix r_prior;
    KaMismatch mismatch;
};

/// R_o = clutter covariance of the perturbed scene + noise. Jammers are not part of
/// the prior (they are not terrain knowledge).
inline KaPrior ka_prior(const RadarConfig& cfg, const KaMismatch& mismatch = {}) {
    RadarConfig perturbed = cfg;
    perturbed.platform_velocity_mps *= 1.0 + mismatch.velocity_delta;
    perturbed.cnr_db += mismatch.cnr_delta_db;
    KaPrior prior;
    prior.mismatch = mismatch;
    prior.r_prior = clutter_covariance(perturbed);
    prior.r_prior.diagonal().array() += cfg.noise_power;
    return prior;
}

struct FixedAlpha {
    double alpha = 0.5;
};
struct FixedEta {
    double eta = 0.5;
};
/// eta chosen to minimize w^H R_ref w over the inverse blend; R_ref stands in for the
/// unknown true covariance.
struct OptimalEta {
    ComplexMatrix r_ref;
};
using KaMode = std::variant<FixedAlpha, FixedEta, OptimalEta>;

namespace detail {

inline ComplexVector normalize_to_constraint(const ComplexVector& v, const ComplexVector& s) {
    const Complex gain = s.dot(v);
    if (std::abs(gain) == 0.0 || !std::isfinite(std::abs(gain))) {
        throw NumericError("knowledge-aided blend has zero response toward the steering vector");
    }
    return v / gain;
}

}  // namespace detail

inline BeamformerWeights ka_mvdr_weights(const ComplexMatrix& r_hat, const KaPrior& prior,
                                         const ComplexVector& s, const KaMode& mode) {
    if (r_hat.rows() != prior.r_prior.rows() || r_hat.rows() != s.size()) {
        throw ModelError("ka_mvdr_weights: dimension mismatch");
    }
    BeamformerWeights out;
    out.algorithm = std::string(algorithm_tag(Algorithm::kKaMvdr));

    if (const auto* fixed = std::get_if<FixedAlpha>(&mode)) {
        if (fixed->alpha < 0.0 || fixed->alpha > 1.0) {
            throw ModelError("ka_mvdr_weights: alpha outside [0, 1]");
        }
        const ComplexMatrix blend = fixed->alpha * prior.r_prior + (1.0 - fixed->alpha) * r_hat;
        out.w = mvdr_weights(blend, s).w;
        out.hyperparams = {{"alpha", fixed->alpha}};
        return out;
    }

    const ComplexVector w_hat = Cholesky(r_hat).solve(s);
    const ComplexVector w_prior = Cholesky(prior.r_prior).solve(s);
    double eta = 0.5;
    bool fallback = false;
    if (const auto* fixed = std::get_if<FixedEta>(&mode)) {
        if (fixed->eta < 0.0 || fixed->eta > 1.0) {
            throw ModelError("ka_mvdr_weights: eta outside [0, 1]");
        }
        eta = fixed->eta;
    } else {
        const auto& r_ref = std::get<OptimalEta>(mode).r_ref;
        if (r_ref.rows() != r_hat.rows()) {
            throw ModelError("ka_mvdr_weights: reference covariance dimension mismatch");
        }
        const ComplexVector diff = w_prior - w_hat;
        const double numer = -diff.dot(r_ref * w_hat).real();
        const double denom = diff.dot(r_ref * diff).real();
        const double scale = w_hat.dot(r_ref * w_hat).real();
        if (!(denom > 1e-12 * scale)) {
            fallback = true;
        } else {
            eta = std::clamp(numer / denom, 0.0, 1.0);
        }
        out.hyperparams["eta_fallback"] = fallback ? 1.0 : 0.0;
    }
    out.w = detail::normalize_to_constraint(eta * w_prior + (1.0 - eta) * w_hat, s);
    out.hyperparams["eta"] = eta;
    return out;
}

// ---------------------------------------------------------------------------
// Uniform dispatch used by the experiment harness

enum class KaModeKind { kFixedAlpha, kFixedEta, kOptimalEta };

struct AlgorithmParams {
    std::size_t rank = 6;
    std::size_t branches = 8;
    std::size_t interpolator_len = 8;
    std::size_t iterations = 5;
    double loading = 0.01;
    std::optional<double> sa_lambda;  // unset: cross-validated over sa_lambda_grid * noise_power
    std::vector<double> sa_lambda_grid{0.01, 0.1, 1.0, 10.0};
    double sa_epsilon = 0.1;
    std::size_t sa_iterations = 10;
    KaModeKind ka_mode = KaModeKind::kOptimalEta;
    double ka_alpha = 0.5;
    double ka_eta = 0.5;
    KaMismatch ka_mismatch;

    bool operator==(const AlgorithmParams&) const = default;
};

struct DesignInputs {
    std::span<const Snapshot> training;
    const ComplexMatrix* r_hat = nullptr;   // loaded sample covariance of `training`
    const ComplexMatrix* r_true = nullptr;  // clairvoyant covariance, kOptimal only
    const KaPrior* prior = nullptr;         // kKaMvdr only
    double noise_power = 1.0;
};

inline BeamformerWeights design_beamformer(Algorithm algorithm, const DesignInputs& in,
                                           const ComplexVector& s, const AlgorithmParams& p) {
    auto need = [](const void* ptr, const char* what) {
        if (ptr == nullptr) throw ModelError(std::string("design_beamformer: missing ") + what);
    };
    const auto m = static_cast<std::uint64_t>(s.size());
    ComplexityParams cost{m,
                          static_cast<std::uint64_t>(p.rank),
                          static_cast<std::uint64_t>(p.branches),
                          static_cast<std::uint64_t>(p.interpolator_len),
                          std::max<std::uint64_t>(1, in.training.size()),
                          static_cast<std::uint64_t>(p.iterations)};
    BeamformerWeights out;
    switch (algorithm) {
        case Algorithm::kOptimal:
            need(in.r_true, "true covariance");
            out = mvdr_weights(*in.r_true, s);
            break;
        case Algorithm::kSmiMvdr:
            need(in.r_hat, "sample covariance");
            out = mvdr_weights(*in.r_hat, s);
            out.hyperparams = {{"loading", p.loading}};
            break;
        case Algorithm::kLrEvd:
        case Algorithm::kLrEvdCsm: {
            need(in.r_hat, "sample covariance");
            const auto sel = algorithm == Algorithm::kLrEvd ? EvdSelection::kPrincipalComponents
                                                            : EvdSelection::kCrossSpectralMetric;
            out = lr_mvdr_weights(evd_basis(*in.r_hat, s, p.rank, sel), *in.r_hat, s);
            out.hyperparams = {{"rank", static_cast<double>(p.rank)}};
            break;
        }
        case Algorithm::kLrKrylov: {
            need(in.r_hat, "sample covariance");
            const auto basis = krylov_basis(*in.r_hat, s, p.rank);
            out = lr_mvdr_weights(basis, *in.r_hat, s);
            out.hyperparams = {{"rank", static_cast<double>(p.rank)},
                               {"effective_rank", static_cast<double>(basis.rank())}};
            break;
        }
        case Algorithm::kLrJio:
            need(in.r_hat, "sample covariance");
            out = jio_design(*in.r_hat, s, p.rank, p.iterations).weights;
            break;
        case Algorithm::kLrJidf:
            out = jidf_design(in.training, s,
                              {p.branches, p.interpolator_len, p.rank, p.iterations, p.loading})
                      .weights;
            break;
        case Algorithm::kSaMvdr: {
            need(in.r_hat, "sample covariance");
            double lambda = 0.0;
            if (p.sa_lambda) {
                lambda = *p.sa_lambda;
            } else {
                std::vector<double> grid = p.sa_lambda_grid;
                for (auto& g : grid) g *= in.noise_power;
                lambda = sa_select_lambda(in.training, s, grid, p.sa_epsilon, p.sa_iterations, p.loading);
            }
            out = sa_mvdr_weights(*in.r_hat, s, {lambda, p.sa_epsilon, p.sa_iterations});
            cost.iterations = static_cast<std::uint64_t>(p.sa_iterations);
            break;
        }
        case Algorithm::kKaMvdr: {
            need(in.r_hat, "sample covariance");
            need(in.prior, "knowledge-aided prior");
            KaMode mode = FixedAlpha{p.ka_alpha};
            if (p.ka_mode == KaModeKind::kFixedEta) mode = FixedEta{p.ka_eta};
            if (p.ka_mode == KaModeKind::kOptimalEta) mode = OptimalEta{*in.r_hat};
            out = ka_mvdr_weights(*in.r_hat, *in.prior, s, mode);
            break;
        }
    }
    out.algorithm = std::string(algorithm_tag(algorithm));
    out.multiplication_count = multiplication_count(algorithm, cost);
    return out;
}

}  // namespace stap
