#pragma once

// Restarted Lanczos for the lowest eigenpairs of a symmetric operator.
//
// Each cycle extends the basis to m vectors with full (twice-applied
// classical Gram-Schmidt) reorthogonalization, then restarts from the l
// lowest Ritz vectors plus the residual direction (thick restart; for a
// symmetric operator this is the exact-shift implicit restart). A single
// Krylov sequence sees only one vector per eigenspace, so after convergence
// the search is repeated orthogonal to the converged vectors from a fresh
// start until no lower eigenvalue appears.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "tunnelgrid/error.hpp"

namespace tunnelgrid {

struct LanczosOptions {
    std::size_t k = 12;
    double tol = 1e-10;
    std::size_t max_restarts = 2000;
    std::size_t basis = 0;        // 0: max(2k + 1, k + 32)
    std::uint64_t seed = 0x7e57c0de5eedULL;
    bool verify_degeneracy = true;
};

struct EigenResult {
    std::vector<double> eigenvalues;                // ascending, meV
    std::vector<std::vector<double>> eigenvectors;  // unit norm
    std::vector<double> residuals;                  // ||H v - lambda v||
    std::size_t iterations = 0;                     // restart cycles over all passes
    std::size_t matvecs = 0;
    bool converged = false;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return eigenvalues.size(); }
};

namespace detail {

inline double uniform_pm1(std::mt19937_64& rng) {
    return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

/// Orthogonalizes v against the first `cols` columns of `basis` and all of
/// `locked` (two passes), accumulating the projections into `coeff`.
inline void cgs2(Eigen::Ref<Eigen::VectorXd> v, const Eigen::MatrixXd& basis, Eigen::Index cols, const Eigen::MatrixXd& locked,
                 Eigen::VectorXd* coeff) {
    if (coeff) coeff->setZero(cols);
    for (int pass = 0; pass < 2; ++pass) {
        if (locked.cols() > 0) {
            const Eigen::VectorXd c = locked.transpose() * v;
            v.noalias() -= locked * c;
        }
        if (cols > 0) {
            const Eigen::VectorXd c = basis.leftCols(cols).transpose() * v;
            v.noalias() -= basis.leftCols(cols) * c;
            if (coeff) *coeff += c;
        }
    }
}

struct Pass {
    std::vector<double> values;
    Eigen::MatrixXd vectors;
    std::size_t cycles = 0;
    std::size_t matvecs = 0;
    bool converged = false;
};

/// One restarted Lanczos pass in the complement of `locked`.
template <class Op>
Pass lanczos_pass(const Op& op, std::size_t k, const LanczosOptions& opt, const Eigen::MatrixXd& locked, std::mt19937_64& rng,
                  std::size_t restart_budget) {
    const auto n = static_cast<Eigen::Index>(op.size());
    const Eigen::Index free_dim = n - locked.cols();
    const auto want = static_cast<Eigen::Index>(std::min<std::size_t>(k, static_cast<std::size_t>(free_dim)));
    Eigen::Index m = opt.basis ? static_cast<Eigen::Index>(opt.basis) : std::max<Eigen::Index>(2 * want + 1, want + 32);
    m = std::min(m, free_dim);
    m = std::max(m, want);

    Pass out;
    Eigen::MatrixXd v(n, m + 1);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd w(n), coeff;

    auto random_direction = [&](Eigen::Index cols) -> bool {
        for (int attempt = 0; attempt < 5; ++attempt) {
            for (Eigen::Index i = 0; i < n; ++i) w[i] = uniform_pm1(rng);
            cgs2(w, v, cols, locked, nullptr);
            const double nw = w.norm();
            if (nw > 1e-8) {
                v.col(cols) = w / nw;
                return true;
            }
        }
        return false;
    };

    if (!random_direction(0)) return out;
    Eigen::Index start = 0;   // columns [0, start) are locked-in Ritz vectors
    double beta = 0.0;
    bool exhausted = false;   // Krylov space became invariant
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    Eigen::Index dim = m;

    for (;;) {
        ++out.cycles;
        dim = m;
        for (Eigen::Index j = start; j < m; ++j) {
            op.apply_unchecked(v.col(j).data(), w.data());
            ++out.matvecs;
            cgs2(w, v, j + 1, locked, &coeff);
            for (Eigen::Index i = 0; i <= j; ++i) t(i, j) = coeff[i];
            beta = w.norm();
            const double scale = std::max(1.0, t.topLeftCorner(j + 1, j + 1).cwiseAbs().maxCoeff());
            if (beta <= 1e-13 * scale) {
                // invariant subspace: continue with a fresh direction (zero coupling)
                beta = 0.0;
                if (j + 1 == m || !random_direction(j + 1)) {
                    dim = j + 1;
                    exhausted = true;
                    break;
                }
            } else {
                v.col(j + 1) = w / beta;
            }
            if (j + 1 < m) t(j + 1, j) = beta;
        }
        // symmetric projection from the computed upper triangle
        Eigen::MatrixXd ts = t.topLeftCorner(dim, dim);
        for (Eigen::Index j = 0; j < dim; ++j)
            for (Eigen::Index i = j + 1; i < dim; ++i) ts(i, j) = ts(j, i);
        es.compute(ts);
        const Eigen::VectorXd& theta = es.eigenvalues();
        const Eigen::MatrixXd& y = es.eigenvectors();
        const double range = std::max(theta.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        const Eigen::Index kk = std::min(want, dim);
        bool done = true;
        for (Eigen::Index i = 0; i < kk; ++i) {
            const double res = exhausted ? 0.0 : std::abs(beta * y(dim - 1, i));
            if (res > opt.tol * std::max(std::abs(theta[i]), range)) done = false;
        }
        if (done || exhausted || out.cycles > restart_budget) {
            out.converged = done || exhausted;
            out.vectors = v.leftCols(dim) * y.leftCols(kk);
            out.values.assign(theta.data(), theta.data() + kk);
            return out;
        }
        // thick restart
        const Eigen::Index l = std::min<Eigen::Index>(want + (m - want) / 2, m - 1);
        const Eigen::MatrixXd kept = v.leftCols(m) * y.leftCols(l);
        v.leftCols(l) = kept;
        v.col(l) = v.col(m);
        t.setZero();
        for (Eigen::Index i = 0; i < l; ++i) {
            t(i, i) = theta[i];
            t(i, l) = beta * y(m - 1, i);
        }
        start = l;
    }
}

}  // namespace detail

/// k algebraically smallest eigenpairs. `Op` provides size() and
/// apply_unchecked(const double*, double*). On an exhausted restart budget
/// the best available pairs are returned with converged = false.
template <class Op>
EigenResult lowest(const Op& op, const LanczosOptions& opt = {}) {
    const std::size_t n = op.size();
    if (opt.k == 0 || opt.k > n) {
        throw Error(ErrorCode::KTooLarge, "k = " + std::to_string(opt.k) + " for an operator of size " + std::to_string(n));
    }
    if (!(opt.tol > 0.0)) throw Error(ErrorCode::NoConvergence, "tolerance must be positive");
    std::mt19937_64 rng(opt.seed);
    EigenResult r;
    r.seed = opt.seed;

    Eigen::MatrixXd locked(static_cast<Eigen::Index>(n), 0);
    std::vector<double> values;
    std::size_t budget = opt.max_restarts;
    bool ok = true;
    for (;;) {
        auto pass = detail::lanczos_pass(op, opt.k, opt, locked, rng, budget);
        r.iterations += pass.cycles;
        r.matvecs += pass.matvecs;
        budget = pass.cycles >= budget ? 0 : budget - pass.cycles;
        ok = ok && pass.converged;
        const double top = values.empty() ? std::numeric_limits<double>::infinity() : values.back();
        bool improved = false;
        for (double v : pass.values) {
            if (v < top - opt.tol * std::max(1.0, std::abs(top))) improved = true;
        }
        // merge: locked vectors and the new pass are mutually orthogonal
        Eigen::MatrixXd all(static_cast<Eigen::Index>(n), locked.cols() + pass.vectors.cols());
        all << locked, pass.vectors;
        std::vector<double> merged = values;
        merged.insert(merged.end(), pass.values.begin(), pass.values.end());
        std::vector<std::size_t> order(merged.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return merged[a] < merged[b]; });
        order.resize(std::min(order.size(), opt.k));
        locked.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(order.size()));
        values.clear();
        for (std::size_t i = 0; i < order.size(); ++i) {
            locked.col(static_cast<Eigen::Index>(i)) = all.col(static_cast<Eigen::Index>(order[i]));
            values.push_back(merged[order[i]]);
        }
        const bool first = r.iterations == pass.cycles;
        if (!ok || !opt.verify_degeneracy || budget == 0 || locked.cols() >= static_cast<Eigen::Index>(n)) break;
        if (!first && !improved) break;
        if (static_cast<std::size_t>(locked.cols()) + 1 > n) break;
    }

    // Rayleigh-Ritz on the collected vectors, then explicit residuals
    const auto kk = locked.cols();
    Eigen::MatrixXd hx(static_cast<Eigen::Index>(n), kk);
    for (Eigen::Index i = 0; i < kk; ++i) op.apply_unchecked(locked.col(i).data(), hx.col(i).data());
    r.matvecs += static_cast<std::size_t>(kk);
    Eigen::MatrixXd g = locked.transpose() * hx;
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::MatrixXd x = locked * es.eigenvectors();
    const Eigen::MatrixXd hxr = hx * es.eigenvectors();
    for (Eigen::Index i = 0; i < kk; ++i) {
        Eigen::VectorXd col = x.col(i);
        const double nrm = col.norm();
        col /= nrm;
        // fix the sign so the largest-magnitude component is positive
        Eigen::Index arg;
        col.cwiseAbs().maxCoeff(&arg);
        const double sign = col[arg] < 0.0 ? -1.0 : 1.0;
        col *= sign;
        const double lambda = es.eigenvalues()[i];
        r.eigenvalues.push_back(lambda);
        r.residuals.push_back((hxr.col(i) * (sign / nrm) - lambda * col).norm());
        r.eigenvectors.emplace_back(col.data(), col.data() + col.size());
    }
    r.converged = ok;
    return r;
}

/// Throws NoConvergence instead of returning a partial result.
template <class Op>
EigenResult lowest_or_throw(const Op& op, const LanczosOptions& opt = {}) {
    auto r = lowest(op, opt);
    if (!r.converged) throw Error(ErrorCode::NoConvergence, "restart budget exhausted after " + std::to_string(r.iterations) + " cycles");
    return r;
}

}  // namespace tunnelgrid
