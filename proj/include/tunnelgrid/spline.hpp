#pragma once

// Tensor-product cubic spline with not-a-knot end conditions.
//
// Per axis the spline is stored in second-derivative form: on [x_j, x_{j+1}]
//   s(x) = A f_j + B f_{j+1} + C M_j + D M_{j+1},
// with M = S f for a fixed n x n matrix S. In N dimensions the mixed tables
// (prod_{d in mask} S_d) f are precomputed for every axis subset, so a point
// evaluation touches only the 4^N local coefficients.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "tunnelgrid/error.hpp"

namespace tunnelgrid {

/// Maps knot values to knot second derivatives for a not-a-knot cubic spline.
inline Eigen::MatrixXd not_a_knot_matrix(std::span<const double> x) {
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n < 2) throw Error(ErrorCode::InvalidGrid, "spline axis needs at least two knots");
    for (Eigen::Index i = 1; i < n; ++i) {
        if (!(x[i] > x[i - 1])) throw Error(ErrorCode::NonMonotoneAxis, "spline knots must be strictly increasing");
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    if (n == 2) return s;
    if (n == 3) {
        // not-a-knot with three knots is the interpolating parabola
        const double h0 = x[1] - x[0], h1 = x[2] - x[1];
        const double w = 2.0 / (h0 + h1);
        Eigen::RowVector3d row(w / h0, -w * (1.0 / h0 + 1.0 / h1), w / h1);
        for (int i = 0; i < 3; ++i) s.row(i) = row;
        return s;
    }
    std::vector<double> h(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
    // third-derivative continuity at x_1
    a(0, 0) = -h[1];
    a(0, 1) = h[0] + h[1];
    a(0, 2) = -h[0];
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        a(i, i - 1) = h[i - 1];
        a(i, i) = 2.0 * (h[i - 1] + h[i]);
        a(i, i + 1) = h[i];
        r(i, i - 1) = 6.0 / h[i - 1];
        r(i, i) = -6.0 / h[i - 1] - 6.0 / h[i];
        r(i, i + 1) = 6.0 / h[i];
    }
    // third-derivative continuity at x_{n-2}
    a(n - 1, n - 3) = -h[n - 2];
    a(n - 1, n - 2) = h[n - 3] + h[n - 2];
    a(n - 1, n - 1) = -h[n - 3];
    s = a.fullPivLu().solve(r);
    return s;
}

class TensorSpline {
public:
    TensorSpline() = default;

    /// `knots[d]` holds the coordinates of axis d (a single knot marks a
    /// constant axis); `values` is row-major with the last axis fastest.
    TensorSpline(std::vector<std::vector<double>> knots, std::vector<double> values) : knots_(std::move(knots)) {
        std::size_t total = 1;
        for (const auto& k : knots_) {
            if (k.empty()) throw Error(ErrorCode::InvalidGrid, "empty spline axis");
            total *= k.size();
        }
        if (total != values.size()) throw Error(ErrorCode::LengthMismatch, "spline values do not match knot lattice");
        const std::size_t dims = knots_.size();
        strides_.assign(dims, 1);
        for (std::size_t d = dims; d-- > 1;) strides_[d - 1] = strides_[d] * knots_[d].size();
        second_.resize(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            if (knots_[d].size() > 1) {
                second_[d] = not_a_knot_matrix(knots_[d]);
                live_.push_back(d);
            }
        }
        if (live_.size() > 8) throw Error(ErrorCode::InvalidGrid, "spline supports at most 8 varying axes");
        const std::size_t masks = std::size_t{1} << live_.size();
        tables_.resize(masks);
        tables_[0] = std::move(values);
        for (std::size_t m = 1; m < masks; ++m) {
            std::size_t top = 0;
            while ((m >> (top + 1)) != 0) ++top;
            tables_[m] = apply_along(live_[top], tables_[m & ~(std::size_t{1} << top)]);
        }
    }

    std::size_t dimension() const noexcept { return knots_.size(); }
    const std::vector<std::vector<double>>& knots() const noexcept { return knots_; }

    /// Point must lie in the knot box (not checked here).
    double operator()(std::span<const double> x) const {
        const std::size_t live = live_.size();
        // per live axis: base offset and the four basis weights (A, B, C, D)
        std::array<std::size_t, 8> base{};
        std::array<std::array<double, 4>, 8> w{};
        std::size_t offset0 = 0;
        for (std::size_t l = 0; l < live; ++l) {
            const std::size_t d = live_[l];
            const auto& k = knots_[d];
            const double xd = x[d];
            auto it = std::upper_bound(k.begin(), k.end(), xd);
            std::size_t j = it == k.begin() ? 0 : static_cast<std::size_t>(it - k.begin()) - 1;
            j = std::min(j, k.size() - 2);
            const double h = k[j + 1] - k[j];
            const double b = (xd - k[j]) / h;
            const double a = 1.0 - b;
            w[l] = {a, b, (a * a * a - a) * h * h / 6.0, (b * b * b - b) * h * h / 6.0};
            base[l] = j;
            offset0 += j * strides_[d];
        }
        const std::size_t combos = std::size_t{1} << (2 * live);
        double sum = 0.0;
        for (std::size_t c = 0; c < combos; ++c) {
            double weight = 1.0;
            std::size_t mask = 0;
            std::size_t idx = offset0;
            for (std::size_t l = 0; l < live; ++l) {
                const std::size_t bits = (c >> (2 * l)) & 3u;
                const std::size_t node = bits & 1u;
                const std::size_t type = bits >> 1;
                weight *= w[l][node + 2 * type];
                mask |= type << l;
                idx += node * strides_[live_[l]];
            }
            sum += weight * tables_[mask][idx];
        }
        return sum;
    }

private:
    std::vector<double> apply_along(std::size_t d, const std::vector<double>& in) const {
        std::vector<double> out(in.size(), 0.0);
        const std::size_t n = knots_[d].size();
        const std::size_t inner = strides_[d];
        const std::size_t outer = in.size() / (n * inner);
        const Eigen::MatrixXd& s = second_[d];
        for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t base = o * n * inner;
            for (std::size_t i = 0; i < n; ++i) {
                double* dst = out.data() + base + i * inner;
                for (std::size_t j = 0; j < n; ++j) {
                    const double sij = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                    if (sij == 0.0) continue;
                    const double* src = in.data() + base + j * inner;
                    for (std::size_t t = 0; t < inner; ++t) dst[t] += sij * src[t];
                }
            }
        }
        return out;
    }

    std::vector<std::vector<double>> knots_;
    std::vector<std::size_t> strides_;
    std::vector<Eigen::MatrixXd> second_;
    std::vector<std::size_t> live_;
    std::vector<std::vector<double>> tables_;
};

}  // namespace tunnelgrid
