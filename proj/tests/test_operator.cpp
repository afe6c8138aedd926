#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tunnelgrid/lanczos.hpp"
#include "tunnelgrid/models.hpp"
#include "tunnelgrid/operator.hpp"

using namespace tunnelgrid;

namespace {

PotentialField zero_field(const GridSpec& g) {
    std::vector<std::string> labels;
    std::vector<Interval> dom;
    for (const auto& a : g.axes()) {
        labels.push_back(a.label);
        dom.push_back({a.min, a.max});
    }
    return PotentialField(labels, dom, [](std::span<const double>) { return 0.0; });
}

PotentialField bumpy_field() {
    return PotentialField({"a", "b", "c"}, {{-1, 1}, {-1, 1}, {-1, 1}}, [](std::span<const double> x) {
        return 10.0 * x[0] * x[0] + 3.0 * std::sin(2.0 * x[1]) + x[2] * x[0] + 4.0 * x[2] * x[2];
    });
}

}  // namespace

TEST(Operator, KineticStencilAnnihilatesConstantsAwayFromBoundary) {
    for (int order : {2, 4}) {
        const GridSpec g({{"x", 0, 1, 9}, {"y", 0, 2, 11}});
        const auto op = assemble(zero_field(g), g, order);
        const std::vector<double> ones(g.point_count(), 1.0);
        const auto y = op.apply(ones);
        const std::size_t band = order / 2;
        std::vector<std::size_t> idx;
        const double scale = op.diagonal()[0];
        for (std::size_t p = 0; p < y.size(); ++p) {
            g.unravel(p, idx);
            bool interior = true;
            for (std::size_t d = 0; d < 2; ++d) interior = interior && idx[d] >= band && idx[d] + band < g.axis(d).count;
            if (interior) {
                EXPECT_LE(std::abs(y[p]), 1e-12 * scale);
            }
        }
    }
}

TEST(Operator, BoxSineConvergesAtStencilOrder) {
    const double length = 2.0, hbar2 = units::hbar2;
    const double expected = hbar2 * std::numbers::pi * std::numbers::pi / (2.0 * length * length);
    for (int order : {2, 4}) {
        std::vector<double> errors;
        for (std::size_t intervals : {40u, 80u, 160u}) {
            const GridSpec g({{"x", 0.0, length, intervals + 1}});
            const auto op = assemble(zero_field(g), g, order);
            std::vector<double> u(g.point_count());
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(std::numbers::pi * g.axis(0).coordinate(i) / length);
            const auto hu = op.apply(u);
            // nodes whose stencil reaches past the wall see a zero ghost, not -u
            const std::size_t band = order / 2;
            double err = 0.0;
            for (std::size_t i = band; i + band < u.size(); ++i) err = std::max(err, std::abs(hu[i] - expected * u[i]));
            errors.push_back(err);
        }
        for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
            const double rate = std::log2(errors[i] / errors[i + 1]);
            EXPECT_GT(rate, order - 0.2) << "order " << order;
        }
    }
}

TEST(Operator, SymmetricOnRandomPairs) {
    const GridSpec g({{"a", -1, 1, 7}, {"b", -1, 1, 6}, {"c", -1, 1, 5}});
    std::mt19937_64 rng(17);
    for (int order : {2, 4}) {
        const auto op = assemble(bumpy_field(), g, order);
        for (int i = 0; i < 100; ++i) {
            const auto u = oracle::random_vector(op.size(), rng), v = oracle::random_vector(op.size(), rng);
            const double a = oracle::dot(u, op.apply(v)), b = oracle::dot(op.apply(u), v);
            EXPECT_LE(std::abs(a - b), 1e-10 * std::max(std::abs(a), 1.0));
        }
    }
}

TEST(Operator, ZeroAndLinearity) {
    const GridSpec g({{"a", -1, 1, 7}, {"b", -1, 1, 6}, {"c", -1, 1, 5}});
    const auto op = assemble(bumpy_field(), g, 4);
    const std::vector<double> zero(op.size(), 0.0);
    for (double v : op.apply(zero)) EXPECT_EQ(v, 0.0);
    std::mt19937_64 rng(1);
    const auto u = oracle::random_vector(op.size(), rng);
    std::vector<double> au(u);
    const double alpha = -2.75;
    for (double& v : au) v *= alpha;
    const auto hu = op.apply(u), hau = op.apply(au);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(hau[i], alpha * hu[i], 1e-12 * (1.0 + std::abs(alpha * hu[i])));
}

TEST(Operator, MatchesExplicitSparseMatrix) {
    // explicit 5x5x5 matrix from the textbook stencils, not from the operator
    const GridSpec g({{"a", -1, 1, 5}, {"b", -0.5, 1, 5}, {"c", 0, 2, 5}});
    const auto field = bumpy_field();
    for (int order : {2, 4}) {
        const auto op = assemble(PotentialField({"a", "b", "c"}, {{-1, 1}, {-0.5, 1}, {0, 2}},
                                                [&](std::span<const double> x) { return field.eval_unchecked(x); }),
                                 g, order);
        const std::size_t n = g.point_count();
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        std::vector<std::size_t> idx;
        std::vector<double> x;
        const std::vector<double> w2{-2.0, 1.0}, w4{-2.5, 4.0 / 3.0, -1.0 / 12.0};
        const auto& w = order == 2 ? w2 : w4;
        for (std::size_t p = 0; p < n; ++p) {
            g.node(p, x);
            h(p, p) += field.eval_unchecked(x);
            g.unravel(p, idx);
            for (std::size_t d = 0; d < 3; ++d) {
                const double c = -units::hbar2 / (2.0 * g.axis(d).spacing() * g.axis(d).spacing());
                h(p, p) += c * w[0];
                for (std::size_t r = 1; r < w.size(); ++r) {
                    for (int s : {-1, 1}) {
                        const long j = static_cast<long>(idx[d]) + s * static_cast<long>(r);
                        if (j < 0 || j >= static_cast<long>(g.axis(d).count)) continue;
                        auto jdx = idx;
                        jdx[d] = static_cast<std::size_t>(j);
                        h(p, g.ravel(jdx)) += c * w[r];
                    }
                }
            }
        }
        std::mt19937_64 rng(order);
        const auto u = oracle::random_vector(n, rng);
        const auto hu = op.apply(u);
        const Eigen::VectorXd ref = h * Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(hu[i], ref[static_cast<Eigen::Index>(i)], 1e-13 * (1.0 + std::abs(ref[i])));
        // the triplet dump describes the same matrix
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
        for (const auto& [r, c, v] : op.triplets()) t(r, c) += v;
        EXPECT_LE((t - h).cwiseAbs().maxCoeff(), 1e-13 * h.cwiseAbs().maxCoeff());
    }
}

TEST(Operator, TripletDumpFormat) {
    const GridSpec g({{"x", 0, 1, 3}});
    const auto op = assemble(zero_field(g), g, 2, 2.0);
    std::ostringstream os;
    op.dump_triplets(os);
    EXPECT_EQ(os.str().substr(0, 6), "0 0 8\n");
}

TEST(Operator, RayleighQuotientBoundedByPotentialMinimum) {
    const GridSpec g({{"a", -1, 1, 9}, {"b", -1, 1, 8}, {"c", -1, 1, 7}});
    std::mt19937_64 rng(23);
    for (int order : {2, 4}) {
        const auto op = assemble(bumpy_field(), g, order);
        const double vmin = *std::min_element(op.potential().begin(), op.potential().end());
        for (int i = 0; i < 50; ++i) {
            const auto u = oracle::random_vector(op.size(), rng);
            EXPECT_GE(oracle::dot(u, op.apply(u)) / oracle::dot(u, u), vmin);
        }
    }
}

TEST(Operator, SecondOrderErrorDropsFourfoldPerDoubling) {
    const HarmonicModel m({"x"}, {10.0});
    std::vector<double> errors;
    for (std::size_t n : {101u, 201u, 401u}) {
        const auto r = lowest(assemble(m.field(6.0), m.grid(n, 6.0), 2), {.k = 1});
        errors.push_back(std::abs(r.eigenvalues[0] - 5.0));
    }
    EXPECT_NEAR(errors[0] / errors[1], 4.0, 0.1);
    EXPECT_NEAR(errors[1] / errors[2], 4.0, 0.1);
}

TEST(Operator, AxisPermutationOfSeparableField) {
    auto build = [](std::vector<std::string> labels, std::vector<double> quanta, std::vector<std::size_t> counts) {
        const HarmonicModel m(labels, quanta);
        std::vector<AxisSpec> axes;
        for (std::size_t d = 0; d < labels.size(); ++d) {
            const double l = 4.0 * m.turning_length(d);
            axes.push_back({labels[d], -l, l, counts[d]});
        }
        return assemble(m.field(4.0), GridSpec(axes), 4);
    };
    const auto a = oracle::dense_eigenvalues(build({"x", "y", "z"}, {10.0, 14.0, 17.0}, {9, 8, 7}), 20);
    const auto b = oracle::dense_eigenvalues(build({"z", "x", "y"}, {17.0, 10.0, 14.0}, {7, 9, 8}), 20);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * std::abs(a[i]));
}

TEST(Operator, Errors) {
    const GridSpec g({{"x", 0, 1, 5}});
    const auto f = zero_field(g);
    try {
        assemble(f, g, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OrderUnsupported);
    }
    try {
        assemble(f, GridSpec({{"y", 0, 1, 5}}), 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DomainMismatch);
    }
    const auto op = assemble(f, g, 2);
    std::vector<double> wrong(4, 1.0);
    try {
        op.apply(wrong);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
}
