#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tunnelgrid/lanczos.hpp"
#include "tunnelgrid/models.hpp"
#include "tunnelgrid/operator.hpp"
#include "tunnelgrid/spectra.hpp"

using namespace tunnelgrid;

namespace {

Minimum at(std::vector<double> x) { return {std::move(x), 0.0}; }

std::vector<double> normalized(std::vector<double> v) {
    const double n = std::sqrt(oracle::dot(v, v));
    for (double& x : v) x /= n;
    return v;
}

StateLabel label(std::vector<int> q, Parity p) {
    StateLabel l;
    l.quanta = std::move(q);
    l.parity = p;
    l.overlap = 1.0;
    l.assigned = true;
    return l;
}

EigenResult synthetic(std::vector<double> values, double residual = 1e-9) {
    EigenResult r;
    r.eigenvalues = std::move(values);
    r.residuals.assign(r.eigenvalues.size(), residual);
    r.eigenvectors.assign(r.eigenvalues.size(), {});
    r.converged = true;
    return r;
}

const QuarticDoubleWell quartic(150.0, 0.55);

}  // namespace

TEST(Partition, MidpointTieGoesToLowerIndexWell) {
    const GridSpec g({{"x", 0.0, 12.0, 13}});
    const auto p = partition_from_centers(g, {at({3.0}), at({9.0})});
    std::size_t left = 0;
    for (std::size_t n = 0; n < 13; ++n) {
        EXPECT_EQ(p.well[n], n <= 6 ? 0u : 1u) << "node " << n;
        left += p.well[n] == 0;
    }
    EXPECT_EQ(left, 7u);
}

TEST(Partition, SingleWellFieldIsRejected) {
    const HarmonicModel h({"x"}, {10.0});
    try {
        partition_wells(h.field(), h.grid(41));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingleWell);
    }
}

TEST(Occupations, DeltaStateSitsInOneWell) {
    const GridSpec g({{"x", 0.0, 12.0, 13}});
    const auto p = partition_from_centers(g, {at({3.0}), at({9.0})});
    std::vector<double> s(13, 0.0);
    s[2] = 1.0;
    const auto occ = occupations(s, p);
    EXPECT_EQ(occ[0], 1.0);
    EXPECT_EQ(occ[1], 0.0);
}

TEST(Occupations, EvenStateOfSymmetricPartitionIsHalfHalf) {
    const GridSpec g({{"x", 0.0, 11.0, 12}});
    const auto p = partition_from_centers(g, {at({2.5}), at({8.5})});
    std::vector<double> s(12);
    for (std::size_t i = 0; i < 6; ++i) s[i] = s[11 - i] = 1.0 + 0.3 * static_cast<double>(i * i);
    const auto occ = occupations(normalized(s), p);
    EXPECT_NEAR(occ[0], 0.5, 1e-6);
    EXPECT_NEAR(occ[1], 0.5, 1e-6);
    EXPECT_NEAR(occ[0] + occ[1], 1.0, 1e-14);
}

TEST(Occupations, UnnormalizedStateRejected) {
    const GridSpec g({{"x", 0.0, 11.0, 12}});
    const auto p = partition_from_centers(g, {at({2.5}), at({8.5})});
    std::vector<double> s(12, 1.0);
    try {
        occupations(s, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnnormalizedState);
    }
}

TEST(Occupations, LatticeFrozenInLeftWellLocalizesGroundState) {
    const CoupledDoubleWell m(CoupledDoubleWell::oh_like());
    const auto left = m.well(-1);
    const auto dom = m.default_domain();
    const GridSpec g({AxisSpec::pinned("q_x", 0.0), {"q_y", dom[1].min, dom[1].max, 81}, AxisSpec::pinned("q_z", 0.0),
                      AxisSpec::pinned("Q", left[3])});
    const auto s = analyze(lowest(assemble(m.field(), g), {.k = 2}), m.field(), g);
    ASSERT_EQ(s.occupations[0].size(), 2u);
    // centres are ordered lexicographically, so the q_y < 0 well is first
    EXPECT_GT(s.occupations[0][0], 0.95);
    EXPECT_GT(s.occupations[1][1], 0.95);
}

TEST(Parity, QuarticDoubletIsSymmetricThenAntisymmetric) {
    // even node count: no node sits on the midpoint, where the tie rule would
    // hand its whole weight to the left well
    const auto f = quartic.field();
    const auto g = quartic.grid(400);
    const auto r = lowest(assemble(f, g), {.k = 4});
    const auto p = partition_from_centers(g, {at({-quartic.half_separation()}), at({quartic.half_separation()})});
    const auto p0 = parity(r.eigenvectors[0], p), p1 = parity(r.eigenvectors[1], p);
    EXPECT_EQ(p0.parity, Parity::Symmetric);
    EXPECT_EQ(p1.parity, Parity::Antisymmetric);
    EXPECT_NEAR(p0.overlap, 1.0, 1e-8);
    EXPECT_NEAR(p1.overlap, -1.0, 1e-8);
    for (std::size_t s = 0; s < 2; ++s) {
        const auto occ = occupations(r.eigenvectors[s], p);
        EXPECT_NEAR(occ[0], 0.5, 1e-4);
        EXPECT_NEAR(occ[1], 0.5, 1e-4);
    }
}

TEST(Splitting, QuarticMatchesTridiagonalOracle) {
    const auto f = quartic.field();
    const auto g = quartic.grid(401);
    const auto s = analyze(lowest(assemble(f, g), {.k = 4}), f, g);
    ASSERT_TRUE(s.splitting.has_value()) << s.splitting_status;
    const double l = g.axis(0).max;
    const auto v = [](double q) { return quartic(q); };
    const auto [same0, same1] = oracle::tridiagonal_pair(v, -l, l, 401, units::hbar2);
    EXPECT_NEAR(*s.splitting, same1 - same0, 1e-8 * (same1 - same0));
    const auto [fine0, fine1] = oracle::tridiagonal_pair(v, -l, l, 4001, units::hbar2);
    EXPECT_NEAR(*s.splitting, fine1 - fine0, 1e-3 * (fine1 - fine0));
    EXPECT_NEAR(s.v_min, 0.0, 1e-12);
    EXPECT_NEAR(s.zpe, s.eigen.eigenvalues[0], 1e-12);
}

TEST(Splitting, FromSyntheticDoublet) {
    const auto r = synthetic({1.0, 1.2});
    const std::vector<StateLabel> ok{label({0}, Parity::Symmetric), label({0}, Parity::Antisymmetric)};
    EXPECT_NEAR(tunnel_splitting(r, ok), 0.2, 1e-15);

    const std::vector<StateLabel> same{label({0}, Parity::Symmetric), label({0}, Parity::Symmetric)};
    const std::vector<StateLabel> mixed{label({0}, Parity::Symmetric), label({1}, Parity::Antisymmetric)};
    for (const auto* l : {&same, &mixed}) {
        try {
            tunnel_splitting(r, *l);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::DoubletNotFound);
        }
    }
    try {
        tunnel_splitting(synthetic({1.0, 1.2}, 0.01), ok);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SplittingUnresolved);
    }
}

TEST(Splitting, InvariantUnderPotentialShift) {
    const auto f = quartic.field();
    const PotentialField shifted(f.labels(), f.domain(), [f](std::span<const double> x) { return f.eval_unchecked(x) + 37.5; });
    const auto g = quartic.grid(201);
    const auto a = analyze(lowest(assemble(f, g), {.k = 4}), f, g);
    const auto b = analyze(lowest(assemble(shifted, g), {.k = 4}), shifted, g);
    ASSERT_TRUE(a.splitting && b.splitting);
    EXPECT_NEAR(*a.splitting, *b.splitting, 1e-8 * *a.splitting);
    EXPECT_NEAR(a.zpe, b.zpe, 1e-9 * a.zpe);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(b.eigen.eigenvalues[i] - a.eigen.eigenvalues[i], 37.5, 1e-8);
}

TEST(Splitting, HeavierIsotopeTunnelsLess) {
    const auto f = quartic.field();
    const auto g = quartic.grid(201);
    const auto op = assemble(f, g);
    const auto h = analyze(lowest(op, {.k = 2}), f, g);
    const auto d = analyze(lowest(op.with_mass_factor(0, units::mass_d / units::mass_h), {.k = 2}), f, g);
    ASSERT_TRUE(h.splitting && d.splitting);
    EXPECT_LT(*d.splitting, *h.splitting);
    EXPECT_LT(d.zpe, h.zpe);
}

TEST(Labels, SeparableHarmonicStatesCarryTheirQuanta) {
    const HarmonicModel m({"x", "y"}, {10.0, 14.0});
    const auto f = m.field(6.0);
    const auto g = m.grid(61, 6.0);
    const auto s = analyze(lowest(assemble(f, g, 4), {.k = 6}), f, g);
    const std::vector<std::vector<int>> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    const auto levels = oracle::oscillator_levels({10.0, 14.0}, 6);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_TRUE(s.labels[i].assigned);
        EXPECT_EQ(s.labels[i].quanta, expected[i]) << "state " << i;
        EXPECT_GT(s.labels[i].overlap, 0.99);
        EXPECT_NEAR(s.eigen.eigenvalues[i], levels[i], 1e-3 * levels[i]);
    }
    EXPECT_EQ(s.labels[4].text(g), "(1,1)");
    EXPECT_NEAR(s.zpe, 12.0, 0.01);
    ASSERT_EQ(s.transitions.size(), 0u);  // only two non-lattice fundamentals exist
}

TEST(Labels, NodalCountsFollowTheLadder) {
    const HarmonicModel m({"x"}, {10.0});
    const auto g = m.grid(201);
    const auto r = lowest(assemble(m.field(), g), {.k = 4});
    for (int n = 0; n < 4; ++n) EXPECT_EQ(nodal_count(r.eigenvectors[static_cast<std::size_t>(n)], g, 0), n);
}

TEST(Transitions, FundamentalsExcludeLatticeAxes) {
    const auto g = CoupledDoubleWell(CoupledDoubleWell::oh_like()).grid({3, 3, 3, 3});
    const auto r = synthetic({0.0, 0.0, 20.0, 20.1, 100.0, 100.2, 150.0, 155.0});
    const std::vector<StateLabel> l{label({0, 0, 0, 0}, Parity::Symmetric), label({0, 0, 0, 0}, Parity::Antisymmetric),
                                    label({0, 0, 0, 1}, Parity::Symmetric), label({0, 0, 0, 1}, Parity::Antisymmetric),
                                    label({1, 0, 0, 0}, Parity::Symmetric), label({1, 0, 0, 0}, Parity::Antisymmetric),
                                    label({0, 1, 0, 0}, Parity::Symmetric), label({0, 0, 1, 0}, Parity::Symmetric)};
    const auto t = transition_table(r, l, g);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_NEAR(t[0].hbar_omega, 100.1, 1e-12);
    EXPECT_NEAR(t[0].splitting, 0.2, 1e-12);
    EXPECT_EQ(t[0].members, 2u);
    EXPECT_NEAR(t[1].hbar_omega, 150.0, 1e-12);
    EXPECT_NEAR(t[2].hbar_omega, 155.0, 1e-12);
    EXPECT_EQ(t[2].quanta, (std::vector<int>{0, 0, 1, 0}));
    try {
        transition_table(r, l, g, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientAssignedStates);
    }
    auto no_ground = l;
    no_ground[0].assigned = no_ground[1].assigned = false;
    try {
        transition_table(r, no_ground, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientAssignedStates);
    }
}

TEST(ZeroPoint, MeasuredFromPotentialMinimum) {
    const auto r = synthetic({5.0, 7.0});
    EXPECT_EQ(zero_point_energy(r, 0.0), 5.0);
    EXPECT_EQ(zero_point_energy(r, -1.0), 6.0);
}
