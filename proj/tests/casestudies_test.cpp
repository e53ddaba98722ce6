#include "agshield/agshield.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace agshield {
namespace {

using platoon::PlatoonParams;

PlatoonParams reduced_platoon(int n) {
    PlatoonParams p;
    p.n = n;
    p.d_max = 20;
    p.v_min = -4;
    p.v_max = 8;
    return p;
}

StateIndex local_state(const PlatoonParams& p, int v, int vf, int d) {
    const StateSpace ls = platoon::local_space(p);
    const std::size_t c[] = {*ls.dim(0).index_of(v), *ls.dim(1).index_of(vf), static_cast<std::size_t>(d)};
    return ls.encode(c);
}

TEST(Platoon, FrontCarPolicy) {
    const auto a = platoon::front_car_policy(12);
    EXPECT_DOUBLE_EQ(a[0], 0.5);
    EXPECT_DOUBLE_EQ(a[1], 0.25);
    EXPECT_DOUBLE_EQ(a[2], 0.25);
    const auto b = platoon::front_car_policy(-2);
    EXPECT_DOUBLE_EQ(b[0], 0.25);
    EXPECT_DOUBLE_EQ(b[2], 0.5);
    for (double w : platoon::front_car_policy(5)) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
}

TEST(Platoon, VelocityCapAndGapChange) {
    PlatoonParams p;
    p.n = 2;
    const ActionIndex accelerate[] = {2};
    auto next = platoon::platoon_step(p, {20, 20, 50}, accelerate, 1);
    EXPECT_EQ(next[0], 20);
    // rear 10 -> 12, front 10 -> 8; closed form of the relative displacement is -2
    next = platoon::platoon_step(p, {10, 10, 50}, accelerate, 0);
    EXPECT_EQ(next[0], 12);
    EXPECT_EQ(next[1], 8);
    EXPECT_EQ(next[2], 48);
}

TEST(Platoon, GapChangeIsIntegralAndBounded) {
    PlatoonParams p;
    for (int v = p.v_min; v <= p.v_max; v += 2)
        for (int vf = p.v_min; vf <= p.v_max; vf += 2)
            for (int a = -2; a <= 2; a += 2)
                for (int x = -2; x <= 2; x += 2) {
                    const int v2 = platoon::clamp_velocity(p, v + a);
                    const int vf2 = platoon::clamp_velocity(p, vf + x);
                    const int twice = (vf + vf2) - (v + v2);
                    EXPECT_EQ(twice % 2, 0);
                    EXPECT_LE(std::abs(platoon::gap_change(p, v, v2, vf, vf2)), 31);
                }
}

TEST(Platoon, CrashBringsBothCarsToStandstill) {
    PlatoonParams p;
    p.n = 3;
    platoon::GlobalState s{14, -6, 4, 0, 30};
    const ActionIndex acts[] = {2, 2};
    for (int t = 0; t < 20; ++t) s = platoon::platoon_step(p, s, acts, 2);
    EXPECT_EQ(s[0], 0);
    EXPECT_EQ(s[1], 0);
    EXPECT_EQ(s[3], 0);
    for (int t = 0; t < 5; ++t) s = platoon::platoon_step(p, s, acts, 2);
    EXPECT_EQ(s[0], 0);
    EXPECT_EQ(s[1], 0);
}

TEST(Platoon, FrontCarGivesThreeSuccessors) {
    PlatoonParams p;
    p.n = 2;
    p.d_max = 20;
    const Lts g = platoon::global_lts(p);
    for (double w : platoon::front_weights(5)) EXPECT_GT(w, 0.0);
    const std::size_t c[] = {*g.space().dim(0).index_of(4), *g.space().dim(1).index_of(4), 10};
    EXPECT_EQ(g.successors(g.space().encode(c), 1).size(), 3U);
}

TEST(Platoon, LocalGameShape) {
    PlatoonParams p;
    const Lts l = platoon::local_lts(p, true);
    EXPECT_EQ(l.state_count(), 51456U);
    for (StateIndex s = 0; s < l.state_count(); ++s) {
        if (l.space().value(s, 2) == 0) continue;
        ASSERT_EQ(l.enabled_mask(s), 0x7U) << s;
    }
}

TEST(Platoon, LocalShieldRegression) {
    PlatoonParams p;
    const Shield sh = most_permissive_shield(platoon::local_lts(p, true), platoon::local_guarantee(p), 1);
    EXPECT_EQ(sh.winning_set().count(), 30746U);
    EXPECT_LT(sh.winning_fraction(), 1.0);
    EXPECT_TRUE(sh.winning(local_state(p, 0, 0, 10)));
    EXPECT_EQ(sh.allowed(local_state(p, 0, 0, 10)), 0x1U);
    EXPECT_FALSE(sh.winning(local_state(p, 20, -10, 1)));
}

TEST(Platoon, RearCrashWithoutAssumptionLosesEverywhere) {
    PlatoonParams p;
    EXPECT_THROW((void)most_permissive_shield(platoon::local_lts(p, false), platoon::local_guarantee(p), 2), EmptyWinningSet);
}

TEST(Platoon, SynthesisWithoutAssumptionsNamesSecondCar) {
    platoon::PlatoonModel m(PlatoonParams{});
    try {
        (void)assume_guarantee_synthesize(m, false);
        FAIL() << "expected EmptyWinningSet";
    } catch (const EmptyWinningSet& e) {
        EXPECT_EQ(e.agent(), 2U);
    }
}

TEST(Platoon, OneSharedShieldForAllCars) {
    platoon::PlatoonModel m(PlatoonParams{});
    const auto r = assume_guarantee_synthesize(m);
    ASSERT_EQ(r.shields.size(), 9U);
    EXPECT_EQ(r.variants().size(), 1U);
    EXPECT_TRUE(r.report.compatible);
    for (const auto& s : r.shields) EXPECT_EQ(s.get(), r.shields.front().get());
}

TEST(Platoon, ObservationAndGuarantee) {
    PlatoonParams p;
    p.n = 3;
    p.d_max = 20;
    const Projection prj = platoon::agent_projection(p, 1);
    EXPECT_EQ(prj.indices(), (std::vector<std::size_t>{1, 2, 4}));
    const platoon::GlobalState g{2, 4, -6, 7, 13};
    const StateSpace gs = platoon::global_space(p);
    std::vector<std::size_t> c;
    for (std::size_t k = 0; k < g.size(); ++k) c.push_back(*gs.dim(k).index_of(g[k]));
    const StateIndex s = gs.encode(c);
    EXPECT_EQ(prj(s), platoon::observe(p, platoon::local_space(p), g, 1));
    EXPECT_EQ(prj(s), local_state(p, 4, -6, 13));
    EXPECT_TRUE(platoon::agent_guarantee(p, 0).contains(s));
    c[3] = 0;
    EXPECT_FALSE(platoon::agent_guarantee(p, 0).contains(gs.encode(c)));
}

TEST(Platoon, CostIsTheObservedGap) {
    PlatoonParams p;
    p.n = 2;
    platoon::PlatoonSim sim(p);
    SplitMix64 rng(3);
    double total = 0.0;
    double cost[1];
    const ActionIndex keep[] = {1};
    auto s = sim.initial_state();
    for (int t = 0; t < 5; ++t) {
        const int d = s[2];
        s = sim.step(s, keep, rng, cost);
        EXPECT_EQ(cost[0], d);
        total += cost[0];
    }
    EXPECT_GT(total, 0.0);
}

TEST(Platoon, DependenciesPointForward) {
    PlatoonParams p;
    p.n = 4;
    const auto e = platoon::declared_dependencies(p);
    EXPECT_EQ(e, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}}));
    EXPECT_EQ(topological_order(DependencyGraph(3, e)), (std::vector<std::size_t>{2, 1, 0}));
}

TEST(Platoon, ParamsRejectBadValues) {
    PlatoonParams p;
    p.v_max = -10;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = PlatoonParams{};
    p.initial_distance = 200;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = PlatoonParams{};
    p.v_max = 21;
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(PlatoonOracle, ReducedTwoCarsMatch) {
    const PlatoonParams p = reduced_platoon(2);
    platoon::PlatoonModel m(p);
    const auto r = assume_guarantee_synthesize(m);
    const auto o = oracle_global_pipeline(platoon::global_lts(p), {m.projection(0)}, {platoon::agent_guarantee(p, 0)});
    ASSERT_EQ(o.size(), 1U);
    EXPECT_EQ(o[0].masks(), r.shields[0]->masks());
    EXPECT_GT(o[0].winning_set().count(), 0U);
}

TEST(PlatoonOracle, FullVelocityRangeAtSmallGapHasNoShieldEitherWay) {
    PlatoonParams p;
    p.n = 2;
    p.d_max = 20;
    platoon::PlatoonModel m(p);
    EXPECT_THROW((void)assume_guarantee_synthesize(m), EmptyWinningSet);
    EXPECT_THROW((void)oracle_global_pipeline(platoon::global_lts(p), {m.projection(0)}, {platoon::agent_guarantee(p, 0)}),
                 EmptyWinningSet);
}

// ---- plant ----

using plant::PlantParams;
using plant::PlantTopology;

TEST(Plant, TopologyInvariants) {
    const PlantTopology t = PlantTopology::standard();
    EXPECT_NO_THROW(t.validate());
    const std::size_t outdeg[] = {1, 2, 1, 2, 2, 1, 2, 1, 2, 2};
    for (std::size_t u = 0; u < plant::kUnits; ++u) {
        EXPECT_EQ(t.inputs(u).size(), 3U);
        EXPECT_EQ(t.out_degree(u), outdeg[u]) << u;
    }
    const auto in7 = t.inputs(6);
    EXPECT_TRUE(in7[0].upstream && in7[0].source == 3);
    EXPECT_TRUE(in7[1].upstream && in7[1].source == 4);
    EXPECT_FALSE(in7[2].upstream);
}

TEST(Plant, TwoShieldVariants) {
    plant::PlantModel m{PlantParams{}};
    const auto r = assume_guarantee_synthesize(m);
    const auto v = r.variants();
    ASSERT_EQ(v.size(), 2U);
    EXPECT_EQ(v[0].first, "outdeg1");
    EXPECT_EQ(v[1].first, "outdeg2");
    EXPECT_TRUE(r.report.compatible);
    EXPECT_EQ(r.shields[0]->space().size(), 510U);
}

TEST(Plant, FirstUnitsAssumeNothing) {
    plant::PlantModel m{PlantParams{}};
    for (std::size_t u = 0; u < 3; ++u) EXPECT_EQ(m.variant(u, true).upstream, 0U);
    for (std::size_t u = 3; u < plant::kUnits; ++u) EXPECT_GT(m.variant(u, true).upstream, 0U);
    EXPECT_EQ(m.symmetry_key(0, false), "outdeg1");
    EXPECT_EQ(m.symmetry_key(6, false), "outdeg2-up2-unassumed");
}

TEST(Plant, ClosedUnitKeepsVolume) {
    const PlantParams p;
    const PlantTopology t = PlantTopology::standard();
    plant::PlantState s;
    s.volume.fill(20.0);
    std::vector<ActionIndex> acts(plant::kUnits, 0);
    const std::vector<double> draws(plant::kDrawsPerStep, 0.5);
    const auto r = plant::plant_step(p, t, s, acts, draws);
    EXPECT_DOUBLE_EQ(r.next.volume[0], 20.0);
    EXPECT_DOUBLE_EQ(r.cost[0], 0.0);
    EXPECT_EQ(r.next.phase, 1);
}

TEST(Plant, ProviderPurchase) {
    const PlantParams p;
    const PlantTopology t = PlantTopology::standard();
    plant::PlantState s;
    s.phase = 2;  // pattern slot 1: provider-1 price 5
    s.volume.fill(20.0);
    std::vector<ActionIndex> acts(plant::kUnits, 0);
    acts[0] = 0b001;
    std::vector<double> draws(plant::kDrawsPerStep, 0.0);
    draws[0] = 0.25;
    const auto r = plant::plant_step(p, t, s, acts, draws);
    const double x = 1.075 + 0.5 * 0.25;
    EXPECT_NEAR(r.next.volume[0], 20.0 + x, 1e-12);
    EXPECT_NEAR(r.purchased[0], x, 1e-12);
    EXPECT_NEAR(r.cost[0], 5.0 * x, 1e-12);
    s.phase = 0;
    EXPECT_DOUBLE_EQ(plant::plant_step(p, t, s, acts, draws).cost[0], 0.0);
}

TEST(Plant, SingleProviderCannotFeedUnitNine) {
    const PlantParams p;
    const PlantTopology t = PlantTopology::standard();
    plant::PlantState s;
    s.volume.fill(0.0);
    s.volume[8] = 10.0;
    std::vector<ActionIndex> acts(plant::kUnits, 0);
    acts[8] = 0b100;  // provider only
    SplitMix64 rng(9);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> draws(plant::kDrawsPerStep);
        for (auto& d : draws) d = rng.uniform();
        s.phase = 0;
        const double before = s.volume[8];
        s = plant::plant_step(p, t, s, acts, draws).next;
        if (before == 0.0) break;
        EXPECT_LT(s.volume[8], before);
    }
    EXPECT_EQ(s.volume[8], 0.0);
}

TEST(Plant, VolumeConservation) {
    const PlantParams p;
    const PlantTopology t = PlantTopology::standard();
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> vol(0.0, 50.0);
    std::uniform_int_distribution<int> act(0, 7), ph(0, 9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        plant::PlantState s;
        s.phase = ph(gen);
        for (auto& v : s.volume) v = vol(gen);
        std::vector<ActionIndex> acts(plant::kUnits);
        for (auto& a : acts) a = static_cast<ActionIndex>(act(gen));
        std::vector<double> draws(plant::kDrawsPerStep);
        for (auto& d : draws) d = u(gen);
        const auto r = plant::plant_step(p, t, s, acts, draws);
        for (std::size_t i = 0; i < plant::kUnits; ++i) {
            const double raw = s.volume[i] + r.inflow[i] - r.outflow[i];
            ASSERT_NEAR(r.next.volume[i], std::clamp(raw, 0.0, 50.0), 1e-9);
            ASSERT_GE(raw, -1e-9);
        }
    }
}

// Every simulated successor bin lies in the abstract successor set of its bin, for the
// unassumed abstraction always and for the assumed one whenever upstream units did not run dry.
TEST(Plant, AbstractionCoversSimulation) {
    const PlantParams p;
    const PlantTopology t = PlantTopology::standard();
    plant::PlantModel m(p);
    std::map<std::string, Lts> games;
    for (std::size_t u = 0; u < plant::kUnits; ++u)
        for (bool assume : {true, false}) {
            const auto key = m.symmetry_key(u, assume);
            if (!games.count(key)) games.emplace(key, m.local_lts(u, assume));
        }
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> vol(0.0, 50.0);
    std::uniform_int_distribution<int> act(0, 7), ph(0, 9);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::size_t assumed_checks = 0;
    for (int k = 0; k < 10000; ++k) {
        plant::PlantState s;
        s.phase = ph(gen);
        for (auto& v : s.volume) v = vol(gen);
        std::vector<ActionIndex> acts(plant::kUnits);
        for (auto& a : acts) a = static_cast<ActionIndex>(act(gen));
        std::vector<double> draws(plant::kDrawsPerStep);
        for (auto& d : draws) d = u01(gen);
        const auto r = plant::plant_step(p, t, s, acts, draws);
        for (std::size_t i = 0; i < plant::kUnits; ++i) {
            const ObservationIndex from = plant::observe(p, s, i);
            const ObservationIndex to = plant::observe(p, r.next, i);
            const auto& loose = games.at(m.symmetry_key(i, false));
            ASSERT_TRUE(loose.has_transition(from, acts[i], to)) << "unit " << i + 1;
            bool upstream_ok = true;
            for (const auto& in : t.inputs(i))
                if (in.upstream) upstream_ok = upstream_ok && r.next.volume[in.source] > 0.0;
            if (upstream_ok) {
                ++assumed_checks;
                ASSERT_TRUE(games.at(m.symmetry_key(i, true)).has_transition(from, acts[i], to)) << "unit " << i + 1;
            }
        }
    }
    EXPECT_GT(assumed_checks, 50000U);
}

TEST(Plant, DependenciesAndLearningOrder) {
    const PlantTopology t = PlantTopology::standard();
    const auto e = plant::declared_dependencies(t);
    EXPECT_NE(std::find(e.begin(), e.end(), std::pair<std::size_t, std::size_t>{5, 8}), e.end());
    const auto order = topological_order(DependencyGraph(plant::kUnits, e), plant::learning_priority());
    EXPECT_EQ(order, (std::vector<std::size_t>{9, 8, 7, 6, 5, 4, 3, 2, 1, 0}));
}

TEST(Plant, NoopActionAddsNinthLabel) {
    PlantParams p;
    p.noop_action = true;
    const auto labels = plant::action_labels(p);
    ASSERT_EQ(labels.size(), 9U);
    EXPECT_EQ(labels[0], "ccc");
    EXPECT_EQ(labels[5], "oco");
    EXPECT_EQ(labels[8], "noop");
    EXPECT_EQ(plant::open_inputs(8), 0U);
    plant::PlantModel m(p);
    EXPECT_EQ(m.local_lts(0, true).action_count(), 9U);
}

TEST(Plant, DemandOutsideAbstractionRejected) {
    PlantParams p;
    p.demand_a = {1, 0, 0, 0, 0};  // 0.5 l per step fits no arrow count
    EXPECT_THROW(plant::PlantModel{p}, InvalidArgument);
}

TEST(Plant, CostTablesRotateProviderOne) {
    const PlantParams p;
    EXPECT_EQ(p.cost[0], (std::vector<double>{0, 5, 3, 3, 3}));
    EXPECT_EQ(p.cost[9], (std::vector<double>{9, 0, 6, 6, 6}));
    EXPECT_EQ(p.cost[1], (std::vector<double>{3, 3, 3, 0, 5}));
    EXPECT_EQ(p.cost[4], p.cost[0]);
}

// ---- parameter files ----

TEST(Params, ReadsScalarsAndTables) {
    auto f = ParamFile::parse("# plant\ncapacity = 40\ndemand_a = 5, 5, 3, 0, 0 # trailing\nnoop_action = 1\n");
    PlantParams p;
    p.read(f);
    f.finish();
    EXPECT_EQ(p.capacity, 40.0);
    EXPECT_TRUE(p.noop_action);
    EXPECT_EQ(p.demand_a.size(), 5U);
}

TEST(Params, UnknownAndDuplicateKeys) {
    auto f = ParamFile::parse("n = 3\nspeed = 2\n");
    PlatoonParams p;
    p.read(f);
    EXPECT_EQ(p.n, 3);
    try {
        f.finish();
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.line(), 2U);
    }
    EXPECT_THROW(ParamFile::parse("n = 3\nn = 4\n"), FormatError);
    auto bad = ParamFile::parse("n = three\n");
    EXPECT_THROW(p.read(bad), FormatError);
}

} // namespace
} // namespace agshield
