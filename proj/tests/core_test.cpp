#include "agshield/core/model_check.hpp"
#include "generators.hpp"

#include <gtest/gtest.h>

namespace agshield {
namespace {

// Two-agent toy over {0,1}^2 with actions {z,p}^2; (p,p) from (0,0) reaches (1,1).
Lts toy() {
    StateSpace space({VarDomain::integer("x1", 0, 1), VarDomain::integer("x2", 0, 1)});
    ActionSpace actions({{"z", "p"}, {"z", "p"}});
    LtsBuilder b(space, actions);
    auto st = [&](std::size_t x, std::size_t y) { return space.encode(State{{x, y}}); };
    auto ac = [&](ActionIndex x, ActionIndex y) {
        const ActionIndex v[] = {x, y};
        return actions.encode(v);
    };
    b.add(st(0, 0), ac(0, 0), st(0, 0));
    b.add(st(0, 0), ac(0, 1), st(0, 1));
    b.add(st(0, 0), ac(1, 0), st(1, 0));
    b.add(st(0, 0), ac(1, 1), st(1, 1));
    b.add(st(0, 1), ac(0, 0), st(0, 1));
    b.add(st(1, 0), ac(0, 0), st(1, 0));
    for (ActionIndex a = 0; a < 4; ++a) b.add(st(1, 1), a, st(1, 1));
    return b.build();
}

TEST(StateSpace, RowMajorDimensionZeroMostSignificant) {
    StateSpace s({VarDomain::integer("a", 0, 2), VarDomain::integer("b", -10, 20, 2)});
    EXPECT_EQ(s.size(), 3U * 16U);
    EXPECT_EQ(s.encode(State{{1, 0}}), 16U);
    EXPECT_EQ(s.encode(State{{0, 1}}), 1U);
    EXPECT_EQ(s.value(s.encode(State{{2, 15}}), 1), 20);
    for (StateIndex i = 0; i < s.size(); ++i) EXPECT_EQ(s.encode(s.decode(i)), i);
}

TEST(StateSpace, SameShapeIgnoresNames) {
    const StateSpace a({VarDomain::integer("v", -10, 20, 2), VarDomain::integer("d", 0, 5)});
    const StateSpace b({VarDomain::integer("v1", -10, 20, 2), VarDomain::integer("d1", 0, 5)});
    const StateSpace c({VarDomain::integer("v", -10, 20, 2), VarDomain::integer("d", 0, 6)});
    EXPECT_FALSE(a == b);
    EXPECT_TRUE(a.same_shape(b));
    EXPECT_FALSE(a.same_shape(c));
}

TEST(StateSpace, DomainInvariants) {
    EXPECT_THROW(VarDomain::integer("v", 0, 5, 2), InvalidArgument);
    EXPECT_THROW(VarDomain::integer("v", 3, 1), InvalidArgument);
    EXPECT_THROW(VarDomain::integer("v", 0, 4, 0), InvalidArgument);
    EXPECT_THROW(VarDomain::enumerated("e", {}), InvalidArgument);
    const auto d = VarDomain::integer("v", -10, 20, 2);
    EXPECT_EQ(d.size(), 16U);
    EXPECT_EQ(d.index_of(-10), 0U);
    EXPECT_EQ(d.index_of(20), 15U);
    EXPECT_FALSE(d.index_of(5).has_value());
}

TEST(ActionSpace, JointIndexAgentZeroMostSignificant) {
    ActionSpace a({{"x", "y", "z"}, {"u", "v"}});
    EXPECT_EQ(a.joint_size(), 6U);
    const ActionIndex v[] = {2, 1};
    EXPECT_EQ(a.encode(v), 5U);
    EXPECT_EQ(a.component(3, 0), 1U);
    EXPECT_EQ(a.component(3, 1), 1U);
    for (ActionIndex j = 0; j < 6; ++j)
        for (std::size_t i = 0; i < 2; ++i)
            EXPECT_EQ(a.insert(a.without(i).encode(std::vector<ActionIndex>{a.component(j, 1 - i)}), i, a.component(j, i)), j);
}

TEST(Lts, RejectsDeadEnds) {
    StateSpace space({VarDomain::integer("x", 0, 1)});
    LtsBuilder b(space, ActionSpace::single({"a"}));
    b.add(0, 0, 1);
    EXPECT_THROW((void)b.build(), InvalidArgument);
    LtsBuilder ok(space, ActionSpace::single({"a"}));
    ok.add(0, 0, 1).add(1, 0, 1);
    EXPECT_NO_THROW((void)ok.build());
}

TEST(Lts, EnabledActionsSelfLoop) {
    LtsBuilder b(StateSpace({VarDomain::integer("x", 0, 0)}), ActionSpace::single({"a"}));
    b.add(0, 0, 0);
    EXPECT_EQ(enabled_actions(b.build(), 0), std::vector<ActionIndex>{0});
}

TEST(Lts, ToyEnabledAtOrigin) {
    const Lts t = toy();
    EXPECT_EQ(enabled_actions(t, 0), (std::vector<ActionIndex>{0, 1, 2, 3}));
    EXPECT_EQ(t.enabled_mask(0), 0xFU);
}

TEST(Lts, GeneratorMatchesExplicit) {
    const Lts t = toy();
    const Lts g = Lts::from_generator(t.space(), t.actions(), [t](StateIndex s, ActionIndex a, std::vector<StateIndex>& out) {
        const auto succ = t.successors(s, a);
        out.insert(out.end(), succ.rbegin(), succ.rend());
        out.insert(out.end(), succ.begin(), succ.end());
    });
    EXPECT_TRUE(same_transitions(t, g));
}

Mdp coin() {
    StateSpace space({VarDomain::integer("x", 0, 1)});
    std::vector<std::vector<Outcome>> table(2 * 2);
    table[0] = {{0, 0.5}, {1, 0.5}};
    table[1] = {{1, 1.0}};
    table[2] = {{1, 1.0}};
    return {space, ActionSpace::single({"a", "b"}), table};
}

TEST(Mdp, Stochasticity) {
    const Mdp m = coin();
    EXPECT_DOUBLE_EQ(m.probability(0, 0, 1), 0.5);
    EXPECT_EQ(enabled_actions(m, 1), std::vector<ActionIndex>{0});
    StateSpace space({VarDomain::integer("x", 0, 0)});
    EXPECT_THROW(Mdp(space, ActionSpace::single({"a"}), {{{0, 0.7}}}), InvalidArgument);
    EXPECT_THROW(Mdp(space, ActionSpace::single({"a"}), {{{0, 0.0}, {0, 1.0}}}), InvalidArgument);
    EXPECT_THROW(Mdp(space, ActionSpace::single({"a"}), {{}}), InvalidArgument);
    EXPECT_NO_THROW(Mdp(space, ActionSpace::single({"a"}), {{{0, 1.0 - 1e-12}}}));
}

TEST(Mdp, InducedLtsKeepsPositiveEdges) {
    const Lts t = induced_lts(coin());
    EXPECT_EQ(t.successors(0, 0), (std::vector<StateIndex>{0, 1}));
    EXPECT_EQ(t.successors(0, 1), std::vector<StateIndex>{1});
    EXPECT_TRUE(t.successors(1, 1).empty());
    EXPECT_EQ(t.transition_count(), 4U);
}

TEST(Mdp, StochasticityPropertyOnRandomTables) {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 2 + rng() % 6;
        StateSpace space({VarDomain::integer("x", 0, static_cast<int>(n) - 1)});
        std::vector<std::vector<Outcome>> table(n * 2);
        for (std::size_t k = 0; k < table.size(); ++k) {
            if (k % 2 == 1 && rng() % 2 == 0) continue;
            std::vector<double> w(n);
            double sum = 0;
            for (auto& x : w) sum += x = static_cast<double>(1 + rng() % 100);
            for (std::size_t t = 0; t < n; ++t) table[k].push_back({t, w[t] / sum});
        }
        const Mdp m(space, ActionSpace::single({"a", "b"}), table);
        for (StateIndex s = 0; s < n; ++s)
            for (ActionIndex a = 0; a < 2; ++a) {
                double sum = 0;
                for (const auto& o : m.outcomes(s, a)) sum += o.probability;
                EXPECT_TRUE(sum == 0.0 || std::abs(sum - 1.0) <= kProbabilityTolerance);
            }
    }
}

TEST(Run, Safety) {
    const SafetyProp phi(std::function<bool(StateIndex)>([](StateIndex s) { return s != 3; }));
    EXPECT_TRUE(is_safe_run(agshield::Run{{0, 1, 2}, {0, 0}}, phi));
    EXPECT_FALSE(is_safe_run(agshield::Run{{0, 1, 3}, {0, 0}}, phi));
    EXPECT_THROW((void)is_safe_run(agshield::Run{}, phi), InvalidArgument);
    EXPECT_TRUE(is_run_of(agshield::Run{{0, 3, 3}, {3, 1}}, toy()));
    EXPECT_FALSE(is_run_of(agshield::Run{{0, 3}, {0}}, toy()));
}

TEST(Strategy, Invariants) {
    const Lts t = toy();
    std::vector<ActionMask> m(4, 1);
    EXPECT_NO_THROW(Strategy(t, m));
    m[0] = 0;
    EXPECT_THROW(Strategy(t, m), InvalidArgument);
    m[0] = 1;
    m[1] = 2; // (z,p) is not enabled at (0,1)
    EXPECT_THROW(Strategy(t, m), InvalidArgument);
}

TEST(Strategy, CompositionExamples) {
    StateSpace space({VarDomain::integer("x", 0, 2)});
    LtsBuilder b(space, ActionSpace::single({"a", "b", "c"}));
    for (StateIndex s = 0; s < 3; ++s)
        for (ActionIndex a = 0; a < 3; ++a) b.add(s, a, s);
    const Lts t = b.build();
    const Strategy ab(t, {3, 3, 3});
    const Strategy bc(t, {6, 6, 6});
    const auto r = compose_strategies(ab, bc);
    ASSERT_TRUE(std::holds_alternative<Strategy>(r));
    EXPECT_EQ(std::get<Strategy>(r).masks(), (std::vector<ActionMask>{2, 2, 2}));
    const Strategy a_only(t, {3, 1, 1});
    const Strategy b_only(t, {3, 2, 2});
    const auto bad = compose_strategies(a_only, b_only);
    ASSERT_TRUE(std::holds_alternative<IncompatibleAt>(bad));
    EXPECT_EQ(std::get<IncompatibleAt>(bad).state, 1U);
}

TEST(StrategyProperty, CompositionIsCommutativeAssociativeIdempotent) {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 200; ++round) {
        const Lts t = testing::random_lts(rng, 2 + rng() % 6, 2);
        const Strategy x = testing::random_strategy(rng, t);
        const Strategy y = testing::random_strategy(rng, t);
        const Strategy z = testing::random_strategy(rng, t);
        EXPECT_EQ(std::get<Strategy>(compose_strategies(x, x)), x);
        const auto xy = compose_strategies(x, y);
        const auto yx = compose_strategies(y, x);
        ASSERT_EQ(xy.index(), yx.index());
        if (xy.index() == 0) {
            EXPECT_EQ(std::get<Strategy>(xy), std::get<Strategy>(yx));
        } else {
            EXPECT_EQ(std::get<IncompatibleAt>(xy).state, std::get<IncompatibleAt>(yx).state);
        }
        const auto yz = compose_strategies(y, z);
        if (xy.index() == 0 && yz.index() == 0) {
            const auto l = compose_strategies(std::get<Strategy>(xy), z);
            const auto r = compose_strategies(x, std::get<Strategy>(yz));
            ASSERT_EQ(l.index(), r.index());
            if (l.index() == 0) {
                EXPECT_EQ(std::get<Strategy>(l), std::get<Strategy>(r));
            }
        }
    }
}

TEST(Shielding, IdentityShieldKeepsSystem) {
    const Lts t = toy();
    EXPECT_TRUE(same_transitions(shielded_lts(t, Strategy::permissive(t)), t));
    const Mdp m = coin();
    const Mdp sm = shielded_mdp(m, Strategy::permissive(induced_lts(m)));
    for (StateIndex s = 0; s < 2; ++s)
        for (ActionIndex a = 0; a < 2; ++a) EXPECT_EQ(sm.outcomes(s, a), m.outcomes(s, a));
}

TEST(Shielding, ForbiddingJointPushAtOrigin) {
    const Lts t = toy();
    const Lts s = shielded_lts(t, [](StateIndex st) -> ActionMask { return st == 0 ? 0x7 : 0xF; });
    EXPECT_EQ(enabled_actions(s, 0).size(), 3U);
    EXPECT_TRUE(s.successors(0, 3).empty());
    EXPECT_TRUE(is_restriction_of(s, t));
}

TEST(Shielding, MdpDistributionsUntouched) {
    const Mdp m = coin();
    const Mdp s = shielded_mdp(m, [](StateIndex) -> ActionMask { return 1; });
    EXPECT_TRUE(s.outcomes(0, 1).empty());
    EXPECT_EQ(s.outcomes(0, 0), m.outcomes(0, 0));
}

TEST(Shielding, DeadEndCreatedWhenNothingEnabledSurvives) {
    const Lts t = toy();
    EXPECT_THROW((void)shielded_lts(t, [](StateIndex st) -> ActionMask { return st == 1 ? 0x2 : 0xF; }), DeadEndCreated);
}

TEST(ShieldingProperty, MonotoneAndComposable) {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 200; ++round) {
        const Lts t = testing::random_lts(rng, 2 + rng() % 7, 2);
        const Strategy x = testing::random_strategy(rng, t);
        const Strategy y = testing::random_strategy(rng, t);
        const Lts tx = shielded_lts(t, x);
        EXPECT_TRUE(is_restriction_of(tx, t));
        const auto xy = compose_strategies(x, y);
        if (xy.index() != 0) continue;
        const Lts twice = shielded_lts(tx, y.as_allow_fn());
        EXPECT_TRUE(same_transitions(twice, shielded_lts(t, std::get<Strategy>(xy))));
    }
}

TEST(ModelCheck, ToyUnshieldedReachesCorner) {
    const Lts t = toy();
    Bitset phi(4, true);
    phi.reset(3);
    const StateIndex init[] = {0};
    const auto v = check_models(t, SafetyProp(phi), init);
    ASSERT_TRUE(std::holds_alternative<Counterexample>(v));
    const agshield::Run& r = std::get<Counterexample>(v).run;
    EXPECT_EQ(r.states, (std::vector<StateIndex>{0, 3}));
    EXPECT_EQ(r.actions, std::vector<ActionIndex>{3});
    EXPECT_TRUE(is_run_of(r, t));
}

TEST(ModelCheck, ToyShieldedToWaitIsSafe) {
    const Lts t = shielded_lts(toy(), [](StateIndex st) -> ActionMask { return st == 3 ? 0xF : 0x1; });
    Bitset phi(4, true);
    phi.reset(3);
    const StateIndex init[] = {0};
    EXPECT_TRUE(is_safe(check_models(t, SafetyProp(phi), init)));
}

TEST(ModelCheck, EverythingIsSafe) {
    std::mt19937_64 rng(5);
    const Lts t = testing::random_lts(rng, 8);
    EXPECT_TRUE(is_safe(check_models(t, SafetyProp::everything(), Bitset(8, true))));
}

TEST(ModelCheck, CounterexampleIsShortest) {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 100; ++round) {
        const std::size_t n = 3 + rng() % 8;
        const Lts t = testing::random_lts(rng, n, 1, 0.15);
        const Bitset phi = testing::random_set(rng, n, 0.8);
        if (!phi.test(0)) continue;
        // Independent BFS distances.
        std::vector<int> dist(n, -1);
        dist[0] = 0;
        std::vector<StateIndex> frontier{0};
        while (!frontier.empty()) {
            std::vector<StateIndex> next;
            for (auto s : frontier)
                for (ActionIndex a = 0; a < t.action_count(); ++a)
                    for (auto u : t.successors(s, a))
                        if (dist[u] < 0 && phi.test(s)) {
                            dist[u] = dist[s] + 1;
                            next.push_back(u);
                        }
            frontier = std::move(next);
        }
        int best = -1;
        for (StateIndex s = 0; s < n; ++s)
            if (!phi.test(s) && dist[s] >= 0 && (best < 0 || dist[s] < best)) best = dist[s];
        const StateIndex init[] = {0};
        const auto v = check_models(t, SafetyProp(phi), init);
        if (best < 0) {
            EXPECT_TRUE(is_safe(v));
        } else {
            ASSERT_FALSE(is_safe(v));
            const agshield::Run& r = std::get<Counterexample>(v).run;
            EXPECT_EQ(static_cast<int>(r.actions.size()), best);
            EXPECT_TRUE(is_run_of(r, t));
            EXPECT_FALSE(phi.test(r.states.back()));
        }
    }
}

TEST(ModelCheckProperty, SafetyIsInheritedByRestrictions) {
    std::mt19937_64 rng(23);
    int checked = 0;
    for (int round = 0; round < 300; ++round) {
        const std::size_t n = 3 + rng() % 8;
        const Lts big = testing::random_lts(rng, n, 1, 0.2);
        const Lts small = testing::random_restriction(rng, big);
        ASSERT_TRUE(is_restriction_of(small, big));
        const SafetyProp phi(testing::random_set(rng, n, 0.85));
        const Bitset init = testing::random_set(rng, n, 0.3);
        if (is_safe(check_models(big, phi, init))) {
            ++checked;
            EXPECT_TRUE(is_safe(check_models(small, phi, init)));
        }
    }
    EXPECT_GT(checked, 10);
}

} // namespace
} // namespace agshield
