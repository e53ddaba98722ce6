#include "agshield/agshield.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <unordered_set>

namespace agshield {
namespace {

// Values from an independent reference implementation of SplitMix64.
TEST(Rng, GoldenEpisodeSeeds) {
    EXPECT_EQ(episode_seed(0, 0), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(episode_seed(0, 1), 0x06c45d188009454fULL);
    EXPECT_EQ(episode_seed(42, 0), 0x28efe333b266f103ULL);
    EXPECT_EQ(episode_seed(42, 7), 0xcc868f8d9bd23f76ULL);
    EXPECT_EQ(episode_seed(0xDEADBEEFCAFEBABEULL, 123456), 0x9ea308d58b81f9e5ULL);
}

TEST(Rng, GoldenStream) {
    SplitMix64 r(1);
    EXPECT_EQ(r.next(), 0x910a2dec89025cc1ULL);
    EXPECT_EQ(r.next(), 0xbeeb8da1658eec67ULL);
    EXPECT_EQ(r.next(), 0xf893a2eefb32555eULL);
    SplitMix64 u(1);
    EXPECT_DOUBLE_EQ(u.uniform(), 0.5665615751722809);
}

TEST(Rng, NoSeedCollisionsOverAMillionIndices) {
    for (std::uint64_t master : {0ULL, 0x123456789ULL}) {
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(1 << 21);
        for (std::uint64_t i = 0; i < 1'000'000; ++i) ASSERT_TRUE(seen.insert(episode_seed(master, i)).second) << i;
    }
}

TEST(Rng, CategoricalUsesCumulativeStrictLess) {
    // u * total < cumulative picks the bucket; zero weights are skipped
    const double w[] = {0.0, 1.0, 0.0, 3.0};
    SplitMix64 a(5), b(5);
    for (int k = 0; k < 1000; ++k) {
        const double u = b.uniform() * 4.0;
        const std::size_t want = u < 1.0 ? 1 : 3;
        ASSERT_EQ(a.categorical(w), want);
    }
    EXPECT_THROW((void)a.categorical(std::vector<double>{0.0, 0.0}), InvalidArgument);
}

TEST(Rng, PickBitStaysInMask) {
    SplitMix64 r(2);
    std::array<int, 64> hits{};
    for (int k = 0; k < 3000; ++k) ++hits[r.pick_bit(0b101001)];
    EXPECT_GT(hits[0], 0);
    EXPECT_GT(hits[3], 0);
    EXPECT_GT(hits[5], 0);
    EXPECT_EQ(hits[0] + hits[3] + hits[5], 3000);
    EXPECT_THROW(r.pick_bit(0), InvalidArgument);
}

// One state, one agent with two actions: cost 1 for action 0, 5 for action 1.
struct CounterModel {
    using state_type = int;
    StateSpace space{std::vector<VarDomain>{VarDomain::integer("s", 0, 0)}};
    [[nodiscard]] std::size_t agent_count() const { return 1; }
    [[nodiscard]] std::size_t local_action_count(std::size_t) const { return 2; }
    [[nodiscard]] const StateSpace& observation_space(std::size_t) const { return space; }
    [[nodiscard]] std::size_t episode_length() const { return 100; }
    [[nodiscard]] int initial_state() const { return 0; }
    [[nodiscard]] ObservationIndex observe(int, std::size_t) const { return 0; }
    [[nodiscard]] bool safe(int) const { return true; }
    int step(int s, std::span<const ActionIndex> a, SplitMix64&, std::span<double> c) const {
        c[0] = a[0] == 0 ? 1.0 : 5.0;
        return s;
    }
};
static_assert(SimModel<CounterModel>);

TEST(Simulator, DeterministicModelTotals) {
    const CounterModel m;
    const auto r = run_episode(m, std::vector<AgentPolicy>{constant_policy(0)}, {}, EpisodeConfig{}, 0);
    EXPECT_EQ(r.steps, 100U);
    EXPECT_DOUBLE_EQ(r.total_cost, 100.0);
    EXPECT_TRUE(r.safe);
    const auto st = evaluate(m, std::vector<AgentPolicy>{constant_policy(0)}, {}, 20, 7);
    EXPECT_DOUBLE_EQ(st.min_cost, st.mean_cost);
    EXPECT_DOUBLE_EQ(st.max_cost, st.mean_cost);
    EXPECT_DOUBLE_EQ(st.fraction_safe, 1.0);
}

TEST(Simulator, ShieldRestrictsAndIsEnforced) {
    const CounterModel m;
    auto sh = std::make_shared<const Shield>(m.space, ActionSpace::single({"cheap", "dear"}), std::vector<ActionMask>{0b10});
    const auto r = run_episode(m, std::vector<AgentPolicy>{random_policy()}, {sh}, EpisodeConfig{}, 0);
    EXPECT_DOUBLE_EQ(r.total_cost, 500.0);
    EXPECT_THROW((void)run_episode(m, std::vector<AgentPolicy>{constant_policy(0)}, {sh}, EpisodeConfig{}, 0), NoAllowedAction);
    auto none = std::make_shared<const Shield>(m.space, ActionSpace::single({"cheap", "dear"}), std::vector<ActionMask>{0});
    EXPECT_THROW((void)run_episode(m, std::vector<AgentPolicy>{random_policy()}, {none}, EpisodeConfig{}, 0), InitialNotWinning);
}

platoon::PlatoonParams small_platoon() {
    platoon::PlatoonParams p;
    p.n = 4;
    return p;
}

ShieldSet platoon_shields(const platoon::PlatoonParams& p) {
    const auto r = assume_guarantee_synthesize(platoon::PlatoonModel(p));
    return {r.shields.begin(), r.shields.end()};
}

TEST(Simulator, ShieldedRandomPlatoonIsSafe) {
    const auto p = small_platoon();
    const platoon::PlatoonSim sim(p);
    const auto shields = platoon_shields(p);
    EpisodeConfig cfg;
    cfg.master_seed = 99;
    cfg.record_trace = true;
    for (std::size_t e = 0; e < 50; ++e) {
        const auto r = run_episode(sim, std::vector<AgentPolicy>(3, random_policy()), shields, cfg, e);
        ASSERT_TRUE(r.safe) << e;
        ASSERT_EQ(r.trace.size(), 101U);
        double sum = 0.0;
        for (double c : r.agent_cost) sum += c;
        EXPECT_NEAR(sum, r.total_cost, 1e-9);
    }
}

TEST(Simulator, UnshieldedAggressivePlatoonCrashes) {
    const auto p = small_platoon();
    const platoon::PlatoonSim sim(p);
    for (std::size_t e = 0; e < 20; ++e) {
        const auto r = run_episode(sim, std::vector<AgentPolicy>(3, constant_policy(2)), {}, EpisodeConfig{}, e);
        EXPECT_FALSE(r.safe) << e;
        EXPECT_EQ(r.steps, 100U);
    }
}

TEST(Simulator, EvaluationIsReproducibleAcrossThreadCounts) {
    const auto p = small_platoon();
    const platoon::PlatoonSim sim(p);
    const auto shields = platoon_shields(p);
    const std::vector<AgentPolicy> pol(3, random_policy());
    std::ostringstream a, b, c;
    write_eval_csv(a, evaluate(sim, pol, shields, 64, 5, 1));
    write_eval_csv(b, evaluate(sim, pol, shields, 64, 5, 4));
    write_eval_csv(c, evaluate(sim, pol, shields, 64, 6, 4));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "episode,seed,steps,safe,total_cost,cost_agent_1,cost_agent_2,cost_agent_3");
    EXPECT_EQ(a.str().find('\r'), std::string::npos);
}

TEST(Simulator, CsvRowFormat) {
    EvalStats st;
    st.mean_agent_cost = {0.0, 0.0};
    EpisodeResult r;
    r.index = 3;
    r.seed = 17;
    r.steps = 100;
    r.safe = false;
    r.total_cost = 2.5;
    r.agent_cost = {1.0, 1.5};
    st.results.push_back(r);
    std::ostringstream out;
    write_eval_csv(out, st);
    EXPECT_EQ(out.str(), "episode,seed,steps,safe,total_cost,cost_agent_1,cost_agent_2\n3,17,100,0,2.500000,1.000000,1.500000\n");
}

TEST(Simulator, ShieldedPlantIsSafe) {
    const plant::PlantParams p;
    const plant::PlantSim sim(p);
    const auto r = assume_guarantee_synthesize(plant::PlantModel(p));
    const ShieldSet shields(r.shields.begin(), r.shields.end());
    const auto st = evaluate(sim, std::vector<AgentPolicy>(10, random_policy()), shields, 100, 3, 4);
    EXPECT_DOUBLE_EQ(st.fraction_safe, 1.0);
    EXPECT_GE(st.mean_cost, st.min_cost);
    EXPECT_LE(st.mean_cost, st.max_cost);
}

} // namespace
} // namespace agshield
