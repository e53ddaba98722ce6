#pragma once

#include "agshield/sim/rng.hpp"
#include "agshield/synthesis/shield.hpp"

#include <atomic>
#include <concepts>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

namespace agshield {

/// A stochastic n-agent environment stepped by joint local actions.
/// step() fills one cost per agent (the cost of the pre-step observation and chosen action)
/// and draws the environment's randomness from `rng` after the agents have chosen.
template <typename M>
concept SimModel = requires(const M& m, const typename M::state_type& s, std::span<const ActionIndex> a, SplitMix64& rng,
                            std::span<double> costs, std::size_t i) {
    { m.agent_count() } -> std::convertible_to<std::size_t>;
    { m.local_action_count(i) } -> std::convertible_to<std::size_t>;
    { m.observation_space(i) } -> std::convertible_to<const StateSpace&>;
    { m.episode_length() } -> std::convertible_to<std::size_t>;
    { m.initial_state() } -> std::same_as<typename M::state_type>;
    { m.observe(s, i) } -> std::convertible_to<ObservationIndex>;
    { m.safe(s) } -> std::convertible_to<bool>;
    { m.step(s, a, rng, costs) } -> std::same_as<typename M::state_type>;
};

/// Chooses a local action from an observation and the shield-allowed set.
using AgentPolicy = std::function<ActionIndex(ObservationIndex, ActionMask, SplitMix64&)>;

/// Local shields, one per agent; nullptr leaves that agent unshielded.
using ShieldSet = std::vector<std::shared_ptr<const Shield>>;

inline AgentPolicy random_policy() {
    return [](ObservationIndex, ActionMask allowed, SplitMix64& rng) { return rng.pick_bit(allowed); };
}

/// Always `a` (ignores the shield; meant for unshielded baselines).
inline AgentPolicy constant_policy(ActionIndex a) {
    return [a](ObservationIndex, ActionMask, SplitMix64&) { return a; };
}

/// Deterministic lookup table over observations.
inline AgentPolicy table_policy(std::shared_ptr<const std::vector<ActionIndex>> table) {
    return [t = std::move(table)](ObservationIndex o, ActionMask, SplitMix64&) { return (*t)[o]; };
}

/// Samples from a probabilistic Policy over observations.
inline AgentPolicy stochastic_policy(std::shared_ptr<const Policy> p) {
    return [p = std::move(p)](ObservationIndex o, ActionMask, SplitMix64& rng) {
        std::vector<double> w(p->action_count());
        for (ActionIndex a = 0; a < w.size(); ++a) w[a] = (*p)(o, a);
        return static_cast<ActionIndex>(rng.categorical(w));
    };
}

struct EpisodeConfig {
    std::size_t length = 0;  ///< 0 takes the model's episode length
    std::uint64_t master_seed = 0;
    bool record_trace = false;
};

struct EpisodeResult {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    bool safe = true;
    std::size_t unsafe_steps = 0;  ///< visited states outside the property, initial state included
    double total_cost = 0.0;
    std::vector<double> agent_cost;
    std::vector<std::vector<ObservationIndex>> trace;  ///< per visited state, one observation per agent
    std::vector<std::vector<ActionIndex>> actions;     ///< per step, when tracing
};

struct EvalStats {
    std::size_t episodes = 0;
    double mean_cost = 0.0;
    double min_cost = 0.0;
    double max_cost = 0.0;
    double fraction_safe = 0.0;
    std::size_t unsafe_steps = 0;
    std::vector<double> mean_agent_cost;
    std::vector<EpisodeResult> results;
};

/// Allowed mask of agent i at observation o (full set when unshielded).
template <SimModel M>
[[nodiscard]] ActionMask allowed_actions(const M& m, const ShieldSet& shields, std::size_t i, ObservationIndex o) {
    if (i < shields.size() && shields[i]) return shields[i]->allowed(o);
    return full_mask(m.local_action_count(i));
}

/// Throws InitialNotWinning for the first agent whose shield does not win the initial state.
template <SimModel M>
void check_initial(const M& m, const ShieldSet& shields) {
    const auto s = m.initial_state();
    for (std::size_t i = 0; i < m.agent_count(); ++i)
        if (i < shields.size() && shields[i] && !shields[i]->winning(m.observe(s, i))) throw InitialNotWinning(i + 1);
}

/// Picks the joint action of one step: chooser(state, allowed masks, rng, out actions).
template <typename M>
using JointChooser = std::function<void(const typename M::state_type&, std::span<const ActionMask>, SplitMix64&,
                                        std::span<ActionIndex>)>;

/// One episode with seed episode_seed(master, index). Violations are recorded but never end
/// the episode. Every chosen action must lie in the agent's allowed set.
template <SimModel M>
EpisodeResult run_episode(const M& m, const JointChooser<M>& choose, const ShieldSet& shields, const EpisodeConfig& cfg,
                          std::size_t index) {
    check_initial(m, shields);
    const std::size_t n = m.agent_count();
    EpisodeResult r;
    r.index = index;
    r.seed = episode_seed(cfg.master_seed, index);
    r.agent_cost.assign(n, 0.0);
    SplitMix64 rng(r.seed);

    auto s = m.initial_state();
    std::vector<ActionMask> allowed(n);
    std::vector<ActionIndex> act(n);
    std::vector<double> costs(n);
    std::vector<ObservationIndex> obs(n);
    auto visit = [&] {
        if (!m.safe(s)) {
            r.safe = false;
            ++r.unsafe_steps;
        }
        if (cfg.record_trace) {
            for (std::size_t i = 0; i < n; ++i) obs[i] = m.observe(s, i);
            r.trace.push_back(obs);
        }
    };
    visit();
    const std::size_t length = cfg.length ? cfg.length : m.episode_length();
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const ObservationIndex o = m.observe(s, i);
            allowed[i] = allowed_actions(m, shields, i, o);
            if (allowed[i] == 0) throw NoAllowedAction(i + 1, o);
        }
        choose(s, allowed, rng, act);
        for (std::size_t i = 0; i < n; ++i)
            if (!mask_has(allowed[i], act[i])) throw NoAllowedAction(i + 1, m.observe(s, i));
        if (cfg.record_trace) r.actions.push_back(act);
        s = m.step(s, act, rng, costs);
        for (std::size_t i = 0; i < n; ++i) {
            r.agent_cost[i] += costs[i];
            r.total_cost += costs[i];
        }
        ++r.steps;
        visit();
    }
    return r;
}

/// Per-agent policies receive their own observation and allowed mask.
template <SimModel M>
EpisodeResult run_episode(const M& m, const std::vector<AgentPolicy>& policies, const ShieldSet& shields,
                          const EpisodeConfig& cfg, std::size_t index) {
    if (policies.size() != m.agent_count()) throw InvalidArgument("simulator: one policy per agent required");
    JointChooser<M> choose = [&](const typename M::state_type& s, std::span<const ActionMask> allowed, SplitMix64& rng,
                                 std::span<ActionIndex> out) {
        for (std::size_t i = 0; i < policies.size(); ++i) out[i] = policies[i](m.observe(s, i), allowed[i], rng);
    };
    return run_episode(m, choose, shields, cfg, index);
}

/// Runs episodes 0..count-1 on `jobs` threads and aggregates in index order.
template <SimModel M>
EvalStats evaluate(const M& m, const JointChooser<M>& choose, const ShieldSet& shields, std::size_t count,
                   std::uint64_t master_seed, unsigned jobs = 1) {
    if (count == 0) throw InvalidArgument("evaluate: need at least one episode");
    check_initial(m, shields);
    EvalStats st;
    st.results.resize(count);
    EpisodeConfig cfg;
    cfg.master_seed = master_seed;

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < count;) {
            try {
                st.results[k] = run_episode(m, choose, shields, cfg, k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    st.episodes = count;
    st.mean_agent_cost.assign(m.agent_count(), 0.0);
    st.min_cost = st.results.front().total_cost;
    st.max_cost = st.min_cost;
    std::size_t safe = 0;
    double sum = 0.0;
    for (const auto& r : st.results) {
        sum += r.total_cost;
        st.min_cost = std::min(st.min_cost, r.total_cost);
        st.max_cost = std::max(st.max_cost, r.total_cost);
        safe += r.safe;
        st.unsafe_steps += r.unsafe_steps;
        for (std::size_t i = 0; i < r.agent_cost.size(); ++i) st.mean_agent_cost[i] += r.agent_cost[i];
    }
    st.mean_cost = sum / static_cast<double>(count);
    for (auto& c : st.mean_agent_cost) c /= static_cast<double>(count);
    st.fraction_safe = static_cast<double>(safe) / static_cast<double>(count);
    return st;
}

template <SimModel M>
EvalStats evaluate(const M& m, const std::vector<AgentPolicy>& policies, const ShieldSet& shields, std::size_t count,
                   std::uint64_t master_seed, unsigned jobs = 1) {
    if (policies.size() != m.agent_count()) throw InvalidArgument("evaluate: one policy per agent required");
    JointChooser<M> choose = [&](const typename M::state_type& s, std::span<const ActionMask> allowed, SplitMix64& rng,
                                 std::span<ActionIndex> out) {
        for (std::size_t i = 0; i < policies.size(); ++i) out[i] = policies[i](m.observe(s, i), allowed[i], rng);
    };
    return evaluate(m, choose, shields, count, master_seed, jobs);
}

inline std::string format_fixed(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

/// `episode,seed,steps,safe,total_cost,cost_agent_1,...`
inline void write_eval_csv(std::ostream& out, const EvalStats& st) {
    out << "episode,seed,steps,safe,total_cost";
    for (std::size_t i = 0; i < st.mean_agent_cost.size(); ++i) out << ",cost_agent_" << i + 1;
    out << '\n';
    for (const auto& r : st.results) {
        out << r.index << ',' << r.seed << ',' << r.steps << ',' << (r.safe ? 1 : 0) << ',' << format_fixed(r.total_cost);
        for (double c : r.agent_cost) out << ',' << format_fixed(c);
        out << '\n';
    }
}

} // namespace agshield
