#pragma once

#include "agshield/learning/dependency.hpp"
#include "agshield/projection/projection.hpp"
#include "agshield/synthesis/shield.hpp"

#include <map>

namespace agshield {

/// An n-agent MDP during cascading: the remaining agents (original 0-based ids, in action
/// order) and the projections of all original agents.
struct AgentMdp {
    Mdp mdp;
    std::vector<std::size_t> agents;
    std::vector<Projection> projections;

    AgentMdp(Mdp m, std::vector<Projection> prjs) : mdp(std::move(m)), projections(std::move(prjs)) {
        if (projections.size() != mdp.actions().agent_count())
            throw InvalidArgument("agent MDP: one projection per agent required");
        for (std::size_t i = 0; i < projections.size(); ++i) agents.push_back(i);
    }
    AgentMdp(Mdp m, std::vector<std::size_t> ids, std::vector<Projection> prjs)
        : mdp(std::move(m)), agents(std::move(ids)), projections(std::move(prjs)) {}

    /// Position of original agent `id` among the remaining agents.
    [[nodiscard]] std::size_t position(std::size_t id) const {
        const auto it = std::find(agents.begin(), agents.end(), id);
        if (it == agents.end()) throw InvalidArgument("agent " + std::to_string(id + 1) + " is not in this MDP");
        return static_cast<std::size_t>(it - agents.begin());
    }
    [[nodiscard]] ObservationIndex observe(StateIndex s, std::size_t id) const { return projections[id](s); }
};

namespace detail {

inline void require_explicit_size(const Mdp& m, const char* what) {
    const StateIndex n = m.state_count();
    if (!m.space().indexable() || n * m.action_count() > kEnumerationLimit) throw TooLarge(what, n * m.action_count(), kEnumerationLimit);
}

inline void add_outcome(std::vector<Outcome>& row, StateIndex t, double p) {
    for (auto& o : row)
        if (o.target == t) {
            o.probability += p;
            return;
        }
    row.push_back({t, p});
}

} // namespace detail

/// M_π: agent `id` follows π over its observations and disappears from the action space:
/// P′(s, a′, s′) = Σ_{aᵢ} π(prjᵢ(s), aᵢ) · P(s, insert(a′, i, aᵢ), s′).
/// Instantiating the last agent leaves a single placeholder action.
inline AgentMdp instantiate(const AgentMdp& m, std::size_t id, const Policy& pi) {
    detail::require_explicit_size(m.mdp, "instantiate");
    const std::size_t k = m.position(id);
    const ActionSpace& joint = m.mdp.actions();
    if (pi.state_count() != m.projections[id].target().size() || pi.action_count() != joint.local_size(k))
        throw InvalidArgument("instantiate: policy does not match the agent");
    const bool last = joint.agent_count() == 1;
    const ActionSpace rest = last ? ActionSpace::single({"-"}) : joint.without(k);

    std::vector<std::vector<Outcome>> table(m.mdp.state_count() * rest.joint_size());
    std::vector<Outcome> buf;
    for (StateIndex s = 0; s < m.mdp.state_count(); ++s) {
        const ObservationIndex o = m.observe(s, id);
        for (ActionIndex r = 0; r < rest.joint_size(); ++r) {
            auto& row = table[s * rest.joint_size() + r];
            for (ActionIndex a = 0; a < joint.local_size(k); ++a) {
                const double w = pi(o, a);
                if (w == 0.0) continue;
                m.mdp.outcomes(s, last ? a : joint.insert(r, k, a), buf);
                for (const auto& out : buf) detail::add_outcome(row, out.target, w * out.probability);
            }
            // an action of the others that π can never combine with stays disabled
            double sum = 0.0;
            for (const auto& out : row) sum += out.probability;
            if (sum > 0.0 && std::abs(sum - 1.0) > kProbabilityTolerance) row.clear();
        }
    }
    auto ids = m.agents;
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(k));
    return {Mdp(m.mdp.space(), rest, std::move(table), DeadEnds::allow), std::move(ids), m.projections};
}

/// Uniform policy over the allowed actions of agent `id` (all actions where unshielded).
inline Policy uniform_allowed(const AgentMdp& m, std::size_t id, const std::shared_ptr<const Shield>& shield) {
    const std::size_t actions = m.mdp.actions().local_size(m.position(id));
    const auto obs = m.projections[id].target().size();
    std::vector<ActionMask> allowed(obs, full_mask(actions));
    if (shield) allowed = shield->masks();
    return Policy::uniform(allowed, actions);
}

/// sandbox(M′, i): every other remaining agent follows the uniform policy over its shield.
/// `shields` is indexed by original agent id (entries may be null).
inline AgentMdp sandbox(const AgentMdp& m, std::size_t id, const std::vector<std::shared_ptr<const Shield>>& shields) {
    (void)m.position(id);
    AgentMdp out = m;
    for (auto other : m.agents) {
        if (other == id) continue;
        const auto sh = other < shields.size() ? shields[other] : nullptr;
        out = instantiate(out, other, uniform_allowed(out, other, sh));
    }
    return out;
}

/// A local run o₀ a₀ o₁ a₁ … o_L flattened into one vector.
using LocalRun = std::vector<std::uint64_t>;
using LocalRunDistribution = std::map<LocalRun, double>;

inline constexpr std::size_t kLocalRunLimit = 1000;

/// Exact distribution of agent `id`'s local runs of length L from `initial`, with every
/// remaining agent k following policies[k] (aligned with m.agents).
inline LocalRunDistribution local_run_distribution(const AgentMdp& m, const std::vector<Policy>& policies, std::size_t id,
                                                   std::size_t length, StateIndex initial) {
    if (policies.size() != m.agents.size()) throw InvalidArgument("local_run_distribution: one policy per remaining agent");
    const std::size_t k = m.position(id);
    const ActionSpace& joint = m.mdp.actions();
    std::map<std::pair<StateIndex, LocalRun>, double> front{{{initial, LocalRun{m.observe(initial, id)}}, 1.0}};
    std::vector<Outcome> buf;
    for (std::size_t t = 0; t < length; ++t) {
        std::map<std::pair<StateIndex, LocalRun>, double> next;
        for (const auto& [key, p] : front) {
            const StateIndex s = key.first;
            for (ActionIndex a = 0; a < joint.joint_size(); ++a) {
                double w = p;
                for (std::size_t j = 0; j < m.agents.size() && w > 0.0; ++j)
                    w *= policies[j](m.observe(s, m.agents[j]), joint.component(a, j));
                if (w == 0.0) continue;
                m.mdp.outcomes(s, a, buf);
                for (const auto& o : buf) {
                    LocalRun run = key.second;
                    run.push_back(joint.component(a, k));
                    run.push_back(m.observe(o.target, id));
                    next[{o.target, std::move(run)}] += w * o.probability;
                }
            }
        }
        front = std::move(next);
        std::set<LocalRun> runs;
        for (const auto& [key, p] : front) runs.insert(key.second);
        if (runs.size() > kLocalRunLimit) throw TooLarge("local_run_distribution", runs.size(), kLocalRunLimit);
    }
    LocalRunDistribution out;
    for (const auto& [key, p] : front) out[key.second] += p;
    return out;
}

/// Largest absolute probability difference over the union of both supports.
[[nodiscard]] inline double distribution_distance(const LocalRunDistribution& a, const LocalRunDistribution& b) {
    double d = 0.0;
    for (const auto& [run, p] : a) {
        const auto it = b.find(run);
        d = std::max(d, std::abs(p - (it == b.end() ? 0.0 : it->second)));
    }
    for (const auto& [run, p] : b)
        if (!a.count(run)) d = std::max(d, p);
    return d;
}

/// cᵢ(observation, local action)
using AgentCostFn = std::function<double(ObservationIndex, ActionIndex)>;

/// Expected accumulated cost of every remaining agent over `length` steps from `initial`.
inline std::vector<double> expected_costs(const AgentMdp& m, const std::vector<Policy>& policies,
                                          const std::vector<AgentCostFn>& costs, std::size_t length, StateIndex initial) {
    if (policies.size() != m.agents.size() || costs.size() != m.agents.size())
        throw InvalidArgument("expected_costs: one policy and cost per remaining agent");
    detail::require_explicit_size(m.mdp, "expected_costs");
    const ActionSpace& joint = m.mdp.actions();
    std::vector<double> dist(m.mdp.state_count(), 0.0);
    dist[initial] = 1.0;
    std::vector<double> total(m.agents.size(), 0.0);
    std::vector<Outcome> buf;
    for (std::size_t t = 0; t < length; ++t) {
        std::vector<double> next(dist.size(), 0.0);
        for (StateIndex s = 0; s < dist.size(); ++s) {
            if (dist[s] == 0.0) continue;
            for (ActionIndex a = 0; a < joint.joint_size(); ++a) {
                double w = dist[s];
                for (std::size_t j = 0; j < m.agents.size() && w > 0.0; ++j)
                    w *= policies[j](m.observe(s, m.agents[j]), joint.component(a, j));
                if (w == 0.0) continue;
                for (std::size_t j = 0; j < m.agents.size(); ++j)
                    total[j] += w * costs[j](m.observe(s, m.agents[j]), joint.component(a, j));
                m.mdp.outcomes(s, a, buf);
                for (const auto& o : buf) next[o.target] += w * o.probability;
            }
        }
        dist = std::move(next);
    }
    return total;
}

/// Every deterministic policy of agent `id` restricted to its allowed actions, in
/// lexicographic order of the choice vector (observation 0 most significant).
inline std::vector<Policy> deterministic_policies(const AgentMdp& m, std::size_t id, const std::shared_ptr<const Shield>& shield,
                                                  std::size_t limit = 100000) {
    const std::size_t actions = m.mdp.actions().local_size(m.position(id));
    const auto obs = static_cast<std::size_t>(m.projections[id].target().size());
    std::vector<std::vector<ActionIndex>> choices(obs);
    double count = 1.0;
    for (std::size_t o = 0; o < obs; ++o) {
        const ActionMask allowed = shield ? shield->allowed(o) : full_mask(actions);
        for (ActionIndex a = 0; a < actions; ++a)
            if (mask_has(allowed, a)) choices[o].push_back(a);
        count *= std::max<std::size_t>(1, choices[o].size());
    }
    if (count > static_cast<double>(limit)) throw TooLarge("deterministic policy enumeration", static_cast<std::uint64_t>(count), limit);
    std::vector<Policy> out;
    std::vector<std::size_t> digit(obs, 0);
    for (;;) {
        std::vector<std::optional<ActionIndex>> pick(obs);
        for (std::size_t o = 0; o < obs; ++o)
            if (!choices[o].empty()) pick[o] = choices[o][digit[o]];
        out.push_back(Policy::deterministic(pick, actions));
        std::size_t o = obs;
        while (o-- > 0) {
            if (++digit[o] < std::max<std::size_t>(1, choices[o].size())) break;
            digit[o] = 0;
        }
        if (o == static_cast<std::size_t>(-1)) break;
    }
    return out;
}

/// Semantic dependency: agent i depends on j iff some pair of deterministic profiles that
/// differ only in j's policy gives i different local-run distributions (runs up to `length`).
inline DependencyGraph semantic_dependencies(const AgentMdp& m, const std::vector<std::shared_ptr<const Shield>>& shields,
                                             std::size_t length, StateIndex initial, double tolerance = 1e-12) {
    const std::size_t n = m.agents.size();
    std::vector<std::vector<Policy>> options(n);
    double profiles = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto id = m.agents[j];
        options[j] = deterministic_policies(m, id, id < shields.size() ? shields[id] : nullptr);
        profiles *= static_cast<double>(options[j].size());
    }
    if (profiles > 1e5) throw TooLarge("semantic dependency check", static_cast<std::uint64_t>(profiles), 100000);

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            bool found = false;
            std::vector<std::size_t> digit(n, 0);
            while (!found) {
                std::vector<Policy> base(n);
                for (std::size_t k = 0; k < n; ++k) base[k] = options[k][digit[k]];
                for (std::size_t L = 1; L <= length && !found; ++L) {
                    const auto ref = local_run_distribution(m, base, m.agents[i], L, initial);
                    for (std::size_t alt = digit[j] + 1; alt < options[j].size() && !found; ++alt) {
                        auto other = base;
                        other[j] = options[j][alt];
                        found = distribution_distance(ref, local_run_distribution(m, other, m.agents[i], L, initial)) > tolerance;
                    }
                }
                std::size_t k = n;
                while (k-- > 0) {
                    if (++digit[k] < options[k].size()) break;
                    digit[k] = 0;
                }
                if (k == static_cast<std::size_t>(-1)) break;
            }
            if (found) edges.emplace_back(m.agents[i], m.agents[j]);
        }
    return {m.projections.size(), std::move(edges)};
}

inline DependencyGraph build_dependency_graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& declared) {
    return {n, declared};
}

/// Declared graph, checked against the semantic definition on an enumerable MDP.
inline DependencyGraph build_dependency_graph(const AgentMdp& m, const std::vector<std::pair<std::size_t, std::size_t>>& declared,
                                              const std::vector<std::shared_ptr<const Shield>>& shields, std::size_t length,
                                              StateIndex initial) {
    DependencyGraph g(m.projections.size(), declared);
    const DependencyGraph semantic = semantic_dependencies(m, shields, length, initial);
    for (auto [i, j] : g.edges())
        if (!semantic.depends(i, j))
            throw DeclarationMismatch("declared dependency " + std::to_string(i + 1) + " -> " + std::to_string(j + 1) + " does not hold");
    for (auto [i, j] : semantic.edges())
        if (!g.depends(i, j))
            throw DeclarationMismatch("undeclared dependency " + std::to_string(i + 1) + " -> " + std::to_string(j + 1));
    return g;
}

} // namespace agshield
