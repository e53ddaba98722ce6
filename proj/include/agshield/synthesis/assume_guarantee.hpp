#pragma once

#include "agshield/synthesis/distributed.hpp"

#include <chrono>
#include <map>
#include <string>

namespace agshield {

/// What the compositional backend needs from a case study. Agents are 0-based here and
/// listed in guarantee order: agent i may assume the guarantees of agents 0..i-1.
class CompositionalModel {
public:
    virtual ~CompositionalModel() = default;

    [[nodiscard]] virtual std::size_t agent_count() const = 0;
    [[nodiscard]] virtual Projection projection(std::size_t i) const = 0;
    /// Agents with equal keys share one local game and one shield.
    [[nodiscard]] virtual std::string symmetry_key(std::size_t i, bool assume) const = 0;
    /// Agent i's local LTS over Oᵢ, pruned by the earlier guarantees when `assume` is set.
    [[nodiscard]] virtual Lts local_lts(std::size_t i, bool assume) const = 0;
    /// prj̄ᵢ(φᵢ) over Oᵢ.
    [[nodiscard]] virtual SafetyProp local_guarantee(std::size_t i) const = 0;
    /// Observation of the initial state for agent i.
    [[nodiscard]] virtual ObservationIndex initial_observation(std::size_t i) const = 0;
};

struct AgentSynthesisStats {
    std::string key;
    double winning_fraction = 0.0;
    std::uint64_t shield_size = 0;
    double seconds = 0.0;
    bool reused = false;
};

struct SynthesisReport {
    std::vector<AgentSynthesisStats> agents;
    /// Every local shield is winning at the initial observation, so the distributed shield exists there.
    bool compatible = false;
};

struct SynthesisResult {
    std::vector<std::shared_ptr<const Shield>> shields; ///< one per agent, shared across equal keys
    SynthesisReport report;

    /// Distinct shields in first-use order, with their keys.
    [[nodiscard]] std::vector<std::pair<std::string, std::shared_ptr<const Shield>>> variants() const {
        std::vector<std::pair<std::string, std::shared_ptr<const Shield>>> out;
        for (std::size_t i = 0; i < shields.size(); ++i)
            if (!report.agents[i].reused) out.emplace_back(report.agents[i].key, shields[i]);
        return out;
    }
};

/// Synthesizes local shields in guarantee order on assumption-pruned local games. Throws
/// EmptyWinningSet naming (1-based) the first agent whose local game has no winning state.
[[nodiscard]] inline SynthesisResult assume_guarantee_synthesize(const CompositionalModel& model, bool assume = true) {
    using clock = std::chrono::steady_clock;
    SynthesisResult out;
    std::map<std::string, std::shared_ptr<const Shield>> cache;
    for (std::size_t i = 0; i < model.agent_count(); ++i) {
        AgentSynthesisStats stats;
        stats.key = model.symmetry_key(i, assume);
        const auto start = clock::now();
        std::shared_ptr<const Shield> shield;
        if (auto it = cache.find(stats.key); it != cache.end()) {
            shield = it->second;
            stats.reused = true;
        } else {
            shield = std::make_shared<const Shield>(
                synthesize_local_shield(model.local_lts(i, assume), model.local_guarantee(i), i + 1));
            cache.emplace(stats.key, shield);
        }
        stats.seconds = std::chrono::duration<double>(clock::now() - start).count();
        stats.winning_fraction = shield->winning_fraction();
        stats.shield_size = shield->size();
        out.shields.push_back(std::move(shield));
        out.report.agents.push_back(std::move(stats));
    }
    out.report.compatible = true;
    for (std::size_t i = 0; i < model.agent_count(); ++i)
        out.report.compatible = out.report.compatible && out.shields[i]->winning(model.initial_observation(i));
    return out;
}

/// ⋂ of a list of properties (φ = S for the empty list).
[[nodiscard]] inline SafetyProp intersect(std::vector<SafetyProp> props) {
    if (props.empty()) return SafetyProp::everything();
    return SafetyProp(std::function<bool(StateIndex)>([ps = std::move(props)](StateIndex s) {
        for (const auto& p : ps)
            if (!p.contains(s)) return false;
        return true;
    }));
}

/// Reference pipeline on the global LTS: for each agent i, shield T with 𝒮*[⋂_{j<i} φ_j],
/// project to Oᵢ and synthesize 𝒮*[prj̄ᵢ(φᵢ)] there.
[[nodiscard]] inline std::vector<Shield> oracle_global_pipeline(const Lts& global, const std::vector<Projection>& prjs,
                                                              const std::vector<SafetyProp>& guarantees) {
    if (prjs.size() != guarantees.size() || prjs.size() != global.actions().agent_count())
        throw InvalidArgument("oracle pipeline: one projection and one guarantee per agent required");
    const StateIndex n = global.state_count();
    if (n > kEnumerationLimit) throw TooLarge("oracle pipeline", n, kEnumerationLimit);

    std::vector<Shield> out;
    for (std::size_t i = 0; i < prjs.size(); ++i) {
        Lts local;
        if (i == 0) {
            local = project_lts(global, prjs[i], i);
        } else {
            const SafetyProp assumed = intersect({guarantees.begin(), guarantees.begin() + static_cast<std::ptrdiff_t>(i)});
            const GameSolution g = solve_safety_game(global, assumed);
            if (g.winning.none()) throw EmptyWinningSet(i + 1);
            local = project_lts(shielded_lts(global, [&g](StateIndex s) { return g.allow[s]; }), prjs[i], i);
        }
        const Bitset phi = restricted_project_set(prjs[i], guarantees[i]);
        out.push_back(most_permissive_shield(local, SafetyProp(phi), i + 1));
    }
    return out;
}

} // namespace agshield
