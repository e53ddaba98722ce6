#pragma once

#include "agshield/learning/mdp_ops.hpp"
#include "agshield/sim/simulator.hpp"

namespace agshield {

/// Simulates an explicit AgentMdp: remaining agent k observes through its original
/// projection and pays costs[k].
class MdpSimModel {
public:
    using state_type = StateIndex;

    MdpSimModel(AgentMdp m, std::vector<AgentCostFn> costs, StateIndex initial, std::size_t length,
                SafetyProp safe = SafetyProp::everything())
        : m_(std::move(m)), costs_(std::move(costs)), initial_(initial), length_(length), safe_(std::move(safe)) {
        if (costs_.size() != m_.agents.size()) throw InvalidArgument("mdp sim: one cost function per remaining agent");
    }

    [[nodiscard]] const AgentMdp& mdp() const { return m_; }
    [[nodiscard]] std::size_t agent_count() const { return m_.agents.size(); }
    [[nodiscard]] std::size_t local_action_count(std::size_t k) const { return m_.mdp.actions().local_size(k); }
    [[nodiscard]] const StateSpace& observation_space(std::size_t k) const { return m_.projections[m_.agents[k]].target(); }
    [[nodiscard]] std::size_t episode_length() const { return length_; }
    [[nodiscard]] state_type initial_state() const { return initial_; }
    [[nodiscard]] ObservationIndex observe(state_type s, std::size_t k) const { return m_.observe(s, m_.agents[k]); }
    [[nodiscard]] bool safe(state_type s) const { return safe_.contains(s); }

    state_type step(state_type s, std::span<const ActionIndex> actions, SplitMix64& rng, std::span<double> costs) const {
        for (std::size_t k = 0; k < costs_.size(); ++k) costs[k] = costs_[k](observe(s, k), actions[k]);
        const auto out = m_.mdp.outcomes(s, m_.mdp.actions().encode(actions));
        if (out.empty()) throw InvalidArgument("mdp sim: action disabled at state " + std::to_string(s));
        std::vector<double> w;
        for (const auto& o : out) w.push_back(o.probability);
        return out[rng.categorical(w)].target;
    }

    [[nodiscard]] StateSpace global_space() const { return m_.mdp.space(); }
    [[nodiscard]] StateIndex global_index(state_type s) const { return s; }

private:
    AgentMdp m_;
    std::vector<AgentCostFn> costs_;
    StateIndex initial_;
    std::size_t length_;
    SafetyProp safe_;
};

} // namespace agshield
