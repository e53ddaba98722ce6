#pragma once

#include "agshield/core/lts.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

namespace agshield {

inline constexpr double kProbabilityTolerance = 1e-9;

struct Outcome {
    StateIndex target;
    double probability;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Markov decision process (S, Act, P). Per (s, a) the outcome list holds only positive
/// probabilities summing to 0 (action disabled) or 1.
class Mdp {
public:
    using Generator = std::function<void(StateIndex, ActionIndex, std::vector<Outcome>&)>;

    Mdp() = default;

    Mdp(StateSpace space, ActionSpace actions, std::vector<std::vector<Outcome>> table,
        DeadEnds dead_ends = DeadEnds::reject) {
        auto impl = std::make_shared<Impl>();
        impl->space = std::move(space);
        impl->actions = std::move(actions);
        impl->table = std::move(table);
        impl->is_explicit = true;
        impl_ = std::move(impl);
        if (impl_->table.size() != impl_->space.size() * impl_->actions.joint_size())
            throw InvalidArgument("explicit MDP: table has wrong size");
        validate(dead_ends);
    }

    static Mdp from_generator(StateSpace space, ActionSpace actions, Generator gen,
                              DeadEnds dead_ends = DeadEnds::reject) {
        Mdp m;
        auto impl = std::make_shared<Impl>();
        impl->space = std::move(space);
        impl->actions = std::move(actions);
        impl->generator = std::move(gen);
        impl->is_explicit = false;
        m.impl_ = std::move(impl);
        if (m.impl_->space.indexable() && m.impl_->space.size() <= kEnumerationLimit) m.validate(dead_ends);
        return m;
    }

    [[nodiscard]] const StateSpace& space() const { return impl_->space; }
    [[nodiscard]] const ActionSpace& actions() const { return impl_->actions; }
    [[nodiscard]] StateIndex state_count() const { return impl_->space.size(); }
    [[nodiscard]] std::size_t action_count() const { return impl_->actions.joint_size(); }
    [[nodiscard]] bool is_explicit() const { return impl_->is_explicit; }

    void outcomes(StateIndex s, ActionIndex a, std::vector<Outcome>& out) const {
        out.clear();
        if (impl_->is_explicit) {
            const auto& row = impl_->table[s * action_count() + a];
            out.assign(row.begin(), row.end());
            return;
        }
        impl_->generator(s, a, out);
    }

    [[nodiscard]] std::vector<Outcome> outcomes(StateIndex s, ActionIndex a) const {
        std::vector<Outcome> out;
        outcomes(s, a, out);
        return out;
    }

    /// P(s, a, t), summing duplicate entries.
    [[nodiscard]] double probability(StateIndex s, ActionIndex a, StateIndex t) const {
        double p = 0.0;
        for (const auto& o : outcomes(s, a))
            if (o.target == t) p += o.probability;
        return p;
    }

    [[nodiscard]] ActionMask enabled_mask(StateIndex s) const {
        if (action_count() > kMaxMaskActions) throw TooLarge("action mask", action_count(), kMaxMaskActions);
        ActionMask m = 0;
        std::vector<Outcome> buf;
        for (ActionIndex a = 0; a < action_count(); ++a) {
            outcomes(s, a, buf);
            if (!buf.empty()) m |= action_bit(a);
        }
        return m;
    }

private:
    void validate(DeadEnds dead_ends) const {
        std::vector<Outcome> buf;
        for (StateIndex s = 0; s < state_count(); ++s) {
            bool some_full = false;
            for (ActionIndex a = 0; a < action_count(); ++a) {
                outcomes(s, a, buf);
                double sum = 0.0;
                for (const auto& o : buf) {
                    if (!(o.probability > 0.0))
                        throw InvalidArgument("MDP: non-positive probability listed at state " + std::to_string(s));
                    if (o.target >= state_count()) throw InvalidArgument("MDP: successor out of range");
                    sum += o.probability;
                }
                if (buf.empty()) continue;
                if (std::abs(sum - 1.0) > kProbabilityTolerance)
                    throw InvalidArgument("MDP: probabilities of state " + std::to_string(s) + ", action " +
                                          std::to_string(a) + " sum to " + std::to_string(sum));
                some_full = true;
            }
            if (!some_full && dead_ends == DeadEnds::reject)
                throw InvalidArgument("MDP: state " + std::to_string(s) + " has no enabled action");
        }
    }

    struct Impl {
        StateSpace space;
        ActionSpace actions;
        bool is_explicit = true;
        std::vector<std::vector<Outcome>> table;
        Generator generator;
    };
    std::shared_ptr<const Impl> impl_;
};

/// E(s) of an MDP: actions with a positive-probability successor.
[[nodiscard]] inline std::vector<ActionIndex> enabled_actions(const Mdp& m, StateIndex s) {
    std::vector<ActionIndex> out;
    std::vector<Outcome> buf;
    for (ActionIndex a = 0; a < m.action_count(); ++a) {
        m.outcomes(s, a, buf);
        if (!buf.empty()) out.push_back(a);
    }
    return out;
}

/// Possibility abstraction of an MDP: (s, a, s') ∈ T iff P(s, a, s') > 0.
[[nodiscard]] inline Lts induced_lts(const Mdp& m, DeadEnds dead_ends = DeadEnds::reject) {
    if (m.is_explicit()) {
        LtsBuilder b(m.space(), m.actions());
        std::vector<Outcome> buf;
        for (StateIndex s = 0; s < m.state_count(); ++s)
            for (ActionIndex a = 0; a < m.action_count(); ++a) {
                m.outcomes(s, a, buf);
                for (const auto& o : buf) b.add(s, a, o.target);
            }
        return b.build(dead_ends);
    }
    return Lts::from_generator(
        m.space(), m.actions(),
        [m](StateIndex s, ActionIndex a, std::vector<StateIndex>& out) {
            thread_local std::vector<Outcome> buf;
            m.outcomes(s, a, buf);
            for (const auto& o : buf) out.push_back(o.target);
        },
        dead_ends);
}

} // namespace agshield
