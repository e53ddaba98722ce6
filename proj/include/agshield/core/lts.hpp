#pragma once

#include "agshield/core/bitset.hpp"
#include "agshield/core/error.hpp"
#include "agshield/core/state_space.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace agshield {

enum class DeadEnds { reject, allow };

/// Labeled transition system (S, Act, T). Either an explicit successor table (CSR over
/// (state, joint action)) or a deterministic generator evaluated on demand. Immutable;
/// copies share storage.
class Lts {
public:
    using Generator = std::function<void(StateIndex, ActionIndex, std::vector<StateIndex>&)>;

    Lts() = default;

    /// Explicit table: successors of (s, a) are targets[offsets[s*A+a] .. offsets[s*A+a+1]).
    Lts(StateSpace space, ActionSpace actions, std::vector<std::uint64_t> offsets, std::vector<StateIndex> targets,
        DeadEnds dead_ends = DeadEnds::reject) {
        auto impl = std::make_shared<Impl>();
        impl->space = std::move(space);
        impl->actions = std::move(actions);
        impl->offsets = std::move(offsets);
        impl->targets = std::move(targets);
        impl->is_explicit = true;
        impl_ = std::move(impl);
        const auto expected = impl_->space.size() * impl_->actions.joint_size() + 1;
        if (impl_->offsets.size() != expected) throw InvalidArgument("explicit LTS: offset table has wrong size");
        if (dead_ends == DeadEnds::reject) require_no_dead_ends();
    }

    static Lts from_generator(StateSpace space, ActionSpace actions, Generator gen,
                              DeadEnds dead_ends = DeadEnds::reject) {
        Lts t;
        auto impl = std::make_shared<Impl>();
        impl->space = std::move(space);
        impl->actions = std::move(actions);
        impl->generator = std::move(gen);
        impl->is_explicit = false;
        t.impl_ = std::move(impl);
        if (dead_ends == DeadEnds::reject && t.impl_->space.indexable() && t.impl_->space.size() <= kEnumerationLimit)
            t.require_no_dead_ends();
        return t;
    }

    [[nodiscard]] const StateSpace& space() const { return impl_->space; }
    [[nodiscard]] const ActionSpace& actions() const { return impl_->actions; }
    [[nodiscard]] StateIndex state_count() const { return impl_->space.size(); }
    [[nodiscard]] std::size_t action_count() const { return impl_->actions.joint_size(); }
    [[nodiscard]] bool is_explicit() const { return impl_->is_explicit; }

    /// Clears `out` and fills it with the sorted, duplicate-free successors of (s, a).
    void successors(StateIndex s, ActionIndex a, std::vector<StateIndex>& out) const {
        out.clear();
        if (impl_->is_explicit) {
            const auto k = s * action_count() + a;
            out.assign(impl_->targets.begin() + static_cast<std::ptrdiff_t>(impl_->offsets[k]),
                       impl_->targets.begin() + static_cast<std::ptrdiff_t>(impl_->offsets[k + 1]));
            return;
        }
        impl_->generator(s, a, out);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }

    [[nodiscard]] std::vector<StateIndex> successors(StateIndex s, ActionIndex a) const {
        std::vector<StateIndex> out;
        successors(s, a, out);
        return out;
    }

    [[nodiscard]] bool has_transition(StateIndex s, ActionIndex a, StateIndex t) const {
        const auto succ = successors(s, a);
        return std::binary_search(succ.begin(), succ.end(), t);
    }

    /// Number of (s, a, s') triples; explicit systems only.
    [[nodiscard]] std::uint64_t transition_count() const {
        if (!impl_->is_explicit) throw InvalidArgument("transition_count needs an explicit LTS");
        return impl_->targets.size();
    }

    /// Enabled actions as a mask (requires |Act| <= 64).
    [[nodiscard]] ActionMask enabled_mask(StateIndex s) const {
        if (action_count() > kMaxMaskActions) throw TooLarge("action mask", action_count(), kMaxMaskActions);
        ActionMask m = 0;
        std::vector<StateIndex> buf;
        for (ActionIndex a = 0; a < action_count(); ++a) {
            successors(s, a, buf);
            if (!buf.empty()) m |= action_bit(a);
        }
        return m;
    }

private:
    void require_no_dead_ends() const {
        std::vector<StateIndex> buf;
        for (StateIndex s = 0; s < state_count(); ++s) {
            bool any = false;
            for (ActionIndex a = 0; a < action_count() && !any; ++a) {
                successors(s, a, buf);
                any = !buf.empty();
            }
            if (!any) throw InvalidArgument("LTS has a dead end at state " + std::to_string(s));
        }
    }

    struct Impl {
        StateSpace space;
        ActionSpace actions;
        bool is_explicit = true;
        std::vector<std::uint64_t> offsets;
        std::vector<StateIndex> targets;
        Generator generator;
    };
    std::shared_ptr<const Impl> impl_;

    friend class LtsBuilder;
};

/// Collects transitions in any order and produces an explicit Lts.
class LtsBuilder {
public:
    LtsBuilder(StateSpace space, ActionSpace actions)
        : space_(std::move(space)), actions_(std::move(actions)),
          buckets_(space_.size() * actions_.joint_size()) {}

    LtsBuilder& add(StateIndex s, ActionIndex a, StateIndex t) {
        buckets_[s * actions_.joint_size() + a].push_back(t);
        return *this;
    }

    /// Adds a transition given coordinate vectors and per-agent actions.
    LtsBuilder& add(const State& s, std::span<const ActionIndex> a, const State& t) {
        return add(space_.encode(s), actions_.encode(a), space_.encode(t));
    }

    [[nodiscard]] Lts build(DeadEnds dead_ends = DeadEnds::reject) {
        std::vector<std::uint64_t> offsets(buckets_.size() + 1, 0);
        std::vector<StateIndex> targets;
        for (std::size_t k = 0; k < buckets_.size(); ++k) {
            auto& b = buckets_[k];
            std::sort(b.begin(), b.end());
            b.erase(std::unique(b.begin(), b.end()), b.end());
            offsets[k] = targets.size();
            targets.insert(targets.end(), b.begin(), b.end());
        }
        offsets[buckets_.size()] = targets.size();
        return {space_, actions_, std::move(offsets), std::move(targets), dead_ends};
    }

private:
    StateSpace space_;
    ActionSpace actions_;
    std::vector<std::vector<StateIndex>> buckets_;
};

/// E(s): actions with at least one successor.
[[nodiscard]] inline std::vector<ActionIndex> enabled_actions(const Lts& t, StateIndex s) {
    std::vector<ActionIndex> out;
    std::vector<StateIndex> buf;
    for (ActionIndex a = 0; a < t.action_count(); ++a) {
        t.successors(s, a, buf);
        if (!buf.empty()) out.push_back(a);
    }
    return out;
}

/// T ⪯ T': every transition of `sub` is a transition of `super` (same spaces).
[[nodiscard]] inline bool is_restriction_of(const Lts& sub, const Lts& super) {
    if (!(sub.space() == super.space()) || !(sub.actions() == super.actions())) return false;
    std::vector<StateIndex> a_succ;
    std::vector<StateIndex> b_succ;
    for (StateIndex s = 0; s < sub.state_count(); ++s)
        for (ActionIndex a = 0; a < sub.action_count(); ++a) {
            sub.successors(s, a, a_succ);
            super.successors(s, a, b_succ);
            if (!std::includes(b_succ.begin(), b_succ.end(), a_succ.begin(), a_succ.end())) return false;
        }
    return true;
}

/// Same transition relation (both enumerable).
[[nodiscard]] inline bool same_transitions(const Lts& x, const Lts& y) {
    return is_restriction_of(x, y) && is_restriction_of(y, x);
}

} // namespace agshield
