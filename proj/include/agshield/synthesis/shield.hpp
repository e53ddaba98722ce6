#pragma once

#include "agshield/core/strategy.hpp"

#include <bit>

namespace agshield {

/// Per-state allowed-action masks over a state or observation space. A state is winning
/// iff its mask is nonempty; non-winning states carry the empty mask.
class Shield {
public:
    Shield() = default;
    Shield(StateSpace space, ActionSpace actions, std::vector<ActionMask> allow)
        : space_(std::move(space)), actions_(std::move(actions)), allow_(std::move(allow)) {
        if (allow_.size() != space_.size()) throw InvalidArgument("shield: one mask per state required");
        if (actions_.joint_size() > kMaxMaskActions) throw TooLarge("shield actions", actions_.joint_size(), kMaxMaskActions);
        const ActionMask full = full_mask(actions_.joint_size());
        for (auto m : allow_)
            if ((m & ~full) != 0) throw InvalidArgument("shield: mask names an action outside the action space");
    }

    [[nodiscard]] const StateSpace& space() const { return space_; }
    [[nodiscard]] const ActionSpace& actions() const { return actions_; }
    [[nodiscard]] StateIndex state_count() const { return allow_.size(); }
    [[nodiscard]] std::size_t action_count() const { return actions_.joint_size(); }

    [[nodiscard]] ActionMask allowed(StateIndex s) const { return allow_[s]; }
    [[nodiscard]] bool allows(StateIndex s, ActionIndex a) const { return mask_has(allow_[s], a); }
    [[nodiscard]] bool winning(StateIndex s) const { return allow_[s] != 0; }
    [[nodiscard]] const std::vector<ActionMask>& masks() const { return allow_; }

    [[nodiscard]] Bitset winning_set() const {
        Bitset b(allow_.size());
        for (StateIndex s = 0; s < allow_.size(); ++s)
            if (allow_[s] != 0) b.set(s);
        return b;
    }

    [[nodiscard]] double winning_fraction() const {
        return allow_.empty() ? 0.0 : static_cast<double>(winning_set().count()) / static_cast<double>(allow_.size());
    }

    /// Total number of allowed (state, action) pairs.
    [[nodiscard]] std::uint64_t size() const {
        std::uint64_t n = 0;
        for (auto m : allow_) n += static_cast<std::uint64_t>(std::popcount(m));
        return n;
    }

    [[nodiscard]] AllowFn as_allow_fn() const {
        return [m = allow_](StateIndex s) { return m[s]; };
    }

    friend bool operator==(const Shield& a, const Shield& b) {
        return a.space_ == b.space_ && a.actions_.joint_size() == b.actions_.joint_size() && a.allow_ == b.allow_;
    }

private:
    StateSpace space_;
    ActionSpace actions_;
    std::vector<ActionMask> allow_;
};

} // namespace agshield
