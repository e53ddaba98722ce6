#pragma once

#include "agshield/projection/projection.hpp"
#include "agshield/synthesis/game.hpp"

#include <memory>
#include <optional>
#include <variant>

namespace agshield {

/// 𝒮ᵢ = 𝒮*[prj̄ᵢ(φᵢ)] on agent i's local LTS; φᵢ given over the global space.
[[nodiscard]] inline Shield synthesize_local_shield(const Lts& local, const Bitset& phi_global, const Projection& prj,
                                                    std::size_t agent = 0) {
    return most_permissive_shield(local, SafetyProp(restricted_project_set(prj, phi_global)), agent);
}

/// Same, with the restricted projection already expressed over the observation space.
[[nodiscard]] inline Shield synthesize_local_shield(const Lts& local, const SafetyProp& phi_local, std::size_t agent = 0) {
    return most_permissive_shield(local, phi_local, agent);
}

/// ext(𝒮ᵢ)(s) = {a ∈ Act | a[i] ∈ 𝒮ᵢ(prjᵢ(s))}, evaluated on demand.
class ExtendedShield {
public:
    ExtendedShield(std::shared_ptr<const Shield> local, Projection prj, std::size_t agent, ActionSpace joint)
        : local_(std::move(local)), prj_(std::move(prj)), agent_(agent), joint_(std::move(joint)) {
        if (!local_->space().same_shape(prj_.target())) throw InvalidArgument("extended shield: projection does not match shield");
        if (local_->action_count() != joint_.local_size(agent_))
            throw InvalidArgument("extended shield: local action count mismatch");
    }

    [[nodiscard]] ActionMask local_allowed(StateIndex s) const { return local_->allowed(prj_(s)); }

    [[nodiscard]] bool allows(StateIndex s, ActionIndex joint_action) const {
        return mask_has(local_allowed(s), joint_.component(joint_action, agent_));
    }

    /// Joint-action mask (joint action space of at most 64 actions).
    [[nodiscard]] ActionMask allowed(StateIndex s) const {
        if (joint_.joint_size() > kMaxMaskActions) throw TooLarge("joint action mask", joint_.joint_size(), kMaxMaskActions);
        const ActionMask local = local_allowed(s);
        ActionMask m = 0;
        for (ActionIndex a = 0; a < joint_.joint_size(); ++a)
            if (mask_has(local, joint_.component(a, agent_))) m |= action_bit(a);
        return m;
    }

    [[nodiscard]] const Shield& local() const { return *local_; }
    [[nodiscard]] const Projection& projection() const { return prj_; }
    [[nodiscard]] std::size_t agent() const { return agent_; }

private:
    std::shared_ptr<const Shield> local_;
    Projection prj_;
    std::size_t agent_;
    ActionSpace joint_;
};

[[nodiscard]] inline ExtendedShield extend_shield(std::shared_ptr<const Shield> local, std::size_t agent, Projection prj,
                                                  ActionSpace joint) {
    return {std::move(local), std::move(prj), agent, std::move(joint)};
}

/// The composition ⊓ᵢ ext(𝒮ᵢ) does not exist at `state`: agent `agent` (0-based) allows nothing there.
struct CompatibilityFailure {
    StateIndex state;
    std::size_t agent;
};

/// ⊓ᵢ ext(𝒮ᵢ), evaluated lazily. Each factor constrains only its own action component, so the
/// composition is nonempty at s iff every 𝒮ᵢ(prjᵢ(s)) is.
class DistributedShield {
public:
    DistributedShield(std::vector<ExtendedShield> parts, ActionSpace joint)
        : parts_(std::move(parts)), joint_(std::move(joint)) {
        if (parts_.size() != joint_.agent_count()) throw InvalidArgument("distributed shield: one shield per agent required");
    }

    [[nodiscard]] std::size_t agent_count() const { return parts_.size(); }
    [[nodiscard]] const ActionSpace& actions() const { return joint_; }
    [[nodiscard]] const ExtendedShield& part(std::size_t i) const { return parts_[i]; }

    /// Agent i's allowed local actions at global state s.
    [[nodiscard]] ActionMask local_allowed(std::size_t i, StateIndex s) const { return parts_[i].local_allowed(s); }

    [[nodiscard]] bool allows(StateIndex s, ActionIndex joint_action) const {
        for (const auto& p : parts_)
            if (!p.allows(s, joint_action)) return false;
        return true;
    }

    [[nodiscard]] ActionMask allowed(StateIndex s) const {
        if (joint_.joint_size() > kMaxMaskActions) throw TooLarge("joint action mask", joint_.joint_size(), kMaxMaskActions);
        ActionMask m = full_mask(joint_.joint_size());
        for (const auto& p : parts_) m &= p.allowed(s);
        return m;
    }

    [[nodiscard]] std::optional<CompatibilityFailure> incompatible_at(StateIndex s) const {
        for (std::size_t i = 0; i < parts_.size(); ++i)
            if (parts_[i].local_allowed(s) == 0) return CompatibilityFailure{s, i};
        return std::nullopt;
    }

    /// Winning for every agent: prjᵢ(s) is winning in each local shield.
    [[nodiscard]] bool winning(StateIndex s) const { return !incompatible_at(s).has_value(); }

    [[nodiscard]] AllowFn as_allow_fn() const {
        return [self = *this](StateIndex s) { return self.allowed(s); };
    }

private:
    std::vector<ExtendedShield> parts_;
    ActionSpace joint_;
};

/// Builds ⊓ᵢ ext(𝒮ᵢ). With `check`, every state in it is verified and the lowest failing
/// state is reported.
[[nodiscard]] inline std::variant<DistributedShield, CompatibilityFailure> compose_distributed(
    const std::vector<std::shared_ptr<const Shield>>& shields, const std::vector<Projection>& prjs, const ActionSpace& joint,
    const Bitset* check = nullptr) {
    if (shields.size() != prjs.size()) throw InvalidArgument("compose_distributed: shields and projections differ in number");
    std::vector<ExtendedShield> parts;
    for (std::size_t i = 0; i < shields.size(); ++i) parts.push_back(extend_shield(shields[i], i, prjs[i], joint));
    DistributedShield d(std::move(parts), joint);
    if (check) {
        std::optional<CompatibilityFailure> failure;
        check->for_each([&](std::size_t s) {
            if (!failure) failure = d.incompatible_at(s);
        });
        if (failure) return *failure;
    }
    return d;
}

} // namespace agshield
