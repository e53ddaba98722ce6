#pragma once

#include "agshield/synthesis/assume_guarantee.hpp"

namespace agshield::toy {

/// Two agents over S = {0,1}², Act = {z,p}². From (0,0) each agent either stays (z) or
/// pushes its own component to 1 (p); (1,1) is the unsafe corner and absorbing. The
/// boundary states (0,1) and (1,0) only idle.
inline Lts corner_lts() {
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
    for (ActionIndex a = 0; a < actions.joint_size(); ++a) b.add(st(1, 1), a, st(1, 1));
    return b.build();
}

inline std::vector<Projection> corner_projections() {
    const StateSpace space = corner_lts().space();
    return {Projection(space, {0}), Projection(space, {1})};
}

/// φ₁ = φ₂ = S ∖ {(1,1)}
inline Bitset corner_safe() {
    Bitset b(4, true);
    b.reset(3);
    return b;
}

inline std::vector<SafetyProp> corner_guarantees() { return {SafetyProp(corner_safe()), SafetyProp(corner_safe())}; }

/// Local shields computed on the unpruned projections, against either the restricted or the
/// standard projection of φᵢ.
inline std::vector<std::shared_ptr<const Shield>> corner_local_shields(bool restricted) {
    const Lts t = corner_lts();
    const auto prjs = corner_projections();
    std::vector<std::shared_ptr<const Shield>> out;
    for (std::size_t i = 0; i < prjs.size(); ++i) {
        const Lts local = project_lts(t, prjs[i], i);
        const Bitset phi = restricted ? restricted_project_set(prjs[i], corner_safe()) : project_set(prjs[i], corner_safe());
        out.push_back(std::make_shared<const Shield>(most_permissive_shield(local, SafetyProp(phi), i + 1)));
    }
    return out;
}

/// Compositional backend for the toy: local games are projections of the raw LTS (the
/// system is tiny, so no hand-written abstraction is needed).
class CornerModel final : public CompositionalModel {
public:
    [[nodiscard]] std::size_t agent_count() const override { return 2; }
    [[nodiscard]] Projection projection(std::size_t i) const override { return corner_projections()[i]; }
    [[nodiscard]] std::string symmetry_key(std::size_t i, bool) const override { return "agent" + std::to_string(i + 1); }
    [[nodiscard]] Lts local_lts(std::size_t i, bool) const override { return project_lts(corner_lts(), projection(i), i); }
    [[nodiscard]] SafetyProp local_guarantee(std::size_t i) const override {
        return SafetyProp(restricted_project_set(projection(i), corner_safe()));
    }
    [[nodiscard]] ObservationIndex initial_observation(std::size_t) const override { return 0; }
};

/// Two-agent chain MDP over x ∈ {0,1,2} for exact learning checks. Agent 2 drives x forward
/// ("move" succeeds with 0.7, "stay" still slips with 0.2); agent 1 only pays, depending on x.
inline Mdp chain_mdp() {
    StateSpace space({VarDomain::integer("x", 0, 2)});
    ActionSpace actions({{"l", "r"}, {"stay", "move"}});
    std::vector<std::vector<Outcome>> table(space.size() * actions.joint_size());
    for (StateIndex x = 0; x < 3; ++x)
        for (ActionIndex a1 = 0; a1 < 2; ++a1)
            for (ActionIndex a2 = 0; a2 < 2; ++a2) {
                const ActionIndex v[] = {a1, a2};
                auto& row = table[x * actions.joint_size() + actions.encode(v)];
                const double up = a2 == 1 ? 0.7 : 0.2;
                if (x == 2)
                    row = {{2, 1.0}};
                else
                    row = {{x, 1.0 - up}, {x + 1, up}};
            }
    return {space, actions, std::move(table)};
}

inline std::vector<Projection> chain_projections() {
    const StateSpace space({VarDomain::integer("x", 0, 2)});
    return {Projection::identity(space), Projection::identity(space)};
}

inline constexpr std::size_t kChainHorizon = 4;

/// c₁(x, a₁) and c₂(x, a₂)
inline double chain_cost(std::size_t agent, ObservationIndex x, ActionIndex a) {
    static constexpr double c1[3][2] = {{2.0, 3.0}, {3.0, 1.0}, {0.0, 0.5}};
    return agent == 0 ? c1[x][a] : (a == 0 ? 1.0 : 3.0);
}

/// Agent 1 depends on agent 2 (0-based edge (0, 1)).
inline std::vector<std::pair<std::size_t, std::size_t>> chain_dependencies() { return {{0, 1}}; }

} // namespace agshield::toy
