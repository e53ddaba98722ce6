#pragma once

#include "agshield/synthesis/shield.hpp"

namespace agshield {

struct GameSolution {
    Bitset winning;
    std::vector<ActionMask> allow; ///< most permissive choice on winning states, 0 elsewhere
};

/// Solves the safety game (T, φ): the losing set is the least fixpoint
/// U₀ = S∖φ, U_{m+1} = U_m ∪ {s | every a ∈ E(s) has a successor in U_m}, computed backwards
/// over reversed edges with one "still good" counter per state. Dead ends are losing.
[[nodiscard]] inline GameSolution solve_safety_game(const Lts& t, const SafetyProp& phi) {
    const StateIndex n = t.state_count();
    if (n > kEnumerationLimit) throw TooLarge("safety game", n, kEnumerationLimit);
    const std::size_t A = t.action_count();
    if (A > kMaxMaskActions) throw TooLarge("safety game actions", A, kMaxMaskActions);

    std::vector<ActionMask> enabled(n, 0);
    std::vector<std::uint64_t> offsets(n + 1, 0);
    std::vector<StateIndex> succ;
    for (StateIndex s = 0; s < n; ++s)
        for (ActionIndex a = 0; a < A; ++a) {
            t.successors(s, a, succ);
            if (!succ.empty()) enabled[s] |= action_bit(a);
            for (auto u : succ) ++offsets[u + 1];
        }
    for (StateIndex s = 0; s < n; ++s) offsets[s + 1] += offsets[s];

    // Predecessor pairs (s, a) packed as s * A + a.
    std::vector<std::uint32_t> preds(offsets[n]);
    {
        std::vector<std::uint64_t> fill(offsets.begin(), offsets.end() - 1);
        for (StateIndex s = 0; s < n; ++s)
            for (ActionIndex a = 0; a < A; ++a) {
                if (!mask_has(enabled[s], a)) continue;
                t.successors(s, a, succ);
                for (auto u : succ) preds[fill[u]++] = static_cast<std::uint32_t>(s * A + a);
            }
    }

    std::vector<std::uint8_t> good(n);
    Bitset bad(n * A);
    Bitset losing(n);
    std::vector<StateIndex> work;
    for (StateIndex s = 0; s < n; ++s) {
        good[s] = static_cast<std::uint8_t>(std::popcount(enabled[s]));
        if (good[s] == 0 || !phi.contains(s)) {
            losing.set(s);
            work.push_back(s);
        }
    }
    while (!work.empty()) {
        const StateIndex u = work.back();
        work.pop_back();
        for (std::uint64_t k = offsets[u]; k < offsets[u + 1]; ++k) {
            const std::uint32_t sa = preds[k];
            if (bad.test(sa)) continue;
            bad.set(sa);
            const StateIndex s = sa / A;
            if (--good[s] == 0 && !losing.test(s)) {
                losing.set(s);
                work.push_back(s);
            }
        }
    }

    GameSolution out{losing.complement(), std::vector<ActionMask>(n, 0)};
    out.winning.for_each([&](std::size_t s) {
        ActionMask m = enabled[s];
        for (ActionIndex a = 0; a < A; ++a)
            if (bad.test(s * A + a)) m &= ~action_bit(a);
        out.allow[s] = m;
    });
    return out;
}

/// W[φ]: states from which some strategy keeps every outcome inside φ.
[[nodiscard]] inline Bitset winning_states(const Lts& t, const SafetyProp& phi) {
    return solve_safety_game(t, phi).winning;
}

/// 𝒮*[φ]: on winning s, every enabled action whose successors are all winning; ∅ elsewhere.
/// `agent` (1-based, 0 for none) is reported by EmptyWinningSet.
[[nodiscard]] inline Shield most_permissive_shield(const Lts& t, const SafetyProp& phi, std::size_t agent = 0) {
    GameSolution g = solve_safety_game(t, phi);
    if (g.winning.none()) throw EmptyWinningSet(agent);
    return {t.space(), t.actions(), std::move(g.allow)};
}

} // namespace agshield
