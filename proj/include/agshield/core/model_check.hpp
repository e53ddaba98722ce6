#pragma once

#include "agshield/core/strategy.hpp"

#include <deque>
#include <limits>
#include <variant>

namespace agshield {

struct Safe {};

struct Counterexample {
    Run run; ///< shortest run from an initial state to a state outside φ
};

using Verdict = std::variant<Safe, Counterexample>;

[[nodiscard]] inline bool is_safe(const Verdict& v) { return std::holds_alternative<Safe>(v); }

/// T ⊨ φ from the given initial states: breadth-first reachability over every transition
/// (every strategy's outcomes). Returns a shortest counterexample when a state outside φ is reachable.
[[nodiscard]] inline Verdict check_models(const Lts& t, const SafetyProp& phi, const Bitset& initials) {
    const StateIndex n = t.state_count();
    if (n > kEnumerationLimit) throw TooLarge("check_models", n, kEnumerationLimit);
    if (initials.size() != n) throw InvalidArgument("check_models: initial set over a different space");

    constexpr StateIndex none = std::numeric_limits<StateIndex>::max();
    std::vector<StateIndex> parent(n, none);
    std::vector<ActionIndex> via(n, 0);
    Bitset seen(n);
    std::deque<StateIndex> queue;

    auto counterexample = [&](StateIndex bad) {
        Run r;
        for (StateIndex s = bad; s != none; s = parent[s]) {
            r.states.push_back(s);
            if (parent[s] != none) r.actions.push_back(via[s]);
        }
        std::reverse(r.states.begin(), r.states.end());
        std::reverse(r.actions.begin(), r.actions.end());
        return Counterexample{std::move(r)};
    };

    for (StateIndex s = 0; s < n; ++s) {
        if (!initials.test(s)) continue;
        if (!phi.contains(s)) return counterexample(s);
        seen.set(s);
        queue.push_back(s);
    }

    std::vector<StateIndex> succ;
    while (!queue.empty()) {
        const StateIndex s = queue.front();
        queue.pop_front();
        for (ActionIndex a = 0; a < t.action_count(); ++a) {
            t.successors(s, a, succ);
            for (StateIndex u : succ) {
                if (seen.test(u)) continue;
                seen.set(u);
                parent[u] = s;
                via[u] = a;
                if (!phi.contains(u)) return counterexample(u);
                queue.push_back(u);
            }
        }
    }
    return Safe{};
}

[[nodiscard]] inline Verdict check_models(const Lts& t, const SafetyProp& phi, std::span<const StateIndex> initials) {
    Bitset init(t.state_count());
    for (auto s : initials) init.set(s);
    return check_models(t, phi, init);
}

} // namespace agshield
