#pragma once

#include "agshield/core/mdp.hpp"

#include <bit>
#include <functional>
#include <optional>
#include <variant>

namespace agshield {

/// A set of states φ: a predicate, optionally materialized as a bitset that agrees with it.
class SafetyProp {
public:
    SafetyProp() = default;

    explicit SafetyProp(std::function<bool(StateIndex)> predicate) : predicate_(std::move(predicate)) {}

    explicit SafetyProp(Bitset bits) : bits_(std::move(bits)) {
        predicate_ = [b = *bits_](StateIndex s) { return b.test(s); };
    }

    /// φ = S
    static SafetyProp everything() {
        return SafetyProp([](StateIndex) { return true; });
    }

    [[nodiscard]] bool contains(StateIndex s) const { return bits_ ? bits_->test(s) : predicate_(s); }
    [[nodiscard]] bool operator()(StateIndex s) const { return contains(s); }

    [[nodiscard]] bool materialized() const { return bits_.has_value(); }

    [[nodiscard]] Bitset to_bitset(StateIndex state_count) const {
        if (bits_) return *bits_;
        if (state_count > kEnumerationLimit * 10) throw TooLarge("safety property", state_count, kEnumerationLimit * 10);
        Bitset b(state_count);
        for (StateIndex s = 0; s < state_count; ++s)
            if (predicate_(s)) b.set(s);
        return b;
    }

    /// Materializes the predicate over `state_count` states.
    [[nodiscard]] SafetyProp materialize(StateIndex state_count) const { return SafetyProp(to_bitset(state_count)); }

private:
    std::function<bool(StateIndex)> predicate_;
    std::optional<Bitset> bits_;
};

/// ρ = s0 a0 s1 a1 ... s_k
struct Run {
    std::vector<StateIndex> states;
    std::vector<ActionIndex> actions;

    friend bool operator==(const Run&, const Run&) = default;
};

[[nodiscard]] inline bool is_run_of(const Run& r, const Lts& t) {
    if (r.states.empty() || r.actions.size() + 1 != r.states.size()) return false;
    for (std::size_t k = 0; k < r.actions.size(); ++k)
        if (!t.has_transition(r.states[k], r.actions[k], r.states[k + 1])) return false;
    return true;
}

[[nodiscard]] inline bool is_safe_run(const Run& r, const SafetyProp& phi) {
    if (r.states.empty()) throw InvalidArgument("is_safe_run: empty run");
    for (auto s : r.states)
        if (!phi.contains(s)) return false;
    return true;
}

/// Allowed-action oracle over the states of some system; mask 0 means "nothing allowed".
using AllowFn = std::function<ActionMask(StateIndex)>;

/// Witness that σ₁ ⊓ σ₂ does not exist: σ₁(s) ∩ σ₂(s) = ∅.
struct IncompatibleAt {
    StateIndex state;
};

class Strategy;
std::variant<Strategy, IncompatibleAt> compose_strategies(const Strategy& a, const Strategy& b);

/// Memoryless nondeterministic strategy: ∅ ≠ σ(s) ⊆ E(s) for every s.
class Strategy {
public:
    Strategy(const Lts& t, std::vector<ActionMask> allow) : allow_(std::move(allow)), actions_(t.action_count()) {
        if (allow_.size() != t.state_count()) throw InvalidArgument("strategy: wrong number of states");
        for (StateIndex s = 0; s < allow_.size(); ++s) {
            if (allow_[s] == 0) throw InvalidArgument("strategy: empty choice at state " + std::to_string(s));
            if ((allow_[s] & ~t.enabled_mask(s)) != 0)
                throw InvalidArgument("strategy: non-enabled action allowed at state " + std::to_string(s));
        }
    }

    /// σ(s) = E(s) everywhere.
    static Strategy permissive(const Lts& t) {
        std::vector<ActionMask> m(t.state_count());
        for (StateIndex s = 0; s < m.size(); ++s) m[s] = t.enabled_mask(s);
        return Strategy(std::move(m), t.action_count());
    }

    [[nodiscard]] ActionMask allowed(StateIndex s) const { return allow_[s]; }
    [[nodiscard]] const std::vector<ActionMask>& masks() const { return allow_; }
    [[nodiscard]] StateIndex state_count() const { return allow_.size(); }
    [[nodiscard]] std::size_t action_count() const { return actions_; }
    [[nodiscard]] AllowFn as_allow_fn() const {
        return [m = allow_](StateIndex s) { return m[s]; };
    }

    friend bool operator==(const Strategy&, const Strategy&) = default;

private:
    Strategy(std::vector<ActionMask> allow, std::size_t actions) : allow_(std::move(allow)), actions_(actions) {}

    std::vector<ActionMask> allow_;
    std::size_t actions_;

    friend std::variant<Strategy, IncompatibleAt> compose_strategies(const Strategy&, const Strategy&);
};

/// σ₁ ⊓ σ₂: pointwise intersection, or the lowest-index state where it is empty.
inline std::variant<Strategy, IncompatibleAt> compose_strategies(const Strategy& a, const Strategy& b) {
    if (a.state_count() != b.state_count() || a.action_count() != b.action_count())
        throw InvalidArgument("compose_strategies: strategies over different spaces");
    std::vector<ActionMask> m(a.state_count());
    for (StateIndex s = 0; s < m.size(); ++s) {
        m[s] = a.allowed(s) & b.allowed(s);
        if (m[s] == 0) return IncompatibleAt{s};
    }
    return Strategy(std::move(m), a.action_count());
}

/// Memoryless probabilistic choice: row-major (state, action) probabilities.
class Policy {
public:
    Policy() = default;
    Policy(std::size_t states, std::size_t actions, std::vector<double> probs)
        : states_(states), actions_(actions), probs_(std::move(probs)) {
        if (probs_.size() != states_ * actions_) throw InvalidArgument("policy: wrong table size");
        for (std::size_t s = 0; s < states_; ++s) {
            double sum = 0.0;
            for (std::size_t a = 0; a < actions_; ++a) {
                const double p = probs_[s * actions_ + a];
                if (p < 0.0 || p > 1.0 + kProbabilityTolerance) throw InvalidArgument("policy: probability out of range");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kProbabilityTolerance && sum != 0.0)
                throw InvalidArgument("policy: row " + std::to_string(s) + " sums to " + std::to_string(sum));
        }
    }

    /// Uniform over the allowed set of each state; rows with an empty mask stay all-zero.
    static Policy uniform(const std::vector<ActionMask>& allowed, std::size_t actions) {
        std::vector<double> p(allowed.size() * actions, 0.0);
        for (std::size_t s = 0; s < allowed.size(); ++s) {
            const int k = std::popcount(allowed[s]);
            for (std::size_t a = 0; a < actions; ++a)
                if (mask_has(allowed[s], static_cast<ActionIndex>(a))) p[s * actions + a] = 1.0 / k;
        }
        return {allowed.size(), actions, std::move(p)};
    }

    /// Point mass on choice[s]; std::nullopt leaves the row empty (state never acted in).
    static Policy deterministic(const std::vector<std::optional<ActionIndex>>& choice, std::size_t actions) {
        std::vector<double> p(choice.size() * actions, 0.0);
        for (std::size_t s = 0; s < choice.size(); ++s)
            if (choice[s]) p[s * actions + *choice[s]] = 1.0;
        return {choice.size(), actions, std::move(p)};
    }

    [[nodiscard]] std::size_t state_count() const { return states_; }
    [[nodiscard]] std::size_t action_count() const { return actions_; }
    [[nodiscard]] double operator()(StateIndex s, ActionIndex a) const { return probs_[s * actions_ + a]; }
    [[nodiscard]] const std::vector<double>& table() const { return probs_; }

    [[nodiscard]] ActionMask support(StateIndex s) const {
        ActionMask m = 0;
        for (std::size_t a = 0; a < actions_; ++a)
            if (probs_[s * actions_ + a] > 0.0) m |= action_bit(static_cast<ActionIndex>(a));
        return m;
    }

    /// Σ_{a ∈ E(s)} π(s, a) = 1 and π(s, a) = 0 off E(s), for every state of `m`.
    [[nodiscard]] bool valid_for(const Mdp& m) const {
        if (states_ != m.state_count() || actions_ != m.action_count()) return false;
        for (StateIndex s = 0; s < states_; ++s) {
            const ActionMask enabled = m.enabled_mask(s);
            double sum = 0.0;
            for (ActionIndex a = 0; a < actions_; ++a) {
                const double p = (*this)(s, a);
                if (!mask_has(enabled, a) && p != 0.0) return false;
                sum += p;
            }
            if (enabled != 0 && std::abs(sum - 1.0) > kProbabilityTolerance) return false;
        }
        return true;
    }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> probs_;
};

/// T_𝒮: keeps (s, a, s') iff a ∈ 𝒮(s). States with 𝒮(s) = ∅ become dead ends.
/// Throws DeadEndCreated when 𝒮(s) ≠ ∅ shares no action with E(s) (checked on enumerable systems).
[[nodiscard]] inline Lts shielded_lts(const Lts& t, AllowFn allow) {
    if (t.is_explicit()) {
        const auto A = t.action_count();
        std::vector<std::uint64_t> offsets(t.state_count() * A + 1, 0);
        std::vector<StateIndex> targets;
        std::vector<StateIndex> buf;
        for (StateIndex s = 0; s < t.state_count(); ++s) {
            const ActionMask m = allow(s);
            bool kept = false;
            for (ActionIndex a = 0; a < A; ++a) {
                offsets[s * A + a] = targets.size();
                if (!mask_has(m, a)) continue;
                t.successors(s, a, buf);
                kept = kept || !buf.empty();
                targets.insert(targets.end(), buf.begin(), buf.end());
            }
            if (m != 0 && !kept) throw DeadEndCreated(s);
        }
        offsets.back() = targets.size();
        return {t.space(), t.actions(), std::move(offsets), std::move(targets), DeadEnds::allow};
    }
    if (t.space().indexable() && t.state_count() <= kEnumerationLimit && t.action_count() <= kMaxMaskActions) {
        for (StateIndex s = 0; s < t.state_count(); ++s) {
            const ActionMask m = allow(s);
            if (m != 0 && (m & t.enabled_mask(s)) == 0) throw DeadEndCreated(s);
        }
    }
    return Lts::from_generator(
        t.space(), t.actions(),
        [t, allow = std::move(allow)](StateIndex s, ActionIndex a, std::vector<StateIndex>& out) {
            if (mask_has(allow(s), a)) t.successors(s, a, out);
        },
        DeadEnds::allow);
}

[[nodiscard]] inline Lts shielded_lts(const Lts& t, const Strategy& s) { return shielded_lts(t, s.as_allow_fn()); }

/// M_𝒮: P_𝒮(s, a, ·) = P(s, a, ·) if a ∈ 𝒮(s), else 0. Per-action distributions are untouched.
[[nodiscard]] inline Mdp shielded_mdp(const Mdp& m, AllowFn allow) {
    if (m.is_explicit()) {
        std::vector<std::vector<Outcome>> table(m.state_count() * m.action_count());
        for (StateIndex s = 0; s < m.state_count(); ++s) {
            const ActionMask mask = allow(s);
            bool kept = false;
            for (ActionIndex a = 0; a < m.action_count(); ++a) {
                if (!mask_has(mask, a)) continue;
                auto& row = table[s * m.action_count() + a];
                m.outcomes(s, a, row);
                kept = kept || !row.empty();
            }
            if (mask != 0 && !kept) throw DeadEndCreated(s);
        }
        return {m.space(), m.actions(), std::move(table), DeadEnds::allow};
    }
    return Mdp::from_generator(
        m.space(), m.actions(),
        [m, allow = std::move(allow)](StateIndex s, ActionIndex a, std::vector<Outcome>& out) {
            if (mask_has(allow(s), a)) m.outcomes(s, a, out);
        },
        DeadEnds::allow);
}

[[nodiscard]] inline Mdp shielded_mdp(const Mdp& m, const Strategy& s) { return shielded_mdp(m, s.as_allow_fn()); }

} // namespace agshield
