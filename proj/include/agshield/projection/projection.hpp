#pragma once

#include "agshield/core/strategy.hpp"

#include <numeric>

namespace agshield {

/// Observation spaces share StateSpace's representation and indexing.
using ObservationSpace = StateSpace;
using ObservationIndex = StateIndex;

/// prj(s) = (s[i1], ..., s[ij]) for strictly ascending dimension indices.
class Projection {
public:
    Projection() = default;

    Projection(StateSpace source, std::vector<std::size_t> indices)
        : source_(std::move(source)), indices_(std::move(indices)) {
        if (!source_.indexable()) throw TooLarge("projection source", std::numeric_limits<StateIndex>::max(), std::numeric_limits<StateIndex>::max());
        if (indices_.empty() || indices_.size() > source_.dimensions())
            throw InvalidArgument("projection: need 1..k indices");
        for (std::size_t k = 0; k < indices_.size(); ++k) {
            if (indices_[k] >= source_.dimensions()) throw InvalidArgument("projection: index out of range");
            if (k > 0 && indices_[k] <= indices_[k - 1]) throw InvalidArgument("projection: indices must be strictly ascending");
        }
        std::vector<VarDomain> dims;
        for (auto k : indices_) dims.push_back(source_.dim(k));
        target_ = StateSpace(std::move(dims));
        for (std::size_t k = 0; k < source_.dimensions(); ++k)
            if (std::find(indices_.begin(), indices_.end(), k) == indices_.end()) hidden_.push_back(k);
    }

    static Projection identity(const StateSpace& space) {
        std::vector<std::size_t> all(space.dimensions());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return {space, std::move(all)};
    }

    [[nodiscard]] const StateSpace& source() const { return source_; }
    [[nodiscard]] const ObservationSpace& target() const { return target_; }
    [[nodiscard]] const std::vector<std::size_t>& indices() const { return indices_; }

    [[nodiscard]] ObservationIndex operator()(StateIndex s) const {
        ObservationIndex o = 0;
        for (std::size_t k = 0; k < indices_.size(); ++k) o += source_.coord(s, indices_[k]) * target_.stride(k);
        return o;
    }

    [[nodiscard]] State operator()(const State& s) const {
        State o;
        for (auto k : indices_) o.coords.push_back(s.coords[k]);
        return o;
    }

    /// Number of states in each fiber ext(o).
    [[nodiscard]] StateIndex fiber_size() const {
        StateIndex n = 1;
        for (auto k : hidden_) n *= source_.dim(k).size();
        return n;
    }

    /// Calls f(s) for every s in ext(o), in ascending index order.
    template <typename F>
    void for_each_in_fiber(ObservationIndex o, F&& f) const {
        StateIndex base = 0;
        for (std::size_t k = 0; k < indices_.size(); ++k) base += target_.coord(o, k) * source_.stride(indices_[k]);
        const StateIndex count = fiber_size();
        std::vector<std::size_t> digit(hidden_.size(), 0);
        for (StateIndex n = 0; n < count; ++n) {
            StateIndex s = base;
            for (std::size_t h = 0; h < hidden_.size(); ++h) s += digit[h] * source_.stride(hidden_[h]);
            f(s);
            for (std::size_t h = hidden_.size(); h-- > 0;) {
                if (++digit[h] < source_.dim(hidden_[h]).size()) break;
                digit[h] = 0;
            }
        }
    }

    friend bool operator==(const Projection& a, const Projection& b) {
        return a.source_ == b.source_ && a.indices_ == b.indices_;
    }

private:
    StateSpace source_;
    std::vector<std::size_t> indices_;
    std::vector<std::size_t> hidden_;
    ObservationSpace target_;
};

[[nodiscard]] inline ObservationIndex project_state(const Projection& p, StateIndex s) { return p(s); }

/// ext(o) = {s | prj(s) = o}
[[nodiscard]] inline Bitset extension(const Projection& p, ObservationIndex o) {
    Bitset b(p.source().size());
    p.for_each_in_fiber(o, [&](StateIndex s) { b.set(s); });
    return b;
}

/// ext(O') for a set of observations.
[[nodiscard]] inline Bitset extension(const Projection& p, const Bitset& observations) {
    Bitset b(p.source().size());
    observations.for_each([&](std::size_t o) { p.for_each_in_fiber(o, [&](StateIndex s) { b.set(s); }); });
    return b;
}

/// prj(φ) = ⋃_{s ∈ φ} {prj(s)}
[[nodiscard]] inline Bitset project_set(const Projection& p, const Bitset& phi) {
    if (phi.size() != p.source().size()) throw InvalidArgument("project_set: set over a different space");
    Bitset out(p.target().size());
    phi.for_each([&](std::size_t s) { out.set(p(s)); });
    return out;
}

/// prj̄(φ) = {o | ext(o) ⊆ φ} = O ∖ prj(S ∖ φ)
[[nodiscard]] inline Bitset restricted_project_set(const Projection& p, const Bitset& phi) {
    return project_set(p, phi.complement()).complement();
}

/// prj̄ of a predicate, by walking every fiber (no global bitset is built).
[[nodiscard]] inline Bitset restricted_project_set(const Projection& p, const SafetyProp& phi) {
    const StateIndex obs = p.target().size();
    const StateIndex total = obs * p.fiber_size();
    if (total > kEnumerationLimit) throw TooLarge("restricted projection", total, kEnumerationLimit);
    Bitset out(obs);
    for (ObservationIndex o = 0; o < obs; ++o) {
        bool inside = true;
        p.for_each_in_fiber(o, [&](StateIndex s) { inside = inside && phi.contains(s); });
        if (inside) out.set(o);
    }
    return out;
}

/// An LTS or MDP together with one projection per agent and the declared dependency edges
/// (i, j) meaning "agent i depends on agent j", both 0-based.
template <typename System>
struct NAgentSystem {
    System sys;
    std::vector<Projection> projections;
    std::vector<std::pair<std::size_t, std::size_t>> declared_deps;

    NAgentSystem(System s, std::vector<Projection> prjs, std::vector<std::pair<std::size_t, std::size_t>> deps = {})
        : sys(std::move(s)), projections(std::move(prjs)), declared_deps(std::move(deps)) {
        if (projections.size() != sys.actions().agent_count())
            throw InvalidArgument("n-agent system: one projection per agent required");
        for (const auto& p : projections)
            if (!(p.source() == sys.space())) throw InvalidArgument("n-agent system: projection over another space");
    }

    [[nodiscard]] std::size_t agent_count() const { return projections.size(); }
};

/// Tⁱ = {(prjᵢ(s), a[i], prjᵢ(s')) | (s, a, s') ∈ T}, as an explicit LTS over Oᵢ with
/// agent i's local actions. Observations without outgoing transitions are kept as dead ends.
[[nodiscard]] inline Lts project_lts(const Lts& t, const Projection& p, std::size_t agent) {
    if (!(p.source() == t.space())) throw InvalidArgument("project_lts: projection over another space");
    const StateIndex n = t.state_count();
    if (n > kEnumerationLimit) throw TooLarge("project_lts", n, kEnumerationLimit);

    const ActionSpace& joint = t.actions();
    const std::size_t local = joint.local_size(agent);
    const ObservationIndex obs = p.target().size();
    std::vector<std::vector<std::uint32_t>> buckets(obs * local);
    std::vector<std::size_t> clean(buckets.size(), 0);

    auto compact = [](std::vector<std::uint32_t>& b) {
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
    };

    std::vector<StateIndex> succ;
    for (StateIndex s = 0; s < n; ++s) {
        const ObservationIndex o = p(s);
        for (ActionIndex a = 0; a < joint.joint_size(); ++a) {
            t.successors(s, a, succ);
            if (succ.empty()) continue;
            const std::size_t k = o * local + joint.component(a, agent);
            auto& b = buckets[k];
            for (auto u : succ) b.push_back(static_cast<std::uint32_t>(p(u)));
            if (b.size() > 2 * clean[k] + 64) {
                compact(b);
                clean[k] = b.size();
            }
        }
    }

    std::vector<std::uint64_t> offsets(buckets.size() + 1, 0);
    std::vector<StateIndex> targets;
    for (std::size_t k = 0; k < buckets.size(); ++k) {
        compact(buckets[k]);
        offsets[k] = targets.size();
        targets.insert(targets.end(), buckets[k].begin(), buckets[k].end());
        std::vector<std::uint32_t>().swap(buckets[k]);
    }
    offsets.back() = targets.size();
    return {p.target(), ActionSpace::single(joint.labels(agent)), std::move(offsets), std::move(targets), DeadEnds::allow};
}

template <typename System>
[[nodiscard]] Lts project_lts(const NAgentSystem<System>& ns, std::size_t agent) {
    if constexpr (std::is_same_v<System, Mdp>)
        return project_lts(induced_lts(ns.sys, DeadEnds::allow), ns.projections[agent], agent);
    else
        return project_lts(ns.sys, ns.projections[agent], agent);
}

} // namespace agshield
