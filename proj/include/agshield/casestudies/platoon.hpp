#pragma once

#include "agshield/casestudies/params.hpp"
#include "agshield/sim/rng.hpp"
#include "agshield/synthesis/assume_guarantee.hpp"

#include <array>

namespace agshield::platoon {

/// Cars 1..n from back to front; cars 1..n-1 are agents, car n is driven by the environment.
struct PlatoonParams {
    int n = 10;
    int v_min = -10;
    int v_max = 20;
    int accel = 2;  ///< accelerations are {-accel, 0, accel}
    int period = 1; ///< decision period in seconds
    int d_max = 200;
    int episode_length = 100;
    int initial_velocity = 0;
    int initial_distance = 10;

    [[nodiscard]] int velocity_step() const { return accel * period; }
    [[nodiscard]] int velocity_count() const { return (v_max - v_min) / velocity_step() + 1; }

    void validate() const {
        if (n < 2) throw InvalidArgument("platoon: need at least 2 cars");
        if (accel <= 0 || period <= 0) throw InvalidArgument("platoon: accel and period must be positive");
        if (v_min >= v_max) throw InvalidArgument("platoon: v_min must be below v_max");
        if ((v_max - v_min) % velocity_step() != 0) throw InvalidArgument("platoon: velocity range not on the grid");
        if ((velocity_step() * period) % 2 != 0)
            throw InvalidArgument("platoon: distance updates would not be integral");
        if (d_max < 2) throw InvalidArgument("platoon: d_max must be at least 2");
        if (episode_length <= 0) throw InvalidArgument("platoon: episode_length must be positive");
        if (initial_velocity < v_min || initial_velocity > v_max || (initial_velocity - v_min) % velocity_step() != 0)
            throw InvalidArgument("platoon: initial_velocity not on the grid");
        if (initial_distance <= 0 || initial_distance >= d_max) throw InvalidArgument("platoon: initial_distance must be in (0, d_max)");
    }

    void read(ParamFile& f) {
        f.get("n", n);
        f.get("v_min", v_min);
        f.get("v_max", v_max);
        f.get("accel", accel);
        f.get("period", period);
        f.get("d_max", d_max);
        f.get("episode_length", episode_length);
        f.get("initial_velocity", initial_velocity);
        f.get("initial_distance", initial_distance);
    }
};

[[nodiscard]] inline int clamp_velocity(const PlatoonParams& p, int v) { return std::clamp(v, p.v_min, p.v_max); }

/// A damaged car brakes toward standstill at the regular rate and then stays at 0.
[[nodiscard]] inline int toward_zero(const PlatoonParams& p, int v) {
    const int s = p.velocity_step();
    return v > 0 ? std::max(0, v - s) : std::min(0, v + s);
}

/// Change of the gap between a car and the car in front over one period (trapezoidal rule).
[[nodiscard]] inline int gap_change(const PlatoonParams& p, int back, int back_next, int front, int front_next) {
    return ((front + front_next) - (back + back_next)) * p.period / 2;
}

/// Gap update: 0 (crash) and d_max (lost contact) are absorbing.
[[nodiscard]] inline int next_gap(const PlatoonParams& p, int d, int delta) {
    if (d <= 0 || d >= p.d_max) return d;
    return std::clamp(d + delta, 0, p.d_max);
}

/// Front-car draw weights for accelerations (-accel, 0, +accel).
[[nodiscard]] inline std::array<double, 3> front_weights(int v) {
    return {v > 10 ? 2.0 : 1.0, 1.0, v < 0 ? 2.0 : 1.0};
}

[[nodiscard]] inline std::array<double, 3> front_car_policy(int v) {
    auto w = front_weights(v);
    const double total = w[0] + w[1] + w[2];
    for (auto& x : w) x /= total;
    return w;
}

[[nodiscard]] inline int acceleration(const PlatoonParams& p, ActionIndex a) { return (static_cast<int>(a) - 1) * p.accel; }

inline std::vector<std::string> action_labels(const PlatoonParams& p) {
    return {"-" + std::to_string(p.accel), "0", "+" + std::to_string(p.accel)};
}

/// Global state as plain values: v_1..v_n followed by d_1..d_{n-1}.
using GlobalState = std::vector<int>;

/// One step. `actions` holds the local action of cars 1..n-1 and `front` the draw of car n.
[[nodiscard]] inline GlobalState platoon_step(const PlatoonParams& p, const GlobalState& s, std::span<const ActionIndex> actions,
                                              ActionIndex front) {
    const auto n = static_cast<std::size_t>(p.n);
    GlobalState next(s.size());
    for (std::size_t j = 0; j < n; ++j) {
        const bool damaged = (j > 0 && s[n + j - 1] == 0) || (j + 1 < n && s[n + j] == 0);
        const ActionIndex a = j + 1 < n ? actions[j] : front;
        next[j] = damaged ? toward_zero(p, s[j]) : clamp_velocity(p, s[j] + acceleration(p, a) * p.period);
    }
    for (std::size_t j = 0; j + 1 < n; ++j)
        next[n + j] = next_gap(p, s[n + j], gap_change(p, s[j], next[j], s[j + 1], next[j + 1]));
    return next;
}

[[nodiscard]] inline bool platoon_safe(const PlatoonParams& p, const GlobalState& s) {
    for (std::size_t j = static_cast<std::size_t>(p.n); j < s.size(); ++j)
        if (s[j] <= 0 || s[j] >= p.d_max) return false;
    return true;
}

[[nodiscard]] inline GlobalState initial_state(const PlatoonParams& p) {
    GlobalState s(static_cast<std::size_t>(2 * p.n - 1), p.initial_velocity);
    for (int j = p.n; j < 2 * p.n - 1; ++j) s[static_cast<std::size_t>(j)] = p.initial_distance;
    return s;
}

inline VarDomain velocity_domain(const PlatoonParams& p, const std::string& name) {
    return VarDomain::integer(name, p.v_min, p.v_max, p.velocity_step());
}

inline VarDomain gap_domain(const PlatoonParams& p, const std::string& name) { return VarDomain::integer(name, 0, p.d_max); }

/// Observation space of every agent: (v_self, v_front, d).
inline StateSpace local_space(const PlatoonParams& p) {
    return StateSpace({velocity_domain(p, "v"), velocity_domain(p, "v_front"), gap_domain(p, "d")});
}

inline StateSpace global_space(const PlatoonParams& p) {
    std::vector<VarDomain> dims;
    for (int j = 1; j <= p.n; ++j) dims.push_back(velocity_domain(p, "v" + std::to_string(j)));
    for (int j = 1; j < p.n; ++j) dims.push_back(gap_domain(p, "d" + std::to_string(j)));
    return StateSpace(std::move(dims));
}

inline ActionSpace global_actions(const PlatoonParams& p) {
    return ActionSpace(std::vector<std::vector<std::string>>(static_cast<std::size_t>(p.n - 1), action_labels(p)));
}

/// prjᵢ for agent i (0-based, car i+1): (v_{i+1}, v_{i+2}, d_{i+1}).
inline Projection agent_projection(const PlatoonParams& p, std::size_t i) {
    return Projection(global_space(p), {i, i + 1, static_cast<std::size_t>(p.n) + i});
}

[[nodiscard]] inline ObservationIndex observe(const PlatoonParams& p, const StateSpace& local, const GlobalState& s, std::size_t i) {
    const auto n = static_cast<std::size_t>(p.n);
    const std::size_t c[] = {static_cast<std::size_t>((s[i] - p.v_min) / p.velocity_step()),
                             static_cast<std::size_t>((s[i + 1] - p.v_min) / p.velocity_step()),
                             static_cast<std::size_t>(s[n + i])};
    return local.encode(c);
}

/// The global LTS (possibility abstraction of the platoon MDP): every front-car draw has
/// positive probability, so all three are successors.
inline Lts global_lts(const PlatoonParams& p) {
    p.validate();
    const StateSpace space = global_space(p);
    const ActionSpace actions = global_actions(p);
    return Lts::from_generator(space, actions, [p, space, actions](StateIndex s, ActionIndex a, std::vector<StateIndex>& out) {
        GlobalState g(space.dimensions());
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = space.value(s, k);
        const auto local = actions.decode(a);
        std::vector<std::size_t> coords(g.size());
        for (ActionIndex front = 0; front < 3; ++front) {
            const GlobalState next = platoon_step(p, g, local, front);
            for (std::size_t k = 0; k < next.size(); ++k) coords[k] = *space.dim(k).index_of(next[k]);
            out.push_back(space.encode(coords));
        }
    });
}

/// φᵢ = {s | 0 < dᵢ < d_max} over the global space.
inline SafetyProp agent_guarantee(const PlatoonParams& p, std::size_t i) {
    const StateSpace space = global_space(p);
    const std::size_t dim = static_cast<std::size_t>(p.n) + i;
    return SafetyProp(std::function<bool(StateIndex)>([p, space, dim](StateIndex s) {
        const int d = space.value(s, dim);
        return d > 0 && d < p.d_max;
    }));
}

/// Local game of one car over (v, v_front, d). The controller picks the car's acceleration, the
/// adversary the front car's (covering a controlled neighbour, the random front car, and a
/// damaged front car braking). Without `rear_assumed`, a crash from behind may additionally
/// force the car to brake toward standstill at any step.
inline Lts local_lts(const PlatoonParams& p, bool rear_assumed) {
    p.validate();
    const StateSpace space = local_space(p);
    const std::size_t nv = static_cast<std::size_t>(p.velocity_count());
    auto vel = [&](std::size_t k) { return p.v_min + static_cast<int>(k) * p.velocity_step(); };
    auto vidx = [&](int v) { return static_cast<std::size_t>((v - p.v_min) / p.velocity_step()); };

    LtsBuilder b(space, ActionSpace::single(action_labels(p)));
    for (std::size_t i = 0; i < nv; ++i)
        for (std::size_t j = 0; j < nv; ++j)
            for (int d = 0; d <= p.d_max; ++d) {
                const StateIndex s = space.encode(std::vector<std::size_t>{i, j, static_cast<std::size_t>(d)});
                const int v = vel(i);
                const int vf = vel(j);
                for (ActionIndex a = 0; a < 3; ++a) {
                    if (d == 0) {
                        b.add(s, a, space.encode(std::vector<std::size_t>{vidx(toward_zero(p, v)), vidx(toward_zero(p, vf)), 0}));
                        continue;
                    }
                    std::vector<int> selves{clamp_velocity(p, v + acceleration(p, a) * p.period)};
                    if (!rear_assumed) selves.push_back(toward_zero(p, v));
                    for (int v2 : selves)
                        for (ActionIndex x = 0; x < 3; ++x) {
                            const int vf2 = clamp_velocity(p, vf + acceleration(p, x) * p.period);
                            const int d2 = next_gap(p, d, gap_change(p, v, v2, vf, vf2));
                            b.add(s, a, space.encode(std::vector<std::size_t>{vidx(v2), vidx(vf2), static_cast<std::size_t>(d2)}));
                        }
                }
            }
    return b.build();
}

/// prj̄ᵢ(φᵢ) over the observation space: 0 < d < d_max (d is observed, so the projection is exact).
inline SafetyProp local_guarantee(const PlatoonParams& p) {
    const StateSpace space = local_space(p);
    Bitset b(space.size());
    for (StateIndex o = 0; o < space.size(); ++o) {
        const int d = space.value(o, 2);
        if (d > 0 && d < p.d_max) b.set(o);
    }
    return SafetyProp(std::move(b));
}

/// Dependency edges (agent i depends on agent i+1, the car in front), 0-based.
inline std::vector<std::pair<std::size_t, std::size_t>> declared_dependencies(const PlatoonParams& p) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i + 2 < static_cast<std::size_t>(p.n); ++i) e.emplace_back(i, i + 1);
    return e;
}

class PlatoonModel final : public CompositionalModel {
public:
    explicit PlatoonModel(PlatoonParams p) : p_(std::move(p)) { p_.validate(); }

    [[nodiscard]] const PlatoonParams& params() const { return p_; }
    [[nodiscard]] std::size_t agent_count() const override { return static_cast<std::size_t>(p_.n - 1); }
    [[nodiscard]] Projection projection(std::size_t i) const override { return agent_projection(p_, i); }
    [[nodiscard]] std::string symmetry_key(std::size_t i, bool assume) const override {
        return i == 0 || assume ? "car" : "car-unassumed";
    }
    [[nodiscard]] Lts local_lts(std::size_t i, bool assume) const override { return platoon::local_lts(p_, i == 0 || assume); }
    [[nodiscard]] SafetyProp local_guarantee(std::size_t) const override { return platoon::local_guarantee(p_); }
    [[nodiscard]] ObservationIndex initial_observation(std::size_t i) const override {
        return observe(p_, local_space(p_), initial_state(p_), i);
    }

private:
    PlatoonParams p_;
};

/// Simulation model: agents pick accelerations, the front car draws from its weighted policy,
/// and every agent pays its current gap per step.
class PlatoonSim {
public:
    using state_type = GlobalState;

    explicit PlatoonSim(PlatoonParams p) : p_(std::move(p)), local_(local_space(p_)) { p_.validate(); }

    [[nodiscard]] const PlatoonParams& params() const { return p_; }
    [[nodiscard]] std::size_t agent_count() const { return static_cast<std::size_t>(p_.n - 1); }
    [[nodiscard]] std::size_t local_action_count(std::size_t) const { return 3; }
    [[nodiscard]] const StateSpace& observation_space(std::size_t) const { return local_; }
    [[nodiscard]] std::size_t episode_length() const { return static_cast<std::size_t>(p_.episode_length); }
    [[nodiscard]] state_type initial_state() const { return platoon::initial_state(p_); }
    [[nodiscard]] ObservationIndex observe(const state_type& s, std::size_t i) const { return platoon::observe(p_, local_, s, i); }
    [[nodiscard]] bool safe(const state_type& s) const { return platoon_safe(p_, s); }

    state_type step(const state_type& s, std::span<const ActionIndex> actions, SplitMix64& rng, std::span<double> costs) const {
        const auto n = static_cast<std::size_t>(p_.n);
        for (std::size_t i = 0; i + 1 < n; ++i) costs[i] = s[n + i];
        const auto w = front_weights(s[n - 1]);
        const auto front = static_cast<ActionIndex>(rng.categorical(w));
        return platoon_step(p_, s, actions, front);
    }

    /// Global index for tabular centralized learning (small instances only).
    [[nodiscard]] StateSpace global_space() const { return platoon::global_space(p_); }
    [[nodiscard]] StateIndex global_index(const state_type& s) const {
        const StateSpace space = global_space();
        std::vector<std::size_t> c(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) c[k] = *space.dim(k).index_of(s[k]);
        return space.encode(c);
    }

private:
    PlatoonParams p_;
    StateSpace local_;
};

} // namespace agshield::platoon
