#pragma once

#include "agshield/casestudies/params.hpp"
#include "agshield/sim/rng.hpp"
#include "agshield/synthesis/assume_guarantee.hpp"

#include <array>
#include <cmath>

namespace agshield::plant {

inline constexpr std::size_t kUnits = 10;
inline constexpr std::size_t kInputs = 3;
inline constexpr std::size_t kPatterns = 5;

/// One input of a unit: either an upstream unit (0-based) or an external provider.
struct Input {
    bool upstream = false;
    std::size_t source = 0;
};

/// Network layout: 12 internal edges, provider inputs filling every unit up to 3 inputs,
/// and two consumers (A on unit 9, B on unit 10) with two inlet arrows each.
struct PlantTopology {
    std::vector<std::pair<std::size_t, std::size_t>> edges;  ///< 0-based (from, to)
    std::array<std::size_t, kUnits> providers{};
    std::array<std::size_t, kUnits> consumer_arrows{};       ///< arrows of the consumer attached to each unit
    std::array<int, kUnits> consumer{};                      ///< -1 none, 0 = A, 1 = B

    static PlantTopology standard() {
        PlantTopology t;
        const std::pair<int, int> e[] = {{1, 4}, {2, 4}, {2, 5}, {3, 5}, {4, 6}, {4, 7},
                                         {5, 7}, {5, 8}, {6, 9}, {7, 9}, {7, 10}, {8, 10}};
        for (auto [a, b] : e) t.edges.emplace_back(a - 1, b - 1);
        t.providers = {3, 3, 3, 1, 1, 2, 1, 2, 1, 1};
        t.consumer.fill(-1);
        t.consumer[8] = 0;
        t.consumer[9] = 1;
        t.consumer_arrows[8] = 2;
        t.consumer_arrows[9] = 2;
        return t;
    }

    /// Inputs of unit u: upstream units in ascending order, then providers.
    [[nodiscard]] std::vector<Input> inputs(std::size_t u) const {
        std::vector<Input> in;
        for (auto [a, b] : edges)
            if (b == u) in.push_back({true, a});
        std::sort(in.begin(), in.end(), [](const Input& x, const Input& y) { return x.source < y.source; });
        for (std::size_t k = 0; k < providers[u]; ++k) in.push_back({false, k});
        return in;
    }

    [[nodiscard]] std::vector<std::size_t> downstream(std::size_t u) const {
        std::vector<std::size_t> d;
        for (auto [a, b] : edges)
            if (a == u) d.push_back(b);
        std::sort(d.begin(), d.end());
        return d;
    }

    [[nodiscard]] std::size_t upstream_count(std::size_t u) const {
        std::size_t c = 0;
        for (auto [a, b] : edges) c += b == u;
        return c;
    }

    /// Number of outgoing arrows (internal edges plus consumer inlets).
    [[nodiscard]] std::size_t out_degree(std::size_t u) const { return downstream(u).size() + consumer_arrows[u]; }

    void validate() const {
        for (std::size_t u = 0; u < kUnits; ++u) {
            if (upstream_count(u) + providers[u] != kInputs) throw InvalidArgument("plant topology: every unit needs 3 inputs");
            const auto d = out_degree(u);
            if (d < 1 || d > 2) throw InvalidArgument("plant topology: out-degree must be 1 or 2");
        }
        for (auto [a, b] : edges)
            if (a >= b) throw InvalidArgument("plant topology: edges must point to higher-numbered units");
    }
};

struct PlantParams {
    double capacity = 50.0;
    double flow_rate_min = 2.15;  ///< l/s
    double flow_rate_max = 3.15;
    double period = 0.5;          ///< s per step
    int phases = 10;
    int episode_length = 100;
    double initial_volume = 25.0;
    std::vector<double> demand_a{5, 5, 3, 0, 0};  ///< l/s per pattern slot
    std::vector<double> demand_b{5, 3, 3, 3, 0};
    std::array<std::vector<double>, kUnits> cost{};  ///< cost units per litre per pattern slot
    bool noop_action = false;  ///< adds a 9th action equivalent to closing all inputs

    PlantParams() {
        const std::vector<double> first{0, 5, 3, 3, 3};
        for (std::size_t u = 0; u < kUnits; ++u) {
            cost[u].resize(kPatterns);
            for (std::size_t k = 0; k < kPatterns; ++k) cost[u][k] = first[(k + (u + 1) % kPatterns) % kPatterns];
        }
        cost[0] = first;
        cost[9] = {9, 0, 6, 6, 6};
    }

    [[nodiscard]] double flow_min() const { return flow_rate_min * period; }
    [[nodiscard]] double flow_max() const { return flow_rate_max * period; }
    [[nodiscard]] std::size_t pattern(int phase) const {
        return static_cast<std::size_t>(std::floor(phase * period)) % kPatterns;
    }
    [[nodiscard]] std::size_t action_count() const { return noop_action ? 9 : 8; }
    [[nodiscard]] std::size_t bins() const { return static_cast<std::size_t>(capacity) + 1; }

    void validate() const {
        if (!(capacity >= 2.0) || capacity != std::floor(capacity)) throw InvalidArgument("plant: capacity must be an integer >= 2");
        if (!(flow_rate_min > 0.0) || !(flow_rate_max >= flow_rate_min)) throw InvalidArgument("plant: bad flow range");
        if (!(period > 0.0)) throw InvalidArgument("plant: period must be positive");
        if (phases <= 0 || episode_length <= 0) throw InvalidArgument("plant: phases and episode_length must be positive");
        if (!(initial_volume > 0.0) || !(initial_volume < capacity)) throw InvalidArgument("plant: initial_volume must be in (0, capacity)");
        auto table = [](const std::vector<double>& t, const char* what) {
            if (t.size() != kPatterns) throw InvalidArgument(std::string("plant: ") + what + " needs 5 entries");
            for (double x : t)
                if (!(x >= 0.0)) throw InvalidArgument(std::string("plant: ") + what + " must be nonnegative");
        };
        table(demand_a, "demand_a");
        table(demand_b, "demand_b");
        for (const auto& c : cost) table(c, "cost table");
    }

    void read(ParamFile& f) {
        f.get("capacity", capacity);
        f.get("flow_rate_min", flow_rate_min);
        f.get("flow_rate_max", flow_rate_max);
        f.get("period", period);
        f.get("phases", phases);
        f.get("episode_length", episode_length);
        f.get("initial_volume", initial_volume);
        f.get("demand_a", demand_a);
        f.get("demand_b", demand_b);
        for (std::size_t u = 0; u < kUnits; ++u) f.get("cost_" + std::to_string(u + 1), cost[u]);
        f.get("noop_action", noop_action);
    }
};

/// Bit k of an action opens input k; action 8 (if enabled) closes everything.
[[nodiscard]] inline unsigned open_inputs(ActionIndex a) { return a == 8 ? 0U : a; }

inline std::vector<std::string> action_labels(const PlantParams& p) {
    std::vector<std::string> l;
    for (ActionIndex a = 0; a < 8; ++a) {
        std::string s;
        for (std::size_t k = 0; k < kInputs; ++k) s += (a >> k) & 1U ? 'o' : 'c';
        l.push_back(s);
    }
    if (p.noop_action) l.emplace_back("noop");
    return l;
}

struct PlantState {
    int phase = 0;
    std::array<double, kUnits> volume{};
};

struct StepResult {
    PlantState next;
    std::array<double, kUnits> purchased{};  ///< litres bought from providers
    std::array<double, kUnits> cost{};
    std::array<double, kUnits> inflow{};   ///< litres received
    std::array<double, kUnits> outflow{};  ///< litres passed downstream or to consumers
    std::array<bool, kUnits> overflow{};
};

/// Number of uniforms consumed per step: one per input slot, drawn whether open or not.
inline constexpr std::size_t kDrawsPerStep = kUnits * kInputs;

/// One step. `draws[3u + k]` is the flow fraction in [0,1) of input k of unit u.
[[nodiscard]] inline StepResult plant_step(const PlantParams& p, const PlantTopology& topo, const PlantState& s,
                                           std::span<const ActionIndex> actions, std::span<const double> draws) {
    StepResult r;
    std::array<double, kUnits> inflow{};
    // requests[u]: (downstream unit, litres) drawn from unit u
    std::array<std::vector<std::pair<std::size_t, double>>, kUnits> requests;
    for (std::size_t u = 0; u < kUnits; ++u) {
        const auto in = topo.inputs(u);
        const unsigned open = open_inputs(actions[u]);
        for (std::size_t k = 0; k < kInputs; ++k) {
            const double x = p.flow_min() + (p.flow_max() - p.flow_min()) * draws[u * kInputs + k];
            if (!((open >> k) & 1U)) continue;
            if (in[k].upstream) {
                requests[in[k].source].emplace_back(u, x);
            } else {
                inflow[u] += x;
                r.purchased[u] += x;
            }
        }
        r.cost[u] = p.cost[u][p.pattern(s.phase)] * r.purchased[u];
    }
    for (std::size_t u = 0; u < kUnits; ++u) {
        double avail = s.volume[u] + inflow[u];
        std::sort(requests[u].begin(), requests[u].end());
        for (auto [d, x] : requests[u]) {
            const double moved = std::min(x, avail);
            avail -= moved;
            inflow[d] += moved;
            r.outflow[u] += moved;
        }
        if (topo.consumer[u] >= 0) {
            const auto& demand = topo.consumer[u] == 0 ? p.demand_a : p.demand_b;
            const double per_arrow = demand[p.pattern(s.phase)] * p.period / static_cast<double>(topo.consumer_arrows[u]);
            for (std::size_t k = 0; k < topo.consumer_arrows[u]; ++k) {
                const double drawn = std::min(per_arrow, avail);
                avail -= drawn;
                r.outflow[u] += drawn;
            }
        }
        r.inflow[u] = inflow[u];
        r.overflow[u] = avail >= p.capacity;
        r.next.volume[u] = std::clamp(avail, 0.0, p.capacity);
    }
    r.next.phase = (s.phase + 1) % p.phases;
    return r;
}

/// Global property: no unit at capacity, units 9 and 10 nonempty.
[[nodiscard]] inline bool plant_safe(const PlantParams& p, const PlantState& s) {
    for (double v : s.volume)
        if (v >= p.capacity) return false;
    return s.volume[8] > 0.0 && s.volume[9] > 0.0;
}

[[nodiscard]] inline std::size_t volume_bin(const PlantParams& p, double v) {
    return static_cast<std::size_t>(std::min(std::floor(std::max(v, 0.0)), p.capacity));
}

inline StateSpace local_space(const PlantParams& p) {
    return StateSpace({VarDomain::integer("phase", 0, p.phases - 1), VarDomain::integer("v", 0, static_cast<int>(p.capacity))});
}

[[nodiscard]] inline ObservationIndex observe(const PlantParams& p, const PlantState& s, std::size_t u) {
    return static_cast<ObservationIndex>(s.phase) * p.bins() + volume_bin(p, s.volume[u]);
}

/// Shape of a local game: out-degree, number of upstream inputs and whether they are assumed
/// to deliver. With the assumption, upstream inputs behave exactly like providers.
struct LocalVariant {
    std::size_t out_degree = 1;
    std::size_t upstream = 0;
    bool assumed = true;

    [[nodiscard]] std::string key() const {
        std::string k = "outdeg" + std::to_string(out_degree);
        if (!assumed && upstream > 0) k += "-up" + std::to_string(upstream) + "-unassumed";
        return k;
    }
};

[[nodiscard]] inline std::int64_t millilitres(double x) { return std::llround(x * 1000.0); }

/// Interval abstraction on 1-litre bins. Controller picks the open inputs; the adversary picks
/// how many outgoing arrows draw (0..out_degree), each drawing within the flow range, and where
/// in its range every open input lands.
inline Lts local_lts(const PlantParams& p, const LocalVariant& v) {
    p.validate();
    const StateSpace space = local_space(p);
    const auto bins = static_cast<std::int64_t>(p.bins());
    const std::int64_t lo = millilitres(p.flow_min());
    const std::int64_t hi = millilitres(p.flow_max());
    const std::size_t na = p.action_count();

    LtsBuilder b(space, ActionSpace::single(action_labels(p)));
    for (int phase = 0; phase < p.phases; ++phase)
        for (std::int64_t bin = 0; bin < bins; ++bin) {
            const StateIndex s = static_cast<StateIndex>(phase) * p.bins() + static_cast<StateIndex>(bin);
            const StateIndex base = static_cast<StateIndex>((phase + 1) % p.phases) * p.bins();
            for (ActionIndex a = 0; a < na; ++a) {
                std::int64_t in_lo = 0;
                std::int64_t in_hi = 0;
                const unsigned open = open_inputs(a);
                for (std::size_t k = 0; k < kInputs; ++k) {
                    if (!((open >> k) & 1U)) continue;
                    in_lo += k < v.upstream && !v.assumed ? 0 : lo;
                    in_hi += hi;
                }
                for (std::size_t m = 0; m <= v.out_degree; ++m) {
                    const auto out_lo = static_cast<std::int64_t>(m) * lo;
                    const auto out_hi = static_cast<std::int64_t>(m) * hi;
                    const std::int64_t low = 1000 * bin + in_lo - out_hi;
                    const std::int64_t high = 1000 * (bin + 1) + in_hi - out_lo;
                    const std::int64_t first = std::clamp<std::int64_t>(low >= 0 ? low / 1000 : -((-low + 999) / 1000), 0, bins - 1);
                    const std::int64_t last = std::clamp<std::int64_t>((high + 999) / 1000 - 1, 0, bins - 1);
                    for (std::int64_t t = first; t <= last; ++t) b.add(s, a, base + static_cast<StateIndex>(t));
                }
            }
        }
    return b.build();
}

/// Safe bins 1..capacity-1 (bin 0 covers (0,1), treated as unsafe).
inline SafetyProp local_guarantee(const PlantParams& p) {
    const StateSpace space = local_space(p);
    Bitset g(space.size());
    for (StateIndex o = 0; o < space.size(); ++o) {
        const auto bin = o % p.bins();
        if (bin >= 1 && bin + 1 < p.bins()) g.set(o);
    }
    return SafetyProp(std::move(g));
}

/// Edges (i, j) with i upstream of j: i's volume depends on what j draws.
inline std::vector<std::pair<std::size_t, std::size_t>> declared_dependencies(const PlantTopology& t) { return t.edges; }

/// Learning priority for tie-breaks: downstream units first.
inline std::vector<std::size_t> learning_priority() {
    std::vector<std::size_t> p;
    for (std::size_t u = kUnits; u-- > 0;) p.push_back(u);
    return p;
}

/// Checks that every consumer draw per step is covered by some count of arrows drawing within
/// the flow range, so the local abstraction stays sound.
inline void check_consumers(const PlantParams& p, const PlantTopology& t) {
    const std::int64_t lo = millilitres(p.flow_min());
    const std::int64_t hi = millilitres(p.flow_max());
    for (std::size_t u = 0; u < kUnits; ++u) {
        if (t.consumer[u] < 0) continue;
        const auto& demand = t.consumer[u] == 0 ? p.demand_a : p.demand_b;
        for (double d : demand) {
            const std::int64_t draw = millilitres(d * p.period);
            bool covered = false;
            for (std::size_t m = 0; m <= t.out_degree(u) && !covered; ++m)
                covered = draw >= static_cast<std::int64_t>(m) * lo && draw <= static_cast<std::int64_t>(m) * hi;
            if (!covered) throw InvalidArgument("plant: consumer demand of unit " + std::to_string(u + 1) + " outside the abstraction");
        }
    }
}

class PlantModel final : public CompositionalModel {
public:
    explicit PlantModel(PlantParams p, PlantTopology t = PlantTopology::standard()) : p_(std::move(p)), t_(std::move(t)) {
        p_.validate();
        t_.validate();
        check_consumers(p_, t_);
    }

    [[nodiscard]] const PlantParams& params() const { return p_; }
    [[nodiscard]] const PlantTopology& topology() const { return t_; }
    [[nodiscard]] LocalVariant variant(std::size_t u, bool assume) const {
        return {t_.out_degree(u), t_.upstream_count(u), assume};
    }

    [[nodiscard]] std::size_t agent_count() const override { return kUnits; }
    /// Projections live on the local space itself: the global volumes are real-valued, so no
    /// finite global space is built for the plant.
    [[nodiscard]] Projection projection(std::size_t) const override { return Projection::identity(local_space(p_)); }
    [[nodiscard]] std::string symmetry_key(std::size_t u, bool assume) const override { return variant(u, assume).key(); }
    [[nodiscard]] Lts local_lts(std::size_t u, bool assume) const override { return plant::local_lts(p_, variant(u, assume)); }
    [[nodiscard]] SafetyProp local_guarantee(std::size_t) const override { return plant::local_guarantee(p_); }
    [[nodiscard]] ObservationIndex initial_observation(std::size_t) const override {
        return volume_bin(p_, p_.initial_volume);
    }

private:
    PlantParams p_;
    PlantTopology t_;
};

/// Simulation model over real-valued volumes; agent cost is the price of provider litres.
class PlantSim {
public:
    using state_type = PlantState;

    explicit PlantSim(PlantParams p, PlantTopology t = PlantTopology::standard())
        : p_(std::move(p)), t_(std::move(t)), local_(local_space(p_)) {
        p_.validate();
        t_.validate();
    }

    [[nodiscard]] const PlantParams& params() const { return p_; }
    [[nodiscard]] const PlantTopology& topology() const { return t_; }
    [[nodiscard]] std::size_t agent_count() const { return kUnits; }
    [[nodiscard]] std::size_t local_action_count(std::size_t) const { return p_.action_count(); }
    [[nodiscard]] const StateSpace& observation_space(std::size_t) const { return local_; }
    [[nodiscard]] std::size_t episode_length() const { return static_cast<std::size_t>(p_.episode_length); }
    [[nodiscard]] state_type initial_state() const {
        PlantState s;
        s.volume.fill(p_.initial_volume);
        return s;
    }
    [[nodiscard]] ObservationIndex observe(const state_type& s, std::size_t u) const { return plant::observe(p_, s, u); }
    [[nodiscard]] bool safe(const state_type& s) const { return plant_safe(p_, s); }

    state_type step(const state_type& s, std::span<const ActionIndex> actions, SplitMix64& rng, std::span<double> costs) const {
        std::array<double, kDrawsPerStep> draws{};
        for (auto& d : draws) d = rng.uniform();
        auto r = plant_step(p_, t_, s, actions, draws);
        for (std::size_t u = 0; u < kUnits; ++u) costs[u] = r.cost[u];
        return r.next;
    }

private:
    PlantParams p_;
    PlantTopology t_;
    StateSpace local_;
};

} // namespace agshield::plant
