#pragma once

#include "agshield/learning/mdp_ops.hpp"
#include "agshield/sim/simulator.hpp"

#include <fstream>
#include <limits>

namespace agshield {

inline constexpr ActionIndex kNoAction = std::numeric_limits<ActionIndex>::max();

struct LearnerConfig {
    std::size_t episodes = 3000;  ///< per agent
    double alpha = 0.1;
    double gamma = 1.0;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.8;  ///< share of episodes over which ε falls linearly
    std::size_t episode_length = 0;       ///< 0 takes the model's episode length
    std::uint64_t master_seed = 0;

    void validate() const {
        if (episodes == 0) throw InvalidArgument("learner: episodes must be positive");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("learner: alpha must be in (0, 1]");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("learner: gamma must be in (0, 1]");
        for (double e : {epsilon_start, epsilon_end})
            if (!(e >= 0.0 && e <= 1.0)) throw InvalidArgument("learner: epsilon must be in [0, 1]");
        if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
            throw InvalidArgument("learner: epsilon_decay_fraction must be in (0, 1]");
    }

    [[nodiscard]] double epsilon(std::size_t episode) const {
        const double span = epsilon_decay_fraction * static_cast<double>(episodes);
        if (static_cast<double>(episode) >= span) return epsilon_end;
        const double f = static_cast<double>(episode) / span;
        return epsilon_start + (epsilon_end - epsilon_start) * f;
    }
};

/// Q(o, a) estimates of accumulated cost; only allowed actions are ever read or written.
class QTable {
public:
    QTable() = default;
    QTable(std::vector<ActionMask> allowed, std::size_t actions)
        : allowed_(std::move(allowed)), actions_(actions), q_(allowed_.size() * actions, 0.0) {}

    [[nodiscard]] std::size_t observation_count() const { return allowed_.size(); }
    [[nodiscard]] std::size_t action_count() const { return actions_; }
    [[nodiscard]] ActionMask allowed(ObservationIndex o) const { return allowed_[o]; }
    [[nodiscard]] double operator()(ObservationIndex o, ActionIndex a) const { return q_[o * actions_ + a]; }
    double& at(ObservationIndex o, ActionIndex a) {
        if (!mask_has(allowed_[o], a)) throw NoAllowedAction(0, o);
        return q_[o * actions_ + a];
    }
    [[nodiscard]] const std::vector<double>& values() const { return q_; }

    /// argmin over allowed actions, smallest index on ties; kNoAction if nothing is allowed.
    [[nodiscard]] ActionIndex greedy(ObservationIndex o) const {
        ActionIndex best = kNoAction;
        for (ActionIndex a = 0; a < actions_; ++a)
            if (mask_has(allowed_[o], a) && (best == kNoAction || q_[o * actions_ + a] < q_[o * actions_ + best])) best = a;
        return best;
    }

    /// min over allowed actions (0 when nothing is allowed).
    [[nodiscard]] double best_value(ObservationIndex o) const {
        const ActionIndex a = greedy(o);
        return a == kNoAction ? 0.0 : q_[o * actions_ + a];
    }

    [[nodiscard]] std::vector<ActionIndex> greedy_table() const {
        std::vector<ActionIndex> t(allowed_.size());
        for (ObservationIndex o = 0; o < t.size(); ++o) t[o] = greedy(o);
        return t;
    }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    std::vector<ActionMask> allowed_;
    std::size_t actions_ = 0;
    std::vector<double> q_;
};

/// Deterministic policy as a probabilistic Policy (observations without an action stay empty).
inline Policy to_policy(const std::vector<ActionIndex>& table, std::size_t actions) {
    std::vector<std::optional<ActionIndex>> c(table.size());
    for (std::size_t o = 0; o < table.size(); ++o)
        if (table[o] != kNoAction) c[o] = table[o];
    return Policy::deterministic(c, actions);
}

struct TrainingRow {
    std::size_t agent = 0;  ///< 1-based
    std::size_t episode = 0;
    std::uint64_t seed = 0;
    double total_cost = 0.0;  ///< the training agent's own accumulated cost
    std::size_t unsafe_steps = 0;
};

struct TrainResult {
    QTable q;
    std::shared_ptr<const std::vector<ActionIndex>> policy;
    std::vector<TrainingRow> log;
    std::size_t unsafe_steps = 0;
};

/// Seed of training episode `episode` of agent `agent` (0-based).
[[nodiscard]] inline std::uint64_t training_seed(std::uint64_t master, std::size_t agent, std::size_t episode) {
    return episode_seed(episode_seed(master, agent), episode);
}

/// Tabular TD learning of agent i on the sandbox given by `others` (entries for agents other
/// than i; entry i is ignored). Exploration and greedy choice stay inside the shield.
template <SimModel M>
TrainResult train_agent(const M& m, const ShieldSet& shields, const std::vector<AgentPolicy>& others, std::size_t i,
                        const LearnerConfig& cfg) {
    cfg.validate();
    const std::size_t n = m.agent_count();
    if (others.size() != n) throw InvalidArgument("train_agent: one policy slot per agent required");
    check_initial(m, shields);
    const std::size_t actions = m.local_action_count(i);
    const auto obs_count = static_cast<std::size_t>(m.observation_space(i).size());
    std::vector<ActionMask> allowed(obs_count, full_mask(actions));
    if (i < shields.size() && shields[i]) allowed = shields[i]->masks();

    TrainResult out;
    out.q = QTable(allowed, actions);
    const std::size_t length = cfg.episode_length ? cfg.episode_length : m.episode_length();
    std::vector<ActionMask> masks(n);
    std::vector<ActionIndex> act(n);
    std::vector<double> costs(n);
    for (std::size_t e = 0; e < cfg.episodes; ++e) {
        TrainingRow row{i + 1, e, training_seed(cfg.master_seed, i, e), 0.0, 0};
        SplitMix64 rng(row.seed);
        const double eps = cfg.epsilon(e);
        auto s = m.initial_state();
        if (!m.safe(s)) ++row.unsafe_steps;
        for (std::size_t t = 0; t < length; ++t) {
            const ObservationIndex o = m.observe(s, i);
            for (std::size_t j = 0; j < n; ++j) {
                const ObservationIndex oj = j == i ? o : m.observe(s, j);
                masks[j] = allowed_actions(m, shields, j, oj);
                if (masks[j] == 0) throw NoAllowedAction(j + 1, oj);
                if (j == i) {
                    act[j] = rng.uniform() < eps ? rng.pick_bit(masks[j]) : out.q.greedy(o);
                } else {
                    act[j] = others[j](oj, masks[j], rng);
                }
                if (!mask_has(masks[j], act[j])) throw NoAllowedAction(j + 1, oj);
            }
            s = m.step(s, act, rng, costs);
            if (!m.safe(s)) ++row.unsafe_steps;
            row.total_cost += costs[i];
            const double future = t + 1 < length ? cfg.gamma * out.q.best_value(m.observe(s, i)) : 0.0;
            double& q = out.q.at(o, act[i]);
            q += cfg.alpha * (costs[i] + future - q);
        }
        out.unsafe_steps += row.unsafe_steps;
        out.log.push_back(row);
    }
    out.policy = std::make_shared<const std::vector<ActionIndex>>(out.q.greedy_table());
    return out;
}

struct CascadeResult {
    std::vector<std::size_t> order;
    std::vector<QTable> tables;  ///< by agent
    std::vector<std::shared_ptr<const std::vector<ActionIndex>>> policies;
    std::vector<TrainingRow> log;  ///< in training order
    std::size_t unsafe_steps = 0;

    [[nodiscard]] std::vector<AgentPolicy> agent_policies() const {
        std::vector<AgentPolicy> p;
        for (const auto& t : policies) p.push_back(table_policy(t));
        return p;
    }
};

/// Trains agents one at a time in dependency order; each trains against the already trained
/// agents' greedy policies and uniform shield-respecting behaviour of the untrained ones.
template <SimModel M>
CascadeResult cascading_learn(const M& m, const ShieldSet& shields, const DependencyGraph& g, const LearnerConfig& cfg,
                              std::vector<std::size_t> priority = {}) {
    const std::size_t n = m.agent_count();
    if (g.agent_count() != n) throw InvalidArgument("cascading_learn: graph has the wrong number of agents");
    CascadeResult out;
    out.order = topological_order(g, std::move(priority));
    out.tables.resize(n);
    out.policies.resize(n);
    std::vector<AgentPolicy> current(n, random_policy());
    for (auto i : out.order) {
        auto r = train_agent(m, shields, current, i, cfg);
        current[i] = table_policy(r.policy);
        out.policies[i] = r.policy;
        out.tables[i] = std::move(r.q);
        out.unsafe_steps += r.unsafe_steps;
        out.log.insert(out.log.end(), r.log.begin(), r.log.end());
    }
    return out;
}

/// Models that also expose an indexable global state for joint tabulation.
template <typename M>
concept GlobalIndexModel = SimModel<M> && requires(const M& m, const typename M::state_type& s) {
    { m.global_space() } -> std::convertible_to<StateSpace>;
    { m.global_index(s) } -> std::convertible_to<StateIndex>;
};

struct CentralizedResult {
    QTable q;  ///< over global states and joint actions
    ActionSpace joint;
    std::shared_ptr<const std::vector<ActionIndex>> policy;
    std::vector<TrainingRow> log;
    std::size_t unsafe_steps = 0;
};

/// One learner over the global state and joint action, restricted to the product of the
/// local shields, minimizing the summed cost.
template <GlobalIndexModel M>
CentralizedResult centralized_learn(const M& m, const ShieldSet& shields, const LearnerConfig& cfg) {
    cfg.validate();
    const std::size_t n = m.agent_count();
    std::vector<std::vector<std::string>> labels(n);
    double joint_size = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        labels[i].resize(m.local_action_count(i));
        for (std::size_t a = 0; a < labels[i].size(); ++a) labels[i][a] = std::to_string(a);
        joint_size *= static_cast<double>(labels[i].size());
    }
    const StateSpace space = m.global_space();
    const double entries = space.indexable() ? static_cast<double>(space.size()) * joint_size : std::numeric_limits<double>::infinity();
    if (entries > static_cast<double>(kEnumerationLimit))
        throw TooLarge("centralized Q-table", entries > 1.8e19 ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(entries),
                       kEnumerationLimit);
    if (joint_size > static_cast<double>(kMaxMaskActions)) throw TooLarge("centralized joint actions", static_cast<std::uint64_t>(joint_size), kMaxMaskActions);
    check_initial(m, shields);

    CentralizedResult out{QTable{}, ActionSpace(labels), nullptr, {}, 0};
    const ActionSpace& joint = out.joint;
    // allowed joint actions are filled in lazily when a global state is first visited
    std::vector<ActionMask> allowed(space.size(), full_mask(joint.joint_size()));
    std::vector<bool> known(space.size(), false);
    auto joint_mask = [&](const typename M::state_type& s) {
        ActionMask mask = 0;
        std::vector<ActionMask> local(n);
        for (std::size_t i = 0; i < n; ++i) local[i] = allowed_actions(m, shields, i, m.observe(s, i));
        for (ActionIndex a = 0; a < joint.joint_size(); ++a) {
            bool ok = true;
            for (std::size_t i = 0; i < n && ok; ++i) ok = mask_has(local[i], joint.component(a, i));
            if (ok) mask |= action_bit(a);
        }
        return mask;
    };
    // the table is rebuilt with the final masks at the end; during learning Q lives here
    std::vector<double> q(space.size() * joint.joint_size(), 0.0);
    auto best = [&](StateIndex g) {
        double v = 0.0;
        bool any = false;
        for (ActionIndex a = 0; a < joint.joint_size(); ++a)
            if (mask_has(allowed[g], a) && (!any || q[g * joint.joint_size() + a] < v)) {
                v = q[g * joint.joint_size() + a];
                any = true;
            }
        return v;
    };
    auto greedy = [&](StateIndex g) {
        ActionIndex b = kNoAction;
        for (ActionIndex a = 0; a < joint.joint_size(); ++a)
            if (mask_has(allowed[g], a) && (b == kNoAction || q[g * joint.joint_size() + a] < q[g * joint.joint_size() + b])) b = a;
        return b;
    };
    auto visit = [&](const typename M::state_type& s) {
        const StateIndex g = m.global_index(s);
        if (!known[g]) {
            allowed[g] = joint_mask(s);
            known[g] = true;
        }
        return g;
    };

    const std::size_t length = cfg.episode_length ? cfg.episode_length : m.episode_length();
    std::vector<ActionIndex> act(n);
    std::vector<double> costs(n);
    for (std::size_t e = 0; e < cfg.episodes; ++e) {
        TrainingRow row{0, e, training_seed(cfg.master_seed, 0, e), 0.0, 0};
        SplitMix64 rng(row.seed);
        const double eps = cfg.epsilon(e);
        auto s = m.initial_state();
        if (!m.safe(s)) ++row.unsafe_steps;
        for (std::size_t t = 0; t < length; ++t) {
            const StateIndex g = visit(s);
            if (allowed[g] == 0) throw NoAllowedAction(0, g);
            const ActionIndex a = rng.uniform() < eps ? rng.pick_bit(allowed[g]) : greedy(g);
            for (std::size_t i = 0; i < n; ++i) act[i] = joint.component(a, i);
            s = m.step(s, act, rng, costs);
            if (!m.safe(s)) ++row.unsafe_steps;
            double c = 0.0;
            for (double x : costs) c += x;
            row.total_cost += c;
            const double future = t + 1 < length ? cfg.gamma * best(visit(s)) : 0.0;
            double& cell = q[g * joint.joint_size() + a];
            cell += cfg.alpha * (c + future - cell);
        }
        out.unsafe_steps += row.unsafe_steps;
        out.log.push_back(row);
    }
    for (StateIndex g = 0; g < space.size(); ++g)
        if (!known[g]) allowed[g] = 0;
    QTable table(allowed, joint.joint_size());
    for (StateIndex g = 0; g < space.size(); ++g)
        for (ActionIndex a = 0; a < joint.joint_size(); ++a)
            if (mask_has(allowed[g], a)) table.at(g, a) = q[g * joint.joint_size() + a];
    out.q = std::move(table);
    out.policy = std::make_shared<const std::vector<ActionIndex>>(out.q.greedy_table());
    return out;
}

/// Joint chooser that plays a centralized greedy table (unvisited states fall back to the
/// smallest allowed joint action).
template <GlobalIndexModel M>
JointChooser<M> centralized_chooser(const M& m, const CentralizedResult& r) {
    return [&m, policy = r.policy, joint = r.joint](const typename M::state_type& s, std::span<const ActionMask> allowed,
                                                   SplitMix64&, std::span<ActionIndex> out) {
        ActionIndex a = (*policy)[m.global_index(s)];
        auto fits = [&](ActionIndex x) {
            for (std::size_t i = 0; i < allowed.size(); ++i)
                if (!mask_has(allowed[i], joint.component(x, i))) return false;
            return true;
        };
        if (a == kNoAction || !fits(a)) {
            a = kNoAction;
            for (ActionIndex x = 0; x < joint.joint_size() && a == kNoAction; ++x)
                if (fits(x)) a = x;
            if (a == kNoAction) throw NoAllowedAction(0, m.global_index(s));
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = joint.component(a, i);
    };
}

inline void write_training_csv(std::ostream& out, const std::vector<TrainingRow>& rows) {
    out << "agent,episode,seed,total_cost,unsafe_steps\n";
    for (const auto& r : rows)
        out << r.agent << ',' << r.episode << ',' << r.seed << ',' << format_fixed(r.total_cost) << ',' << r.unsafe_steps << '\n';
}

/// DPOLICY v1: header, `agent <i>`, `actions <m>`, `observations <k>`, then one line per
/// observation with the action index or `-`.
inline void write_policy(std::ostream& out, std::size_t agent, std::size_t actions, const std::vector<ActionIndex>& table) {
    out << "DPOLICY v1\nagent " << agent << "\nactions " << actions << "\nobservations " << table.size() << '\n';
    for (auto a : table) {
        if (a == kNoAction)
            out << "-\n";
        else
            out << a << '\n';
    }
}

struct PolicyFile {
    std::size_t agent = 0;
    std::size_t actions = 0;
    std::vector<ActionIndex> table;
};

inline PolicyFile read_policy(std::istream& in) {
    PolicyFile p;
    std::string line;
    std::size_t lineno = 0;
    auto next = [&]() -> std::string {
        if (!std::getline(in, line)) throw FormatError(lineno + 1, "unexpected end of policy file");
        ++lineno;
        return line;
    };
    auto field = [&](const std::string& key) {
        const std::string l = next();
        const std::string prefix = key + " ";
        if (l.rfind(prefix, 0) != 0) throw FormatError(lineno, "expected '" + key + "'");
        std::size_t v = 0;
        const auto* b = l.data() + prefix.size();
        const auto [ptr, ec] = std::from_chars(b, l.data() + l.size(), v);
        if (ec != std::errc() || ptr != l.data() + l.size() || b == ptr) throw FormatError(lineno, "bad number");
        return v;
    };
    if (next() != "DPOLICY v1") throw FormatError(lineno, "expected 'DPOLICY v1'");
    p.agent = field("agent");
    p.actions = field("actions");
    const std::size_t count = field("observations");
    p.table.resize(count);
    for (auto& a : p.table) {
        const std::string l = next();
        if (l == "-") {
            a = kNoAction;
            continue;
        }
        const auto [ptr, ec] = std::from_chars(l.data(), l.data() + l.size(), a);
        if (ec != std::errc() || ptr != l.data() + l.size() || l.empty() || a >= p.actions) throw FormatError(lineno, "bad action");
    }
    if (std::getline(in, line)) throw FormatError(lineno + 1, "trailing content");
    return p;
}

inline void save_policy(const std::string& path, std::size_t agent, std::size_t actions, const std::vector<ActionIndex>& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_policy(out, agent, actions, table);
}

inline PolicyFile load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    return read_policy(in);
}

} // namespace agshield
