#include "agshield/agshield.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using namespace agshield;

namespace {

struct Options {
    std::string command;
    std::string case_name = "platoon";
    std::string params;
    std::string out;
    std::string backend = "compositional";
    std::string policies;
    std::string shields;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> episodes;
    std::optional<int> n;
    std::optional<int> d_max;
    std::optional<double> alpha;
    std::size_t jobs = 0;
    bool no_assumptions = false;
    bool random = false;
    bool centralized = false;
};

/// Everything read from the parameter file and the flags that override it.
struct Experiment {
    platoon::PlatoonParams platoon;
    plant::PlantParams plant;
    LearnerConfig learner;
    std::size_t eval_episodes = 1000;
    std::uint64_t seed = 0;
};

class Failure : public std::runtime_error {
public:
    explicit Failure(const std::string& what) : std::runtime_error(what) {}
};

Experiment load_experiment(const Options& o) {
    ParamFile f = o.params.empty() ? ParamFile{} : ParamFile::load(o.params);
    if (o.n) f.set("n", std::to_string(*o.n));
    if (o.d_max) f.set("d_max", std::to_string(*o.d_max));
    if (o.seed) f.set("seed", std::to_string(*o.seed));
    if (o.episodes) f.set("episodes", std::to_string(*o.episodes));
    if (o.alpha) f.set("alpha", std::to_string(*o.alpha));

    Experiment e;
    if (o.case_name == "platoon") e.platoon.read(f);
    if (o.case_name == "plant") e.plant.read(f);
    f.get("seed", e.seed);
    // one key, read by whichever phase the command runs
    if (o.command == "eval")
        f.get("episodes", e.eval_episodes);
    else
        f.get("episodes", e.learner.episodes);
    f.get("alpha", e.learner.alpha);
    f.get("gamma", e.learner.gamma);
    f.get("epsilon_start", e.learner.epsilon_start);
    f.get("epsilon_end", e.learner.epsilon_end);
    f.get("epsilon_decay_fraction", e.learner.epsilon_decay_fraction);
    f.finish();
    e.learner.master_seed = e.seed;
    e.learner.validate();
    if (o.case_name == "platoon") e.platoon.validate();
    if (o.case_name == "plant") {
        e.plant.validate();
        plant::check_consumers(e.plant, plant::PlantTopology::standard());
    }
    return e;
}

fs::path output_dir(const Options& o) {
    fs::path dir = o.out;
    if (dir.empty()) {
        const char* env = std::getenv("AGSHIELD_OUT");
        dir = env && *env ? env : ".";
    }
    fs::create_directories(dir);
    return dir;
}

std::size_t worker_count(const Options& o) { return o.jobs ? o.jobs : std::max(1U, std::thread::hardware_concurrency()); }

void echo(const fs::path& p) { std::cout << p.string() << '\n'; }

std::unique_ptr<CompositionalModel> compositional_model(const Options& o, const Experiment& e) {
    if (o.case_name == "platoon") return std::make_unique<platoon::PlatoonModel>(e.platoon);
    if (o.case_name == "plant") return std::make_unique<plant::PlantModel>(e.plant);
    return std::make_unique<toy::CornerModel>();
}

std::vector<Projection> projections_of(const CompositionalModel& m) {
    std::vector<Projection> out;
    for (std::size_t i = 0; i < m.agent_count(); ++i) out.push_back(m.projection(i));
    return out;
}

/// Global LTS and per-agent properties for the oracle (small instances only).
struct GlobalInstance {
    Lts lts;
    std::vector<SafetyProp> guarantees;
};

GlobalInstance global_instance(const Options& o, const Experiment& e) {
    if (o.case_name == "toy") return {toy::corner_lts(), toy::corner_guarantees()};
    if (o.case_name == "platoon") {
        GlobalInstance g{platoon::global_lts(e.platoon), {}};
        for (int i = 0; i + 1 < e.platoon.n; ++i) g.guarantees.push_back(platoon::agent_guarantee(e.platoon, static_cast<std::size_t>(i)));
        return g;
    }
    throw Failure("the oracle backend needs an explicit global model; not available for --case plant");
}

std::string shield_file(const std::string& key) { return "shield_" + key + ".dshield"; }

/// Shields per agent, loaded from `--shields` when given, otherwise synthesized in process.
ShieldSet agent_shields(const Options& o, const Experiment& e) {
    const auto model = compositional_model(o, e);
    const bool assume = !o.no_assumptions;
    if (o.shields.empty()) {
        const auto r = assume_guarantee_synthesize(*model, assume);
        return {r.shields.begin(), r.shields.end()};
    }
    ShieldSet out;
    std::map<std::string, std::shared_ptr<const Shield>> cache;
    for (std::size_t i = 0; i < model->agent_count(); ++i) {
        const std::string key = model->symmetry_key(i, assume);
        if (!cache.count(key)) {
            const fs::path p = fs::path(o.shields) / shield_file(key);
            auto s = std::make_shared<const Shield>(load_shield(p.string()));
            if (!s->space().same_shape(model->projection(i).target()))
                throw Failure(p.string() + ": observation space does not match agent " + std::to_string(i + 1));
            cache.emplace(key, std::move(s));
        }
        out.push_back(cache.at(key));
    }
    return out;
}

// ---- synth ----

int cmd_synth(const Options& o) {
    const Experiment e = load_experiment(o);
    const fs::path dir = output_dir(o);
    const auto model = compositional_model(o, e);
    std::vector<std::pair<std::string, std::shared_ptr<const Shield>>> files;
    std::vector<AgentSynthesisStats> stats;

    if (o.backend == "oracle") {
        const auto g = global_instance(o, e);
        std::vector<SafetyProp> guarantees = g.guarantees;
        if (o.no_assumptions) throw Failure("--no-assumptions applies to the compositional backend only");
        const auto start = std::chrono::steady_clock::now();
        const auto shields = oracle_global_pipeline(g.lts, projections_of(*model), guarantees);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        for (std::size_t i = 0; i < shields.size(); ++i) {
            auto s = std::make_shared<const Shield>(shields[i]);
            stats.push_back({"oracle-agent" + std::to_string(i + 1), s->winning_fraction(), s->size(), secs, false});
            files.emplace_back(stats.back().key, s);
        }
    } else {
        const auto r = assume_guarantee_synthesize(*model, !o.no_assumptions);
        stats = r.report.agents;
        files = r.variants();
        if (!r.report.compatible) std::cerr << "warning: some local shield is not winning at the initial state\n";
    }

    const fs::path report = dir / "synth_report.csv";
    std::ofstream rep(report, std::ios::binary);
    rep << "agent,key,winning_fraction,shield_size,seconds,reused\n";
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        rep << i + 1 << ',' << s.key << ',' << format_fixed(s.winning_fraction) << ',' << s.shield_size << ','
            << format_fixed(s.seconds) << ',' << (s.reused ? 1 : 0) << '\n';
        std::fprintf(stderr, "agent %zu  %-28s winning %.4f  size %llu  %.3f s%s\n", i + 1, s.key.c_str(), s.winning_fraction,
                     static_cast<unsigned long long>(s.shield_size), s.seconds, s.reused ? "  (reused)" : "");
    }
    rep.close();
    for (const auto& [key, shield] : files) {
        const fs::path p = dir / shield_file(key);
        save_shield(p.string(), *shield);
        echo(p);
    }
    echo(report);
    return 0;
}

// ---- check ----

void print_run(const Run& r, const Lts& t) {
    std::cerr << "counterexample:";
    for (std::size_t k = 0; k < r.states.size(); ++k) {
        const State s = t.space().decode(r.states[k]);
        std::cerr << " (";
        for (std::size_t d = 0; d < s.coords.size(); ++d) std::cerr << (d ? "," : "") << t.space().dim(d).value(s[d]);
        std::cerr << ')';
        if (k < r.actions.size()) std::cerr << " -[" << detail::action_label(t.actions(), r.actions[k]) << "]->";
    }
    std::cerr << '\n';
}

int cmd_check(const Options& o) {
    const Experiment e = load_experiment(o);
    const auto model = compositional_model(o, e);
    const auto g = global_instance(o, e);
    const auto prjs = projections_of(*model);
    bool ok = true;

    // both backends must agree, including on an empty winning set
    std::optional<std::size_t> comp_empty, oracle_empty;
    ShieldSet shields;
    std::vector<Shield> oracle;
    try {
        shields = agent_shields(o, e);
    } catch (const EmptyWinningSet& x) {
        comp_empty = x.agent();
    }
    try {
        oracle = oracle_global_pipeline(g.lts, prjs, g.guarantees);
    } catch (const EmptyWinningSet& x) {
        oracle_empty = x.agent();
    }
    if (comp_empty || oracle_empty) {
        ok = comp_empty == oracle_empty;
        std::cerr << "compositional: " << (comp_empty ? "empty winning set for agent " + std::to_string(*comp_empty) : "shields exist")
                  << "; oracle: " << (oracle_empty ? "empty winning set for agent " + std::to_string(*oracle_empty) : "shields exist") << '\n';
        std::cout << (ok ? "PASS" : "FAIL") << '\n';
        return ok ? 0 : 1;
    }
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        const bool same = oracle[i].masks() == shields[i]->masks();
        std::cerr << "agent " << i + 1 << ": " << (same ? "identical to oracle" : "DIFFERS from oracle") << '\n';
        ok = ok && same;
    }

    const auto d = std::get<DistributedShield>(compose_distributed(shields, prjs, g.lts.actions()));
    Bitset init(g.lts.state_count());
    for (StateIndex s = 0; s < g.lts.state_count(); ++s)
        if (d.winning(s)) init.set(s);
    const Lts shielded = Lts::from_generator(
        g.lts.space(), g.lts.actions(),
        [t = g.lts, d](StateIndex s, ActionIndex a, std::vector<StateIndex>& out) {
            if (d.allows(s, a)) t.successors(s, a, out);
        },
        DeadEnds::allow);
    const SafetyProp phi = intersect(g.guarantees);
    const auto v = check_models(shielded, SafetyProp(std::function<bool(StateIndex)>([&](StateIndex s) { return phi.contains(s) && d.winning(s); })), init);
    if (const auto* cex = std::get_if<Counterexample>(&v)) {
        print_run(cex->run, g.lts);
        ok = false;
    } else {
        std::cerr << "distributed shield safe from " << init.count() << " winning states\n";
    }
    std::cout << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? 0 : 1;
}

// ---- learn / eval ----

struct ChainToy {
    MdpSimModel sim;
    static MdpSimModel make() {
        std::vector<AgentCostFn> costs;
        for (std::size_t id = 0; id < 2; ++id) costs.push_back([id](ObservationIndex x, ActionIndex a) { return toy::chain_cost(id, x, a); });
        return {AgentMdp(toy::chain_mdp(), toy::chain_projections()), costs, 0, toy::kChainHorizon};
    }
};

std::string policy_file(std::size_t agent) { return "policy_agent_" + std::to_string(agent) + ".dpolicy"; }

template <SimModel M>
int learn_with(const Options& o, const Experiment& e, const M& sim, const ShieldSet& shields, const DependencyGraph& graph,
               std::vector<std::size_t> priority) {
    const fs::path dir = output_dir(o);
    std::vector<TrainingRow> log;
    std::size_t unsafe = 0;
    std::vector<fs::path> written;
    if (o.centralized) {
        if constexpr (GlobalIndexModel<M>) {
            const auto r = centralized_learn(sim, shields, e.learner);
            const fs::path p = dir / "policy_centralized.dpolicy";
            save_policy(p.string(), 0, r.joint.joint_size(), *r.policy);
            written.push_back(p);
            log = r.log;
            unsafe = r.unsafe_steps;
        } else {
            throw Failure("--centralized needs a model with an indexable global state");
        }
    } else {
        const auto r = cascading_learn(sim, shields, graph, e.learner, std::move(priority));
        std::cerr << "training order:";
        for (auto i : r.order) std::cerr << ' ' << i + 1;
        std::cerr << '\n';
        for (std::size_t i = 0; i < r.policies.size(); ++i) {
            const fs::path p = dir / policy_file(i + 1);
            save_policy(p.string(), i + 1, sim.local_action_count(i), *r.policies[i]);
            written.push_back(p);
        }
        log = r.log;
        unsafe = r.unsafe_steps;
    }
    const fs::path csv = dir / "training.csv";
    std::ofstream out(csv, std::ios::binary);
    write_training_csv(out, log);
    out.close();
    written.push_back(csv);
    for (const auto& p : written) echo(p);
    std::cerr << "unsafe training steps: " << unsafe << '\n';
    return unsafe == 0 ? 0 : 1;
}

int cmd_learn(const Options& o) {
    const Experiment e = load_experiment(o);
    if (o.case_name == "platoon") {
        const platoon::PlatoonSim sim(e.platoon);
        return learn_with(o, e, sim, agent_shields(o, e), build_dependency_graph(sim.agent_count(), platoon::declared_dependencies(e.platoon)), {});
    }
    if (o.case_name == "plant") {
        const plant::PlantSim sim(e.plant);
        return learn_with(o, e, sim, agent_shields(o, e), build_dependency_graph(sim.agent_count(), plant::declared_dependencies(sim.topology())),
                          plant::learning_priority());
    }
    const MdpSimModel sim = ChainToy::make();
    const auto graph = build_dependency_graph(sim.mdp(), toy::chain_dependencies(), {}, toy::kChainHorizon, 0);
    return learn_with(o, e, sim, {}, graph, {});
}

template <SimModel M>
std::vector<AgentPolicy> load_policies(const Options& o, const M& sim) {
    std::vector<AgentPolicy> out;
    for (std::size_t i = 0; i < sim.agent_count(); ++i) {
        const fs::path p = fs::path(o.policies) / policy_file(i + 1);
        auto f = load_policy(p.string());
        if (f.agent != i + 1 || f.actions != sim.local_action_count(i) || f.table.size() != sim.observation_space(i).size())
            throw Failure(p.string() + ": does not fit agent " + std::to_string(i + 1));
        out.push_back(table_policy(std::make_shared<const std::vector<ActionIndex>>(std::move(f.table))));
    }
    return out;
}

template <SimModel M>
int eval_with(const Options& o, const Experiment& e, const M& sim, const ShieldSet& shields) {
    if (o.random == !o.policies.empty()) throw Failure("eval needs exactly one of --random and --policies <dir>");
    const auto policies = o.random ? std::vector<AgentPolicy>(sim.agent_count(), random_policy()) : load_policies(o, sim);
    const auto st = evaluate(sim, policies, shields, e.eval_episodes, e.seed, worker_count(o));
    const fs::path dir = output_dir(o);
    const fs::path csv = dir / (o.random ? "eval_random.csv" : "eval_policies.csv");
    std::ofstream out(csv, std::ios::binary);
    write_eval_csv(out, st);
    out.close();
    std::fprintf(stderr, "episodes %zu  mean %.6f  min %.6f  max %.6f  fraction_safe %.6f\n", st.episodes, st.mean_cost, st.min_cost,
                 st.max_cost, st.fraction_safe);
    echo(csv);
    return shields.empty() || st.fraction_safe == 1.0 ? 0 : 1;
}

int cmd_eval(const Options& o) {
    const Experiment e = load_experiment(o);
    if (o.case_name == "platoon") return eval_with(o, e, platoon::PlatoonSim(e.platoon), agent_shields(o, e));
    if (o.case_name == "plant") return eval_with(o, e, plant::PlantSim(e.plant), agent_shields(o, e));
    return eval_with(o, e, ChainToy::make(), {});
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Assume-guarantee distributed shields and cascading learning"};
    app.require_subcommand(1);
    Options o;

    auto common = [&o](CLI::App* sub) {
        sub->add_option("--case", o.case_name, "Case study")->check(CLI::IsMember({"platoon", "plant", "toy"}));
        sub->add_option("--params", o.params, "key = value parameter file")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output directory (default $AGSHIELD_OUT, else .)");
        sub->add_option("--seed", o.seed, "Master seed");
        sub->add_option("--n", o.n, "Platoon size");
        sub->add_option("--dmax", o.d_max, "Platoon maximum gap");
        sub->add_flag("--no-assumptions", o.no_assumptions, "Synthesize local games without earlier guarantees");
        sub->add_option("--shields", o.shields, "Directory with shield files (default: synthesize)")->check(CLI::ExistingDirectory);
        sub->add_option("--jobs", o.jobs, "Worker threads");
    };

    auto* synth = app.add_subcommand("synth", "Synthesize local shields");
    common(synth);
    synth->add_option("--backend", o.backend, "Synthesis backend")->check(CLI::IsMember({"compositional", "oracle"}));

    auto* check = app.add_subcommand("check", "Compare against the global oracle and model-check the distributed shield");
    common(check);

    auto* learn = app.add_subcommand("learn", "Train shielded policies");
    common(learn);
    learn->add_option("--episodes", o.episodes, "Training episodes per agent");
    learn->add_option("--alpha", o.alpha, "Learning rate");
    learn->add_flag("--centralized", o.centralized, "One learner over the joint state and action");

    auto* eval = app.add_subcommand("eval", "Evaluate policies under the shields");
    common(eval);
    eval->add_option("--episodes", o.episodes, "Evaluation episodes");
    eval->add_flag("--random", o.random, "Uniform shield-respecting baseline");
    eval->add_option("--policies", o.policies, "Directory with policy files")->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);
    o.command = app.get_subcommands().front()->get_name();

    try {
        if (o.command == "synth") return cmd_synth(o);
        if (o.command == "check") return cmd_check(o);
        if (o.command == "learn") return cmd_learn(o);
        return cmd_eval(o);
    } catch (const EmptyWinningSet& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
