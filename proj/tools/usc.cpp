// usc: command-line driver for uniform sequential circuit simulations.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include "run_config.hpp"

#include "usc/errors.hpp"
#include "usc/evolution.hpp"
#include "usc/qexport.hpp"
#include "usc/umps.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace usc;
using namespace usc::cli;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

bool g_quiet = false;

void log(const std::string& line) {
    if (!g_quiet) std::cerr << line << std::endl;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : ""; }

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

fs::path run_dir(const RunConfig& c) {
    fs::path d = fs::path(c.output_root) / c.name;
    fs::create_directories(d);
    return d;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << text;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot read " + p.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(p.string() + ": not valid JSON");
    return j;
}

json manifest_base(const RunConfig& c, const std::string& command) {
    return {{"schema", kCsvSchema}, {"command", command}, {"config_hash", c.hash}, {"config", c.doc}};
}

Matrix operator_by_name(const std::string& name) {
    if (name == "x") return pauli(1);
    if (name == "y") return pauli(2);
    return pauli(3);
}

// ---- checkpoints ----

struct Checkpoint {
    int step = 0;
    double t = 0.0;
    SpinHamiltonian ham;
    double dt = 0.0;
    int order = 2;
    StateUnitary theta;
    std::optional<StateUnitary> prev;
    double sz = 0.0;
    std::string config_hash;
};

json checkpoint_json(const RunConfig& c, int step, double t, const StateUnitary& theta,
                     const StateUnitary* prev, const EvolutionRecord& rec) {
    return {{"schema", kCsvSchema},
            {"config_hash", c.hash},
            {"step", step},
            {"t", t},
            {"model", {{"J", c.sim.ham.J}, {"g", c.sim.ham.g}, {"h", c.sim.ham.h}}},
            {"trotter", {{"dt", c.sim.dt}, {"order", c.sim.order}}},
            {"theta", to_json(theta)},
            {"theta_prev", prev ? to_json(*prev) : json(nullptr)},
            {"lambda", {rec.lambda.real(), rec.lambda.imag()}},
            {"sz", rec.sz},
            {"sx", rec.sx},
            {"entropy", rec.entropy}};
}

Checkpoint load_checkpoint(const fs::path& p) {
    json j = read_json(p);
    Checkpoint k;
    try {
        k.step = j.at("step").get<int>();
        k.t = j.at("t").get<double>();
        k.ham = {j.at("model").at("J").get<double>(), j.at("model").at("g").get<double>(),
                 j.at("model").at("h").get<double>()};
        k.dt = j.at("trotter").at("dt").get<double>();
        k.order = j.at("trotter").at("order").get<int>();
        k.theta = state_unitary_from_json(j.at("theta"));
        if (!j.at("theta_prev").is_null()) k.prev = state_unitary_from_json(j.at("theta_prev"));
        k.sz = j.at("sz").get<double>();
        k.config_hash = j.at("config_hash").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(p.string() + ": malformed checkpoint (" + e.what() + ")");
    }
    return k;
}

std::vector<fs::path> list_checkpoints(const fs::path& run) {
    std::vector<fs::path> out;
    const fs::path dir = run / "checkpoints";
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::string checkpoint_name(int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%06d.json", step);
    return buf;
}

// ---- evolve ----

const char* kStepHeader =
    "step,t,odd,lambda_re,lambda_im,infidelity_step,m_accum,sz,sx,entropy,infidelity_ref,ref_sz,"
    "max_env_fit_error,iterations";

std::string step_row(const EvolutionRecord& r) {
    std::ostringstream s;
    s << r.step << ',' << num(r.t) << ',' << (r.odd ? 1 : 0) << ',' << num(r.lambda.real()) << ','
      << num(r.lambda.imag()) << ',' << num(r.infidelity_step) << ',' << num(r.m_accum) << ',' << num(r.sz) << ','
      << num(r.sx) << ',' << num(r.entropy) << ',' << opt_num(r.infidelity_ref) << ',' << opt_num(r.ref_sz) << ','
      << num(r.max_env_fit_error) << ',' << r.iterations;
    return s.str();
}

struct EvolveOutcome {
    SimulationResult result;
    double seconds = 0.0;
};

EvolveOutcome evolve_into(const RunConfig& c, const fs::path& dir) {
    fs::create_directories(dir / "checkpoints");
    const int n_steps = static_cast<int>(std::lround(c.sim.t_max / c.sim.dt));
    StateUnitary prev = StateUnitary::identity(c.sim.n_qubits, c.sim.m_u, Representation::Left);
    EvolutionRecord rec0;
    rec0.sz = 1.0;
    write_text(dir / "checkpoints" / checkpoint_name(0), checkpoint_json(c, 0, 0.0, prev, nullptr, rec0).dump(1));
    int last_written = 0;
    StateUnitary last_prev = prev, last_theta = prev;
    EvolutionRecord last_rec = rec0;

    const auto start = std::chrono::steady_clock::now();
    auto callback = [&](const EvolutionRecord& r, const StateUnitary& theta, const StepResult&) {
        if (r.step % c.checkpoint_every == 0) {
            write_text(dir / "checkpoints" / checkpoint_name(r.step),
                       checkpoint_json(c, r.step, r.t, theta, &prev, r).dump(1));
            last_written = r.step;
        }
        last_prev = prev;
        last_theta = theta;
        last_rec = r;
        prev = theta;
        if (r.step % std::max(1, n_steps / 20) == 0 || r.step == n_steps) {
            std::ostringstream s;
            s << "step " << r.step << "/" << n_steps << " t=" << r.t << " 1-|lambda|^2=" << r.infidelity_step;
            if (r.infidelity_ref) s << " 1-F_ref=" << *r.infidelity_ref;
            log(s.str());
        }
    };
    EvolveOutcome out;
    out.result = run_simulation(c.sim, callback);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (last_rec.step != last_written)
        write_text(dir / "checkpoints" / checkpoint_name(last_rec.step),
                   checkpoint_json(c, last_rec.step, last_rec.t, last_theta, &last_prev, last_rec).dump(1));

    std::ostringstream csv;
    csv << "# schema=" << kCsvSchema << " config_hash=" << c.hash << "\n" << kStepHeader << "\n";
    for (const auto& r : out.result.records) csv << step_row(r) << "\n";
    write_text(dir / "steps.csv", csv.str());
    return out;
}

int cmd_evolve(const RunConfig& c) {
    const fs::path dir = run_dir(c);
    auto o = evolve_into(c, dir);
    const auto& r = o.result;
    json m = manifest_base(c, "evolve");
    m["n_qubits"] = c.sim.n_qubits;
    m["steps"] = static_cast<int>(r.records.size()) - 1;
    m["t_star"] = opt_json(r.t_star);
    m["m_cross"] = opt_json(r.m_cross);
    m["failed"] = r.failed;
    m["failure"] = r.failure;
    m["wall_seconds"] = o.seconds;
    m["files"] = {"steps.csv", "checkpoints/"};
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    log("wrote " + (dir / "steps.csv").string());
    if (r.failed) {
        std::cerr << "usc: evolution failed: " << r.failure << std::endl;
        return kExitNumerical;
    }
    return 0;
}

// ---- reachable-time ----

int cmd_reachable_time(const RunConfig& c) {
    const fs::path dir = run_dir(c);
    std::ostringstream csv;
    csv << "# schema=" << kCsvSchema << " config_hash=" << c.hash << "\nn_qubits,t_star,m_cross,failed\n";
    std::vector<double> xs, ys;
    json rows = json::array();
    bool any_failed = false;
    for (int n : c.scan_n_qubits) {
        RunConfig rc = c;
        rc.sim.n_qubits = n;
        rc.sim.reference = true;
        rc.sim.stop_after_threshold = true;
        log("reachable-time: N_q=" + std::to_string(n));
        auto o = evolve_into(rc, dir / ("nq" + std::to_string(n)));
        const auto& r = o.result;
        any_failed = any_failed || r.failed;
        csv << n << ',' << opt_num(r.t_star) << ',' << opt_num(r.m_cross) << ',' << (r.failed ? 1 : 0) << "\n";
        rows.push_back({{"n_qubits", n}, {"t_star", opt_json(r.t_star)}, {"m_cross", opt_json(r.m_cross)},
                        {"failed", r.failed}, {"wall_seconds", o.seconds}});
        if (r.t_star) {
            xs.push_back(n);
            ys.push_back(*r.t_star);
        }
    }
    write_text(dir / "reachable_time.csv", csv.str());
    json m = manifest_base(c, "reachable-time");
    m["rows"] = rows;
    if (xs.size() >= 2) {
        auto f = fit_line(xs, ys);
        bool increasing = true;
        for (size_t i = 1; i < ys.size(); ++i) increasing = increasing && ys[i] > ys[i - 1];
        m["linear_fit"] = {{"slope", f.slope}, {"intercept", f.intercept},
                           {"max_relative_residual", f.max_relative_residual}};
        m["strictly_increasing"] = increasing;
    }
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    return any_failed ? kExitNumerical : 0;
}

// ---- environment studies ----

Environments checkpoint_environments(const Checkpoint& k) {
    if (!k.prev) throw ConfigError("checkpoint at step " + std::to_string(k.step) + " has no previous state");
    return exact_environments(step_transfer(*k.prev, k.theta, build_trotter_step(k.ham, k.dt, k.order)));
}

int cmd_fit_env(const RunConfig& c) {
    if (c.checkpoint.empty()) throw ConfigError("input.checkpoint: required for fit-env");
    Checkpoint k = load_checkpoint(c.checkpoint);
    auto env = checkpoint_environments(k);
    const int m_e = c.sim.step.m_e;
    auto fl = fit_layered_environment(env.l.vector.normalized(), m_e, nullptr, c.sim.step.fit);
    auto fr = fit_layered_environment(env.r.vector.normalized(), m_e, nullptr, c.sim.step.fit);
    json m = manifest_base(c, "fit-env");
    m["checkpoint"] = c.checkpoint;
    m["step"] = k.step;
    m["t"] = k.t;
    m["m_e"] = m_e;
    m["env_qubits"] = fl.env.circuit->n_qubits;
    m["lambda"] = {env.lambda.real(), env.lambda.imag()};
    m["fit_error_l"] = fl.err;
    m["fit_error_r"] = fr.err;
    m["sweeps"] = {fl.sweeps, fr.sweeps};
    m["l_circuit"] = to_json(*fl.env.circuit);
    m["r_circuit"] = to_json(*fr.env.circuit);
    const fs::path dir = run_dir(c);
    write_text(dir / "fit_env.json", m.dump(2) + "\n");
    std::cout << "M_E=" << m_e << " fit error l=" << fl.err << " r=" << fr.err << std::endl;
    return 0;
}

int cmd_env_scaling(const RunConfig& c) {
    if (c.runs.empty()) throw ConfigError("input.runs: env-scaling needs at least one evolve run directory");
    const int max_m_e = *std::max_element(c.scan_m_e.begin(), c.scan_m_e.end());
    std::ostringstream csv;
    csv << "# schema=" << kCsvSchema << " config_hash=" << c.hash << "\nn_qubits,m_e,env_qubits,max_fit_error,checkpoints\n";
    json rows = json::array();
    bool threshold_ok = true;
    for (const auto& run : c.runs) {
        const json man = read_json(fs::path(run) / "manifest.json");
        std::optional<double> t_star;
        if (man.contains("t_star") && !man["t_star"].is_null()) t_star = man["t_star"].get<double>();
        auto files = list_checkpoints(run);
        std::vector<double> worst(max_m_e, 0.0);
        int used = 0, n_qubits = 0, env_qubits = 0;
        for (const auto& f : files) {
            Checkpoint k = load_checkpoint(f);
            if (!k.prev || (t_star && k.t > *t_star + 1e-12)) continue;
            auto env = checkpoint_environments(k);
            n_qubits = k.theta.n_qubits;
            for (const Vector* v : {&env.l.vector, &env.r.vector}) {
                auto scan = fit_layered_environment_scan(v->normalized(), max_m_e, c.sim.step.fit);
                env_qubits = scan[0].env.circuit->n_qubits;
                for (int m = 0; m < max_m_e; ++m) worst[m] = std::max(worst[m], scan[m].err);
            }
            ++used;
        }
        if (used == 0) throw ConfigError(run + ": no usable checkpoints (need checkpoints with a previous state)");
        log("env-scaling: " + run + " N_q=" + std::to_string(n_qubits) + " checkpoints=" + std::to_string(used));
        for (int m : c.scan_m_e) {
            const double e = worst[m - 1];
            csv << n_qubits << ',' << m << ',' << env_qubits << ',' << num(e) << ',' << used << "\n";
            rows.push_back({{"n_qubits", n_qubits}, {"m_e", m}, {"env_qubits", env_qubits}, {"max_fit_error", e},
                            {"checkpoints", used}, {"run", run}});
            if (m == n_qubits - 1 && !(e < 1e-4)) threshold_ok = false;
        }
    }
    const fs::path dir = run_dir(c);
    write_text(dir / "env_scaling.csv", csv.str());
    json m = manifest_base(c, "env-scaling");
    m["rows"] = rows;
    m["m_e_equal_nq_minus_1_below_1e-4"] = threshold_ok;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    std::cout << "M_E = N_q-1 below 1e-4: " << (threshold_ok ? "yes" : "no") << std::endl;
    return 0;
}

// ---- observables ----

int cmd_observables(const RunConfig& c) {
    if (c.checkpoint.empty()) throw ConfigError("input.checkpoint: required for observables");
    Checkpoint k = load_checkpoint(c.checkpoint);
    UniformMps mps = circuit_to_umps(k.theta);
    json m = manifest_base(c, "observables");
    m["checkpoint"] = c.checkpoint;
    m["step"] = k.step;
    m["t"] = k.t;
    for (int p = 1; p <= 3; ++p) m[std::string("s") + "xyz"[p - 1]] = local_expectation_mps(mps, pauli(p)).real();
    m["entropy"] = entanglement_entropy(mps);
    RealVector sp = schmidt_spectrum(mps);
    m["schmidt"] = std::vector<double>(sp.data(), sp.data() + sp.size());
    json zz = json::array();
    for (int d = 1; d <= 5; ++d) zz.push_back(correlation_mps(mps, pauli(3), pauli(3), d).real());
    m["zz"] = zz;
    const double xx = correlation_mps(mps, pauli(1), pauli(1), 1).real();
    m["energy_density"] = k.ham.J * xx + k.ham.g * m["sz"].get<double>() + k.ham.h * m["sx"].get<double>();
    const fs::path dir = run_dir(c);
    write_text(dir / "observables.json", m.dump(2) + "\n");
    json summary;
    for (const char* key : {"t", "sx", "sy", "sz", "entropy", "energy_density"}) summary[key] = m[key];
    std::cout << summary.dump() << std::endl;
    return 0;
}

// ---- export-circuit ----

std::string qasm_with_hash(const GateCircuit& circ, const std::string& hash) {
    std::string text = export_qasm(circ);
    const std::string anchor = "include \"qelib1.inc\";\n";
    const auto pos = text.find(anchor);
    return text.insert(pos + anchor.size(), "// config_hash=" + hash + "\n");
}

int cmd_export_circuit(const RunConfig& c) {
    if (c.checkpoint.empty()) throw ConfigError("input.checkpoint: required for export-circuit");
    Checkpoint k = load_checkpoint(c.checkpoint);
    const Matrix op = operator_by_name(c.export_operator);
    auto setup = prepare_measurement(k.theta, c.export_m_e, c.sim.seed);
    const fs::path dir = run_dir(c) / "circuits";
    fs::create_directories(dir);

    json files = json::array();
    auto emit = [&](const std::string& name, const GateCircuit& circ, const std::string& kind, json extra) {
        const std::string text = qasm_with_hash(circ, c.hash);
        write_text(dir / name, text);
        auto ideal = simulate_statevector(circ);
        auto replay = simulate_statevector(import_qasm(text));
        json e = {{"file", name}, {"kind", kind}, {"qubits", circ.n_qubits}};
        if (kind == "hadamard") {
            e["ideal_p0_minus_p1"] = ideal.parity_difference();
            e["qasm_p0_minus_p1"] = replay.parity_difference();
        } else {
            e["ideal_p0"] = ideal.probs[0];
            e["qasm_p0"] = replay.probs[0];
        }
        e.update(extra);
        files.push_back(e);
        return ideal;
    };

    auto direct = build_observable_circuit(setup.u_right, setup.u_left, op, setup.l_circuit, setup.r_circuit);
    auto norm = build_observable_circuit(setup.u_right, setup.u_left, Matrix::Identity(2, 2), setup.l_circuit,
                                         setup.r_circuit);
    const double p_direct = emit("direct.qasm", direct, "direct", {{"operator", c.export_operator}}).probs[0];
    const double p_norm = emit("identity.qasm", norm, "direct", {{"operator", "i"}}).probs[0];
    const double re = emit("hadamard_re.qasm", hadamard_test(direct, 0.0), "hadamard", {{"phi", 0.0}}).parity_difference();
    const double im = -emit("hadamard_im.qasm", hadamard_test(direct, kPi / 2), "hadamard", {{"phi", kPi / 2}})
                           .parity_difference();
    for (int r = 0; r < c.gauge_replicas; ++r) {
        const std::uint64_t seed = replica_seed(c.sim.seed, static_cast<std::uint64_t>(r));
        char name[32];
        std::snprintf(name, sizeof name, "gauge_%03d.qasm", r);
        emit(name, randomize_gauges(direct, seed), "gauge", {{"seed", seed}, {"replica", r}});
    }

    const double engine = local_expectation_mps(circuit_to_umps(k.theta), op).real();
    json m = manifest_base(c, "export-circuit");
    m["checkpoint"] = c.checkpoint;
    m["step"] = k.step;
    m["t"] = k.t;
    m["operator"] = c.export_operator;
    m["m_e"] = c.export_m_e;
    m["lambda"] = {setup.lambda.real(), setup.lambda.imag()};
    m["fit_error_l"] = setup.fit_error_l;
    m["fit_error_r"] = setup.fit_error_r;
    m["circuit_squared_expectation"] = p_direct / p_norm;
    m["engine_squared_expectation"] = engine * engine;
    m["hadamard_amplitude"] = {re, im};
    m["files"] = files;
    write_text(run_dir(c) / "export_manifest.json", m.dump(2) + "\n");
    std::cout << "|<" << c.export_operator << ">|^2 circuits=" << num(p_direct / p_norm)
              << " engine=" << num(engine * engine) << std::endl;
    return 0;
}

// ---- command line ----

struct CommonOptions {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "Override a config field, e.g. --set trotter.dt=0.01")->take_all();
    sub->add_option("-o,--out", o.out, "Output root (default: $USC_OUTPUT_ROOT or ./results)");
    sub->add_flag("-q,--quiet", g_quiet, "No progress output");
    auto shortcut = [&](const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [&o, key](const std::string& v) { o.sets.push_back(key + "=" + v); }, help);
    };
    shortcut("--nq", "ansatz.n_qubits", "Qubits per state unitary (N_q)");
    shortcut("--mu", "ansatz.m_u", "State unitary layers (M_U)");
    shortcut("--env", "env.mode", "exact or layered");
    shortcut("--me", "env.m_e", "Environment layers (M_E)");
    shortcut("--dt", "trotter.dt", "Trotter step");
    shortcut("--order", "trotter.order", "Trotter order (1 or 2)");
    shortcut("--tmax", "t_max", "Final time");
    shortcut("--J", "model.J", "Ising coupling");
    shortcut("--g", "model.g", "Transverse field");
    shortcut("--hfield", "model.h", "Longitudinal field");
    shortcut("--seed", "seed", "Random seed");
    shortcut("--name", "run.name", "Run name (output subdirectory)");
    shortcut("--checkpoint", "input.checkpoint", "Input checkpoint file");
}

RunConfig build_config(const CommonOptions& o, const std::vector<std::string>& runs) {
    json doc = default_document();
    if (!o.config.empty()) {
        json file = read_json(o.config);
        merge_checked(doc, file);
    }
    for (const auto& s : o.sets) apply_override(doc, s);
    if (!runs.empty()) doc["input"]["runs"] = runs;
    std::string root = o.out;
    if (root.empty()) {
        const char* env = std::getenv("USC_OUTPUT_ROOT");
        root = env && *env ? env : "results";
    }
    return resolve(doc, root);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uniform sequential circuit simulations of infinite spin chains"};
    app.require_subcommand(1);
    std::map<std::string, CommonOptions> opts;
    std::vector<std::string> runs;
    std::map<CLI::App*, int (*)(const RunConfig&)> handlers;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"evolve", "Run a time evolution and write steps.csv, checkpoints and a manifest"},
        {"reachable-time", "Evolve for each scan.n_qubits and report the reachable time t*"},
        {"fit-env", "Fit layered circuits to the exact environments of a checkpoint"},
        {"env-scaling", "Maximum layered-environment fit error over evolve runs, per M_E"},
        {"observables", "Local observables and correlations of a checkpointed state"},
        {"export-circuit", "Write measurement circuits of a checkpoint as OpenQASM 2.0"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, opts[name]);
        if (name == "env-scaling") sub->add_option("--runs", runs, "Evolve run directories")->check(CLI::ExistingDirectory);
        if (name == "evolve") handlers[sub] = cmd_evolve;
        if (name == "reachable-time") handlers[sub] = cmd_reachable_time;
        if (name == "fit-env") handlers[sub] = cmd_fit_env;
        if (name == "env-scaling") handlers[sub] = cmd_env_scaling;
        if (name == "observables") handlers[sub] = cmd_observables;
        if (name == "export-circuit") handlers[sub] = cmd_export_circuit;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    try {
        for (auto& [sub, handler] : handlers)
            if (sub->parsed()) return handler(build_config(opts[sub->get_name()], runs));
    } catch (const ConfigError& e) {
        std::cerr << "usc: config error: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const StepFailure& e) {
        std::cerr << "usc: step failure: " << e.what() << std::endl;
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "usc: numerical error: " << e.what() << std::endl;
        return kExitNumerical;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "usc: " << e.what() << std::endl;
        return kExitConfig;
    }
    return kExitConfig;
}
