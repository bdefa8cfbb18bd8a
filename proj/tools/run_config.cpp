#include "run_config.hpp"

#include "usc/errors.hpp"

#include <cstdint>
#include <cmath>
#include <cstdio>

namespace usc::cli {

using nlohmann::json;

json default_document() {
    return json{
        {"model", {{"J", 1.0}, {"g", 1.0}, {"h", 0.0}}},
        {"ansatz", {{"n_qubits", 2}, {"m_u", 1}}},
        {"env", {{"mode", "exact"}, {"m_e", 1}}},
        {"trotter", {{"dt", 0.025}, {"order", 2}}},
        {"t_max", 1.0},
        {"reference", {{"enabled", true}, {"chi_max", 64}, {"dt_ref", 0.01}, {"order", 4}}},
        {"thresholds", {{"fidelity", 1e-4}, {"inner", 1e-12}, {"env_sweep", 1e-11}, {"step_floor", 0.9}}},
        {"optimizer", {{"name", "lbfgs"}, {"max_iters", 5000}, {"lbfgs_memory", 20}, {"lr", 3e-3},
                       {"init_noise", 1e-3}}},
        {"seed", 7},
        {"run", {{"name", "run"}, {"checkpoint_every", 1}, {"stop_after_threshold", false}, {"stop_margin", 0.0}}},
        {"scan", {{"n_qubits", {2, 3, 4}}, {"m_e", {1, 2, 3}}}},
        {"export", {{"m_e", 1}, {"gauge_replicas", 10}, {"operator", "z"}}},
        {"input", {{"checkpoint", ""}, {"runs", json::array()}}},
    };
}

namespace {

bool compatible(const json& def, const json& v) {
    if (def.is_number_float()) return v.is_number();
    if (def.is_number_integer()) return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array();
    if (def.is_object()) return v.is_object();
    return false;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

template <class T>
T get(const json& doc, const std::string& dotted) {
    const json* node = &doc;
    size_t start = 0;
    while (start <= dotted.size()) {
        size_t dot = dotted.find('.', start);
        node = &node->at(dotted.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    try {
        return node->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(dotted + ": wrong type");
    }
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

void merge_checked(json& base, const json& overlay, const std::string& path) {
    if (!overlay.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        const std::string p = join(path, it.key());
        if (!base.contains(it.key())) throw ConfigError(p + ": unknown key");
        json& target = base[it.key()];
        if (!compatible(target, it.value())) throw ConfigError(p + ": expected " + std::string(target.type_name()));
        if (target.is_object())
            merge_checked(target, it.value(), p);
        else if (target.is_number_integer())
            target = static_cast<long long>(it.value().get<double>());
        else
            target = it.value();
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    // Build the nested overlay {"a": {"b": value}} and merge it with the usual checks.
    json overlay = value;
    size_t end = key.size();
    while (true) {
        size_t dot = key.rfind('.', end - 1);
        const std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1,
                                            end - (dot == std::string::npos ? 0 : dot + 1));
        if (part.empty()) throw ConfigError("override '" + assignment + "': empty key segment");
        overlay = json{{part, overlay}};
        if (dot == std::string::npos) break;
        end = dot;
    }
    merge_checked(doc, overlay);
}

std::string config_hash(const json& doc) {
    // The run name only picks the output directory.
    json hashed = doc;
    if (hashed.contains("run") && hashed["run"].is_object()) hashed["run"].erase("name");
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : hashed.dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig resolve(const json& doc, const std::string& output_root) {
    RunConfig c;
    c.doc = doc;
    c.hash = config_hash(doc);
    c.output_root = output_root;

    auto& s = c.sim;
    s.ham = {get<double>(doc, "model.J"), get<double>(doc, "model.g"), get<double>(doc, "model.h")};
    s.n_qubits = get<int>(doc, "ansatz.n_qubits");
    s.m_u = get<int>(doc, "ansatz.m_u");
    s.dt = get<double>(doc, "trotter.dt");
    s.order = get<int>(doc, "trotter.order");
    s.t_max = get<double>(doc, "t_max");
    s.reference = get<bool>(doc, "reference.enabled");
    s.reference_options.chi_max = get<int>(doc, "reference.chi_max");
    s.reference_options.order = get<int>(doc, "reference.order");
    s.dt_ref = get<double>(doc, "reference.dt_ref");
    s.fidelity_threshold = get<double>(doc, "thresholds.fidelity");
    s.step.tol = get<double>(doc, "thresholds.inner");
    s.step.fit.sweep_tol = get<double>(doc, "thresholds.env_sweep");
    s.step.floor = get<double>(doc, "thresholds.step_floor");
    try {
        s.step.env_mode = env_mode_from_string(get<std::string>(doc, "env.mode"));
        s.step.optimizer = optimizer_from_string(get<std::string>(doc, "optimizer.name"));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("env.mode / optimizer.name: ") + e.what());
    }
    s.step.m_e = get<int>(doc, "env.m_e");
    s.step.max_iters = get<int>(doc, "optimizer.max_iters");
    s.step.lbfgs_memory = get<int>(doc, "optimizer.lbfgs_memory");
    s.step.adam.lr = get<double>(doc, "optimizer.lr");
    s.init_noise = get<double>(doc, "optimizer.init_noise");
    const auto seed = get<long long>(doc, "seed");
    require(seed >= 0, "seed: must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.stop_after_threshold = get<bool>(doc, "run.stop_after_threshold");
    s.stop_margin = get<double>(doc, "run.stop_margin");
    s.validate();

    require(s.reference_options.order == 2 || s.reference_options.order == 4, "reference.order: must be 2 or 4");
    require(s.step.max_iters >= 1, "optimizer.max_iters: must be >= 1");
    require(s.step.lbfgs_memory >= 1, "optimizer.lbfgs_memory: must be >= 1");
    require(s.step.adam.lr > 0.0, "optimizer.lr: must be positive");
    require(s.init_noise >= 0.0, "optimizer.init_noise: must be non-negative");
    require(s.step.floor >= 0.0 && s.step.floor <= 1.0, "thresholds.step_floor: must lie in [0, 1]");
    require(s.stop_margin >= 0.0, "run.stop_margin: must be non-negative");

    c.name = get<std::string>(doc, "run.name");
    require(!c.name.empty() && c.name.find('/') == std::string::npos, "run.name: must be a non-empty file name");
    c.checkpoint_every = get<int>(doc, "run.checkpoint_every");
    require(c.checkpoint_every >= 1, "run.checkpoint_every: must be >= 1");
    c.scan_n_qubits = get<std::vector<int>>(doc, "scan.n_qubits");
    c.scan_m_e = get<std::vector<int>>(doc, "scan.m_e");
    require(!c.scan_n_qubits.empty(), "scan.n_qubits: must not be empty");
    for (int n : c.scan_n_qubits) require(n >= 2, "scan.n_qubits: entries must be >= 2");
    require(!c.scan_m_e.empty(), "scan.m_e: must not be empty");
    for (int m : c.scan_m_e) require(m >= 1, "scan.m_e: entries must be >= 1");
    c.export_m_e = get<int>(doc, "export.m_e");
    require(c.export_m_e >= 1, "export.m_e: must be >= 1");
    c.gauge_replicas = get<int>(doc, "export.gauge_replicas");
    require(c.gauge_replicas >= 0, "export.gauge_replicas: must be >= 0");
    c.export_operator = get<std::string>(doc, "export.operator");
    require(c.export_operator == "x" || c.export_operator == "y" || c.export_operator == "z",
            "export.operator: must be x, y or z");
    c.checkpoint = get<std::string>(doc, "input.checkpoint");
    c.runs = get<std::vector<std::string>>(doc, "input.runs");
    return c;
}

}  // namespace usc::cli
