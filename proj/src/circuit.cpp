#include "usc/circuit.hpp"

#include "usc/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace usc {

Representation flipped(Representation r) {
    return r == Representation::Left ? Representation::Right : Representation::Left;
}

std::string to_string(Representation r) { return r == Representation::Left ? "left" : "right"; }

Representation representation_from_string(const std::string& s) {
    if (s == "left") return Representation::Left;
    if (s == "right") return Representation::Right;
    throw ConfigError("unknown representation '" + s + "'");
}

StateUnitary StateUnitary::identity(int n_qubits, int layers, Representation rep) {
    if (n_qubits < 2) throw ContractViolation("state unitary needs at least 2 qubits");
    if (layers < 1) throw ContractViolation("state unitary needs at least 1 layer");
    StateUnitary su;
    su.n_qubits = n_qubits;
    su.layers = layers;
    su.rep = rep;
    su.gates.assign(static_cast<size_t>(layers * (n_qubits - 1)), Matrix::Identity(4, 4));
    return su;
}

std::vector<int> StateUnitary::application_order() const {
    std::vector<int> order;
    order.reserve(gates.size());
    const int per = gates_per_layer();
    for (int layer = 0; layer < layers; ++layer)
        for (int i = 0; i < per; ++i)
            order.push_back(layer * per + (rep == Representation::Right ? per - 1 - i : i));
    return order;
}

void StateUnitary::validate() const {
    if (n_qubits < 2) throw ContractViolation("state unitary needs at least 2 qubits");
    if (layers < 1) throw ContractViolation("state unitary needs at least 1 layer");
    if (gate_count() != layers * (n_qubits - 1))
        throw DimensionMismatch("state unitary has " + std::to_string(gate_count()) +
                                " gates, expected " + std::to_string(layers * (n_qubits - 1)));
    for (const auto& g : gates)
        if (g.rows() != 4 || g.cols() != 4) throw DimensionMismatch("gate is not 4x4");
}

std::vector<WireOp> state_ops(const StateUnitary& su, int offset) {
    su.validate();
    std::vector<WireOp> ops;
    ops.reserve(su.gates.size());
    for (int g : su.application_order()) {
        int k = su.gate_pair(g) + offset;
        ops.push_back({su.gates[g], {k, k + 1}});
    }
    return ops;
}

std::vector<WireOp> state_ops(const DenseStateUnitary& su, int offset) {
    std::vector<int> wires(su.n_qubits);
    for (int i = 0; i < su.n_qubits; ++i) wires[i] = offset + i;
    return {{su.matrix, wires}};
}

void apply_op(Vector& psi, int n_wires, const WireOp& op) {
    const int k = static_cast<int>(op.wires.size());
    const Eigen::Index dim = Eigen::Index(1) << n_wires;
    if (psi.size() != dim) throw DimensionMismatch("apply_op: state has wrong dimension");
    if (op.matrix.rows() != (Eigen::Index(1) << k) || op.matrix.cols() != op.matrix.rows())
        throw DimensionMismatch("apply_op: matrix does not match wire count");
    Eigen::Index mask = 0;
    std::vector<Eigen::Index> offsets(size_t(1) << k, 0);
    for (int j = 0; j < k; ++j) {
        int w = op.wires[j];
        if (w < 0 || w >= n_wires) throw DimensionMismatch("apply_op: wire out of range");
        Eigen::Index bit = Eigen::Index(1) << (n_wires - 1 - w);
        if (mask & bit) throw ContractViolation("apply_op: repeated wire");
        mask |= bit;
        for (size_t m = 0; m < offsets.size(); ++m)
            if (m & (size_t(1) << (k - 1 - j))) offsets[m] |= bit;
    }
    const Eigen::Index block = Eigen::Index(1) << k;
    Vector in(block), out(block);
    for (Eigen::Index base = 0; base < dim; ++base) {
        if (base & mask) continue;
        for (Eigen::Index m = 0; m < block; ++m) in(m) = psi(base + offsets[m]);
        out.noalias() = op.matrix * in;
        for (Eigen::Index m = 0; m < block; ++m) psi(base + offsets[m]) = out(m);
    }
}

void apply_ops(Vector& psi, int n_wires, const std::vector<WireOp>& ops) {
    for (const auto& op : ops) apply_op(psi, n_wires, op);
}

Matrix embed(const WireOp& op, int n_wires) {
    const Eigen::Index dim = Eigen::Index(1) << n_wires;
    Matrix out(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
        Vector e = Vector::Zero(dim);
        e(c) = 1.0;
        apply_op(e, n_wires, op);
        out.col(c) = e;
    }
    return out;
}

std::vector<WireOp> adjoint_ops(const std::vector<WireOp>& ops) {
    std::vector<WireOp> out;
    out.reserve(ops.size());
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) out.push_back({it->matrix.adjoint(), it->wires});
    return out;
}

std::vector<WireOp> shifted(std::vector<WireOp> ops, int offset) {
    for (auto& op : ops)
        for (auto& w : op.wires) w += offset;
    return ops;
}

DenseStateUnitary build_dense(const StateUnitary& su) {
    const Eigen::Index dim = Eigen::Index(1) << su.n_qubits;
    Matrix u(dim, dim);
    auto ops = state_ops(su);
    for (Eigen::Index c = 0; c < dim; ++c) {
        Vector e = Vector::Zero(dim);
        e(c) = 1.0;
        apply_ops(e, su.n_qubits, ops);
        u.col(c) = e;
    }
    return {su.n_qubits, su.rep, u};
}

Vector apply_to_state(const StateUnitary& su, const Vector& psi) {
    if (psi.size() != (Eigen::Index(1) << su.n_qubits))
        throw DimensionMismatch("apply_to_state: vector dimension does not match 2^n_qubits");
    Vector out = psi;
    apply_ops(out, su.n_qubits, state_ops(su));
    return out;
}

StateUnitary adjoint(const StateUnitary& su) {
    // The reversed sequence of a layered circuit is again layered, with reversed layer order
    // and mirrored in-layer order, so the tag flips while the wires stay put.
    su.validate();
    StateUnitary out = su;
    out.rep = flipped(su.rep);
    const int per = su.gates_per_layer();
    for (int layer = 0; layer < su.layers; ++layer)
        for (int i = 0; i < per; ++i)
            out.gates[layer * per + i] = su.gates[(su.layers - 1 - layer) * per + i].adjoint();
    return out;
}

int parameter_count(const StateUnitary& su) { return 15 * (su.n_qubits - 1) * su.layers; }

int stored_real_count(const StateUnitary& su) { return 32 * (su.n_qubits - 1) * su.layers; }

StateUnitary reflect(const StateUnitary& su) {
    su.validate();
    StateUnitary out = su;
    out.rep = flipped(su.rep);
    const int per = su.gates_per_layer();
    const Matrix s = swap_gate();
    for (int layer = 0; layer < su.layers; ++layer)
        for (int i = 0; i < per; ++i)
            out.gates[layer * per + (per - 1 - i)] = s * su.gates[layer * per + i] * s;
    return out;
}

Matrix qubit_reversal(int n_qubits) {
    const Eigen::Index dim = Eigen::Index(1) << n_qubits;
    Matrix p = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        Eigen::Index r = 0;
        for (int b = 0; b < n_qubits; ++b)
            if (i & (Eigen::Index(1) << b)) r |= Eigen::Index(1) << (n_qubits - 1 - b);
        p(r, i) = 1.0;
    }
    return p;
}

DenseStateUnitary reflect(const DenseStateUnitary& su) {
    Matrix r = qubit_reversal(su.n_qubits);
    return {su.n_qubits, flipped(su.rep), r * su.matrix * r};
}

nlohmann::json to_json(const StateUnitary& su) {
    su.validate();
    nlohmann::json j;
    j["format"] = "usc-state-unitary";
    j["version"] = 1;
    j["n_qubits"] = su.n_qubits;
    j["layers"] = su.layers;
    j["representation"] = to_string(su.rep);
    nlohmann::json gates = nlohmann::json::array();
    for (const auto& g : su.gates) {
        std::vector<double> v;
        v.reserve(32);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                v.push_back(g(r, c).real());
                v.push_back(g(r, c).imag());
            }
        gates.push_back(v);
    }
    j["gates"] = gates;
    return j;
}

StateUnitary state_unitary_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "usc-state-unitary")
            throw ConfigError("not a state-unitary document");
        if (j.at("version").get<int>() != 1) throw ConfigError("unsupported state-unitary version");
        StateUnitary su;
        su.n_qubits = j.at("n_qubits").get<int>();
        su.layers = j.at("layers").get<int>();
        su.rep = representation_from_string(j.at("representation").get<std::string>());
        for (const auto& jg : j.at("gates")) {
            auto v = jg.get<std::vector<double>>();
            if (v.size() != 32) throw ConfigError("gate entry must hold 32 numbers");
            Matrix g(4, 4);
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) g(r, c) = Complex(v[8 * r + 2 * c], v[8 * r + 2 * c + 1]);
            su.gates.push_back(g);
        }
        su.validate();
        return su;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed state-unitary document: ") + e.what());
    }
}

}  // namespace usc
