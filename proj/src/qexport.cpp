#include "usc/qexport.hpp"

#include "usc/errors.hpp"
#include "usc/evolution.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <sstream>

namespace usc {

namespace {

constexpr double kPi = 3.14159265358979323846;

OpSource source_of(OpRole r) {
    switch (r) {
        case OpRole::StateLeft: return OpSource::StateLeft;
        case OpRole::StateRight: return OpSource::StateRight;
        case OpRole::Trotter: return OpSource::Trotter;
        case OpRole::Observable: return OpSource::Observable;
    }
    return OpSource::Imported;
}

CircuitOp unitary_op(const Matrix& m, std::vector<int> qubits, OpSource src, int index = 0, bool dagger = false) {
    CircuitOp op;
    op.kind = OpKind::Unitary;
    op.matrix = m;
    op.qubits = std::move(qubits);
    op.source = src;
    op.index = index;
    op.dagger = dagger;
    return op;
}

CircuitOp measure_op(std::vector<int> qubits) {
    CircuitOp op;
    op.kind = OpKind::Measure;
    op.qubits = std::move(qubits);
    return op;
}

void append_state(GateCircuit& c, const StateUnitary& su, int offset, bool inverse, OpSource src) {
    auto ops = state_ops(su, offset);
    auto order = su.application_order();
    if (!inverse) {
        for (size_t k = 0; k < ops.size(); ++k)
            c.ops.push_back(unitary_op(ops[k].matrix, ops[k].wires, src, order[k], false));
        return;
    }
    for (size_t k = ops.size(); k-- > 0;)
        c.ops.push_back(unitary_op(ops[k].matrix.adjoint(), ops[k].wires, src, order[k], true));
}

std::vector<int> all_wires(int n) {
    std::vector<int> w(n);
    for (int i = 0; i < n; ++i) w[i] = i;
    return w;
}

Matrix hadamard() {
    Matrix h(2, 2);
    h << 1.0, 1.0, 1.0, -1.0;
    return h / std::sqrt(2.0);
}

Matrix controlled(const Matrix& u) {
    const Eigen::Index d = u.rows();
    Matrix c = Matrix::Identity(2 * d, 2 * d);
    c.bottomRightCorner(d, d) = u;
    return c;
}

// ---- QASM compilation ----

struct Factor {
    int a = 0;  // Pauli on qubits[0]
    int b = 0;  // Pauli on qubits[1] (0 for one-qubit ops)
    double angle = 0.0;
};

struct Compiled {
    double phase = 0.0;
    std::vector<Factor> factors;  // leftmost first, as in the matrix product
};

Matrix pauli_on(int a, int b, int k) { return k == 1 ? pauli(a) : pauli_product(a, b); }

// u = e^{i phase} exp(i angle P): one factor (or none for a phase) when that fits to 1e-12.
std::optional<Compiled> single_rotation(const Matrix& u, int k) {
    const double d = static_cast<double>(u.rows());
    const Complex c0 = u.trace() / d;
    const int n_paulis = k == 1 ? 3 : 15;
    for (int p = 0; p < n_paulis; ++p) {
        const int a = k == 1 ? p + 1 : pauli_pair(p).first;
        const int b = k == 1 ? 0 : pauli_pair(p).second;
        Matrix pm = pauli_on(a, b, k);
        const Complex c1 = (pm * u).trace() / d;
        if ((u - c0 * Matrix::Identity(u.rows(), u.cols()) - c1 * pm).norm() > 1e-12) continue;
        Complex ph = std::abs(c0) >= std::abs(c1) ? c0 / std::abs(c0) : c1 / (Complex(0.0, 1.0) * std::abs(c1));
        const Complex cc = c0 / ph, ss = c1 / (Complex(0.0, 1.0) * ph);
        Compiled out;
        out.phase = std::arg(ph);
        const double angle = std::atan2(ss.real(), cc.real());
        if (std::abs(angle) > 1e-14) out.factors.push_back({a, b, angle});
        return out;
    }
    return std::nullopt;
}

Compiled compile_unitary(const Matrix& u) {
    const int k = u.rows() == 2 ? 1 : 2;
    if (auto s = single_rotation(u, k)) return *s;
    Compiled out;
    if (k == 1) {
        // e^{i p} Rz(alpha) Ry(beta) Rz(gamma), Rz(t) = exp(i (-t/2) Z).
        ZyzAngles z = zyz_decompose(u);
        out.phase = z.phase;
        out.factors = {{3, 0, -z.alpha / 2.0}, {2, 0, -z.beta / 2.0}, {3, 0, -z.gamma / 2.0}};
    } else {
        PauliDecomposition d = decompose_two_qubit(u);
        out.phase = d.global_phase;
        for (const auto& f : d.factors) out.factors.push_back({f.a, f.b, f.angle});
    }
    std::erase_if(out.factors, [](const Factor& f) { return std::abs(f.angle) <= 1e-14; });
    return out;
}

std::string num(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

std::string q(int i) { return "q[" + std::to_string(i) + "]"; }

// exp(i angle P) = B exp(i angle Z) B^dagger with B = H (X) or S H (Y).
void emit_factor(std::ostream& out, const Factor& f, const std::vector<int>& qubits, int control) {
    std::vector<std::pair<int, int>> active;  // (qubit, pauli)
    if (f.a != 0) active.emplace_back(qubits[0], f.a);
    if (f.b != 0) active.emplace_back(qubits[1], f.b);
    for (auto [w, p] : active) {
        if (p == 1) out << "h " << q(w) << ";\n";
        if (p == 2) out << "sdg " << q(w) << ";\nh " << q(w) << ";\n";
    }
    const int target = active.back().first;
    if (active.size() == 2) out << "cx " << q(active[0].first) << "," << q(target) << ";\n";
    if (control < 0)
        out << "rz(" << num(-2.0 * f.angle) << ") " << q(target) << ";\n";
    else
        out << "crz(" << num(-2.0 * f.angle) << ") " << q(control) << "," << q(target) << ";\n";
    if (active.size() == 2) out << "cx " << q(active[0].first) << "," << q(target) << ";\n";
    for (auto [w, p] : active) {
        if (p == 1) out << "h " << q(w) << ";\n";
        if (p == 2) out << "h " << q(w) << ";\ns " << q(w) << ";\n";
    }
}

// ---- QASM import ----

class AngleParser {
public:
    explicit AngleParser(std::string s) : s_(std::move(s)) {}
    double parse() {
        double v = expr();
        skip();
        if (pos_ != s_.size()) fail();
        return v;
    }

private:
    std::string s_;
    size_t pos_ = 0;

    [[noreturn]] void fail() const { throw ExportError("qasm: cannot parse angle '" + s_ + "'"); }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    double expr() {
        double v = term();
        for (;;) {
            if (eat('+')) v += term();
            else if (eat('-')) v -= term();
            else return v;
        }
    }
    double term() {
        double v = factor();
        for (;;) {
            if (eat('*')) v *= factor();
            else if (eat('/')) v /= factor();
            else return v;
        }
    }
    double factor() {
        if (eat('-')) return -factor();
        if (eat('+')) return factor();
        if (eat('(')) {
            double v = expr();
            if (!eat(')')) fail();
            return v;
        }
        skip();
        if (s_.compare(pos_, 2, "pi") == 0) {
            pos_ += 2;
            return kPi;
        }
        size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s_.substr(pos_), &used);
        } catch (const std::exception&) {
            fail();
        }
        pos_ += used;
        return v;
    }
};

Matrix diag2(Complex a, Complex b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Matrix rz(double t) { return diag2(std::exp(Complex(0.0, -t / 2.0)), std::exp(Complex(0.0, t / 2.0))); }

Matrix u3(double th, double ph, double la) {
    Matrix m(2, 2);
    const Complex i(0.0, 1.0);
    m << std::cos(th / 2.0), -std::exp(i * la) * std::sin(th / 2.0), std::exp(i * ph) * std::sin(th / 2.0),
        std::exp(i * (ph + la)) * std::cos(th / 2.0);
    return m;
}

Matrix named_one_qubit(const std::string& name, const std::vector<double>& p) {
    const Complex i(0.0, 1.0);
    auto need = [&](size_t n) {
        if (p.size() != n) throw ExportError("qasm: gate " + name + " takes " + std::to_string(n) + " parameters");
    };
    if (name == "h") return need(0), hadamard();
    if (name == "x") return need(0), pauli(1);
    if (name == "y") return need(0), pauli(2);
    if (name == "z") return need(0), pauli(3);
    if (name == "s") return need(0), diag2(1.0, i);
    if (name == "sdg") return need(0), diag2(1.0, -i);
    if (name == "t") return need(0), diag2(1.0, std::exp(i * kPi / 4.0));
    if (name == "tdg") return need(0), diag2(1.0, std::exp(-i * kPi / 4.0));
    if (name == "id") return need(0), Matrix(Matrix::Identity(2, 2));
    if (name == "rz") return need(1), rz(p[0]);
    if (name == "u1") return need(1), diag2(1.0, std::exp(i * p[0]));
    if (name == "ry") return need(1), u3(p[0], 0.0, 0.0);
    if (name == "rx") return need(1), u3(p[0], -kPi / 2.0, kPi / 2.0);
    if (name == "u3" || name == "u") return need(3), u3(p[0], p[1], p[2]);
    throw ExportError("qasm: unsupported gate '" + name + "'");
}

}  // namespace

std::string to_string(OpSource s) {
    switch (s) {
        case OpSource::StateLeft: return "state-left";
        case OpSource::StateRight: return "state-right";
        case OpSource::Environment: return "environment";
        case OpSource::Observable: return "observable";
        case OpSource::Trotter: return "trotter";
        case OpSource::Ancilla: return "ancilla";
        case OpSource::Imported: return "imported";
    }
    return "unknown";
}

void GateCircuit::validate() const {
    if (n_qubits < 1) throw ContractViolation("circuit needs at least one qubit");
    std::set<int> measured_so_far;
    for (size_t i = 0; i < ops.size(); ++i) {
        const auto& op = ops[i];
        const std::string where = "op " + std::to_string(i) + ": ";
        std::set<int> touched(op.qubits.begin(), op.qubits.end());
        if (touched.size() != op.qubits.size()) throw ContractViolation(where + "repeated qubit");
        if (op.kind == OpKind::Controlled) {
            if (touched.count(op.control)) throw ContractViolation(where + "control is also a target");
            touched.insert(op.control);
        }
        for (int w : touched)
            if (w < 0 || w >= n_qubits) throw DimensionMismatch(where + "qubit out of range");
        for (int w : touched)
            if (measured_so_far.count(w)) throw ContractViolation(where + "acts on an already measured qubit");
        if (op.kind == OpKind::Measure) {
            measured_so_far.insert(op.qubits.begin(), op.qubits.end());
            continue;
        }
        const size_t k = op.qubits.size();
        if (k < 1 || k > 2) throw ContractViolation(where + "unitaries act on one or two qubits");
        if (op.matrix.rows() != (Eigen::Index(1) << k) || op.matrix.cols() != op.matrix.rows())
            throw DimensionMismatch(where + "matrix does not match qubit count");
        if (unitarity_residual(op.matrix) > 1e-10) throw ContractViolation(where + "matrix is not unitary");
    }
}

std::vector<int> GateCircuit::measured() const {
    std::vector<int> m;
    for (const auto& op : ops)
        if (op.kind == OpKind::Measure) m.insert(m.end(), op.qubits.begin(), op.qubits.end());
    if (m.empty()) m = all_wires(n_qubits);
    return m;
}

GateCircuit build_functional_circuit(const StateUnitary& v, const std::vector<WireOp>& o, const StateUnitary& w) {
    if (v.n_qubits != w.n_qubits) throw DimensionMismatch("functional circuit: V and W need equal widths");
    GateCircuit c;
    c.n_qubits = w.n_qubits + 1;
    append_state(c, w, 0, false, OpSource::Environment);
    for (size_t k = 0; k < o.size(); ++k) {
        for (int x : o[k].wires)
            if (x < 0 || x >= c.n_qubits) throw DimensionMismatch("functional circuit: O wire out of range");
        c.ops.push_back(unitary_op(o[k].matrix, o[k].wires, OpSource::Observable, static_cast<int>(k)));
    }
    append_state(c, v, 1, true, OpSource::Environment);
    c.ops.push_back(measure_op(all_wires(c.n_qubits)));
    c.validate();
    return c;
}

GateCircuit build_transfer_circuit(const TransferOperator& t, const StateUnitary& l_circ, const StateUnitary& r_circ) {
    if (l_circ.n_qubits != t.n_env || r_circ.n_qubits != t.n_env)
        throw DimensionMismatch("transfer circuit: environment circuits need " + std::to_string(t.n_env) + " qubits");
    GateCircuit c;
    c.n_qubits = t.n_wires();
    append_state(c, r_circ, 1, false, OpSource::Environment);
    for (size_t k = 0; k < t.ops.size(); ++k)
        c.ops.push_back(unitary_op(t.ops[k].matrix, t.ops[k].wires, source_of(t.tags[k].role), t.tags[k].index,
                                   t.tags[k].dagger));
    append_state(c, l_circ, 0, true, OpSource::Environment);
    c.ops.push_back(measure_op(all_wires(c.n_qubits)));
    c.validate();
    return c;
}

GateCircuit build_observable_circuit(const StateUnitary& uR, const StateUnitary& uL, const Matrix& op,
                                     const StateUnitary& l_circ, const StateUnitary& r_circ) {
    return build_transfer_circuit(with_observable(build_transfer(uL, uR), op), l_circ, r_circ);
}

GateCircuit hadamard_test(const GateCircuit& circ, double phi) {
    GateCircuit c;
    c.n_qubits = circ.n_qubits + 1;
    const int anc = circ.n_qubits;
    c.ops.push_back(unitary_op(hadamard(), {anc}, OpSource::Ancilla));
    c.ops.push_back(unitary_op(diag2(1.0, std::exp(Complex(0.0, phi))), {anc}, OpSource::Ancilla, 1));
    for (const auto& op : circ.ops) {
        if (op.kind == OpKind::Measure) continue;
        if (op.kind == OpKind::Controlled) throw ContractViolation("hadamard test: circuit already has controlled ops");
        CircuitOp cop = op;
        cop.kind = OpKind::Controlled;
        cop.control = anc;
        c.ops.push_back(std::move(cop));
    }
    c.ops.push_back(unitary_op(hadamard(), {anc}, OpSource::Ancilla, 2));
    c.ops.push_back(measure_op({anc}));
    c.validate();
    return c;
}

Vector final_state(const GateCircuit& circ, const SimulatorOptions& options) {
    if (circ.n_qubits > options.max_qubits)
        throw ContractViolation("simulator: " + std::to_string(circ.n_qubits) + " qubits exceed the cap of " +
                                std::to_string(options.max_qubits));
    circ.validate();
    Vector psi = Vector::Zero(Eigen::Index(1) << circ.n_qubits);
    psi(0) = 1.0;
    for (const auto& op : circ.ops) {
        if (op.kind == OpKind::Unitary) {
            apply_op(psi, circ.n_qubits, {op.matrix, op.qubits});
        } else if (op.kind == OpKind::Controlled) {
            std::vector<int> wires{op.control};
            wires.insert(wires.end(), op.qubits.begin(), op.qubits.end());
            apply_op(psi, circ.n_qubits, {controlled(op.matrix), wires});
        }
    }
    return psi;
}

Complex zero_amplitude(const GateCircuit& circ, const SimulatorOptions& options) {
    return final_state(circ, options)(0);
}

OutcomeDistribution simulate_statevector(const GateCircuit& circ, const SimulatorOptions& options) {
    Vector psi = final_state(circ, options);
    OutcomeDistribution d;
    d.measured = circ.measured();
    const int m = static_cast<int>(d.measured.size());
    d.probs.assign(size_t(1) << m, 0.0);
    const int n = circ.n_qubits;
    for (Eigen::Index b = 0; b < psi.size(); ++b) {
        size_t idx = 0;
        for (int j = 0; j < m; ++j)
            if (b & (Eigen::Index(1) << (n - 1 - d.measured[j]))) idx |= size_t(1) << (m - 1 - j);
        d.probs[idx] += std::norm(psi(b));
    }
    return d;
}

double OutcomeDistribution::probability(const std::string& bits) const {
    if (bits.size() != measured.size()) throw DimensionMismatch("bitstring length differs from measured qubits");
    size_t idx = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw ContractViolation("bitstring must contain only 0 and 1");
        idx = (idx << 1) | size_t(c == '1');
    }
    return probs[idx];
}

double OutcomeDistribution::parity_difference() const {
    if (measured.size() != 1) throw ContractViolation("parity difference needs a single measured qubit");
    return probs[0] - probs[1];
}

double ShotResult::frequency(const std::string& bits) const {
    auto it = counts.find(bits);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(shots);
}

ShotResult sample_shots(const OutcomeDistribution& dist, long shots, std::uint64_t seed) {
    if (shots < 1) throw ContractViolation("sample_shots needs at least one shot");
    std::vector<double> w(dist.probs.size());
    std::transform(dist.probs.begin(), dist.probs.end(), w.begin(), [](double p) { return std::max(p, 0.0); });
    std::mt19937_64 rng(seed);
    std::discrete_distribution<size_t> pick(w.begin(), w.end());
    std::vector<long> hist(w.size(), 0);
    for (long s = 0; s < shots; ++s) ++hist[pick(rng)];
    ShotResult r;
    r.shots = shots;
    r.seed = seed;
    const size_t m = dist.measured.size();
    for (size_t idx = 0; idx < hist.size(); ++idx) {
        if (hist[idx] == 0) continue;
        std::string bits(m, '0');
        for (size_t j = 0; j < m; ++j)
            if (idx & (size_t(1) << (m - 1 - j))) bits[j] = '1';
        r.counts[bits] = hist[idx];
    }
    return r;
}

nlohmann::json to_json(const ShotResult& r) {
    return {{"counts", r.counts}, {"shots", r.shots}, {"seed", r.seed}};
}

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica) {
    // splitmix64 finalizer over a replica-dependent offset
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (replica + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

GateCircuit randomize_gauges(const GateCircuit& circ, std::uint64_t seed) {
    circ.validate();
    GateCircuit out = circ;
    std::mt19937_64 rng(seed);
    auto local = [](const Matrix& v, size_t pos, size_t k) -> Matrix {
        if (k == 1) return v;
        Matrix id = Matrix::Identity(2, 2);
        return pos == 0 ? kron(v, id) : kron(id, v);
    };
    auto touches = [](const CircuitOp& op, int w) {
        return op.control == w || std::find(op.qubits.begin(), op.qubits.end(), w) != op.qubits.end();
    };
    for (size_t i = 0; i < out.ops.size(); ++i) {
        if (out.ops[i].kind != OpKind::Unitary) continue;
        for (size_t p = 0; p < out.ops[i].qubits.size(); ++p) {
            const int w = out.ops[i].qubits[p];
            size_t j = i + 1;
            while (j < out.ops.size() && !touches(out.ops[j], w)) ++j;
            if (j == out.ops.size() || out.ops[j].kind != OpKind::Unitary) continue;
            Matrix v = random_unitary(2, rng);
            v /= std::sqrt(v.determinant());
            auto& a = out.ops[i];
            auto& b = out.ops[j];
            const size_t pj = std::find(b.qubits.begin(), b.qubits.end(), w) - b.qubits.begin();
            a.matrix = local(v, p, a.qubits.size()) * a.matrix;
            b.matrix = b.matrix * local(v.adjoint(), pj, b.qubits.size());
        }
    }
    return out;
}

std::string export_qasm(const GateCircuit& circ) {
    std::ostringstream out;
    out << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";
    out << "qreg q[" << circ.n_qubits << "];\n";
    std::vector<int> measured;
    for (const auto& op : circ.ops)
        if (op.kind == OpKind::Measure) measured.insert(measured.end(), op.qubits.begin(), op.qubits.end());
    if (!measured.empty()) out << "creg c[" << measured.size() << "];\n";
    for (size_t i = 0; i < circ.ops.size(); ++i) {
        const auto& op = circ.ops[i];
        if (op.kind == OpKind::Measure) continue;
        const std::string name = "op " + std::to_string(i) + " (" + to_string(op.source) + " " +
                                 std::to_string(op.index) + (op.dagger ? "+" : "") + ")";
        if (op.matrix.rows() != (Eigen::Index(1) << op.qubits.size()) || op.qubits.empty() || op.qubits.size() > 2)
            throw ExportError(name + ": only one- and two-qubit unitaries can be exported");
        if (unitarity_residual(op.matrix) > 1e-10) throw ExportError(name + ": matrix is not unitary");
        Compiled c;
        try {
            c = compile_unitary(op.matrix);
        } catch (const Error& e) {
            throw ExportError(name + ": " + e.what());
        }
        const int control = op.kind == OpKind::Controlled ? op.control : -1;
        const double phase = std::remainder(c.phase, 2.0 * kPi);
        if (c.factors.empty() && (control < 0 || std::abs(phase) <= 1e-14)) continue;
        out << "// " << name << "\n";
        if (control >= 0 && std::abs(phase) > 1e-14) out << "u1(" << num(phase) << ") " << q(control) << ";\n";
        for (auto f = c.factors.rbegin(); f != c.factors.rend(); ++f) emit_factor(out, *f, op.qubits, control);
    }
    for (size_t k = 0; k < measured.size(); ++k) out << "measure " << q(measured[k]) << " -> c[" << k << "];\n";
    return out.str();
}

GateCircuit import_qasm(const std::string& text) {
    std::string body;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            auto c = line.find("//");
            body += (c == std::string::npos ? line : line.substr(0, c)) + "\n";
        }
    }
    GateCircuit circ;
    std::vector<std::pair<int, int>> measures;  // (classical bit, qubit)
    bool header = false;
    const std::regex qarg(R"(^\s*q\s*\[\s*(\d+)\s*\]\s*$)");
    const std::regex gate(R"(^([a-z][a-z0-9_]*)\s*(\(([^)]*)\))?\s*(.*)$)");
    auto qubit = [&](const std::string& s) {
        std::smatch m;
        if (!std::regex_match(s, m, qarg)) throw ExportError("qasm: bad qubit argument '" + s + "'");
        int w = std::stoi(m[1]);
        if (w >= circ.n_qubits) throw ExportError("qasm: qubit index out of range");
        return w;
    };
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, sep)) parts.push_back(cur);
        return parts;
    };
    for (std::string stmt : split(body, ';')) {
        stmt = std::regex_replace(stmt, std::regex(R"(^\s+|\s+$)"), "");
        if (stmt.empty()) continue;
        if (stmt.rfind("OPENQASM", 0) == 0) {
            if (stmt != "OPENQASM 2.0") throw ExportError("qasm: only OpenQASM 2.0 is supported");
            header = true;
            continue;
        }
        if (stmt.rfind("include", 0) == 0 || stmt.rfind("creg", 0) == 0 || stmt.rfind("barrier", 0) == 0) continue;
        std::smatch m;
        if (std::regex_match(stmt, m, std::regex(R"(^qreg\s+q\s*\[\s*(\d+)\s*\]$)"))) {
            circ.n_qubits = std::stoi(m[1]);
            continue;
        }
        if (std::regex_match(stmt, m, std::regex(R"(^measure\s+(.+?)\s*->\s*c\s*\[\s*(\d+)\s*\]$)"))) {
            measures.emplace_back(std::stoi(m[2]), qubit(m[1]));
            continue;
        }
        if (!std::regex_match(stmt, m, gate)) throw ExportError("qasm: cannot parse '" + stmt + "'");
        const std::string name = m[1];
        std::vector<double> params;
        if (m[2].matched)
            for (const auto& p : split(m[3], ',')) params.push_back(AngleParser(p).parse());
        std::vector<int> args;
        for (const auto& a : split(m[4], ',')) args.push_back(qubit(a));
        CircuitOp op;
        op.source = OpSource::Imported;
        op.index = static_cast<int>(circ.ops.size());
        if (name == "cx" || name == "cz" || name == "cy" || name == "crz" || name == "cu1") {
            if (args.size() != 2) throw ExportError("qasm: " + name + " takes two qubits");
            op.kind = OpKind::Controlled;
            op.control = args[0];
            op.qubits = {args[1]};
            const std::string target = name == "cx" ? "x" : name == "cz" ? "z" : name == "cy" ? "y" : name.substr(1);
            op.matrix = named_one_qubit(target, params);
        } else if (name == "swap") {
            if (args.size() != 2 || !params.empty()) throw ExportError("qasm: swap takes two qubits");
            op.matrix = swap_gate();
            op.qubits = args;
        } else {
            if (args.size() != 1) throw ExportError("qasm: " + name + " takes one qubit");
            op.matrix = named_one_qubit(name, params);
            op.qubits = args;
        }
        circ.ops.push_back(std::move(op));
    }
    if (!header) throw ExportError("qasm: missing OPENQASM 2.0 header");
    if (!measures.empty()) {
        std::sort(measures.begin(), measures.end());
        CircuitOp meas = measure_op({});
        for (auto [bit, w] : measures) meas.qubits.push_back(w);
        circ.ops.push_back(std::move(meas));
    }
    circ.validate();
    return circ;
}

MeasurementSetup prepare_measurement(const StateUnitary& theta, int m_e, std::uint64_t seed) {
    theta.validate();
    std::mt19937_64 rng(seed);
    // A slightly kicked mirror image as the start; the exact reflection can sit on a saddle.
    StateUnitary init = reflect(theta);
    for (auto& g : init.gates) {
        Matrix a = random_unitary(4, rng);
        g = g * expm_hermitian((0.5 * (a + a.adjoint())).eval(), Complex(0.0, 1e-2));
    }
    StepOptions opts;
    opts.tol = 1e-15;
    opts.floor = 0.0;
    auto res = evolution_step(theta, build_trotter_step(SpinHamiltonian{}, 0.0, 2), opts, nullptr, &init);
    MeasurementSetup s;
    s.u_left = theta.rep == Representation::Left ? theta : res.theta;
    s.u_right = theta.rep == Representation::Right ? theta : res.theta;
    auto env = exact_environments(build_transfer(s.u_left, s.u_right));
    s.lambda = env.lambda;
    auto fit_l = fit_layered_environment(env.l.vector.normalized(), m_e);
    auto fit_r = fit_layered_environment(env.r.vector.normalized(), m_e);
    s.l_circuit = *fit_l.env.circuit;
    s.r_circuit = *fit_r.env.circuit;
    s.fit_error_l = fit_l.err;
    s.fit_error_r = fit_r.err;
    return s;
}

double squared_expectation_from_circuits(const MeasurementSetup& s, const Matrix& op, const SimulatorOptions& options) {
    auto p = [&](const Matrix& o) {
        return simulate_statevector(build_observable_circuit(s.u_right, s.u_left, o, s.l_circuit, s.r_circuit), options)
            .probs[0];
    };
    const double norm = p(Matrix::Identity(2, 2));
    if (norm <= 1e-14) throw ConditioningError("identity circuit has vanishing all-zeros probability");
    return p(op) / norm;
}

}  // namespace usc
