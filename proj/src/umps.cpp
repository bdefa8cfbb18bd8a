#include "usc/umps.hpp"

#include "usc/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace usc {

void SpinHamiltonian::validate() const {
    if (!std::isfinite(J) || !std::isfinite(g) || !std::isfinite(h))
        throw ConfigError("Hamiltonian couplings must be finite");
}

std::string to_string(CanonicalForm f) {
    switch (f) {
        case CanonicalForm::RightCanonical: return "right";
        case CanonicalForm::LeftCanonical: return "left";
        default: return "none";
    }
}

namespace {

CanonicalForm canonical_from_string(const std::string& s) {
    if (s == "right") return CanonicalForm::RightCanonical;
    if (s == "left") return CanonicalForm::LeftCanonical;
    if (s == "none") return CanonicalForm::None;
    throw ConfigError("unknown canonical form '" + s + "'");
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// sum_{s,s'} w(s', s) A^s X B^{s'}^dagger, w = op or identity.
Matrix push_right(const SiteTensor& a, const SiteTensor& b, const Matrix& x, const Matrix* op) {
    Matrix out = Matrix::Zero(a[0].rows(), b[0].rows());
    for (int s = 0; s < 2; ++s) {
        Matrix ax = a[s] * x;
        for (int sp = 0; sp < 2; ++sp) {
            Complex w = op ? (*op)(sp, s) : Complex(s == sp ? 1.0 : 0.0);
            if (w == 0.0) continue;
            out.noalias() += w * ax * b[sp].adjoint();
        }
    }
    return out;
}

/// Adjoint of push_right under <Y, X> = Tr[Y^dagger X]: sum conj(w) A^s^dagger Y B^{s'}.
Matrix push_left(const SiteTensor& a, const SiteTensor& b, const Matrix& y, const Matrix* op) {
    Matrix out = Matrix::Zero(a[0].cols(), b[0].cols());
    for (int s = 0; s < 2; ++s) {
        for (int sp = 0; sp < 2; ++sp) {
            Complex w = op ? (*op)(sp, s) : Complex(s == sp ? 1.0 : 0.0);
            if (w == 0.0) continue;
            out.noalias() += std::conj(w) * a[s].adjoint() * y * b[sp];
        }
    }
    return out;
}

std::vector<SiteTensor> rotated(const UniformMps& mps, int start, int n) {
    std::vector<SiteTensor> out;
    for (int i = 0; i < n; ++i) out.push_back(mps.tensors[(start + i) % mps.cell_size()]);
    return out;
}

Eigenpair right_fixed(const std::vector<SiteTensor>& a, const std::vector<SiteTensor>& b) {
    const Eigen::Index ra = a.front()[0].rows(), rb = b.front()[0].rows();
    LinearMap map = [&](const Vector& v) -> Vector {
        Matrix x = unvec(v, ra, rb);
        for (size_t i = a.size(); i-- > 0;) x = push_right(a[i], b[i], x, nullptr);
        return vec(x);
    };
    Matrix seed = Matrix::Identity(ra, rb);
    EigensolverOptions opts;
    opts.tol = 1e-12;
    opts.max_restarts = 500;
    return leading_eigenpair(map, ra * rb, vec(seed), opts);
}

Eigenpair left_fixed(const std::vector<SiteTensor>& a, const std::vector<SiteTensor>& b) {
    const Eigen::Index ra = a.front()[0].rows(), rb = b.front()[0].rows();
    LinearMap map = [&](const Vector& v) -> Vector {
        Matrix y = unvec(v, ra, rb);
        for (size_t i = 0; i < a.size(); ++i) y = push_left(a[i], b[i], y, nullptr);
        return vec(y);
    };
    Matrix seed = Matrix::Identity(ra, rb);
    EigensolverOptions opts;
    opts.tol = 1e-12;
    opts.max_restarts = 500;
    return leading_eigenpair(map, ra * rb, vec(seed), opts);
}

/// Hermitian positive fixed point from an eigenvector with arbitrary phase.
Matrix hermitian_fixed_point(const Vector& v, Eigen::Index n) {
    Matrix m = unvec(v, n, n);
    Complex tr = m.trace();
    if (std::abs(tr) > 0.0) m *= std::conj(tr) / std::abs(tr);
    m = (0.5 * (m + m.adjoint())).eval();
    return m / m.trace().real();
}

struct FixedPoints {
    Matrix y;  ///< left boundary at the bond left of the site
    Matrix x;  ///< right boundary at the same bond
};

FixedPoints fixed_points(const UniformMps& mps, int bond) {
    const int c = mps.cell_size();
    auto cell = rotated(mps, bond, c);
    Eigen::Index chi = cell.front()[0].rows();
    FixedPoints fp;
    fp.x = hermitian_fixed_point(right_fixed(cell, cell).vector, chi);
    fp.y = hermitian_fixed_point(left_fixed(cell, cell).vector, chi);
    return fp;
}

}  // namespace

UniformMps product_state_mps(const Vector& phys) {
    if (phys.size() != 2) throw DimensionMismatch("product state needs a 2-vector");
    Vector p = phys / phys.norm();
    UniformMps m;
    SiteTensor t;
    t[0] = Matrix::Constant(1, 1, p(0));
    t[1] = Matrix::Constant(1, 1, p(1));
    m.tensors = {t};
    m.schmidt = {RealVector::Ones(1)};
    m.chi_max = 1;
    m.form = CanonicalForm::RightCanonical;
    return m;
}

namespace {

UniformMps from_dense(const Matrix& u, int nq, Representation rep) {
    const Eigen::Index chi = Eigen::Index(1) << (nq - 1);
    SiteTensor t;
    t[0] = Matrix(chi, chi);
    t[1] = Matrix(chi, chi);
    for (int s = 0; s < 2; ++s)
        for (Eigen::Index a = 0; a < chi; ++a)
            for (Eigen::Index b = 0; b < chi; ++b) {
                if (rep == Representation::Right)
                    t[s](a, b) = u(s * chi + b, 2 * a);
                else
                    t[s](a, b) = u(2 * a + s, b);
            }
    UniformMps m;
    m.tensors = {t};
    m.chi_max = static_cast<int>(chi);
    m.form = rep == Representation::Right ? CanonicalForm::RightCanonical : CanonicalForm::LeftCanonical;
    m.schmidt = {schmidt_spectrum(m, 0)};
    return m;
}

}  // namespace

UniformMps circuit_to_umps(const StateUnitary& u) { return from_dense(build_dense(u).matrix, u.n_qubits, u.rep); }

UniformMps circuit_to_umps(const DenseStateUnitary& u) { return from_dense(u.matrix, u.n_qubits, u.rep); }

double rcf_residual(const UniformMps& mps) {
    double worst = 0.0;
    for (const auto& t : mps.tensors) {
        Matrix s = t[0] * t[0].adjoint() + t[1] * t[1].adjoint();
        worst = std::max(worst, (s - Matrix::Identity(s.rows(), s.cols())).norm());
    }
    return worst;
}

DenseStateUnitary umps_to_circuit(const UniformMps& mps, const Matrix* complement) {
    if (mps.cell_size() != 1) throw ContractViolation("umps_to_circuit needs a one-site cell");
    const Eigen::Index chi = mps.bond_dim(0);
    if (chi < 1 || (chi & (chi - 1)) != 0)
        throw ContractViolation("umps_to_circuit: bond dimension is not a power of two");
    if (rcf_residual(mps) > 1e-8) throw ContractViolation("umps_to_circuit: input is not right canonical");
    int nq = 1;
    while ((Eigen::Index(1) << (nq - 1)) < chi) ++nq;
    const auto& t = mps.tensors[0];
    Matrix v(2 * chi, chi);
    for (int s = 0; s < 2; ++s)
        for (Eigen::Index a = 0; a < chi; ++a)
            for (Eigen::Index b = 0; b < chi; ++b) v(s * chi + b, a) = t[s](a, b);
    Eigen::HouseholderQR<Matrix> qr(v);
    Matrix q = qr.householderQ();
    Matrix comp = q.rightCols(chi);
    if (complement) {
        if (complement->rows() != chi || complement->cols() != chi)
            throw DimensionMismatch("complement rotation must be chi x chi");
        comp = comp * (*complement);
    }
    Matrix u(2 * chi, 2 * chi);
    for (Eigen::Index a = 0; a < chi; ++a) {
        u.col(2 * a) = v.col(a);
        u.col(2 * a + 1) = comp.col(a);
    }
    return {nq, Representation::Right, u};
}

UniformMps right_canonicalize(const UniformMps& mps) {
    if (mps.cell_size() != 1) throw ContractViolation("right_canonicalize needs a one-site cell");
    auto cell = rotated(mps, 0, 1);
    const Eigen::Index chi = mps.bond_dim(0);
    Eigenpair er = right_fixed(cell, cell);
    Matrix x = hermitian_fixed_point(er.vector, chi);
    Eigen::SelfAdjointEigenSolver<Matrix> ex(x);
    RealVector ev = ex.eigenvalues().cwiseMax(0.0);
    if (ev.minCoeff() <= 1e-14 * ev.maxCoeff()) throw DegenerateInput("right_canonicalize: state is not injective");
    Matrix g = ex.eigenvectors() * ev.cwiseSqrt().asDiagonal();
    Matrix ginv = ev.cwiseSqrt().cwiseInverse().asDiagonal() * ex.eigenvectors().adjoint();
    double scale = std::sqrt(std::abs(er.value));
    UniformMps out = mps;
    for (int s = 0; s < 2; ++s) out.tensors[0][s] = ginv * mps.tensors[0][s] * g / scale;
    // Diagonalize the left fixed point with a unitary gauge so bonds are Schmidt ordered.
    auto ncell = rotated(out, 0, 1);
    Matrix y = hermitian_fixed_point(left_fixed(ncell, ncell).vector, chi);
    Eigen::SelfAdjointEigenSolver<Matrix> ey(y);
    Matrix w = ey.eigenvectors().rowwise().reverse();
    for (int s = 0; s < 2; ++s) out.tensors[0][s] = w.adjoint() * out.tensors[0][s] * w;
    out.form = CanonicalForm::RightCanonical;
    out.schmidt = {schmidt_spectrum(out, 0)};
    return out;
}

RealVector schmidt_spectrum(const UniformMps& mps, int site) {
    FixedPoints fp = fixed_points(mps, site);
    // Eigenvalues of Y X are gauge invariant; with X = I they are the squared Schmidt values.
    // The similar matrix sqrt(X) Y sqrt(X) is Hermitian, which keeps the solve well conditioned.
    Eigen::SelfAdjointEigenSolver<Matrix> ex(fp.x);
    Matrix sx = ex.eigenvectors() * ex.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                ex.eigenvectors().adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> es(sx * fp.y * sx, Eigen::EigenvaluesOnly);
    RealVector p = es.eigenvalues().cwiseMax(0.0);
    std::sort(p.data(), p.data() + p.size(), std::greater<double>());
    double total = p.sum();
    if (total > 0.0) p /= total;
    return p.cwiseSqrt();
}

double entropy_of_spectrum(const RealVector& s) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        double p = s(i) * s(i);
        if (p < 1e-30) continue;
        e -= p * std::log(p);
    }
    return e;
}

double entanglement_entropy(const UniformMps& mps, int bond) {
    if (bond < 0 || bond >= static_cast<int>(mps.schmidt.size()) || mps.schmidt[bond].size() == 0)
        throw ContractViolation("entanglement_entropy: no Schmidt data for this bond");
    return entropy_of_spectrum(mps.schmidt[bond]);
}

std::vector<Matrix> blocked_tensors(const UniformMps& mps, int n) {
    if (n % mps.cell_size() != 0) throw ContractViolation("block size must be a multiple of the cell");
    std::vector<Matrix> cur = {mps.tensors[0][0], mps.tensors[0][1]};
    for (int k = 1; k < n; ++k) {
        const auto& t = mps.tensors[k % mps.cell_size()];
        std::vector<Matrix> next;
        next.reserve(cur.size() * 2);
        for (const auto& m : cur) {
            next.push_back(m * t[0]);
            next.push_back(m * t[1]);
        }
        cur = std::move(next);
    }
    return cur;
}

FidelityResult fidelity_density(const UniformMps& a, const UniformMps& b) {
    const int n = std::lcm(a.cell_size(), b.cell_size());
    auto ca = rotated(a, 0, n);
    auto cb = rotated(b, 0, n);
    auto self_norm = [](const UniformMps& m, const std::vector<SiteTensor>& cell) -> double {
        if (m.form == CanonicalForm::RightCanonical && rcf_residual(m) < 1e-10) return 1.0;
        return std::abs(right_fixed(cell, cell).value);
    };
    Eigenpair mixed = right_fixed(ca, cb);
    double naa = self_norm(a, ca);
    double nbb = self_norm(b, cb);
    FidelityResult r;
    double ratio = std::abs(mixed.value) / std::sqrt(naa * nbb);
    r.fidelity = std::clamp(std::pow(ratio, 2.0 / n), 0.0, 1.0);
    r.degenerate = mixed.degenerate && std::abs(mixed.value) > 1e-12;
    return r;
}

Complex local_expectation_mps(const UniformMps& mps, const Matrix& op, int site) {
    if (op.rows() != 2 || op.cols() != 2) throw DimensionMismatch("operator must be 2x2");
    const int c = mps.cell_size();
    if (site < 0) {
        Complex acc = 0.0;
        for (int k = 0; k < c; ++k) acc += local_expectation_mps(mps, op, k);
        return acc / double(c);
    }
    const auto& t = mps.tensors[site % c];
    Matrix y = fixed_points(mps, site % c).y;
    Matrix x = fixed_points(mps, (site + 1) % c).x;
    Complex num = (y.adjoint() * push_right(t, t, x, &op)).trace();
    Complex den = (y.adjoint() * push_right(t, t, x, nullptr)).trace();
    return num / den;
}

Complex correlation_mps(const UniformMps& mps, const Matrix& op_a, const Matrix& op_b, int delta) {
    if (delta < 1) throw ContractViolation("correlation needs delta >= 1");
    const int c = mps.cell_size();
    Matrix y = fixed_points(mps, 0).y;
    Matrix x = fixed_points(mps, (delta + 1) % c).x;
    Matrix xn = x, xd = x;
    for (int k = delta; k >= 0; --k) {
        const auto& t = mps.tensors[k % c];
        const Matrix* op = k == delta ? &op_b : (k == 0 ? &op_a : nullptr);
        xn = push_right(t, t, xn, op);
        xd = push_right(t, t, xd, nullptr);
    }
    return (y.adjoint() * xn).trace() / (y.adjoint() * xd).trace();
}

UniformMps to_two_site_cell(const UniformMps& mps) {
    if (mps.cell_size() == 2) return mps;
    UniformMps out = mps;
    out.tensors = {mps.tensors[0], mps.tensors[0]};
    if (!mps.schmidt.empty()) out.schmidt = {mps.schmidt[0], mps.schmidt[0]};
    return out;
}

Matrix itebd_bond_hamiltonian(const SpinHamiltonian& ham) {
    Matrix id = Matrix::Identity(2, 2);
    Matrix x = pauli(1), z = pauli(3);
    return ham.J * kron(x, x) + 0.5 * ham.g * (kron(z, id) + kron(id, z)) +
           0.5 * ham.h * (kron(x, id) + kron(id, x));
}

namespace {

struct ItebdState {
    std::array<SiteTensor, 2> b;
    std::array<RealVector, 2> s;  // s[k]: bond left of site k
    double discarded = 0.0;
};

void bond_update(ItebdState& st, int i, const Matrix& gate, const ItebdOptions& opt) {
    const int j = 1 - i;
    const SiteTensor& a = st.b[i];
    const SiteTensor& bn = st.b[j];
    const Eigen::Index chil = a[0].rows(), chir = bn[0].cols();
    // phi[(s1, s2)] = sum gate * A^{s1'} B^{s2'}
    Matrix ab[4];
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) ab[2 * s1 + s2] = a[s1] * bn[s2];
    Matrix phi_big(2 * chil, 2 * chir);
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
            Matrix acc = Matrix::Zero(chil, chir);
            for (int p = 0; p < 4; ++p) {
                Complex gv = gate(2 * s1 + s2, p);
                if (gv != 0.0) acc += gv * ab[p];
            }
            // rows (alpha, s1), cols (s2, gamma)
            for (Eigen::Index al = 0; al < chil; ++al)
                for (Eigen::Index ga = 0; ga < chir; ++ga) phi_big(al * 2 + s1, s2 * chir + ga) = acc(al, ga);
        }
    Matrix psi = phi_big;
    for (Eigen::Index al = 0; al < chil; ++al) psi.row(2 * al) *= st.s[i](al), psi.row(2 * al + 1) *= st.s[i](al);
    Eigen::BDCSVD<Matrix> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();
    Eigen::Index keep = 0;
    while (keep < sv.size() && keep < opt.chi_max && sv(keep) > opt.svd_cutoff * sv(0)) ++keep;
    keep = std::max<Eigen::Index>(keep, 1);
    double total = sv.squaredNorm();
    double kept = sv.head(keep).squaredNorm();
    st.discarded += (total - kept) / total;
    Matrix v = svd.matrixV().leftCols(keep);  // (s2, gamma) x k
    SiteTensor nb;
    for (int s2 = 0; s2 < 2; ++s2) {
        nb[s2] = Matrix(keep, chir);
        for (Eigen::Index k = 0; k < keep; ++k)
            for (Eigen::Index ga = 0; ga < chir; ++ga) nb[s2](k, ga) = std::conj(v(s2 * chir + ga, k));
    }
    Matrix na_big = phi_big * v / std::sqrt(kept);  // (alpha, s1) x k
    SiteTensor na;
    for (int s1 = 0; s1 < 2; ++s1) {
        na[s1] = Matrix(chil, keep);
        for (Eigen::Index al = 0; al < chil; ++al) na[s1].row(al) = na_big.row(2 * al + s1);
    }
    st.b[i] = na;
    st.b[j] = nb;
    st.s[j] = sv.head(keep) / std::sqrt(kept);
}

void s2_step(ItebdState& st, const Matrix& half, const Matrix& full, const ItebdOptions& opt) {
    bond_update(st, 0, half, opt);
    bond_update(st, 1, full, opt);
    bond_update(st, 0, half, opt);
}

}  // namespace

ItebdResult itebd_evolve(const UniformMps& mps, const SpinHamiltonian& ham, double dt, int steps,
                         const ItebdOptions& options) {
    ham.validate();
    if (!(dt > 0.0)) throw ContractViolation("itebd_evolve needs dt > 0");
    if (options.order != 2 && options.order != 4) throw ContractViolation("iTEBD order must be 2 or 4");
    UniformMps start = mps.cell_size() == 1 ? to_two_site_cell(mps) : mps;
    if (start.form != CanonicalForm::RightCanonical || start.schmidt.size() != 2)
        throw ContractViolation("itebd_evolve needs a right-canonical state with Schmidt spectra");
    ItebdState st;
    st.b = {start.tensors[0], start.tensors[1]};
    st.s = {start.schmidt[0], start.schmidt[1]};
    Matrix hb = itebd_bond_hamiltonian(ham);

    struct Stage {
        Matrix half, full;
    };
    std::vector<Stage> stages;
    auto make = [&](double tau) { return Stage{expm_hermitian(hb, -kI * tau / 2.0), expm_hermitian(hb, -kI * tau)}; };
    if (options.order == 2) {
        stages.push_back(make(dt));
    } else {
        const double c = std::cbrt(2.0);
        const double x1 = 1.0 / (2.0 - c), x0 = -c / (2.0 - c);
        stages.push_back(make(x1 * dt));
        stages.push_back(make(x0 * dt));
        stages.push_back(make(x1 * dt));
    }
    for (int n = 0; n < steps; ++n)
        for (const auto& stg : stages) s2_step(st, stg.half, stg.full, options);

    ItebdResult res;
    res.mps.tensors = {st.b[0], st.b[1]};
    res.mps.schmidt = {st.s[0], st.s[1]};
    res.mps.chi_max = options.chi_max;
    res.mps.form = CanonicalForm::RightCanonical;
    res.truncation_error = st.discarded;
    return res;
}

nlohmann::json to_json(const UniformMps& mps) {
    nlohmann::json j;
    j["format"] = "usc-umps";
    j["version"] = 1;
    j["chi_max"] = mps.chi_max;
    j["canonical_form"] = to_string(mps.form);
    nlohmann::json sites = nlohmann::json::array();
    for (const auto& t : mps.tensors) {
        nlohmann::json site;
        site["rows"] = t[0].rows();
        site["cols"] = t[0].cols();
        for (int s = 0; s < 2; ++s) {
            std::vector<double> v;
            for (Eigen::Index r = 0; r < t[s].rows(); ++r)
                for (Eigen::Index c = 0; c < t[s].cols(); ++c) {
                    v.push_back(t[s](r, c).real());
                    v.push_back(t[s](r, c).imag());
                }
            site[s == 0 ? "B0" : "B1"] = v;
        }
        sites.push_back(site);
    }
    j["sites"] = sites;
    nlohmann::json sch = nlohmann::json::array();
    for (const auto& s : mps.schmidt) sch.push_back(std::vector<double>(s.data(), s.data() + s.size()));
    j["schmidt"] = sch;
    return j;
}

UniformMps umps_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "usc-umps") throw ConfigError("not an MPS document");
        UniformMps m;
        m.chi_max = j.at("chi_max").get<int>();
        m.form = canonical_from_string(j.at("canonical_form").get<std::string>());
        for (const auto& site : j.at("sites")) {
            Eigen::Index rows = site.at("rows").get<Eigen::Index>(), cols = site.at("cols").get<Eigen::Index>();
            SiteTensor t;
            for (int s = 0; s < 2; ++s) {
                auto v = site.at(s == 0 ? "B0" : "B1").get<std::vector<double>>();
                if (static_cast<Eigen::Index>(v.size()) != 2 * rows * cols) throw ConfigError("MPS tensor size mismatch");
                t[s] = Matrix(rows, cols);
                for (Eigen::Index r = 0; r < rows; ++r)
                    for (Eigen::Index c = 0; c < cols; ++c)
                        t[s](r, c) = Complex(v[2 * (r * cols + c)], v[2 * (r * cols + c) + 1]);
            }
            m.tensors.push_back(t);
        }
        for (const auto& s : j.at("schmidt")) {
            auto v = s.get<std::vector<double>>();
            m.schmidt.push_back(Eigen::Map<RealVector>(v.data(), v.size()));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed MPS document: ") + e.what());
    }
}

}  // namespace usc
