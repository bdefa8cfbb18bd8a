#pragma once

#include "usc/circuit.hpp"
#include "usc/linalg.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <string>
#include <vector>

namespace usc {

enum class CanonicalForm { RightCanonical, LeftCanonical, None };

/// Site tensor: one chi_left x chi_right matrix per physical state.
using SiteTensor = std::array<Matrix, 2>;

/// Translation-invariant MPS with a unit cell of one or two sites.
/// schmidt[k] holds the Schmidt values of the bond to the left of site k.
struct UniformMps {
    std::vector<SiteTensor> tensors;
    std::vector<RealVector> schmidt;
    int chi_max = 0;
    CanonicalForm form = CanonicalForm::None;

    int cell_size() const { return static_cast<int>(tensors.size()); }
    Eigen::Index bond_dim(int k) const { return tensors.at(k)[0].rows(); }
};

struct SpinHamiltonian {
    double J = 1.0;
    double g = 1.0;
    double h = 0.0;
    void validate() const;
};

/// Product state with every site in `phys` (a normalized 2-vector).
UniformMps product_state_mps(const Vector& phys);

/// Right: B^s_{ab} = <s, b| U |a, 0> (right canonical). Left: A^s_{ab} = <a, s| U |0, b>
/// (left canonical). Schmidt spectra are filled in. Cell size 1, chi = 2^{N_q - 1}.
UniformMps circuit_to_umps(const StateUnitary& u);
UniformMps circuit_to_umps(const DenseStateUnitary& u);

/// Completion of a right-canonical isometry to a unitary on 1 + log2(chi) qubits (Right
/// representation). `complement` optionally rotates the orthonormal complement (chi x chi
/// unitary), a pure gauge choice.
DenseStateUnitary umps_to_circuit(const UniformMps& mps, const Matrix* complement = nullptr);

/// max_k || sum_s B^s B^s^dagger - I || over the cell.
double rcf_residual(const UniformMps& mps);

/// Bring a cell-size-1 injective MPS to right-canonical form with Schmidt values.
UniformMps right_canonicalize(const UniformMps& mps);

/// Spectrum (descending, sum of squares 1) of the bond to the left of site k, computed from the
/// transfer-matrix fixed points, so it does not rely on a particular gauge.
RealVector schmidt_spectrum(const UniformMps& mps, int site = 0);

/// S = -sum s^2 ln s^2 over stored Schmidt values (terms below 1e-30 dropped).
double entanglement_entropy(const UniformMps& mps, int bond = 0);
double entropy_of_spectrum(const RealVector& s);

struct FidelityResult {
    double fidelity = 0.0;  ///< per-site fidelity density in [0, 1]
    bool degenerate = false;
};

/// |lambda_ab / sqrt(lambda_aa lambda_bb)|^{2/n} over the least common multiple cell n.
FidelityResult fidelity_density(const UniformMps& a, const UniformMps& b);

/// Single-site expectation, averaged over the unit cell when site < 0.
Complex local_expectation_mps(const UniformMps& mps, const Matrix& op, int site = -1);

/// <A_i B_{i+delta}> for i at cell site 0, delta >= 1.
Complex correlation_mps(const UniformMps& mps, const Matrix& op_a, const Matrix& op_b, int delta);

/// Blocked cell of n sites (n a multiple of the cell size): tensors of physical dimension 2^n.
std::vector<Matrix> blocked_tensors(const UniformMps& mps, int n);

/// Two-site bond Hamiltonian J XX + g/2 (ZI + IZ) + h/2 (XI + IX).
Matrix itebd_bond_hamiltonian(const SpinHamiltonian& ham);

struct ItebdOptions {
    int order = 4;            ///< 2 or 4
    int chi_max = 64;
    double svd_cutoff = 1e-12;
};

struct ItebdResult {
    UniformMps mps;
    double truncation_error = 0.0;  ///< accumulated discarded weight
    bool degenerate_warning = false;
};

/// Real-time evolution by `steps` Suzuki-Trotter steps of size dt with exp(-i dt h_bond)
/// gates on the two-site cell. Returns a right-canonical cell with Schmidt spectra.
ItebdResult itebd_evolve(const UniformMps& mps, const SpinHamiltonian& ham, double dt, int steps,
                         const ItebdOptions& options = {});

/// Copy of a cell-size-1 MPS as a cell of two identical sites.
UniformMps to_two_site_cell(const UniformMps& mps);

nlohmann::json to_json(const UniformMps& mps);
UniformMps umps_from_json(const nlohmann::json& j);

std::string to_string(CanonicalForm f);

}  // namespace usc
