#pragma once

#include "usc/circuit.hpp"

#include <vector>

namespace usc {

/// <bra| op_n ... op_1 |ket> on a register of n_wires qubits.
Complex network_value(const std::vector<WireOp>& ops, int n_wires, const Vector& ket,
                      const Vector& bra);

/// Environment of op k in s = <bra| op_n ... op_1 |ket>:
///   M_k[a, b] = sum_rest conj(beta_k[a, rest]) alpha_k[b, rest],
/// alpha_k = op_{k-1} ... op_1 |ket>, beta_k = op_{k+1}^dagger ... op_n^dagger |bra>,
/// so that s = sum_{a,b} op_k[a, b] M_k[a, b] for every k. Returned in the order of `which`.
std::vector<Matrix> op_environments(const std::vector<WireOp>& ops, int n_wires, const Vector& ket,
                                    const Vector& bra, const std::vector<int>& which);

/// R[a, b] = sum_rest conj(beta[a, rest]) alpha[b, rest] over the given wires.
Matrix reduced_overlap(const Vector& beta, const Vector& alpha, int n_wires,
                       const std::vector<int>& wires);

/// Basis state |0...0> on n_wires qubits.
Vector zero_state(int n_wires);

}  // namespace usc
