#pragma once

#include <vector>

#include "diabolo/spin.hpp"

namespace diabolo {

// Eigensystem of one Hamiltonian. Energies ascend; column k of states is the
// eigenvector of energies[k]; the level of ascending rank r carries the label
// mu = J - r, so the lowest level is +J and the highest is -J.
struct SpectrumResult {
    Eigen::VectorXd energies;
    Matrix states;
    std::vector<HalfInt> labels;

    int dim() const { return static_cast<int>(energies.size()); }
};

struct GapProfile {
    Eigen::VectorXd gaps;  // gaps[k] = energies[k+1] - energies[k]
    double spectral_width = 0.0;
    int min_gap_index = 0;
    double min_gap = 0.0;
};

// Dense Hermitian eigendecomposition. Throws if the input is not Hermitian
// (reporting the largest asymmetry). Output is deterministic for identical
// input bits within one build; eigenvector gauge in degenerate subspaces is
// solver-defined and must not be compared across calls.
SpectrumResult eigensystem(const Matrix& h);

// Ascending eigenvalues without eigenvectors; the cheap path for gap
// scans. Skips the Hermiticity check (callers pass assembled Hamiltonians).
Eigen::VectorXd eigenvalues_only(const Matrix& h);

// mu = J - rank.
HalfInt label_of_rank(SpinQuantum spin, int rank);

// Rank of the level labeled mu, i.e. J - mu.
int rank_of_label(SpinQuantum spin, HalfInt mu);

GapProfile gap_profile(const SpectrumResult& s);

}  // namespace diabolo
