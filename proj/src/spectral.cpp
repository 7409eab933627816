#include "diabolo/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>
#include <stdexcept>

namespace diabolo {

SpectrumResult eigensystem(const Matrix& h) {
    if (h.rows() != h.cols() || h.rows() < 1)
        throw std::invalid_argument("eigensystem: matrix must be square and non-empty");

    double asym = 0.0;
    for (int i = 0; i < h.rows(); ++i)
        for (int j = 0; j <= i; ++j)
            asym = std::max(asym, std::abs(h(i, j) - std::conj(h(j, i))));
    const double tol = 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff());
    if (asym > tol) {
        std::ostringstream os;
        os << "eigensystem: input is not Hermitian, max |H - H^dagger| = " << asym;
        throw std::invalid_argument(os.str());
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigensystem: eigensolver failed to converge");

    SpectrumResult r;
    r.energies = es.eigenvalues();
    r.states = es.eigenvectors();
    const int tj = static_cast<int>(h.rows()) - 1;
    r.labels.reserve(h.rows());
    for (int k = 0; k < h.rows(); ++k) r.labels.push_back(HalfInt::from_twice(tj - 2 * k));
    return r;
}

Eigen::VectorXd eigenvalues_only(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigenvalues_only: eigensolver failed to converge");
    return es.eigenvalues();
}

HalfInt label_of_rank(SpinQuantum spin, int rank) {
    if (rank < 0 || rank > spin.twice_j)
        throw std::invalid_argument("label_of_rank: rank must lie in [0, 2J]");
    return HalfInt::from_twice(spin.twice_j - 2 * rank);
}

int rank_of_label(SpinQuantum spin, HalfInt mu) {
    const int t = spin.twice_j - mu.twice();
    if (t < 0 || t % 2 != 0 || t / 2 > spin.twice_j)
        throw std::invalid_argument("rank_of_label: mu is not a level label of this spin");
    return t / 2;
}

GapProfile gap_profile(const SpectrumResult& s) {
    const int n = s.dim();
    GapProfile g;
    g.gaps = Eigen::VectorXd::Zero(std::max(0, n - 1));
    g.spectral_width = n > 0 ? s.energies[n - 1] - s.energies[0] : 0.0;
    g.min_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < n; ++k) {
        g.gaps[k] = s.energies[k + 1] - s.energies[k];
        if (g.gaps[k] < g.min_gap) {
            g.min_gap = g.gaps[k];
            g.min_gap_index = k;
        }
    }
    if (n <= 1) g.min_gap = 0.0;
    return g;
}

}  // namespace diabolo
