#include "diabolo/spin.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace diabolo {

namespace {

constexpr Complex kI{0.0, 1.0};

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Max |M - M^dagger| entry together with its location.
struct Asymmetry {
    double value = 0.0;
    int row = 0;
    int col = 0;
};

Asymmetry hermiticity_defect(const Matrix& m) {
    Asymmetry a;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            const double d = std::abs(m(i, j) - std::conj(m(j, i)));
            if (d > a.value) a = {d, i, j};
        }
    return a;
}

}  // namespace

SpinQuantum::SpinQuantum(int twice_j_) : twice_j(twice_j_) {
    if (twice_j < 1)
        throw std::invalid_argument("twice_j must be >= 1 (a spin-0 system has no level structure)");
}

double FieldVector::norm() const { return std::sqrt(hx * hx + hy * hy + hz * hz); }

double distance(const FieldVector& a, const FieldVector& b) {
    return std::sqrt((a.hx - b.hx) * (a.hx - b.hx) + (a.hy - b.hy) * (a.hy - b.hy) +
                     (a.hz - b.hz) * (a.hz - b.hz));
}

SpinOperatorSet make_spin_operators(SpinQuantum spin) {
    const int tj = spin.twice_j;
    const int dim = spin.dim();
    SpinOperatorSet s;
    s.dim = dim;
    s.jz = Matrix::Zero(dim, dim);
    s.jplus = Matrix::Zero(dim, dim);

    // Basis index k holds m = J - k; integer arithmetic keeps the ladder
    // coefficients exact before the square root.
    for (int k = 0; k < dim; ++k) {
        const int tm = tj - 2 * k;  // twice m
        s.jz(k, k) = 0.5 * tm;
        if (k > 0) {
            // <m+1| J+ |m> = sqrt(J(J+1) - m(m+1)); 4*that = tj(tj+2) - tm(tm+2).
            const long long num =
                static_cast<long long>(tj) * (tj + 2) - static_cast<long long>(tm) * (tm + 2);
            s.jplus(k - 1, k) = 0.5 * std::sqrt(static_cast<double>(num));
        }
    }
    s.jminus = s.jplus.adjoint();
    s.jx = 0.5 * (s.jplus + s.jminus);
    s.jy = -0.5 * kI * (s.jplus - s.jminus);
    return s;
}

namespace {

Matrix evaluate_word(const SpinOperatorSet& ops, const std::string& word, int term_index) {
    Matrix m = Matrix::Identity(ops.dim, ops.dim);
    for (char c : word) {
        switch (c) {
            case 'x': m = m * ops.jx; break;
            case 'y': m = m * ops.jy; break;
            case 'z': m = m * ops.jz; break;
            default: {
                std::ostringstream os;
                os << "term " << term_index << ": word '" << word << "' contains '" << c
                   << "'; only x, y, z are allowed";
                throw std::invalid_argument(os.str());
            }
        }
    }
    return m;
}

Matrix expand_terms(const SpinOperatorSet& ops, const TermList& terms) {
    Matrix h = Matrix::Zero(ops.dim, ops.dim);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        if (t.word.size() % 2 != 0) {
            std::ostringstream os;
            os << "term " << i << ": word '" << t.word
               << "' has odd degree; the zero-field Hamiltonian must be even in the spin components";
            throw std::invalid_argument(os.str());
        }
        h += t.coefficient * evaluate_word(ops, t.word, static_cast<int>(i));
    }
    return h;
}

}  // namespace

Matrix zero_field_matrix(const HamiltonianModel& model) {
    const SpinOperatorSet ops = make_spin_operators(model.spin);
    Matrix h;

    if (const auto* b = std::get_if<BiaxialPreset>(&model.zero_field)) {
        if (!(0.0 < b->D && b->D < b->K))
            throw std::invalid_argument("biaxial preset requires 0 < D < K");
        h = -b->K * (ops.jz * ops.jz) + b->D * (ops.jx * ops.jx - ops.jy * ops.jy);
    } else if (const auto* c = std::get_if<CubicPreset>(&model.zero_field)) {
        const Matrix x2 = ops.jx * ops.jx, y2 = ops.jy * ops.jy, z2 = ops.jz * ops.jz;
        h = c->E0 * Matrix::Identity(ops.dim, ops.dim) +
            (c->K / 6.0) * (x2 * x2 + y2 * y2 + z2 * z2);
    } else if (const auto* bt = std::get_if<BiaxialTetragonalPreset>(&model.zero_field)) {
        if (!(0.0 < bt->D && bt->D < bt->K))
            throw std::invalid_argument("biaxial-tetragonal preset requires 0 < D < K");
        const Matrix p2 = ops.jplus * ops.jplus, m2 = ops.jminus * ops.jminus;
        h = -bt->K * (ops.jz * ops.jz) + bt->D * (ops.jx * ops.jx - ops.jy * ops.jy) +
            bt->C * (p2 * p2 + m2 * m2);
    } else {
        h = expand_terms(ops, std::get<TermList>(model.zero_field));
    }

    const Asymmetry a = hermiticity_defect(h);
    const double tol = 1e-12 * std::max(1.0, max_abs(h));
    if (a.value > tol) {
        std::ostringstream os;
        os << "zero-field matrix is not Hermitian: |H - H^dagger| reaches " << a.value
           << " at entry (" << a.row << "," << a.col
           << "); every ordered word needs its reversed partner with the same coefficient";
        throw std::invalid_argument(os.str());
    }
    return h;
}

Matrix assemble_hamiltonian(const HamiltonianModel& model, const FieldVector& field) {
    return HamiltonianEvaluator(model).at(field);
}

bool parity_check(const HamiltonianModel& model) {
    if (const auto* terms = std::get_if<TermList>(&model.zero_field)) {
        for (const auto& t : *terms)
            if (t.word.size() % 2 != 0) return false;
    }
    return true;
}

StateVector coherent_state(SpinQuantum spin, HalfInt m, double theta, double phi) {
    const int tj = spin.twice_j;
    if (std::abs(m.twice()) > tj || (m.twice() - tj) % 2 != 0)
        throw std::invalid_argument("coherent_state: M must satisfy |M| <= J and M = J (mod 1)");
    if (!(theta >= 0.0 && theta <= M_PI))
        throw std::invalid_argument("coherent_state: theta must lie in [0, pi]");
    if (!(phi >= 0.0 && phi < 2.0 * M_PI))
        throw std::invalid_argument("coherent_state: phi must lie in [0, 2 pi)");

    const SpinOperatorSet ops = make_spin_operators(spin);
    const int dim = spin.dim();
    const int k0 = (tj - m.twice()) / 2;  // basis index of |J M>

    StateVector v = StateVector::Zero(dim);
    v[k0] = 1.0;

    // exp(i phi Jz) acts diagonally.
    for (int k = 0; k < dim; ++k) v[k] *= std::exp(kI * (phi * 0.5 * (tj - 2 * k)));

    // exp(-i theta Jy) through the eigendecomposition of Jy.
    Eigen::SelfAdjointEigenSolver<Matrix> es(ops.jy);
    const Matrix& u = es.eigenvectors();
    StateVector w = u.adjoint() * v;
    for (int k = 0; k < dim; ++k) w[k] *= std::exp(-kI * (theta * es.eigenvalues()[k]));
    v = u * w;

    for (int k = 0; k < dim; ++k) v[k] *= std::exp(-kI * (phi * 0.5 * (tj - 2 * k)));
    return v;
}

HamiltonianEvaluator::HamiltonianEvaluator(const HamiltonianModel& model)
    : spin_(model.spin), ops_(make_spin_operators(model.spin)), h0_(zero_field_matrix(model)) {}

Matrix HamiltonianEvaluator::at(const FieldVector& field) const {
    if (!std::isfinite(field.hx) || !std::isfinite(field.hy) || !std::isfinite(field.hz))
        throw std::invalid_argument("field components must be finite");
    return h0_ - field.hx * ops_.jx - field.hy * ops_.jy - field.hz * ops_.jz;
}

}  // namespace diabolo
