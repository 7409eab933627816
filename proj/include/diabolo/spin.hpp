#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "diabolo/half_int.hpp"

namespace diabolo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

// Spin magnitude J, stored as 2J so half-integer spins are exact.
struct SpinQuantum {
    int twice_j = 1;

    explicit SpinQuantum(int twice_j_);
    int dim() const { return twice_j + 1; }
    double j() const { return 0.5 * twice_j; }
};

// Angular-momentum matrices in the Jz eigenbasis ordered m = +J ... -J.
struct SpinOperatorSet {
    Matrix jx, jy, jz, jplus, jminus;
    int dim = 0;
};

SpinOperatorSet make_spin_operators(SpinQuantum spin);

// One ordered product of spin components: word "zz" means Jz*Jz, "xy" means
// Jx*Jy. No implicit symmetrization; Hermiticity of the total is checked
// after assembly.
struct HamiltonianTerm {
    double coefficient = 0.0;
    std::string word;
};

// -K Jz^2 + D (Jx^2 - Jy^2), easy axis z, hard axis x. Requires 0 < D < K.
struct BiaxialPreset {
    double K = 1.0;
    double D = 0.1;
};

// E0 + K (Jx^4 + Jy^4 + Jz^4) / 6.
struct CubicPreset {
    double E0 = 0.0;
    double K = 1.0;
};

// Biaxial term plus C (J+^4 + J-^4). Requires 0 < D < K.
struct BiaxialTetragonalPreset {
    double K = 1.0;
    double D = 0.1;
    double C = 0.0;
};

using TermList = std::vector<HamiltonianTerm>;
using ZeroFieldSpec = std::variant<BiaxialPreset, CubicPreset, BiaxialTetragonalPreset, TermList>;

struct HamiltonianModel {
    SpinQuantum spin;
    ZeroFieldSpec zero_field;
};

// Applied magnetic field in energy units (hbar = 1, the magnetic moment is
// absorbed into H).
struct FieldVector {
    double hx = 0.0;
    double hy = 0.0;
    double hz = 0.0;

    double norm() const;
    Eigen::Vector3d vec() const { return {hx, hy, hz}; }
    static FieldVector from_vec(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

    friend FieldVector operator+(const FieldVector& a, const FieldVector& b) {
        return {a.hx + b.hx, a.hy + b.hy, a.hz + b.hz};
    }
    friend FieldVector operator-(const FieldVector& a) { return {-a.hx, -a.hy, -a.hz}; }
    friend FieldVector operator*(double s, const FieldVector& a) {
        return {s * a.hx, s * a.hy, s * a.hz};
    }
};

double distance(const FieldVector& a, const FieldVector& b);

// Zero-field matrix of the model. Presets expand to their operator
// polynomials; term lists evaluate ordered products left to right. Throws on
// odd-degree words and on a non-Hermitian total.
Matrix zero_field_matrix(const HamiltonianModel& model);

// H0 - hx Jx - hy Jy - hz Jz.
Matrix assemble_hamiltonian(const HamiltonianModel& model, const FieldVector& field);

// True iff every term of the zero-field Hamiltonian has even degree in the
// spin components. Presets are even by construction. Topological statements
// downstream assume this.
bool parity_check(const HamiltonianModel& model);

// |J M n> = exp(-i phi Jz) exp(-i theta Jy) exp(i phi Jz) |J M> with
// n = (sin t cos p, sin t sin p, cos t). Requires |M| <= J, M = J (mod 1),
// theta in [0, pi], phi in [0, 2 pi).
StateVector coherent_state(SpinQuantum spin, HalfInt m, double theta, double phi);

// Caches the spin operators and zero-field matrix of one model so repeated
// field sweeps only pay for the field term.
class HamiltonianEvaluator {
  public:
    explicit HamiltonianEvaluator(const HamiltonianModel& model);

    Matrix at(const FieldVector& field) const;
    const SpinOperatorSet& ops() const { return ops_; }
    const Matrix& h0() const { return h0_; }
    SpinQuantum spin() const { return spin_; }

  private:
    SpinQuantum spin_;
    SpinOperatorSet ops_;
    Matrix h0_;
};

}  // namespace diabolo
