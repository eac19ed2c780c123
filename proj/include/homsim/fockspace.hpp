#pragma once

// Exact algebra on a truncated two-mode Fock space |n_a, n_b>, 0 <= n <= cutoff.
// Basis ordering is row-major in (n_a, n_b): index = n_a * (cutoff + 1) + n_b.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

namespace homsim {

using cplx = std::complex<double>;

/// Thrown when a transformation would populate levels above the cutoff.
class CutoffOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultCutoff = 3;

/// Exponents of the normally ordered product (a†)^n a^m (b†)^k b^l.
struct MomentIndex {
    int n = 0, m = 0, k = 0, l = 0;

    int order() const { return n + m + k + l; }
    /// Index of the Hermitian-conjugate operator.
    MomentIndex conjugate() const { return {m, n, l, k}; }
    bool valid() const;

    auto operator<=>(const MomentIndex&) const = default;
};

std::string to_string(const MomentIndex& idx);

class TwoModeState {
public:
    TwoModeState() : TwoModeState(kDefaultCutoff) {}
    explicit TwoModeState(int cutoff);  // vacuum

    /// Validates normalization (1e-12) and dimension.
    static TwoModeState from_amplitudes(int cutoff, Eigen::VectorXcd amplitudes);
    /// Rescales to unit norm first; throws on a zero vector.
    static TwoModeState normalized(int cutoff, Eigen::VectorXcd amplitudes);
    static TwoModeState basis(int n_a, int n_b, int cutoff = kDefaultCutoff);

    int cutoff() const { return cutoff_; }
    int dim() const { return (cutoff_ + 1) * (cutoff_ + 1); }
    int index(int n_a, int n_b) const { return n_a * (cutoff_ + 1) + n_b; }

    cplx amplitude(int n_a, int n_b) const;
    const Eigen::VectorXcd& amplitudes() const { return amps_; }

private:
    int cutoff_;
    Eigen::VectorXcd amps_;
};

class DensityMatrix {
public:
    DensityMatrix() : DensityMatrix(kDefaultCutoff) {}
    explicit DensityMatrix(int cutoff);  // |00><00|

    /// Checks Hermiticity (1e-10), unit trace (1e-10) and eigenvalues >= -1e-9.
    static DensityMatrix from_matrix(int cutoff, Eigen::MatrixXcd entries);
    static DensityMatrix pure(const TwoModeState& psi);
    static DensityMatrix maximally_mixed(int cutoff);

    int cutoff() const { return cutoff_; }
    int dim() const { return static_cast<int>(rho_.rows()); }
    int index(int n_a, int n_b) const { return n_a * (cutoff_ + 1) + n_b; }
    const Eigen::MatrixXcd& matrix() const { return rho_; }
    cplx operator()(int row, int col) const { return rho_(row, col); }

private:
    int cutoff_;
    Eigen::MatrixXcd rho_;
};

enum class PhaseConvention {
    /// a = sqrt(T) a' + i sqrt(R) b',  b = i sqrt(R) a' + sqrt(T) b'
    SymmetricI,
    /// a = sqrt(T) a' + sqrt(R) b',  b = -sqrt(R) a' + sqrt(T) b'
    RealAntisymmetric,
};

struct BeamSplitterConfig {
    double transmissivity = 0.5;
    PhaseConvention convention = PhaseConvention::SymmetricI;

    void validate() const;
    /// c(i, j): coefficient of output creation operator j (0 = a, 1 = b) in the
    /// image of input creation operator i (0 = a', 1 = b').
    Eigen::Matrix2cd creation_map() const;
};

PhaseConvention phase_convention_from_string(const std::string& name);
std::string to_string(PhaseConvention convention);

/// (alpha_a|0> + beta_a|1>) ⊗ (alpha_b|0> + beta_b|1>), alpha = sqrt(1 - |beta|^2).
TwoModeState prepare_input(cplx beta_a, cplx beta_b, int cutoff = kDefaultCutoff);

TwoModeState apply_beam_splitter(const TwoModeState& state, const BeamSplitterConfig& cfg = {});

/// Beam-splitter unitary on the photon-number sectors n_a + n_b <= cutoff, which
/// are closed under the transformation. Columns of higher sectors are zero.
Eigen::MatrixXcd beam_splitter_matrix(int cutoff, const BeamSplitterConfig& cfg = {});

/// Exact matrix of (a†)^n a^m (b†)^k b^l restricted to the truncated basis.
Eigen::MatrixXcd moment_operator(int cutoff, const MomentIndex& idx);

cplx moment_expectation(const DensityMatrix& rho, const MomentIndex& idx);
cplx moment_expectation(const TwoModeState& psi, const MomentIndex& idx);

double fidelity(const DensityMatrix& rho, const TwoModeState& target);
double negativity(const DensityMatrix& rho);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

/// Partial transpose over mode a.
Eigen::MatrixXcd partial_transpose_a(const Eigen::MatrixXcd& rho, int cutoff);

/// Change of cutoff. Truncation throws CutoffOverflow if weight above the new
/// cutoff exceeds tol.
TwoModeState with_cutoff(const TwoModeState& psi, int cutoff, double tol = 1e-12);
DensityMatrix with_cutoff(const DensityMatrix& rho, int cutoff, double tol = 1e-10);

/// Applies exp(i theta n_a) ⊗ exp(i chi n_b).
DensityMatrix local_phase_rotation(const DensityMatrix& rho, double theta, double chi = 0.0);

// JSON layout: {"cutoff": c, "basis": "row-major (n_a, n_b)",
//               "amplitudes": [[re, im], ...]} or "entries": [[[re, im], ...], ...]
nlohmann::json to_json(const TwoModeState& psi);
nlohmann::json to_json(const DensityMatrix& rho);
TwoModeState state_from_json(const nlohmann::json& j);
DensityMatrix density_matrix_from_json(const nlohmann::json& j);

}  // namespace homsim
