#include "homsim/fockspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace homsim {

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// Integer power with 0^0 = 1 (std::pow on complex goes through log).
cplx ipow(cplx z, int e) {
    cplx r = 1.0;
    for (int i = 0; i < e; ++i) r *= z;
    return r;
}

void check_cutoff(int cutoff) {
    if (cutoff < 0 || cutoff > 16) {
        throw std::invalid_argument("cutoff must be in [0, 16], got " + std::to_string(cutoff));
    }
}

// sqrt(n! / (n - p)!) : matrix element of a^p between <n - p| and |n>.
double lowering_factor(int n, int p) {
    double f = 1.0;
    for (int i = 0; i < p; ++i) f *= static_cast<double>(n - i);
    return std::sqrt(f);
}

}  // namespace

bool MomentIndex::valid() const {
    for (int e : {n, m, k, l}) {
        if (e < 0 || e > 2) return false;
    }
    return true;
}

std::string to_string(const MomentIndex& idx) {
    std::ostringstream os;
    os << '(' << idx.n << ',' << idx.m << ',' << idx.k << ',' << idx.l << ')';
    return os.str();
}

// ---------------------------------------------------------------- TwoModeState

TwoModeState::TwoModeState(int cutoff) : cutoff_(cutoff) {
    check_cutoff(cutoff);
    amps_ = Eigen::VectorXcd::Zero(dim());
    amps_(0) = 1.0;
}

TwoModeState TwoModeState::from_amplitudes(int cutoff, Eigen::VectorXcd amplitudes) {
    TwoModeState s(cutoff);
    if (amplitudes.size() != s.dim()) {
        throw std::invalid_argument("amplitude vector has wrong dimension");
    }
    if (std::abs(amplitudes.squaredNorm() - 1.0) > 1e-12) {
        throw std::invalid_argument("state is not normalized");
    }
    s.amps_ = std::move(amplitudes);
    return s;
}

TwoModeState TwoModeState::normalized(int cutoff, Eigen::VectorXcd amplitudes) {
    const double norm = amplitudes.norm();
    if (norm == 0.0) throw std::invalid_argument("cannot normalize the zero vector");
    amplitudes /= norm;
    return from_amplitudes(cutoff, std::move(amplitudes));
}

TwoModeState TwoModeState::basis(int n_a, int n_b, int cutoff) {
    TwoModeState s(cutoff);
    if (n_a < 0 || n_b < 0 || n_a > cutoff || n_b > cutoff) {
        throw std::out_of_range("basis state outside cutoff");
    }
    s.amps_.setZero();
    s.amps_(s.index(n_a, n_b)) = 1.0;
    return s;
}

cplx TwoModeState::amplitude(int n_a, int n_b) const {
    if (n_a < 0 || n_b < 0 || n_a > cutoff_ || n_b > cutoff_) {
        throw std::out_of_range("photon number outside cutoff");
    }
    return amps_(index(n_a, n_b));
}

// --------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(int cutoff) : cutoff_(cutoff) {
    check_cutoff(cutoff);
    const int d = (cutoff + 1) * (cutoff + 1);
    rho_ = Eigen::MatrixXcd::Zero(d, d);
    rho_(0, 0) = 1.0;
}

DensityMatrix DensityMatrix::from_matrix(int cutoff, Eigen::MatrixXcd entries) {
    DensityMatrix rho(cutoff);
    if (entries.rows() != rho.dim() || entries.cols() != rho.dim()) {
        throw std::invalid_argument("density matrix has wrong dimension");
    }
    if ((entries - entries.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::invalid_argument("density matrix is not Hermitian");
    }
    if (std::abs(entries.trace() - 1.0) > 1e-10) {
        throw std::invalid_argument("density matrix trace differs from 1");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) {
        throw std::invalid_argument("density matrix has a negative eigenvalue");
    }
    rho.rho_ = std::move(entries);
    return rho;
}

DensityMatrix DensityMatrix::pure(const TwoModeState& psi) {
    DensityMatrix rho(psi.cutoff());
    rho.rho_ = psi.amplitudes() * psi.amplitudes().adjoint();
    return rho;
}

DensityMatrix DensityMatrix::maximally_mixed(int cutoff) {
    DensityMatrix rho(cutoff);
    rho.rho_ = Eigen::MatrixXcd::Identity(rho.dim(), rho.dim()) / static_cast<double>(rho.dim());
    return rho;
}

// ---------------------------------------------------------------- beam splitter

void BeamSplitterConfig::validate() const {
    if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
        throw std::invalid_argument("transmissivity must lie in [0, 1]");
    }
}

Eigen::Matrix2cd BeamSplitterConfig::creation_map() const {
    validate();
    const double t = std::sqrt(transmissivity);
    const double r = std::sqrt(1.0 - transmissivity);
    const cplx i(0.0, 1.0);
    Eigen::Matrix2cd c;
    switch (convention) {
    case PhaseConvention::SymmetricI:
        // Inverse of the Heisenberg map, applied to creation operators.
        c << t, i * r,
             i * r, t;
        break;
    case PhaseConvention::RealAntisymmetric:
        c << t, -r,
             r, t;
        break;
    }
    return c;
}

PhaseConvention phase_convention_from_string(const std::string& name) {
    if (name == "symmetric-i") return PhaseConvention::SymmetricI;
    if (name == "real-antisymmetric") return PhaseConvention::RealAntisymmetric;
    throw std::invalid_argument("unknown beam-splitter phase convention: " + name);
}

std::string to_string(PhaseConvention convention) {
    switch (convention) {
    case PhaseConvention::SymmetricI: return "symmetric-i";
    case PhaseConvention::RealAntisymmetric: return "real-antisymmetric";
    }
    return "unknown";
}

TwoModeState prepare_input(cplx beta_a, cplx beta_b, int cutoff) {
    if (std::abs(beta_a) > 1.0 + 1e-12 || std::abs(beta_b) > 1.0 + 1e-12) {
        throw std::domain_error("preparation amplitude |beta| must not exceed 1");
    }
    if (cutoff < 1) throw std::invalid_argument("prepare_input needs cutoff >= 1");
    const double alpha_a = std::sqrt(std::max(0.0, 1.0 - std::norm(beta_a)));
    const double alpha_b = std::sqrt(std::max(0.0, 1.0 - std::norm(beta_b)));
    TwoModeState s(cutoff);
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(s.dim());
    amps(s.index(0, 0)) = alpha_a * alpha_b;
    amps(s.index(1, 0)) = beta_a * alpha_b;
    amps(s.index(0, 1)) = alpha_a * beta_b;
    amps(s.index(1, 1)) = beta_a * beta_b;
    return TwoModeState::normalized(cutoff, std::move(amps));
}

namespace {

// Image of |p, q> as amplitudes over |i, N - i>, N = p + q.
std::vector<cplx> beam_splitter_image(int p, int q, const Eigen::Matrix2cd& c) {
    const int total = p + q;
    std::vector<cplx> out(total + 1, 0.0);
    // (c00 a† + c01 b†)^p (c10 a† + c11 b†)^q |0> / sqrt(p! q!)
    for (int i = 0; i <= p; ++i) {
        const cplx fi = binomial(p, i) * ipow(c(0, 0), i) * ipow(c(0, 1), p - i);
        for (int j = 0; j <= q; ++j) {
            const cplx fj = binomial(q, j) * ipow(c(1, 0), j) * ipow(c(1, 1), q - j);
            const int na = i + j;
            out[na] += fi * fj * std::sqrt(factorial(na) * factorial(total - na));
        }
    }
    const double norm = std::sqrt(factorial(p) * factorial(q));
    for (auto& v : out) v /= norm;
    return out;
}

}  // namespace

TwoModeState apply_beam_splitter(const TwoModeState& state, const BeamSplitterConfig& cfg) {
    const Eigen::Matrix2cd c = cfg.creation_map();
    const int cut = state.cutoff();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(state.dim());
    double overflow = 0.0;
    for (int p = 0; p <= cut; ++p) {
        for (int q = 0; q <= cut; ++q) {
            const cplx amp = state.amplitude(p, q);
            if (amp == 0.0) continue;
            const auto image = beam_splitter_image(p, q, c);
            const int total = p + q;
            for (int na = 0; na <= total; ++na) {
                const cplx v = amp * image[na];
                if (na > cut || total - na > cut) {
                    overflow += std::norm(v);
                } else {
                    out(state.index(na, total - na)) += v;
                }
            }
        }
    }
    if (overflow > 1e-24) {
        throw CutoffOverflow("beam-splitter image exceeds the Fock cutoff " + std::to_string(cut) +
                             " (lost weight " + std::to_string(overflow) + ")");
    }
    return TwoModeState::from_amplitudes(cut, std::move(out));
}

Eigen::MatrixXcd beam_splitter_matrix(int cutoff, const BeamSplitterConfig& cfg) {
    check_cutoff(cutoff);
    const Eigen::Matrix2cd c = cfg.creation_map();
    const int d = (cutoff + 1) * (cutoff + 1);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(d, d);
    for (int p = 0; p <= cutoff; ++p) {
        for (int q = 0; p + q <= cutoff; ++q) {
            const auto image = beam_splitter_image(p, q, c);
            const int total = p + q;
            for (int na = 0; na <= total; ++na) {
                u(na * (cutoff + 1) + (total - na), p * (cutoff + 1) + q) = image[na];
            }
        }
    }
    return u;
}

// --------------------------------------------------------------------- moments

Eigen::MatrixXcd moment_operator(int cutoff, const MomentIndex& idx) {
    check_cutoff(cutoff);
    if (idx.n < 0 || idx.m < 0 || idx.k < 0 || idx.l < 0) {
        throw std::out_of_range("negative moment exponent");
    }
    const int d = (cutoff + 1) * (cutoff + 1);
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(d, d);
    // <i_a i_b| (a†)^n a^m (b†)^k b^l |j_a j_b>
    for (int ja = idx.m; ja <= cutoff; ++ja) {
        const int ia = ja - idx.m + idx.n;
        if (ia > cutoff) continue;
        const double fa = lowering_factor(ja, idx.m) * lowering_factor(ia, idx.n);
        for (int jb = idx.l; jb <= cutoff; ++jb) {
            const int ib = jb - idx.l + idx.k;
            if (ib > cutoff) continue;
            const double fb = lowering_factor(jb, idx.l) * lowering_factor(ib, idx.k);
            op(ia * (cutoff + 1) + ib, ja * (cutoff + 1) + jb) = fa * fb;
        }
    }
    return op;
}

cplx moment_expectation(const DensityMatrix& rho, const MomentIndex& idx) {
    if (idx.order() > 2 * rho.cutoff()) {
        throw std::out_of_range("moment order exceeds 2 * cutoff: " + to_string(idx));
    }
    return (rho.matrix() * moment_operator(rho.cutoff(), idx)).trace();
}

cplx moment_expectation(const TwoModeState& psi, const MomentIndex& idx) {
    if (idx.order() > 2 * psi.cutoff()) {
        throw std::out_of_range("moment order exceeds 2 * cutoff: " + to_string(idx));
    }
    return psi.amplitudes().dot(moment_operator(psi.cutoff(), idx) * psi.amplitudes());
}

// --------------------------------------------------------- entanglement & co

double fidelity(const DensityMatrix& rho, const TwoModeState& target) {
    if (rho.cutoff() != target.cutoff()) {
        throw std::invalid_argument("fidelity: cutoff mismatch");
    }
    const cplx f = target.amplitudes().dot(rho.matrix() * target.amplitudes());
    return std::clamp(f.real(), 0.0, 1.0);
}

Eigen::MatrixXcd partial_transpose_a(const Eigen::MatrixXcd& rho, int cutoff) {
    const int d1 = cutoff + 1;
    Eigen::MatrixXcd out(rho.rows(), rho.cols());
    for (int ia = 0; ia < d1; ++ia)
        for (int ib = 0; ib < d1; ++ib)
            for (int ja = 0; ja < d1; ++ja)
                for (int jb = 0; jb < d1; ++jb)
                    out(ia * d1 + ib, ja * d1 + jb) = rho(ja * d1 + ib, ia * d1 + jb);
    return out;
}

double negativity(const DensityMatrix& rho) {
    const Eigen::MatrixXcd& m = rho.matrix();
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::invalid_argument("negativity: input is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(partial_transpose_a(m, rho.cutoff()),
                                                       Eigen::EigenvaluesOnly);
    double neg = 0.0;
    for (double ev : es.eigenvalues()) {
        if (ev < 0.0) neg -= ev;
    }
    // (||rho^TA||_1 - 1) / 2 equals the summed magnitude of negative eigenvalues.
    return neg;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.cutoff() != b.cutoff()) throw std::invalid_argument("trace_distance: cutoff mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.matrix() - b.matrix(),
                                                       Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

TwoModeState with_cutoff(const TwoModeState& psi, int cutoff, double tol) {
    TwoModeState out(cutoff);
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(out.dim());
    double lost = 0.0;
    for (int na = 0; na <= psi.cutoff(); ++na) {
        for (int nb = 0; nb <= psi.cutoff(); ++nb) {
            const cplx v = psi.amplitude(na, nb);
            if (na <= cutoff && nb <= cutoff) {
                amps(out.index(na, nb)) = v;
            } else {
                lost += std::norm(v);
            }
        }
    }
    if (lost > tol) throw CutoffOverflow("state has weight above the requested cutoff");
    return TwoModeState::normalized(cutoff, std::move(amps));
}

DensityMatrix with_cutoff(const DensityMatrix& rho, int cutoff, double tol) {
    check_cutoff(cutoff);
    const int d1 = cutoff + 1;
    const int s1 = rho.cutoff() + 1;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d1 * d1, d1 * d1);
    double kept = 0.0;
    for (int ia = 0; ia < std::min(d1, s1); ++ia)
        for (int ib = 0; ib < std::min(d1, s1); ++ib)
            for (int ja = 0; ja < std::min(d1, s1); ++ja)
                for (int jb = 0; jb < std::min(d1, s1); ++jb)
                    m(ia * d1 + ib, ja * d1 + jb) = rho(ia * s1 + ib, ja * s1 + jb);
    kept = m.trace().real();
    if (1.0 - kept > tol) throw CutoffOverflow("density matrix has weight above the requested cutoff");
    m /= kept;
    m = 0.5 * (m + m.adjoint()).eval();
    return DensityMatrix::from_matrix(cutoff, std::move(m));
}

DensityMatrix local_phase_rotation(const DensityMatrix& rho, double theta, double chi) {
    const int d1 = rho.cutoff() + 1;
    Eigen::VectorXcd phases(rho.dim());
    for (int na = 0; na < d1; ++na)
        for (int nb = 0; nb < d1; ++nb)
            phases(na * d1 + nb) = std::polar(1.0, theta * na + chi * nb);
    Eigen::MatrixXcd m = phases.asDiagonal() * rho.matrix() * phases.conjugate().asDiagonal();
    return DensityMatrix::from_matrix(rho.cutoff(), std::move(m));
}

// ------------------------------------------------------------------------ JSON

namespace {

nlohmann::json complex_pair(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

cplx complex_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

nlohmann::json to_json(const TwoModeState& psi) {
    nlohmann::json amps = nlohmann::json::array();
    for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i) amps.push_back(complex_pair(psi.amplitudes()(i)));
    return {{"cutoff", psi.cutoff()}, {"basis", "row-major (n_a, n_b)"}, {"amplitudes", amps}};
}

nlohmann::json to_json(const DensityMatrix& rho) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < rho.dim(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < rho.dim(); ++c) row.push_back(complex_pair(rho(r, c)));
        rows.push_back(std::move(row));
    }
    return {{"cutoff", rho.cutoff()}, {"basis", "row-major (n_a, n_b)"}, {"entries", rows}};
}

TwoModeState state_from_json(const nlohmann::json& j) {
    const int cutoff = j.at("cutoff").get<int>();
    const auto& amps = j.at("amplitudes");
    Eigen::VectorXcd v(amps.size());
    for (std::size_t i = 0; i < amps.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from(amps[i]);
    return TwoModeState::from_amplitudes(cutoff, std::move(v));
}

DensityMatrix density_matrix_from_json(const nlohmann::json& j) {
    const int cutoff = j.at("cutoff").get<int>();
    const auto& rows = j.at("entries");
    const auto d = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != d) throw std::invalid_argument("density matrix rows must be square");
        for (Eigen::Index c = 0; c < d; ++c) m(r, c) = complex_from(rows[r][c]);
    }
    return DensityMatrix::from_matrix(cutoff, std::move(m));
}

}  // namespace homsim
