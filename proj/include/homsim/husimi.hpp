#pragma once

// Exact sampling of the Husimi Q distribution of few-photon multimode states.
//
// The proposal is the equal-weight mixture of the Q functions of the Fock
// states in the support, ∏_j |<α_j|n_j>|²/π, from which |α_j|² ~ Gamma(n_j+1)
// with uniform phase. A draw is accepted with |<α|ψ>|² / Σ_n |<α|n>|², which
// is ≤ 1 by Cauchy-Schwarz; the acceptance rate is exactly 1/K for K support
// terms.

#include "homsim/fockspace.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace homsim {

inline constexpr int kMaxModes = 4;

struct FockTerm {
    std::array<int, kMaxModes> n{};
    cplx amplitude;
};

/// Sparse pure state over up to four bosonic modes (Fock amplitudes).
class MultimodeState {
public:
    MultimodeState(int modes, std::vector<FockTerm> terms);

    int modes() const { return modes_; }
    const std::vector<FockTerm>& terms() const { return terms_; }
    double norm() const;
    /// Highest occupation of any mode in the support.
    int max_occupation() const;

    /// Amplitudes of a two-mode state (mode 0 = a, mode 1 = b).
    static MultimodeState from_two_mode(const TwoModeState& psi, double tol = 0.0);

    /// ∏_s (alpha_s + beta_s L_s†)|0> where L_s† = Σ_j coeffs[s][j] m_j† is a
    /// linear combination of the mode creation operators.
    static MultimodeState product_of_linear(int modes, const std::vector<cplx>& alphas, const std::vector<cplx>& betas,
                                            const std::vector<std::vector<cplx>>& coeffs);

private:
    int modes_;
    std::vector<FockTerm> terms_;
};

class HusimiSampler {
public:
    explicit HusimiSampler(const MultimodeState& state);

    /// Writes one Q-distributed draw per mode into out[0 .. modes).
    void sample(std::mt19937_64& rng, std::span<cplx> out);

    int modes() const { return modes_; }
    std::size_t support() const { return terms_.size(); }
    double analytic_acceptance() const { return 1.0 / static_cast<double>(terms_.size()); }
    std::uint64_t trials() const { return trials_; }
    std::uint64_t accepted() const { return accepted_; }

private:
    struct Term {
        std::array<int, kMaxModes> n{};
        cplx amplitude;
        double inv_sqrt_factorial = 1.0;
    };
    int modes_;
    std::vector<Term> terms_;
    std::uint64_t trials_ = 0, accepted_ = 0;
    std::array<std::gamma_distribution<double>, 8> gamma_;
};

/// One Q-function draw (alpha_a, alpha_b) of a two-mode state with cutoff <= 3.
std::pair<cplx, cplx> sample_husimi(const TwoModeState& state, std::mt19937_64& rng);

}  // namespace homsim
