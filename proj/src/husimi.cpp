#include "homsim/husimi.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace homsim {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

MultimodeState::MultimodeState(int modes, std::vector<FockTerm> terms) : modes_(modes), terms_(std::move(terms)) {
    if (modes_ < 1 || modes_ > kMaxModes) throw std::invalid_argument("mode count must be 1..4");
    if (terms_.empty()) throw std::invalid_argument("state has no support");
    for (const auto& t : terms_) {
        for (int j = 0; j < kMaxModes; ++j) {
            if (t.n[j] < 0 || (j >= modes_ && t.n[j] != 0)) throw std::invalid_argument("occupation out of range");
        }
    }
}

double MultimodeState::norm() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::norm(t.amplitude);
    return std::sqrt(s);
}

int MultimodeState::max_occupation() const {
    int m = 0;
    for (const auto& t : terms_) {
        for (int v : t.n) m = std::max(m, v);
    }
    return m;
}

MultimodeState MultimodeState::from_two_mode(const TwoModeState& psi, double tol) {
    std::vector<FockTerm> terms;
    for (int na = 0; na <= psi.cutoff(); ++na) {
        for (int nb = 0; nb <= psi.cutoff(); ++nb) {
            const cplx a = psi.amplitude(na, nb);
            if (std::abs(a) > tol) terms.push_back({{na, nb, 0, 0}, a});
        }
    }
    return {2, std::move(terms)};
}

MultimodeState MultimodeState::product_of_linear(int modes, const std::vector<cplx>& alphas,
                                                 const std::vector<cplx>& betas,
                                                 const std::vector<std::vector<cplx>>& coeffs) {
    if (alphas.size() != betas.size() || alphas.size() != coeffs.size()) {
        throw std::invalid_argument("source parameter lists differ in length");
    }
    // Polynomial in the creation operators: monomial exponents -> coefficient.
    std::map<std::array<int, kMaxModes>, cplx> poly{{std::array<int, kMaxModes>{}, 1.0}};
    for (std::size_t s = 0; s < alphas.size(); ++s) {
        if (static_cast<int>(coeffs[s].size()) != modes) throw std::invalid_argument("coefficient count != modes");
        std::map<std::array<int, kMaxModes>, cplx> next;
        for (const auto& [n, c] : poly) {
            if (alphas[s] != 0.0) next[n] += alphas[s] * c;
            if (betas[s] == 0.0) continue;
            for (int j = 0; j < modes; ++j) {
                if (coeffs[s][j] == 0.0) continue;
                auto m = n;
                ++m[j];
                next[m] += betas[s] * coeffs[s][j] * c;
            }
        }
        poly = std::move(next);
    }
    std::vector<FockTerm> terms;
    for (const auto& [n, c] : poly) {
        double f = 1.0;
        for (int v : n) f *= factorial(v);
        const cplx amp = c * std::sqrt(f);
        if (std::abs(amp) > 1e-14) terms.push_back({n, amp});
    }
    return {modes, std::move(terms)};
}

HusimiSampler::HusimiSampler(const MultimodeState& state) : modes_(state.modes()) {
    if (std::abs(state.norm() - 1.0) > 1e-9) throw std::invalid_argument("Husimi sampling needs a normalized state");
    if (state.max_occupation() >= static_cast<int>(gamma_.size())) {
        throw std::invalid_argument("occupation too high for the Husimi sampler");
    }
    for (const auto& t : state.terms()) {
        double f = 1.0;
        for (int v : t.n) f *= factorial(v);
        terms_.push_back({t.n, t.amplitude, 1.0 / std::sqrt(f)});
    }
    for (std::size_t k = 0; k < gamma_.size(); ++k) {
        gamma_[k] = std::gamma_distribution<double>(static_cast<double>(k + 1), 1.0);
    }
}

void HusimiSampler::sample(std::mt19937_64& rng, std::span<cplx> out) {
    if (static_cast<int>(out.size()) < modes_) throw std::invalid_argument("output span too short");
    std::uniform_int_distribution<std::size_t> pick(0, terms_.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Distributions cache normal deviates; dropping them keeps every draw a
    // function of the generator state alone.
    for (auto& g : gamma_) g.reset();
    std::array<cplx, kMaxModes> a{};
    // Powers conj(alpha_j)^k for k up to the max occupation in the support.
    std::array<std::array<cplx, 8>, kMaxModes> pw{};
    for (;;) {
        ++trials_;
        const auto& component = terms_[pick(rng)];
        for (int j = 0; j < modes_; ++j) {
            const double r = std::sqrt(gamma_[component.n[j]](rng));
            const double th = 2.0 * std::numbers::pi * unit(rng);
            a[j] = std::polar(r, th);
            pw[j][0] = 1.0;
            for (std::size_t k = 1; k < pw[j].size(); ++k) pw[j][k] = pw[j][k - 1] * std::conj(a[j]);
        }
        cplx num = 0.0;
        double den = 0.0;
        for (const auto& t : terms_) {
            cplx f = t.inv_sqrt_factorial;
            for (int j = 0; j < modes_; ++j) f *= pw[j][t.n[j]];
            num += t.amplitude * f;
            den += std::norm(f);
        }
        const double ratio = std::norm(num) / den;
        if (ratio > 1.0 + 1e-9) throw std::logic_error("Husimi rejection bound violated");
        if (unit(rng) < ratio) {
            ++accepted_;
            for (int j = 0; j < modes_; ++j) out[j] = a[j];
            return;
        }
    }
}

std::pair<cplx, cplx> sample_husimi(const TwoModeState& state, std::mt19937_64& rng) {
    if (state.cutoff() > 3) throw std::invalid_argument("sample_husimi supports cutoff <= 3");
    HusimiSampler s(MultimodeState::from_two_mode(state));
    std::array<cplx, 2> out{};
    s.sample(rng, out);
    return {out[0], out[1]};
}

}  // namespace homsim
