#pragma once

// Temporal mode functions of the pulsed single-photon sources, their overlaps,
// and time-resolved second-order correlation theory curves.

#include "homsim/filter.hpp"
#include "homsim/fockspace.hpp"
#include "homsim/histogram.hpp"

#include <complex>
#include <numbers>
#include <vector>

namespace homsim {

inline double kappa_from_linewidth(double hz) { return 2.0 * std::numbers::pi * hz; }

/// xi(t) = sqrt(kappa) exp(-(kappa/2 + i detuning)(t - t0)) for t >= t0, else 0.
struct TemporalMode {
    double kappa = kappa_from_linewidth(4.1e6);  ///< rad/s
    double t0 = 0.0;                             ///< s
    double detuning = 0.0;                       ///< rad/s

    void validate() const;
};

cplx mode_amplitude(const TemporalMode& mode, double t);

/// <xi_1|xi_2> by adaptive Gauss-Kronrod quadrature.
cplx mode_overlap(const TemporalMode& m1, const TemporalMode& m2);
cplx mode_overlap_closed_form(const TemporalMode& m1, const TemporalMode& m2);

/// Probability of one photon in each beam-splitter output for one photon per input.
double coincidence_probability(const TemporalMode& a, const TemporalMode& b);

struct PulseTrainConfig {
    double t_r = 512e-9;
    int pulses_per_sequence = 20;
    double sequence_period = 12.5e-6;
    double delta_tau = 0.0;  ///< emission delay of source B relative to A
    double kappa_a = kappa_from_linewidth(4.1e6);
    double kappa_b = kappa_from_linewidth(4.6e6);
    double detuning_a = 0.0;
    double detuning_b = 0.0;

    void validate() const;
    /// Mode of source A / B in pulse `p`. A negative delay shifts A instead of B
    /// so both stay inside the pulse window [p t_r, (p + 1) t_r).
    TemporalMode mode_a(int p) const;
    TemporalMode mode_b(int p) const;
};

/// Mode sampled on the record grid t_k = k dt, truncated to its pulse window and
/// normalized so that sum |xi_k|^2 dt = 1.
struct SampledMode {
    std::size_t offset = 0;  ///< first sample index
    std::vector<cplx> values;
};

std::size_t samples_per_period(const PulseTrainConfig& cfg, double dt);
std::size_t samples_per_record(const PulseTrainConfig& cfg, double dt);
SampledMode sample_pulse_mode(const PulseTrainConfig& cfg, const TemporalMode& mode, int pulse, double dt);

/// Lags covering ±(pulses_per_sequence / 2) t_r.
TauGrid default_tau_grid(const PulseTrainConfig& cfg, double dt);

struct SourceSelection {
    bool a = true;
    bool b = true;
};

// Closed-form unfiltered within-pulse two-photon terms for one photon per input:
//   cross: ∫dt ¼|xa(t) xb(t+τ) − xa(t+τ) xb(t)|²,  auto: same with +.
double within_pulse_cross(const TemporalMode& a, const TemporalMode& b, double tau);
double within_pulse_auto(const TemporalMode& a, const TemporalMode& b, double tau);

/// Expected value of the correlator's per-pulse-pair estimate for Fock sources
/// on the same discrete grid and filter. Values are ∫dt G(t, t+τ) (1/s);
/// components "within-pulse" and "cross-pulse" sum to the total.
CorrelationHistogram g2_cross_theory(const PulseTrainConfig& cfg, const FilterSpec& filter, const TauGrid& grid,
                                     SourceSelection sources = {}, const BeamSplitterConfig& bs = {});
CorrelationHistogram g2_auto_theory(const PulseTrainConfig& cfg, const FilterSpec& filter, const TauGrid& grid,
                                    SourceSelection sources = {}, const BeamSplitterConfig& bs = {});

/// Width that turns unit-integral clusters into unit-height ones: the δτ = 0
/// two-photon theory with the same decay rates and filter is normalized with
/// `opt` (offset handling included) and the mean height at n·t_r is inverted.
double reference_peak_width(const PulseTrainConfig& cfg, const FilterSpec& filter, double dt,
                            const NormalizationOptions& opt);

/// Normalization options matching a pulse train (quiet windows at 4/κ_min).
NormalizationOptions normalization_options(const PulseTrainConfig& cfg, const FilterSpec& filter, double dt,
                                           bool subtract_offset = true);

}  // namespace homsim
