#include "homsim/wavepacket.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace homsim {

void TemporalMode::validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("mode decay rate must be positive");
    if (!std::isfinite(t0) || !std::isfinite(detuning)) throw std::invalid_argument("mode parameters must be finite");
}

cplx mode_amplitude(const TemporalMode& mode, double t) {
    if (t < mode.t0) return 0.0;
    const double s = t - mode.t0;
    return std::sqrt(mode.kappa) * std::exp(cplx(-0.5 * mode.kappa * s, -mode.detuning * s));
}

cplx mode_overlap_closed_form(const TemporalMode& m1, const TemporalMode& m2) {
    m1.validate();
    m2.validate();
    const double start = std::max(m1.t0, m2.t0);
    const cplx r1(0.5 * m1.kappa, -m1.detuning);  // exponent rate of conj(xi_1)
    const cplx r2(0.5 * m2.kappa, m2.detuning);
    return std::sqrt(m1.kappa * m2.kappa) * std::exp(-r1 * (start - m1.t0) - r2 * (start - m2.t0)) / (r1 + r2);
}

cplx mode_overlap(const TemporalMode& m1, const TemporalMode& m2) {
    m1.validate();
    m2.validate();
    using boost::math::quadrature::gauss_kronrod;
    const double start = std::max(m1.t0, m2.t0);
    // Dimensionless time u = kappa_ref (t - start) keeps the integrand O(1).
    const double scale = 0.5 * (m1.kappa + m2.kappa);
    auto integrand = [&](double u, bool imag) {
        const double t = start + u / scale;
        const cplx v = std::conj(mode_amplitude(m1, t)) * mode_amplitude(m2, t) / scale;
        return imag ? v.imag() : v.real();
    };
    const double inf = std::numeric_limits<double>::infinity();
    double err = 0.0;
    const double re = gauss_kronrod<double, 61>::integrate([&](double u) { return integrand(u, false); }, 0.0, inf,
                                                          20, 1e-13, &err);
    const double im = gauss_kronrod<double, 61>::integrate([&](double u) { return integrand(u, true); }, 0.0, inf,
                                                          20, 1e-13, &err);
    return {re, im};
}

double coincidence_probability(const TemporalMode& a, const TemporalMode& b) {
    return 0.5 * (1.0 - std::norm(mode_overlap(a, b)));
}

// ------------------------------------------------------------------ pulse train

void PulseTrainConfig::validate() const {
    if (!(t_r > 0.0)) throw std::invalid_argument("t_r must be positive");
    if (pulses_per_sequence < 1) throw std::invalid_argument("pulses_per_sequence must be >= 1");
    if (!(std::abs(delta_tau) < 0.5 * t_r)) throw std::invalid_argument("|delta_tau| must be below t_r / 2");
    if (sequence_period < pulses_per_sequence * t_r * (1.0 - 1e-12)) {
        throw std::invalid_argument("sequence_period shorter than the pulse train");
    }
    if (!(kappa_a > 0.0) || !(kappa_b > 0.0)) throw std::invalid_argument("decay rates must be positive");
}

TemporalMode PulseTrainConfig::mode_a(int p) const {
    return {kappa_a, p * t_r + std::max(0.0, -delta_tau), detuning_a};
}

TemporalMode PulseTrainConfig::mode_b(int p) const {
    return {kappa_b, p * t_r + std::max(0.0, delta_tau), detuning_b};
}

std::size_t samples_per_period(const PulseTrainConfig& cfg, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double w = cfg.t_r / dt;
    const double r = std::round(w);
    if (std::abs(w - r) > 1e-6 || r < 1.0) throw std::invalid_argument("t_r must be an integer multiple of dt");
    return static_cast<std::size_t>(r);
}

std::size_t samples_per_record(const PulseTrainConfig& cfg, double dt) {
    return samples_per_period(cfg, dt) * static_cast<std::size_t>(cfg.pulses_per_sequence);
}

SampledMode sample_pulse_mode(const PulseTrainConfig& cfg, const TemporalMode& mode, int pulse, double dt) {
    const std::size_t w = samples_per_period(cfg, dt);
    const std::size_t begin = static_cast<std::size_t>(pulse) * w;
    SampledMode out;
    // First grid point at or after t0 (tolerant to rounding of t0 / dt).
    const double first = std::ceil(mode.t0 / dt - 1e-9);
    out.offset = std::max(begin, static_cast<std::size_t>(std::max(0.0, first)));
    const std::size_t end = begin + w;
    if (out.offset >= end) throw std::invalid_argument("mode starts after its pulse window");
    out.values.resize(end - out.offset);
    double norm = 0.0;
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        out.values[k] = mode_amplitude(mode, static_cast<double>(out.offset + k) * dt + 1e-9 * dt);
        norm += std::norm(out.values[k]) * dt;
    }
    const double s = 1.0 / std::sqrt(norm);
    for (auto& v : out.values) v *= s;
    return out;
}

TauGrid default_tau_grid(const PulseTrainConfig& cfg, double dt) {
    const std::size_t w = samples_per_period(cfg, dt);
    return {dt, static_cast<int>(w * static_cast<std::size_t>(cfg.pulses_per_sequence / 2))};
}

// ------------------------------------------------------------ closed forms

namespace {

// ∫ |xa(t)|^2 |xb(t + tau)|^2 dt
double intensity_product(const TemporalMode& a, const TemporalMode& b, double tau) {
    const double start = std::max(a.t0, b.t0 - tau);
    return a.kappa * b.kappa * std::exp(-a.kappa * (start - a.t0) - b.kappa * (start + tau - b.t0)) /
           (a.kappa + b.kappa);
}

// Re ∫ xa(t) xb(t+tau) conj(xa(t+tau) xb(t)) dt
double exchange_term(const TemporalMode& a, const TemporalMode& b, double tau) {
    const double start = std::max({a.t0, b.t0, a.t0 - tau, b.t0 - tau});
    const double ksum = a.kappa + b.kappa;
    return a.kappa * b.kappa * std::cos((a.detuning - b.detuning) * tau) *
           std::exp(-ksum * (start + 0.5 * tau) + a.kappa * a.t0 + b.kappa * b.t0) / ksum;
}

}  // namespace

double within_pulse_cross(const TemporalMode& a, const TemporalMode& b, double tau) {
    return 0.25 * (intensity_product(a, b, tau) + intensity_product(a, b, -tau) - 2.0 * exchange_term(a, b, tau));
}

double within_pulse_auto(const TemporalMode& a, const TemporalMode& b, double tau) {
    return 0.25 * (intensity_product(a, b, tau) + intensity_product(a, b, -tau) + 2.0 * exchange_term(a, b, tau));
}

// -------------------------------------------------------- sampled theory

namespace {

struct PulseFields {
    std::size_t start = 0;
    std::vector<cplx> a, b;  // filtered input-port fields on [start, start + size)
};

PulseFields filtered_pulse(const PulseTrainConfig& cfg, const FilterSpec& filter, int p, double dt,
                           std::size_t record_len, SourceSelection sources) {
    const int half = filter.enabled() ? filter.taps / 2 : 0;
    const std::size_t w = samples_per_period(cfg, dt);
    const std::size_t begin = static_cast<std::size_t>(p) * w;
    PulseFields out;
    out.start = begin >= static_cast<std::size_t>(half) ? begin - half : 0;
    const std::size_t stop = std::min(record_len, begin + w + half);
    const std::size_t len = stop - out.start;
    out.a.assign(len, 0.0);
    out.b.assign(len, 0.0);
    auto embed = [&](const TemporalMode& m, std::vector<cplx>& dst) {
        const auto s = sample_pulse_mode(cfg, m, p, dt);
        for (std::size_t k = 0; k < s.values.size(); ++k) dst[s.offset + k - out.start] = s.values[k];
        if (filter.enabled()) dst = apply_detection_filter(std::span<const cplx>(dst), filter, dt);
    };
    if (sources.a) embed(cfg.mode_a(p), out.a);
    if (sources.b) embed(cfg.mode_b(p), out.b);
    return out;
}

CorrelationHistogram g2_theory(const PulseTrainConfig& cfg, const FilterSpec& filter, const TauGrid& grid,
                               SourceSelection sources, const BeamSplitterConfig& bs, CorrelationKind kind) {
    cfg.validate();
    filter.validate();
    const double dt = grid.dt;
    if (filter.enabled() && std::abs(filter.dt - dt) > 1e-6 * dt) {
        throw std::invalid_argument("filter designed for a different sample interval");
    }
    const std::size_t w = samples_per_period(cfg, dt);
    const std::size_t n = samples_per_record(cfg, dt);
    if (grid.max_lag < 0 || static_cast<std::size_t>(grid.max_lag) > w * (cfg.pulses_per_sequence / 2) ||
        static_cast<std::size_t>(grid.max_lag) >= n) {
        throw std::out_of_range("tau grid exceeds ±(pulses_per_sequence / 2) t_r");
    }

    const Eigen::Matrix2cd c = bs.creation_map();
    const int ycol = kind == CorrelationKind::Cross ? 1 : 0;
    const cplx ux = c(0, 0), vx = c(1, 0), uy = c(0, ycol), vy = c(1, ycol);
    const bool pairs = sources.a && sources.b;

    const int lags = static_cast<int>(grid.size());
    std::vector<double> nx(n, 0.0), ny(n, 0.0);
    std::vector<double> self(lags, 0.0), within(lags, 0.0);

    for (int p = 0; p < cfg.pulses_per_sequence; ++p) {
        const auto f = filtered_pulse(cfg, filter, p, dt, n, sources);
        const std::size_t len = f.a.size();
        std::vector<double> px(len), py(len);
        for (std::size_t i = 0; i < len; ++i) {
            px[i] = std::norm(ux * f.a[i]) + std::norm(vx * f.b[i]);
            py[i] = std::norm(uy * f.a[i]) + std::norm(vy * f.b[i]);
            nx[f.start + i] += px[i];
            ny[f.start + i] += py[i];
        }
        for (int bin = 0; bin < lags; ++bin) {
            const int j = grid.lag(static_cast<std::size_t>(bin));
            if (std::abs(j) >= static_cast<int>(len)) continue;
            double s = 0.0, wsum = 0.0;
            for (int i = std::max(0, -j); i < static_cast<int>(len) && i + j < static_cast<int>(len); ++i) {
                s += px[i] * py[i + j];
                if (pairs) {
                    wsum += std::norm(ux * vy * f.a[i] * f.b[i + j] + vx * uy * f.b[i] * f.a[i + j]);
                }
            }
            self[bin] += s;
            within[bin] += wsum;
        }
    }

    CorrelationHistogram h;
    h.kind = kind;
    h.delta_tau = cfg.delta_tau;
    h.tau = grid.taus();
    h.values.assign(lags, 0.0);
    h.stderrs.assign(lags, 0.0);
    std::vector<double> within_part(lags), cross_part(lags);
    const int ni = static_cast<int>(n);
    for (int bin = 0; bin < lags; ++bin) {
        const int j = grid.lag(static_cast<std::size_t>(bin));
        double direct = 0.0;
        for (int i = std::max(0, -j); i < ni && i + j < ni; ++i) direct += nx[i] * ny[i + j];
        const double pulse_pairs =
            std::max(1.0, cfg.pulses_per_sequence - std::abs(std::round(j * dt / cfg.t_r)));
        within_part[bin] = dt * within[bin] / pulse_pairs;
        cross_part[bin] = dt * (direct - self[bin]) / pulse_pairs;
        h.values[bin] = within_part[bin] + cross_part[bin];
    }
    h.components["within-pulse"] = std::move(within_part);
    h.components["cross-pulse"] = std::move(cross_part);
    return h;
}

}  // namespace

CorrelationHistogram g2_cross_theory(const PulseTrainConfig& cfg, const FilterSpec& filter, const TauGrid& grid,
                                     SourceSelection sources, const BeamSplitterConfig& bs) {
    return g2_theory(cfg, filter, grid, sources, bs, CorrelationKind::Cross);
}

CorrelationHistogram g2_auto_theory(const PulseTrainConfig& cfg, const FilterSpec& filter, const TauGrid& grid,
                                    SourceSelection sources, const BeamSplitterConfig& bs) {
    return g2_theory(cfg, filter, grid, sources, bs, CorrelationKind::Auto);
}

double reference_peak_width(const PulseTrainConfig& cfg, const FilterSpec& filter, double dt,
                            const NormalizationOptions& opt) {
    PulseTrainConfig ref = cfg;
    ref.delta_tau = 0.0;
    NormalizationOptions unit = opt;
    unit.reference_width = 0.0;
    const auto h = normalize_and_offset(g2_cross_theory(ref, filter, default_tau_grid(ref, dt)), unit);
    double height = 0.0;
    for (int n : h.norm.peaks) height += h.value_at(n * ref.t_r);
    height /= static_cast<double>(h.norm.peaks.size());
    return 1.0 / height;
}

NormalizationOptions normalization_options(const PulseTrainConfig& cfg, const FilterSpec& filter, double dt,
                                           bool subtract_offset) {
    NormalizationOptions opt;
    opt.t_r = cfg.t_r;
    opt.max_peak = cfg.pulses_per_sequence / 2;
    opt.delta_tau = cfg.delta_tau;
    opt.quiet_halfwidth = 4.0 / std::min(cfg.kappa_a, cfg.kappa_b);
    if (filter.enabled()) opt.quiet_halfwidth += 2.0 / (std::numbers::pi * filter.bandwidth);
    opt.subtract_offset = subtract_offset;
    opt.reference_width = reference_peak_width(cfg, filter, dt, opt);
    return opt;
}

}  // namespace homsim
