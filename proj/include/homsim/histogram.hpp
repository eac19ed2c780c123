#pragma once

// τ-binned second-order correlation estimates and the operations that act on
// them independently of how they were produced (theory or measurement).

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace homsim {

class NoQuietWindow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lags j·dt for j = -max_lag .. max_lag.
struct TauGrid {
    double dt = 2e-9;
    int max_lag = 0;

    std::size_t size() const { return static_cast<std::size_t>(2 * max_lag + 1); }
    int lag(std::size_t bin) const { return static_cast<int>(bin) - max_lag; }
    double tau(std::size_t bin) const { return lag(bin) * dt; }
    std::size_t bin(int lag) const { return static_cast<std::size_t>(lag + max_lag); }
    std::vector<double> taus() const;
};

enum class CorrelationKind { Cross, Auto };
std::string to_string(CorrelationKind kind);
CorrelationKind correlation_kind_from_string(const std::string& s);

struct NormalizationInfo {
    bool normalized = false;
    double scale = 1.0;            ///< raw cluster integral mapped to 1
    double reference_width = 0.0;  ///< s; converts unit-integral peaks to unit height
    bool offset_estimated = false;
    double offset = 0.0;           ///< subtracted, normalized units
    double offset_std = 0.0;
    std::vector<int> peaks;        ///< n of the n·t_r clusters used for the scale
};

struct CorrelationHistogram {
    std::vector<double> tau;  ///< s, strictly increasing
    std::vector<double> values;
    std::vector<double> stderrs;
    CorrelationKind kind = CorrelationKind::Cross;
    NormalizationInfo norm;
    /// Emission delay of the run or curve, when known; compare_to_theory refuses mismatches.
    std::optional<double> delta_tau;
    /// Optional named parts of `values` (theory: "within-pulse", "cross-pulse").
    std::map<std::string, std::vector<double>> components;

    std::size_t size() const { return tau.size(); }
    void validate() const;
    /// Index of the bin nearest to t.
    std::size_t nearest(double t) const;
    double value_at(double t) const { return values[nearest(t)]; }
    double stderr_at(double t) const { return stderrs[nearest(t)]; }
    /// Trapezoid-free bin sum times bin width over [lo, hi).
    double integral(double lo, double hi) const;
};

struct NormalizationOptions {
    double t_r = 512e-9;
    int max_peak = 10;           ///< clusters n = ±1..±max_peak
    double delta_tau = 0.0;
    double quiet_halfwidth = 0.0;  ///< distance from any peak centre for offset bins
    double reference_width = 0.0;  ///< 0: leave values in unit-integral units
    bool subtract_offset = true;
};

/// Offset from quiet windows is subtracted first, then the mean cross-pulse
/// cluster integral is scaled to one (and multiplied by reference_width).
CorrelationHistogram normalize_and_offset(const CorrelationHistogram& h, const NormalizationOptions& opt);

/// Bins available for offset estimation: farther than quiet_halfwidth from
/// every n·t_r and n·t_r ± δτ.
std::vector<std::size_t> quiet_bins(const CorrelationHistogram& h, const NormalizationOptions& opt);

struct TheoryComparison {
    std::vector<double> residuals;
    std::vector<double> z_scores;
    double rms = 0.0;
    double max_abs_z = 0.0;
    bool passed = false;
    double tolerance = 0.0;
};

/// Per-bin residuals data - theory. z uses the data's standard errors (bins with
/// zero error get z = 0 when the residual is 0, otherwise infinity).
TheoryComparison compare_to_theory(const CorrelationHistogram& data, const CorrelationHistogram& theory,
                                   double max_z = 4.0);

// CSV: "tau_ns,value,stderr,kind" ; metadata JSON holds NormalizationInfo.
void write_histogram_csv(const CorrelationHistogram& h, const std::string& path);
CorrelationHistogram read_histogram_csv(const std::string& path);
/// Theory export: "tau_ns,value,component" with within-pulse | cross-pulse | total rows.
void write_theory_csv(const CorrelationHistogram& h, const std::string& path);
nlohmann::json metadata_json(const CorrelationHistogram& h);
void apply_metadata(CorrelationHistogram& h, const nlohmann::json& j);

}  // namespace homsim
