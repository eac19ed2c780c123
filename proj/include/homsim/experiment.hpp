#pragma once

// Scenario orchestration: calibrate -> simulate -> analyze, with parallel shot
// partitions whose results do not depend on the worker count.

#include "homsim/correlator.hpp"
#include "homsim/hetsim.hpp"
#include "homsim/mle.hpp"
#include "homsim/tomography.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace homsim {

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"hom-dip",     "delay-scan",  "autocorr", "single-source",
                                                   "noon-tomo", "phase-sweep", "calibrate"};
    return names;
}

struct AnalysisOptions {
    int max_lag = 0;  ///< samples; 0 -> ±(pulses_per_sequence / 2) t_r
    int batches = kDefaultBatches;
    std::uint64_t calibration_shots = 0;  ///< 0 -> scenario default
    int histogram_bins = 64;
    double histogram_range = 0.0;  ///< vacuum-unit half range; 0 -> 5 sqrt(N0 + 2)
    int moment_order = 4;          ///< highest total order used by the fit
    int mle_cutoff = 2;
    double filter_kappa = 0.0;     ///< matched-filter decay rate; 0 -> mean of the sources
    std::vector<double> delays = {0.0, 50e-9, 150e-9};  ///< delay-scan
    std::vector<double> phases;    ///< phase-sweep grid (rad); empty -> 0, 30, ..., 330 deg
    bool estimate_gain = false;    ///< single-source power balance before the analysis
    std::uint64_t gain_shots = 0;  ///< 0 -> shots / 4
    double max_z = 4.0;            ///< compare_to_theory tolerance
    int workers = 0;               ///< 0 -> hardware concurrency
};

struct ExperimentSpec {
    std::string scenario = "hom-dip";
    ScenarioConfig config;
    NoiseModel noise;
    AnalysisOptions analysis;
    std::string output_dir = "out";
    bool check = false;
    bool save_records = false;

    void validate() const;
};

/// Scenario defaults (sources, noise, shots, filter).
ExperimentSpec default_spec(const std::string& scenario);
/// Applies a JSON document (an ExperimentSpec or a bundle manifest) over `base`.
ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentSpec base);
nlohmann::json to_json(const ExperimentSpec& spec);

std::uint64_t calibration_seed(std::uint64_t seed);
int resolve_workers(int requested);

/// Splits [0, records) into contiguous chunks, one per worker. Each worker
/// owns a RecordSimulator and a state from `make`; states are merged in
/// chunk order. `visit(state, record)` consumes records.
template <class State, class Make, class Visit>
State for_each_record(const ScenarioConfig& cfg, const NoiseModel& noise, int workers, Make make, Visit visit) {
    const std::uint64_t n = cfg.records();
    const auto w = static_cast<std::uint64_t>(std::max(1, std::min<int>(resolve_workers(workers), int(std::max<std::uint64_t>(n, 1)))));
    std::vector<State> states;
    for (std::uint64_t i = 0; i < w; ++i) states.push_back(make());
    auto work = [&](std::uint64_t k) {
        RecordSimulator sim(cfg, noise);
        const std::uint64_t lo = n * k / w, hi = n * (k + 1) / w;
        for (std::uint64_t r = lo; r < hi; ++r) visit(states[k], sim.record(r));
    };
    if (w == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(w);
        for (std::uint64_t k = 0; k < w; ++k) {
            threads.emplace_back([&, k] {
                try {
                    work(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (std::uint64_t k = 1; k < w; ++k) states[0].merge(states[k]);
    return std::move(states[0]);
}

// ------------------------------------------------------------ analyses

NoiseCalibration calibrate_noise(const NoiseModel& noise, const PulseTrainConfig& train, std::uint64_t shots,
                                 std::uint64_t seed, const TauGrid& grid, int batches = kDefaultBatches,
                                 int workers = 0);

TauGrid analysis_grid(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt);

struct G2Run {
    NoiseCalibration calibration;
    double gain_b = 1.0;
    CorrelationHistogram cross, autocorr;            ///< raw estimates
    CorrelationHistogram cross_norm, autocorr_norm;  ///< normalized, height units
    CorrelationHistogram theory_cross, theory_auto;  ///< normalized the same way
    TheoryComparison cross_vs_theory, auto_vs_theory;
    bool offset_subtracted = true;
};

/// Calibration, simulation and both correlation estimators for one scenario.
G2Run run_g2(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt);

/// Estimator options for `cfg` (kind Cross, channel a).
G2Accumulator::Options g2_options(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt,
                                  double gain_b = 1.0);
/// Finalization, theory overlay and normalization of accumulated estimators.
G2Run finish_g2(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt, NoiseCalibration cal,
                const G2Accumulator& cross, const G2Accumulator& autocorr, double gain_b = 1.0);

struct TomographyRun {
    MomentSet raw, noise_moments, moments;  ///< moments: deconvolved, gain corrected
    double gain_b = 1.0;
    std::optional<Histogram4D> histogram;
    std::optional<MomentSet> histogram_raw_moments;
    MLEResult mle;
    TwoModeState target;  ///< ideal output state truncated to the fit cutoff
    double fidelity = 0.0, negativity = 0.0, trace_distance = 0.0, max_imag = 0.0;
};

TemporalMode tomography_mode(const ScenarioConfig& cfg, const AnalysisOptions& opt);
TomographyRun run_tomography(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt);

/// Deconvolution, gain correction, MLE and figures of merit from raw moments.
TomographyRun finish_tomography(const ScenarioConfig& cfg, const AnalysisOptions& opt, MomentSet raw,
                                MomentSet noise_moments, double gain_b = 1.0);

/// Deconvolved output powers <a†a>, <b†b> from matched-filter amplitudes.
struct PowerPoint {
    double phi = 0.0;
    BatchStat na, nb;
};
PowerPoint run_powers(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt,
                      const MomentSet& noise_moments);
MomentSet noise_mode_moments(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt);

/// Least-squares fit y = c0 - c1 cos(phi - phi0).
struct SinusoidFit {
    double c0 = 0.0, c1 = 0.0, phi0 = 0.0;
    double c0_err = 0.0, c1_err = 0.0;
};
SinusoidFit fit_sinusoid(const std::vector<double>& phi, const std::vector<double>& y,
                         const std::vector<double>& err);

/// Mode-resolved coincidence probability for one delay (unfiltered records).
ModeCoincidence run_mode_coincidence(const ScenarioConfig& cfg, const NoiseModel& noise,
                                     const AnalysisOptions& opt);

// ------------------------------------------------------------- bundles

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct OutputBundle {
    std::string directory;
    nlohmann::json manifest;
    std::vector<std::string> files;  ///< relative to directory
    std::vector<CheckResult> checks;
    bool all_passed() const;
};

OutputBundle run_scenario(const ExperimentSpec& spec);

/// Data files of one G² run in `dir`, names suffixed by `suffix`. Returns the
/// file names written.
std::vector<std::string> write_g2_files(const G2Run& r, const std::string& dir, const std::string& suffix = "");
std::vector<std::string> write_tomography_files(const TomographyRun& r, const std::string& dir);

nlohmann::json to_json(const NoiseCalibration& cal);
nlohmann::json to_json(const MLEResult& r);
void write_density_matrix(const DensityMatrix& rho, const std::string& json_path, const std::string& csv_path);

}  // namespace homsim
