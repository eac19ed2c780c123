#include "homsim/experiment.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace homsim {

using nlohmann::json;

std::uint64_t calibration_seed(std::uint64_t seed) { return record_seed(seed ^ 0x6a09e667f3bcc909ULL, 0xca1bULL); }

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// ------------------------------------------------------------------ spec

void ExperimentSpec::validate() const {
    if (std::find(scenario_names().begin(), scenario_names().end(), scenario) == scenario_names().end())
        throw ConfigError("scenario: unknown name '" + scenario + "'");
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        noise.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("noise: ") + e.what());
    }
    const auto& a = analysis;
    if (a.max_lag < 0) throw ConfigError("analysis.max_lag: must be >= 0");
    if (a.batches < 2) throw ConfigError("analysis.batches: need at least 2 batches for error bars");
    if (a.histogram_bins < 0 || a.histogram_bins > 128) throw ConfigError("analysis.histogram_bins: 0..128");
    if (a.histogram_range < 0.0) throw ConfigError("analysis.histogram_range: must be >= 0");
    if (a.moment_order < 1 || a.moment_order > 8) throw ConfigError("analysis.moment_order: 1..8");
    if (a.mle_cutoff < 1 || a.mle_cutoff > 4) throw ConfigError("analysis.mle_cutoff: 1..4");
    if (a.filter_kappa < 0.0) throw ConfigError("analysis.filter_kappa: must be >= 0");
    if (!(a.max_z > 0.0)) throw ConfigError("analysis.max_z: must be positive");
    if (a.delays.empty()) throw ConfigError("analysis.delays: empty");
    for (double d : a.delays)
        if (!std::isfinite(d)) throw ConfigError("analysis.delays: non-finite value");
    for (double p : a.phases)
        if (!std::isfinite(p)) throw ConfigError("analysis.phases: non-finite value");
    if (output_dir.empty()) throw ConfigError("output_dir: empty");
}

ExperimentSpec default_spec(const std::string& scenario) {
    ExperimentSpec s;
    s.scenario = scenario;
    s.config.tag = scenario;
    s.output_dir = "out/" + scenario;
    const double dt = s.noise.dt();
    const bool correlation = scenario == "hom-dip" || scenario == "delay-scan" || scenario == "autocorr" ||
                             scenario == "single-source";
    if (correlation) {
        s.noise.added_noise_photons_a = s.noise.added_noise_photons_b = 0.0;
        s.config.shots = 500000;
    } else if (scenario == "phase-sweep") {
        s.noise.added_noise_photons_a = s.noise.added_noise_photons_b = 0.0;
        s.noise.filter = FilterSpec::none(dt);
        s.config.shots = 100000;  // per phase point
        const double r = std::sqrt(0.5);
        s.config.beta_a = cplx(0.0, -r);
        s.config.beta_b = r;
    } else {
        // tomography and calibration
        s.noise.filter = FilterSpec::none(dt);
        s.config.shots = 1000000;
    }
    if (scenario == "single-source") s.config.source_a_on = false;
    if (scenario == "calibrate") s.config.source_a_on = s.config.source_b_on = false;
    s.validate();
    return s;
}

namespace {

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError((path.empty() ? k : path + "." + k) + ": unknown field");
}

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + ": wrong type");
    }
}

AnalysisOptions analysis_from_json(const json& j, AnalysisOptions a) {
    const std::string p = "analysis";
    check_keys(j, p,
               {"max_lag", "batches", "calibration_shots", "histogram_bins", "histogram_range", "moment_order",
                "mle_cutoff", "filter_kappa", "delays_ns", "phases_deg", "estimate_gain", "gain_shots", "max_z",
                "workers"});
    if (j.contains("max_lag")) a.max_lag = get_field<int>(j, "max_lag", p);
    if (j.contains("batches")) a.batches = get_field<int>(j, "batches", p);
    if (j.contains("calibration_shots")) a.calibration_shots = get_field<std::uint64_t>(j, "calibration_shots", p);
    if (j.contains("histogram_bins")) a.histogram_bins = get_field<int>(j, "histogram_bins", p);
    if (j.contains("histogram_range")) a.histogram_range = get_field<double>(j, "histogram_range", p);
    if (j.contains("moment_order")) a.moment_order = get_field<int>(j, "moment_order", p);
    if (j.contains("mle_cutoff")) a.mle_cutoff = get_field<int>(j, "mle_cutoff", p);
    if (j.contains("filter_kappa")) a.filter_kappa = get_field<double>(j, "filter_kappa", p);
    if (j.contains("delays_ns")) {
        a.delays.clear();
        for (double d : get_field<std::vector<double>>(j, "delays_ns", p)) a.delays.push_back(d * 1e-9);
    }
    if (j.contains("phases_deg")) {
        a.phases.clear();
        for (double d : get_field<std::vector<double>>(j, "phases_deg", p)) a.phases.push_back(d * std::numbers::pi / 180.0);
    }
    if (j.contains("estimate_gain")) a.estimate_gain = get_field<bool>(j, "estimate_gain", p);
    if (j.contains("gain_shots")) a.gain_shots = get_field<std::uint64_t>(j, "gain_shots", p);
    if (j.contains("max_z")) a.max_z = get_field<double>(j, "max_z", p);
    if (j.contains("workers")) a.workers = get_field<int>(j, "workers", p);
    return a;
}
// Value in display units whose read-back conversion gives x exactly, so
// manifests reproduce runs bit for bit. Prefers short decimals.
template <class Back>
double exportable(double x, double factor, Back back) {
    const double v = x * factor;
    const double r = std::round(v * 1e6) / 1e6;
    if (back(r) == x) return r;
    double up = v, down = v;
    for (int i = 0; i < 8; ++i) {
        if (back(up) == x) return up;
        if (back(down) == x) return down;
        up = std::nextafter(up, INFINITY);
        down = std::nextafter(down, -INFINITY);
    }
    return v;
}


json to_json(const AnalysisOptions& a) {
    std::vector<double> d, ph;
    for (double x : a.delays) d.push_back(exportable(x, 1e9, [](double v) { return v * 1e-9; }));
    for (double x : a.phases)
        ph.push_back(exportable(x, 180.0 / std::numbers::pi, [](double v) { return v * std::numbers::pi / 180.0; }));
    return {{"max_lag", a.max_lag},
            {"batches", a.batches},
            {"calibration_shots", a.calibration_shots},
            {"histogram_bins", a.histogram_bins},
            {"histogram_range", a.histogram_range},
            {"moment_order", a.moment_order},
            {"mle_cutoff", a.mle_cutoff},
            {"filter_kappa", a.filter_kappa},
            {"delays_ns", d},
            {"phases_deg", ph},
            {"estimate_gain", a.estimate_gain},
            {"gain_shots", a.gain_shots},
            {"max_z", a.max_z},
            {"workers", a.workers}};
}

}  // namespace

ExperimentSpec spec_from_json(const json& doc, ExperimentSpec base) {
    const json& j = doc.contains("spec") && doc.contains("files") ? doc.at("spec") : doc;
    check_keys(j, "", {"scenario", "config", "noise", "analysis", "output_dir", "check", "save_records"});
    if (j.contains("scenario")) {
        const auto name = get_field<std::string>(j, "scenario", "");
        if (name != base.scenario) {
            // Scenario defaults first, then everything else from the document.
            base = default_spec(name);
        }
    }
    try {
        if (j.contains("config")) base.config = scenario_from_json(j.at("config"), base.config);
        if (j.contains("noise")) base.noise = noise_from_json(j.at("noise"), base.noise);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (j.contains("analysis")) base.analysis = analysis_from_json(j.at("analysis"), base.analysis);
    if (j.contains("output_dir")) base.output_dir = get_field<std::string>(j, "output_dir", "");
    if (j.contains("check")) base.check = get_field<bool>(j, "check", "");
    if (j.contains("save_records")) base.save_records = get_field<bool>(j, "save_records", "");
    base.validate();
    return base;
}

json to_json(const ExperimentSpec& s) {
    return {{"scenario", s.scenario},       {"config", to_json(s.config)},   {"noise", to_json(s.noise)},
            {"analysis", to_json(s.analysis)}, {"output_dir", s.output_dir}, {"check", s.check},
            {"save_records", s.save_records}};
}

// -------------------------------------------------------------- analyses

NoiseCalibration calibrate_noise(const NoiseModel& noise, const PulseTrainConfig& train, std::uint64_t shots,
                                 std::uint64_t seed, const TauGrid& grid, int batches, int workers) {
    const std::size_t len = samples_per_record(train, noise.dt());
    return for_each_record<NoiseAccumulator>(
               calibration_scenario(train, shots, seed), noise, workers,
               [&] { return NoiseAccumulator(len, grid, batches); },
               [](NoiseAccumulator& acc, const QuadratureRecord& r) { acc.add(r); })
        .finalize();
}

TauGrid analysis_grid(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt) {
    TauGrid g = default_tau_grid(cfg.train, noise.dt());
    if (opt.max_lag > 0) g.max_lag = opt.max_lag;
    return g;
}

namespace {

ScenarioConfig single_source_b(const ScenarioConfig& cfg, std::uint64_t shots) {
    ScenarioConfig c = cfg;
    c.source_a_on = false;
    c.source_b_on = true;
    c.shots = shots;
    c.seed = record_seed(cfg.seed ^ 0xbb67ae8584caa73bULL, 1);
    c.tag = cfg.tag + "-gain";
    return c;
}

std::uint64_t gain_shots(const ScenarioConfig& cfg, const AnalysisOptions& opt) {
    return opt.gain_shots ? opt.gain_shots
                          : std::max<std::uint64_t>(cfg.shots / 4, static_cast<std::uint64_t>(cfg.train.pulses_per_sequence));
}

struct G2Pair {
    G2Accumulator cross, autocorr;
    void merge(const G2Pair& o) {
        cross.merge(o.cross);
        autocorr.merge(o.autocorr);
    }
};

}  // namespace

G2Run run_g2(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt) {
    cfg.validate();
    noise.validate();
    const TauGrid grid = analysis_grid(cfg, noise, opt);
    const std::uint64_t cal_shots =
        opt.calibration_shots ? opt.calibration_shots
                              : std::max<std::uint64_t>(cfg.shots / 4, static_cast<std::uint64_t>(cfg.train.pulses_per_sequence));

    G2Run out;
    out.calibration = calibrate_noise(noise, cfg.train, cal_shots, calibration_seed(cfg.seed), grid, opt.batches, opt.workers);

    if (opt.estimate_gain) {
        const auto pb = for_each_record<PowerBalanceAccumulator>(
            single_source_b(cfg, gain_shots(cfg, opt)), noise, opt.workers,
            [&] { return PowerBalanceAccumulator(opt.batches); },
            [](PowerBalanceAccumulator& acc, const QuadratureRecord& r) { acc.add(r); });
        out.gain_b = pb.gain(out.calibration).mean;
    }

    const auto o = g2_options(cfg, noise, opt, out.gain_b);
    G2Accumulator::Options oa = o;
    oa.kind = CorrelationKind::Auto;
    auto acc = for_each_record<G2Pair>(
        cfg, noise, opt.workers, [&] { return G2Pair{G2Accumulator(o), G2Accumulator(oa)}; },
        [](G2Pair& p, const QuadratureRecord& r) {
            p.cross.add(r);
            p.autocorr.add(r);
        });
    return finish_g2(cfg, noise, opt, std::move(out.calibration), acc.cross, acc.autocorr, out.gain_b);
}

G2Accumulator::Options g2_options(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt,
                                  double gain_b) {
    G2Accumulator::Options o;
    o.record_length = samples_per_record(cfg.train, noise.dt());
    o.grid = analysis_grid(cfg, noise, opt);
    o.t_r = cfg.train.t_r;
    o.pulses_per_sequence = cfg.train.pulses_per_sequence;
    o.batches = opt.batches;
    o.gain_b = gain_b;
    return o;
}

G2Run finish_g2(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt, NoiseCalibration cal,
                const G2Accumulator& cross, const G2Accumulator& autocorr, double gain_b) {
    const double dt = noise.dt();
    G2Run out;
    out.calibration = std::move(cal);
    out.gain_b = gain_b;
    out.cross = cross.finalize(out.calibration);
    out.autocorr = autocorr.finalize(out.calibration);
    out.cross.delta_tau = out.autocorr.delta_tau = cfg.train.delta_tau;

    const TauGrid& grid = cross.options().grid;
    const SourceSelection src{cfg.source_a_on, cfg.source_b_on};
    const auto th_cross = g2_cross_theory(cfg.train, noise.filter, grid, src, cfg.splitter);
    const auto th_auto = g2_auto_theory(cfg.train, noise.filter, grid, src, cfg.splitter);

    auto normalize_all = [&](const NormalizationOptions& n) {
        out.cross_norm = normalize_and_offset(out.cross, n);
        out.autocorr_norm = normalize_and_offset(out.autocorr, n);
        out.theory_cross = normalize_and_offset(th_cross, n);
        out.theory_auto = normalize_and_offset(th_auto, n);
    };
    try {
        normalize_all(normalization_options(cfg.train, noise.filter, dt, true));
        out.offset_subtracted = true;
    } catch (const NoQuietWindow&) {
        normalize_all(normalization_options(cfg.train, noise.filter, dt, false));
        out.offset_subtracted = false;
    }
    out.cross_vs_theory = compare_to_theory(out.cross_norm, out.theory_cross, opt.max_z);
    out.auto_vs_theory = compare_to_theory(out.autocorr_norm, out.theory_auto, opt.max_z);
    return out;
}

TemporalMode tomography_mode(const ScenarioConfig& cfg, const AnalysisOptions& opt) {
    TemporalMode m = cfg.train.mode_a(0);
    m.kappa = opt.filter_kappa > 0.0 ? opt.filter_kappa : 0.5 * (cfg.train.kappa_a + cfg.train.kappa_b);
    m.detuning = 0.5 * (cfg.train.detuning_a + cfg.train.detuning_b);
    return m;
}

MomentSet noise_mode_moments(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt) {
    const MatchedFilter mf(cfg.train, tomography_mode(cfg, opt), noise.dt());
    const std::uint64_t shots = opt.calibration_shots ? opt.calibration_shots : cfg.shots;
    return for_each_record<MomentAccumulator>(
               calibration_scenario(cfg.train, shots, calibration_seed(cfg.seed)), noise, opt.workers,
               [&] { return MomentAccumulator(opt.batches); },
               [&](MomentAccumulator& acc, const QuadratureRecord& r) { acc.add_record(r, mf, true); })
        .finalize();
}

namespace {

MomentSet signal_moments(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt,
                         const MatchedFilter& mf) {
    return for_each_record<MomentAccumulator>(
               cfg, noise, opt.workers, [&] { return MomentAccumulator(opt.batches); },
               [&](MomentAccumulator& acc, const QuadratureRecord& r) { acc.add_record(r, mf); })
        .finalize();
}

struct TomoState {
    MomentAccumulator moments;
    std::optional<Histogram4D> hist;
    void merge(const TomoState& o) {
        moments.merge(o.moments);
        if (hist) hist->merge(*o.hist);
    }
};

}  // namespace

TomographyRun run_tomography(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt) {
    cfg.validate();
    noise.validate();
    const MatchedFilter mf(cfg.train, tomography_mode(cfg, opt), noise.dt());

    TomographyRun out;
    out.noise_moments = noise_mode_moments(cfg, noise, opt);

    double half_range = opt.histogram_range;
    if (half_range <= 0.0) {
        const double n0 = std::max(out.noise_moments.value({1, 1, 0, 0}).real(), out.noise_moments.value({0, 0, 1, 1}).real());
        half_range = 5.0 * std::sqrt(n0 + 2.0);
    }
    const int bins = opt.histogram_bins;
    auto state = for_each_record<TomoState>(
        cfg, noise, opt.workers,
        [&] {
            TomoState s{MomentAccumulator(opt.batches), std::nullopt};
            if (bins > 0) s.hist.emplace(bins, half_range);
            return s;
        },
        [&](TomoState& s, const QuadratureRecord& r) {
            s.moments.add_record(r, mf);
            if (!s.hist) return;
            const int pulses = std::min(r.active_pulses, mf.pulses());
            for (int q = 0; q < pulses; ++q) {
                const auto [a, b] = mf.project(r, q);
                s.hist->add(a, b, OutOfRange::ClampToEdge);
            }
        });
    out.raw = state.moments.finalize();
    if (state.hist) {
        out.histogram_raw_moments = state.hist->moments();
        out.histogram = std::move(state.hist);
    }

    double gain = 1.0;
    if (opt.estimate_gain) {
        const auto single = signal_moments(single_source_b(cfg, gain_shots(cfg, opt)), noise, opt, mf);
        gain = gain_from_moments(deconvolve_noise(single, out.noise_moments)).mean;
    }
    TomographyRun fin = finish_tomography(cfg, opt, std::move(out.raw), std::move(out.noise_moments), gain);
    fin.histogram = std::move(out.histogram);
    fin.histogram_raw_moments = std::move(out.histogram_raw_moments);
    return fin;
}

TomographyRun finish_tomography(const ScenarioConfig& cfg, const AnalysisOptions& opt, MomentSet raw,
                                MomentSet noise_moments, double gain_b) {
    TomographyRun out;
    out.raw = std::move(raw);
    out.noise_moments = std::move(noise_moments);
    out.gain_b = gain_b;
    out.moments = correct_gain(deconvolve_noise(out.raw, out.noise_moments), gain_b);

    MLEOptions mo;
    mo.cutoff = opt.mle_cutoff;
    mo.max_order = opt.moment_order;
    out.mle = mle_fit(out.moments, mo);

    out.target = with_cutoff(apply_beam_splitter(cfg.input_state(), cfg.splitter), opt.mle_cutoff, 1e-9);
    out.fidelity = fidelity(out.mle.rho, out.target);
    out.negativity = negativity(out.mle.rho);
    out.trace_distance = trace_distance(out.mle.rho, DensityMatrix::pure(out.target));
    out.max_imag = out.mle.rho.matrix().imag().cwiseAbs().maxCoeff();
    return out;
}

PowerPoint run_powers(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt,
                      const MomentSet& noise_moments) {
    const MatchedFilter mf(cfg.train, tomography_mode(cfg, opt), noise.dt());
    const MomentSet m = deconvolve_noise(signal_moments(cfg, noise, opt, mf), noise_moments);
    PowerPoint p;
    p.phi = cfg.phi;
    p.na = {m.value({1, 1, 0, 0}).real(), m.error({1, 1, 0, 0})};
    p.nb = {m.value({0, 0, 1, 1}).real(), m.error({0, 0, 1, 1})};
    return p;
}

SinusoidFit fit_sinusoid(const std::vector<double>& phi, const std::vector<double>& y, const std::vector<double>& err) {
    const std::size_t n = phi.size();
    if (n < 3 || y.size() != n || err.size() != n) throw std::invalid_argument("sinusoid fit needs >= 3 matching points");
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd Y(n), W(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = std::cos(phi[i]);
        X(i, 2) = std::sin(phi[i]);
        Y(i) = y[i];
        W(i) = err[i] > 0.0 ? 1.0 / (err[i] * err[i]) : 1.0;
    }
    const Eigen::MatrixXd A = X.transpose() * W.asDiagonal() * X;
    const Eigen::Vector3d c = A.ldlt().solve(X.transpose() * W.asDiagonal() * Y);
    const Eigen::Matrix3d cov = A.inverse();
    SinusoidFit f;
    f.c0 = c(0);
    f.c1 = std::hypot(c(1), c(2));
    // -c1 cos(φ - φ0) = c(1) cos φ + c(2) sin φ
    f.phi0 = std::atan2(-c(2), -c(1));
    f.c0_err = std::sqrt(cov(0, 0));
    if (f.c1 > 0.0) {
        const Eigen::Vector2d g(c(1) / f.c1, c(2) / f.c1);
        f.c1_err = std::sqrt(std::max(0.0, g.dot(cov.block<2, 2>(1, 1) * g)));
    }
    return f;
}

ModeCoincidence run_mode_coincidence(const ScenarioConfig& cfg, const NoiseModel& noise, const AnalysisOptions& opt) {
    cfg.validate();
    noise.validate();
    std::vector<PulseModes> modes;
    for (int p = 0; p < cfg.train.pulses_per_sequence; ++p) modes.push_back(pulse_modes(cfg, p, noise.dt()));
    const std::uint64_t cal_shots = opt.calibration_shots ? opt.calibration_shots : cfg.shots;
    auto make = [&] { return ModeCoincidenceAccumulator(modes, opt.batches); };
    auto acc = for_each_record<ModeCoincidenceAccumulator>(
        cfg, noise, opt.workers, make, [](ModeCoincidenceAccumulator& a, const QuadratureRecord& r) { a.add(r, false); });
    const auto cal = for_each_record<ModeCoincidenceAccumulator>(
        calibration_scenario(cfg.train, cal_shots, calibration_seed(cfg.seed)), noise, opt.workers, make,
        [](ModeCoincidenceAccumulator& a, const QuadratureRecord& r) { a.add(r, true); });
    acc.merge(cal);
    return acc.finalize();
}

// ------------------------------------------------------------ json out

json to_json(const NoiseCalibration& cal) {
    auto channel = [](const ChannelNoise& c) {
        json mom = json::array(), err = json::array();
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                mom.push_back({c.moments[j][k].real(), c.moments[j][k].imag()});
                err.push_back(c.moment_errors[j][k]);
            }
        json ntau = json::array();
        for (const auto& z : c.N_tau) ntau.push_back({z.real(), z.imag()});
        return json{{"N0", c.N0}, {"N0_err", c.N0_err}, {"moments", mom}, {"moment_errors", err}, {"N_tau", ntau}};
    };
    return {{"dt", cal.dt},
            {"vacuum_unit", cal.vacuum_unit},
            {"max_lag", cal.grid.max_lag},
            {"records", cal.records},
            {"a", channel(cal.a)},
            {"b", channel(cal.b)},
            {"cross", {cal.cross.real(), cal.cross.imag()}},
            {"cross_err", cal.cross_err},
            {"cross_warning", cal.cross_warning}};
}

json to_json(const MLEResult& r) {
    return {{"rho", to_json(r.rho)},
            {"chi_squared", r.chi_squared},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"chi2_history", r.chi2_history}};
}

}  // namespace homsim
