#include "homsim/experiment.hpp"
#include "homsim/records_io.hpp"

#include <Eigen/Core>
#include <fftw3.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#ifndef HOMSIM_VERSION
#define HOMSIM_VERSION "0.0.0"
#endif

namespace homsim {

using nlohmann::json;
namespace fs = std::filesystem;

bool OutputBundle::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

void write_density_matrix(const DensityMatrix& rho, const std::string& json_path, const std::string& csv_path) {
    write_json_file(json_path, to_json(rho));
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    out << "row_na,row_nb,col_na,col_nb,re,im\n";
    out.precision(17);
    const int c = rho.cutoff();
    for (int i = 0; i < rho.dim(); ++i)
        for (int j = 0; j < rho.dim(); ++j)
            out << i / (c + 1) << ',' << i % (c + 1) << ',' << j / (c + 1) << ',' << j % (c + 1) << ',' << rho(i, j).real()
                << ',' << rho(i, j).imag() << '\n';
}

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

class Bundle {
public:
    explicit Bundle(const ExperimentSpec& spec) : spec_(spec) {
        out_.directory = spec.output_dir;
        fs::create_directories(spec.output_dir);
        const auto probe = fs::path(spec.output_dir) / ".write-test";
        std::ofstream t(probe);
        if (!t) throw ConfigError("output_dir: not writable: " + spec.output_dir);
        t.close();
        fs::remove(probe);
    }

    const std::string& directory() const { return out_.directory; }
    std::string path(const std::string& name) const { return (fs::path(out_.directory) / name).string(); }
    void add_file(const std::string& name) {
        if (std::find(out_.files.begin(), out_.files.end(), name) == out_.files.end()) out_.files.push_back(name);
    }
    void json_file(const std::string& name, const json& j) {
        write_json_file(path(name), j);
        add_file(name);
    }
    void check(const std::string& name, bool ok, const std::string& detail) { out_.checks.push_back({name, ok, detail}); }
    void seed(const std::string& label, std::uint64_t s) { seeds_[label] = s; }

    template <class F>
    auto timed(const std::string& stage, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            timings_[stage] = timings_.value(stage, 0.0) + seconds_since(t0);
        } else {
            auto r = f();
            timings_[stage] = timings_.value(stage, 0.0) + seconds_since(t0);
            return r;
        }
    }

    void save_records(const std::string& label, const ScenarioConfig& cfg, const NoiseModel& noise) {
        if (!spec_.save_records) return;
        auto dump = [&](const std::string& name, const ScenarioConfig& c) {
            RecordSimulator sim(c, noise);
            RecordWriter w(path(name), header_for(sim));
            for (std::uint64_t r = 0; r < sim.record_count(); ++r) w.write(sim.record(r));
            w.close();
            write_sidecar(path(name + ".json"), c, noise);
            add_file(name);
            add_file(name + ".json");
        };
        timed("save_records", [&] {
            dump(label + ".records", cfg);
            dump(label + "_calibration.records",
                 calibration_scenario(cfg.train, cfg.shots, calibration_seed(cfg.seed)));
        });
    }

    OutputBundle finish(const std::string& error = {}) {
        json checks = json::array();
        for (const auto& c : out_.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        json versions{{"homsim", HOMSIM_VERSION},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"fftw", std::string(fftw_version)},
                      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                      {"compiler", std::string(__VERSION__)}};
        json m;
        m["spec"] = to_json(spec_);
        m["versions"] = versions;
        m["timings_s"] = timings_;
        m["seeds"] = seeds_;
        m["workers"] = resolve_workers(spec_.analysis.workers);
        m["files"] = out_.files;
        m["checks"] = checks;
        m["all_passed"] = out_.all_passed();
        if (!error.empty()) m["error"] = error;
        write_json_file(path("manifest.json"), m);
        out_.manifest = std::move(m);
        return out_;
    }

private:
    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    const ExperimentSpec& spec_;
    OutputBundle out_;
    json timings_ = json::object();
    json seeds_ = json::object();
};

std::string ns_label(double t) { return std::to_string(static_cast<long long>(std::llround(t * 1e9))) + "ns"; }


void write_g2(Bundle& b, const G2Run& r, const std::string& suffix) {
    for (const auto& f : write_g2_files(r, b.directory(), suffix)) b.add_file(f);
}

double max_abs_within(const CorrelationHistogram& h, double half) {
    double m = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (std::abs(h.tau[i]) < half) m = std::max(m, std::abs(h.values[i]));
    return m;
}

// Dip and unit cross-pulse peaks of a δτ = 0 run.
void check_hom(Bundle& b, const G2Run& r, const PulseTrainConfig& t) {
    const double dip = max_abs_within(r.cross_norm, 0.5 * t.t_r);
    b.check("hom-dip: |G2_ab| < 0.05 inside ±t_r/2", dip < 0.05, fmt("max |G2_ab| = %.4f", dip));
    double worst = 0.0;
    for (int n = -t.pulses_per_sequence / 2; n <= t.pulses_per_sequence / 2; ++n) {
        if (n == 0 || r.cross_norm.tau.back() < std::abs(n) * t.t_r) continue;
        worst = std::max(worst, std::abs(r.cross_norm.value_at(n * t.t_r) - 1.0));
    }
    b.check("hom-dip: peaks at n t_r = 1 ± 0.05", worst < 0.05, fmt("max |G2_ab(n t_r) - 1| = %.4f", worst));
    b.check("hom-dip: G2_ab consistent with theory", r.cross_vs_theory.passed,
            fmt("max |z| = %.2f, rms = %.4f", r.cross_vs_theory.max_abs_z, r.cross_vs_theory.rms));
}

double mean_peak(const CorrelationHistogram& h, const PulseTrainConfig& t, double shift) {
    double s = 0.0;
    int n_used = 0;
    for (int n = -t.pulses_per_sequence / 2; n <= t.pulses_per_sequence / 2; ++n) {
        if (n == 0 || h.tau.back() < std::abs(n) * t.t_r + std::abs(shift)) continue;
        s += h.value_at(n * t.t_r + shift);
        ++n_used;
    }
    return n_used ? s / n_used : 0.0;
}

void run_correlation(const ExperimentSpec& spec, Bundle& b) {
    const auto& cfg = spec.config;
    const auto& a = spec.analysis;
    if (spec.scenario == "hom-dip") {
        b.seed("signal", cfg.seed);
        b.seed("calibration", calibration_seed(cfg.seed));
        const auto r = b.timed("g2", [&] { return run_g2(cfg, spec.noise, a); });
        write_g2(b, r, "");
        b.save_records("hom", cfg, spec.noise);
        check_hom(b, r, cfg.train);
    } else if (spec.scenario == "delay-scan") {
        for (std::size_t i = 0; i < a.delays.size(); ++i) {
            ScenarioConfig c = cfg;
            c.train.delta_tau = a.delays[i];
            c.seed = record_seed(cfg.seed, i);
            const std::string label = "_dtau" + ns_label(a.delays[i]);
            b.seed("signal" + label, c.seed);
            b.seed("calibration" + label, calibration_seed(c.seed));
            const auto r = b.timed("g2", [&] { return run_g2(c, spec.noise, a); });
            write_g2(b, r, label);
            b.save_records("delay" + label, c, spec.noise);
            const double d = a.delays[i];
            const auto& h = r.cross_norm;
            b.check("delay-scan" + label + ": consistent with theory", r.cross_vs_theory.passed,
                    fmt("max |z| = %.2f", r.cross_vs_theory.max_abs_z));
            if (std::abs(d) < 1e-12) {
                check_hom(b, r, c.train);
            } else if (std::abs(d - 50e-9) < 1e-12) {
                const double g0 = h.value_at(0.0);
                b.check("delay-scan" + label + ": G2_ab(0) < 0.05", g0 < 0.05, fmt("G2_ab(0) = %.4f", g0));
                bool pos = true;
                std::string det;
                for (double s : {-d, d}) {
                    const double v = h.value_at(s), e = h.stderr_at(s);
                    pos = pos && v > 3.0 * e;
                    det += fmt("G2_ab(%.0f ns) = %.4f ± %.4f; ", s * 1e9, v, e);
                }
                b.check("delay-scan" + label + ": positive structure at ±δτ", pos, det);
            } else if (std::abs(d - 150e-9) < 1e-12) {
                const double p = h.value_at(d), m = h.value_at(-d);
                b.check("delay-scan" + label + ": peaks at ±δτ = 0.25 ± 0.05",
                        std::abs(p - 0.25) < 0.05 && std::abs(m - 0.25) < 0.05, fmt("%.4f, %.4f", m, p));
                const double centre = mean_peak(h, c.train, 0.0);
                b.check("delay-scan" + label + ": n t_r features = 0.5 ± 0.05", std::abs(centre - 0.5) < 0.05,
                        fmt("mean G2_ab(n t_r) = %.4f", centre));
            }
        }
    } else if (spec.scenario == "autocorr") {
        b.seed("signal", cfg.seed);
        b.seed("calibration", calibration_seed(cfg.seed));
        const auto hom = b.timed("g2", [&] { return run_g2(cfg, spec.noise, a); });
        write_g2(b, hom, "_hom");
        ScenarioConfig single = cfg;
        single.source_a_on = false;
        single.seed = record_seed(cfg.seed, 1);
        b.seed("signal_single", single.seed);
        b.seed("calibration_single", calibration_seed(single.seed));
        const auto one = b.timed("g2", [&] { return run_g2(single, spec.noise, a); });
        write_g2(b, one, "_single");
        b.save_records("autocorr_hom", cfg, spec.noise);
        b.save_records("autocorr_single", single, spec.noise);
        const double z0 = hom.autocorr_norm.value_at(0.0);
        b.check("autocorr: HOM G2_aa(0) = 1 ± 0.1", std::abs(z0 - 1.0) < 0.1, fmt("%.4f", z0));
        double worst = 0.0;
        for (int n = 1; n <= cfg.train.pulses_per_sequence / 2; ++n)
            for (int s : {-1, 1})
                if (hom.autocorr_norm.tau.back() >= n * cfg.train.t_r)
                    worst = std::max(worst, std::abs(hom.autocorr_norm.value_at(s * n * cfg.train.t_r) - 1.0));
        b.check("autocorr: HOM G2_aa(n t_r) = 1 ± 0.1", worst < 0.1, fmt("max deviation %.4f", worst));
        const double s0 = one.autocorr_norm.value_at(0.0);
        b.check("autocorr: single-source G2_aa(0) < 0.05", s0 < 0.05, fmt("%.4f", s0));
    } else {  // single-source
        b.seed("signal", cfg.seed);
        b.seed("calibration", calibration_seed(cfg.seed));
        const auto r = b.timed("g2", [&] { return run_g2(cfg, spec.noise, a); });
        write_g2(b, r, "");
        b.save_records("single", cfg, spec.noise);
        const double ab0 = r.cross_norm.value_at(0.0), aa0 = r.autocorr_norm.value_at(0.0);
        b.check("single-source: G2_ab(0) < 0.05", ab0 < 0.05, fmt("%.4f", ab0));
        b.check("single-source: G2_aa(0) < 0.05", aa0 < 0.05, fmt("%.4f", aa0));
        b.check("single-source: G2_ab consistent with theory", r.cross_vs_theory.passed,
                fmt("max |z| = %.2f", r.cross_vs_theory.max_abs_z));
    }
}

bool fock_inputs(const ScenarioConfig& c) {
    return std::abs(std::abs(c.beta_a) - 1.0) < 1e-12 && std::abs(std::abs(c.beta_b) - 1.0) < 1e-12 && c.source_a_on &&
           c.source_b_on;
}

void run_tomo(const ExperimentSpec& spec, Bundle& b) {
    const auto& cfg = spec.config;
    b.seed("signal", cfg.seed);
    b.seed("calibration", calibration_seed(cfg.seed));
    const auto r = b.timed("tomography", [&] { return run_tomography(cfg, spec.noise, spec.analysis); });
    for (const auto& f : write_tomography_files(r, b.directory())) b.add_file(f);
    b.save_records("tomo", cfg, spec.noise);

    b.check("tomography: MLE converged", r.mle.converged,
            fmt("%.0f iterations, chi2 = %.4g", r.mle.iterations, r.mle.chi_squared));
    if (fock_inputs(cfg) && std::abs(cfg.train.delta_tau) < 1e-15) {
        const auto& m = r.moments;
        std::string det;
        bool ok = true;
        for (MomentIndex i : {MomentIndex{1, 1, 0, 0}, {0, 0, 1, 1}, {2, 2, 0, 0}, {0, 0, 2, 2}, {0, 2, 2, 0}}) {
            const double v = std::abs(m.value(i));
            ok = ok && std::abs(v - 1.0) < 0.1;
            det += to_string(i) + fmt(" = %.3f ± %.3f; ", v, m.error(i));
        }
        b.check("noon: unit moments within 0.1", ok, det);
        const double c = m.value({1, 1, 1, 1}).real();
        b.check("noon: <a†a b†b> = 0 ± 0.05", std::abs(c) < 0.05, fmt("%.4f ± %.4f", c, m.error({1, 1, 1, 1})));
        int bad = 0;
        double worst = 0.0;
        for (const auto& [i, e] : m.entries()) {
            const int o = i.order();
            if (o == 0 || (o % 2 == 0 && o <= 4)) continue;
            const double z = e.stderr_value > 0.0 ? std::abs(e.value) / e.stderr_value : 0.0;
            worst = std::max(worst, z);
            if (z > 4.0) ++bad;
        }
        b.check("noon: odd and order >= 5 moments consistent with 0 (4σ)", bad == 0,
                fmt("%.0f outside, worst %.2fσ", bad, worst));
        b.check("noon: trace distance to ideal <= 0.05", r.trace_distance <= 0.05, fmt("%.4f", r.trace_distance));
        b.check("noon: |Im rho| <= 0.02", r.max_imag <= 0.02, fmt("%.4f", r.max_imag));
    } else {
        b.check("tomography: fidelity >= 0.95", r.fidelity >= 0.95, fmt("%.4f", r.fidelity));
    }
}

void run_phase_sweep(const ExperimentSpec& spec, Bundle& b) {
    const auto& cfg = spec.config;
    auto phases = spec.analysis.phases;
    if (phases.empty())
        for (int d = 0; d < 360; d += 30) phases.push_back(d * std::numbers::pi / 180.0);
    b.seed("calibration", calibration_seed(cfg.seed));
    const MomentSet noise = b.timed("calibration", [&] { return noise_mode_moments(cfg, spec.noise, spec.analysis); });
    write_moments_csv(noise, b.path("noise_moments.csv"));
    b.add_file("noise_moments.csv");

    std::vector<PowerPoint> both, single;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        ScenarioConfig c = cfg;
        c.phi = phases[i];
        c.source_a_on = c.source_b_on = true;
        c.seed = record_seed(cfg.seed, 2 * i);
        ScenarioConfig s = c;
        s.source_a_on = false;
        s.seed = record_seed(cfg.seed, 2 * i + 1);
        const std::string label = "_phi" + std::to_string(std::lround(phases[i] * 180.0 / std::numbers::pi));
        b.seed("both" + label, c.seed);
        b.seed("single" + label, s.seed);
        both.push_back(b.timed("powers", [&] { return run_powers(c, spec.noise, spec.analysis, noise); }));
        single.push_back(b.timed("powers", [&] { return run_powers(s, spec.noise, spec.analysis, noise); }));
        b.save_records("sweep_both" + label, c, spec.noise);
        b.save_records("sweep_single" + label, s, spec.noise);
    }
    {
        std::ofstream out(b.path("powers.csv"));
        out.precision(12);
        out << "phi_deg,na,na_err,nb,nb_err,single_na,single_na_err,single_nb,single_nb_err\n";
        for (std::size_t i = 0; i < both.size(); ++i)
            out << phases[i] * 180.0 / std::numbers::pi << ',' << both[i].na.mean << ',' << both[i].na.error << ','
                << both[i].nb.mean << ',' << both[i].nb.error << ',' << single[i].na.mean << ',' << single[i].na.error
                << ',' << single[i].nb.mean << ',' << single[i].nb.error << '\n';
        b.add_file("powers.csv");
    }
    auto fit_of = [&](bool a_channel) {
        std::vector<double> y, e;
        for (const auto& p : both) {
            y.push_back(a_channel ? p.na.mean : p.nb.mean);
            e.push_back(a_channel ? p.na.error : p.nb.error);
        }
        return fit_sinusoid(phases, y, e);
    };
    const auto fa = fit_of(true), fb = fit_of(false);
    auto fj = [](const SinusoidFit& f) {
        return json{{"c0", f.c0}, {"c0_err", f.c0_err}, {"c1", f.c1}, {"c1_err", f.c1_err}, {"phi0_deg", f.phi0 * 180.0 / std::numbers::pi}};
    };
    b.json_file("fit.json", {{"a", fj(fa)}, {"b", fj(fb)}});

    b.check("phase-sweep: <a†a> c0 = 0.50 ± 0.02, c1 = 0.25 ± 0.02",
            std::abs(fa.c0 - 0.5) < 0.02 && std::abs(fa.c1 - 0.25) < 0.02, fmt("c0 = %.4f, c1 = %.4f", fa.c0, fa.c1));
    double dphi = std::remainder(fb.phi0 - fa.phi0 - std::numbers::pi, 2.0 * std::numbers::pi);
    b.check("phase-sweep: <b†b> anti-phased", std::abs(dphi) < 0.2 && std::abs(fb.c1 - 0.25) < 0.02,
            fmt("phase difference - pi = %.3f rad, c1 = %.4f", dphi, fb.c1));
    double worst = 0.0;
    for (const auto& p : single) worst = std::max({worst, std::abs(p.na.mean - 0.25), std::abs(p.nb.mean - 0.25)});
    b.check("phase-sweep: single source flat at 0.25 ± 0.02", worst < 0.02, fmt("max deviation %.4f", worst));
}

void run_calibrate(const ExperimentSpec& spec, Bundle& b) {
    const auto& cfg = spec.config;
    b.seed("calibration", calibration_seed(cfg.seed));
    const TauGrid grid = analysis_grid(cfg, spec.noise, spec.analysis);
    const std::uint64_t shots = spec.analysis.calibration_shots ? spec.analysis.calibration_shots : cfg.shots;
    const auto cal = b.timed("calibration", [&] {
        return calibrate_noise(spec.noise, cfg.train, shots, calibration_seed(cfg.seed), grid, spec.analysis.batches,
                               spec.analysis.workers);
    });
    b.json_file("calibration.json", to_json(cal));
    b.save_records("noise", calibration_scenario(cfg.train, shots, calibration_seed(cfg.seed)), spec.noise);
    const double ea = 1.0 + spec.noise.added_noise_photons_a, eb = spec.noise.relative_gain * spec.noise.relative_gain *
                                                                      (1.0 + spec.noise.added_noise_photons_b);
    b.check("calibrate: N0_a = 1 + n_a", std::abs(cal.a.N0 - ea) < 5.0 * cal.a.N0_err,
            fmt("%.4f ± %.4f (expected %.4f)", cal.a.N0, cal.a.N0_err, ea));
    b.check("calibrate: N0_b = g²(1 + n_b)", std::abs(cal.b.N0 - eb) < 5.0 * cal.b.N0_err,
            fmt("%.4f ± %.4f (expected %.4f)", cal.b.N0, cal.b.N0_err, eb));
    b.check("calibrate: channels uncorrelated", !cal.cross_warning,
            fmt("|<h_a* h_b>| = %.3g ± %.3g", std::abs(cal.cross), cal.cross_err));
}

}  // namespace

OutputBundle run_scenario(const ExperimentSpec& spec) {
    spec.validate();
    Bundle b(spec);
    try {
        if (spec.scenario == "noon-tomo")
            run_tomo(spec, b);
        else if (spec.scenario == "phase-sweep")
            run_phase_sweep(spec, b);
        else if (spec.scenario == "calibrate")
            run_calibrate(spec, b);
        else
            run_correlation(spec, b);
    } catch (const std::exception& e) {
        b.finish(e.what());
        throw;
    }
    return b.finish();
}

namespace {

void write_marginals(const Histogram4D& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(12);
    out << "centre,x_a,p_a,x_b,p_b\n";
    std::vector<std::uint64_t> m[4];
    for (int ax = 0; ax < 4; ++ax) m[ax] = h.marginal(ax);
    for (int i = 0; i < h.bins(); ++i) {
        out << 0.5 * (h.edges[i] + h.edges[i + 1]);
        for (int ax = 0; ax < 4; ++ax) out << ',' << m[ax][i];
        out << '\n';
    }
}

json comparison_json(const TheoryComparison& c) {
    return {{"rms", c.rms}, {"max_abs_z", c.max_abs_z}, {"tolerance", c.tolerance}, {"passed", c.passed}};
}

}  // namespace

std::vector<std::string> write_g2_files(const G2Run& r, const std::string& dir, const std::string& suffix) {
    fs::create_directories(dir);
    auto path = [&](const std::string& n) { return (fs::path(dir) / n).string(); };
    std::vector<std::string> files;
    const std::pair<const CorrelationHistogram*, std::string> hists[] = {
        {&r.cross_norm, "g2_ab" + suffix + ".csv"},
        {&r.autocorr_norm, "g2_aa" + suffix + ".csv"},
        {&r.cross, "g2_ab_raw" + suffix + ".csv"},
        {&r.autocorr, "g2_aa_raw" + suffix + ".csv"}};
    for (const auto& [h, name] : hists) {
        write_histogram_csv(*h, path(name));
        files.push_back(name);
    }
    for (const auto& [h, name] : {std::pair{&r.theory_cross, "theory_ab" + suffix + ".csv"},
                                  std::pair{&r.theory_auto, "theory_aa" + suffix + ".csv"}}) {
        write_theory_csv(*h, path(name));
        files.push_back(name);
    }
    write_json_file(path("g2" + suffix + ".json"), {{"normalization_ab", metadata_json(r.cross_norm)},
                                                    {"normalization_aa", metadata_json(r.autocorr_norm)},
                                                    {"offset_subtracted", r.offset_subtracted},
                                                    {"gain_b", r.gain_b},
                                                    {"ab_vs_theory", comparison_json(r.cross_vs_theory)},
                                                    {"aa_vs_theory", comparison_json(r.auto_vs_theory)}});
    files.push_back("g2" + suffix + ".json");
    write_json_file(path("calibration" + suffix + ".json"), to_json(r.calibration));
    files.push_back("calibration" + suffix + ".json");
    return files;
}

std::vector<std::string> write_tomography_files(const TomographyRun& r, const std::string& dir) {
    fs::create_directories(dir);
    auto path = [&](const std::string& n) { return (fs::path(dir) / n).string(); };
    std::vector<std::string> files = {"moments_raw.csv", "noise_moments.csv", "moments.csv"};
    write_moments_csv(r.raw, path(files[0]));
    write_moments_csv(r.noise_moments, path(files[1]));
    write_moments_csv(r.moments, path(files[2]));
    json hist = nullptr;
    if (r.histogram) {
        write_marginals(*r.histogram, path("histogram_marginals.csv"));
        write_moments_csv(*r.histogram_raw_moments, path("histogram_moments.csv"));
        files.push_back("histogram_marginals.csv");
        files.push_back("histogram_moments.csv");
        hist = {{"bins", r.histogram->bins()},
                {"half_range", r.histogram->edges.back()},
                {"total", r.histogram->total},
                {"clamped", r.histogram->clamped}};
    }
    write_density_matrix(r.mle.rho, path("rho.json"), path("rho.csv"));
    files.push_back("rho.json");
    files.push_back("rho.csv");
    write_json_file(path("tomography.json"), {{"fidelity", r.fidelity},
                                              {"negativity", r.negativity},
                                              {"trace_distance", r.trace_distance},
                                              {"max_imag", r.max_imag},
                                              {"gain_b", r.gain_b},
                                              {"target", to_json(r.target)},
                                              {"histogram", hist},
                                              {"mle",
                                               {{"chi_squared", r.mle.chi_squared},
                                                {"iterations", r.mle.iterations},
                                                {"converged", r.mle.converged},
                                                {"chi2_history", r.mle.chi2_history}}}});
    files.push_back("tomography.json");
    return files;
}

}  // namespace homsim
