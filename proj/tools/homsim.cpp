// Command-line scenario runner. Exit codes: 0 success, 1 usage or
// configuration error, 2 acceptance checks failed.

#include "homsim/experiment.hpp"
#include "homsim/records_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>

using namespace homsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kUsage = 1, kChecksFailed = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed, shots;
    std::optional<double> noise_photons, delta_tau_ns, phi_deg;
    std::optional<int> workers;
    std::string out;
    bool check = false, save_records = false;

    void attach(CLI::App* app, bool records_flag = true) {
        app->add_option("--config", config, "JSON spec or bundle manifest")->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "master seed");
        app->add_option("--shots", shots, "pulse pairs")->check(CLI::PositiveNumber);
        app->add_option("--noise-photons", noise_photons, "added noise photons n̄ of both channels")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--delta-tau-ns", delta_tau_ns, "emission delay of source B");
        app->add_option("--phi-deg", phi_deg, "phase of source B");
        app->add_option("--workers", workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
        app->add_option("--out", out, "output directory");
        app->add_flag("--check", check, "exit with status 2 when acceptance checks fail");
        if (records_flag) app->add_flag("--save-records", save_records, "also write the raw record files");
    }

    ExperimentSpec apply(const std::string& scenario) const {
        ExperimentSpec s = default_spec(scenario);
        if (!config.empty()) {
            s = spec_from_json(read_json_file(config), s);
            if (s.scenario != scenario) throw ConfigError("scenario: config names '" + s.scenario + "', command runs '" + scenario + "'");
        }
        if (seed) s.config.seed = *seed;
        if (shots) s.config.shots = *shots;
        if (noise_photons) s.noise.added_noise_photons_a = s.noise.added_noise_photons_b = *noise_photons;
        if (delta_tau_ns) {
            s.config.train.delta_tau = *delta_tau_ns * 1e-9;
            s.analysis.delays = {s.config.train.delta_tau};
        }
        if (phi_deg) s.config.phi = *phi_deg * std::numbers::pi / 180.0;
        if (workers) s.analysis.workers = *workers;
        if (!out.empty()) s.output_dir = out;
        s.check = s.check || check;
        s.save_records = s.save_records || save_records;
        s.validate();
        return s;
    }
};

int report(const OutputBundle& b, bool check) {
    for (const auto& c : b.checks) std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
    std::cout << "bundle: " << b.directory << " (" << b.files.size() << " data files)\n";
    return check && !b.all_passed() ? kChecksFailed : kOk;
}

// Sidecar of a record file: {"scenario": ..., "noise": ...}.
std::pair<ScenarioConfig, NoiseModel> read_sidecar(const std::string& records) {
    const auto j = read_json_file(records + ".json");
    if (!j.contains("scenario") || !j.contains("noise")) throw ConfigError(records + ".json: missing scenario or noise");
    return {scenario_from_json(j.at("scenario")), noise_from_json(j.at("noise"))};
}

template <class F>
void stream(const std::string& path, F&& f) {
    RecordReader reader(path);
    QuadratureRecord rec;
    while (reader.next(rec)) f(rec);
}

AnalysisOptions analysis_options(const std::string& config) {
    if (config.empty()) return {};
    const auto j = read_json_file(config);
    const json& spec = j.contains("spec") ? j.at("spec") : j;
    if (!spec.contains("analysis")) return {};
    return spec_from_json({{"analysis", spec.at("analysis")}}, ExperimentSpec{}).analysis;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulsed microwave Hong-Ou-Mandel simulation with heterodyne detection"};
    app.require_subcommand(1);

    Overrides run_o, cal_o, sim_o;
    std::string scenario;
    auto* run = app.add_subcommand("run", "calibrate, simulate and analyze one scenario");
    run->add_option("scenario", scenario, "scenario name")->required()->check(CLI::IsMember(scenario_names()));
    run_o.attach(run);

    auto* calibrate = app.add_subcommand("calibrate", "measure the noise of idle sources");
    cal_o.attach(calibrate);

    std::string sim_scenario = "hom-dip";
    auto* simulate = app.add_subcommand("simulate", "write signal and calibration record files");
    simulate->add_option("--scenario", sim_scenario, "scenario providing the defaults")
        ->check(CLI::IsMember(scenario_names()));
    sim_o.attach(simulate, false);

    auto* analyze = app.add_subcommand("analyze", "analyze record files");
    analyze->require_subcommand(1);
    std::string records, calib, an_out = "out/analysis", an_config;
    auto add_analysis = [&](CLI::App* a) {
        a->add_option("--records", records, "signal record file")->required()->check(CLI::ExistingFile);
        a->add_option("--calibration", calib, "calibration record file")->required()->check(CLI::ExistingFile);
        a->add_option("--config", an_config, "JSON with an analysis section")->check(CLI::ExistingFile);
        a->add_option("--out", an_out, "output directory");
    };
    auto* an_g2 = analyze->add_subcommand("g2", "correlation functions");
    add_analysis(an_g2);
    auto* an_tomo = analyze->add_subcommand("tomo", "moments and density matrix");
    add_analysis(an_tomo);

    std::string data_file, theory_file, cmp_out;
    double max_z = 4.0;
    auto* compare = app.add_subcommand("compare", "compare a histogram CSV with a theory CSV");
    compare->add_option("--data", data_file, "histogram CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--theory", theory_file, "theory CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--max-z", max_z, "tolerance on max |z|")->check(CLI::PositiveNumber);
    compare->add_option("--out", cmp_out, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) {
            const auto spec = run_o.apply(scenario);
            return report(run_scenario(spec), spec.check);
        }
        if (*calibrate) {
            const auto spec = cal_o.apply("calibrate");
            return report(run_scenario(spec), spec.check);
        }
        if (*simulate) {
            auto spec = sim_o.apply(sim_scenario);
            fs::create_directories(spec.output_dir);
            const auto dir = fs::path(spec.output_dir);
            auto dump = [&](const ScenarioConfig& c, const std::string& name) {
                RecordSimulator sim(c, spec.noise);
                RecordWriter w((dir / name).string(), header_for(sim));
                for (std::uint64_t r = 0; r < sim.record_count(); ++r) w.write(sim.record(r));
                w.close();
                write_sidecar((dir / (name + ".json")).string(), c, spec.noise);
                std::cout << (dir / name).string() << ": " << w.count() << " records\n";
            };
            const std::uint64_t cal_shots = spec.analysis.calibration_shots ? spec.analysis.calibration_shots : spec.config.shots;
            dump(spec.config, "signal.records");
            dump(calibration_scenario(spec.config.train, cal_shots, calibration_seed(spec.config.seed)), "calibration.records");
            write_json_file((dir / "simulate.json").string(), to_json(spec));
            return kOk;
        }
        if (*an_g2) {
            const auto [cfg, noise] = read_sidecar(records);
            const auto [cal_cfg, cal_noise] = read_sidecar(calib);
            if (to_json(cal_noise) != to_json(noise)) throw ConfigError("calibration: noise model differs from the signal's");
            const AnalysisOptions opt = analysis_options(an_config);
            const TauGrid grid = analysis_grid(cfg, noise, opt);
            NoiseAccumulator na(samples_per_record(cfg.train, noise.dt()), grid, opt.batches);
            stream(calib, [&](const QuadratureRecord& r) { na.add(r); });
            auto o = g2_options(cfg, noise, opt);
            G2Accumulator cross(o);
            o.kind = CorrelationKind::Auto;
            G2Accumulator autocorr(o);
            stream(records, [&](const QuadratureRecord& r) {
                cross.add(r);
                autocorr.add(r);
            });
            const auto r = finish_g2(cfg, noise, opt, na.finalize(), cross, autocorr);
            for (const auto& f : write_g2_files(r, an_out)) std::cout << (fs::path(an_out) / f).string() << '\n';
            return kOk;
        }
        if (*an_tomo) {
            const auto [cfg, noise] = read_sidecar(records);
            const AnalysisOptions opt = analysis_options(an_config);
            const MatchedFilter mf(cfg.train, tomography_mode(cfg, opt), noise.dt());
            MomentAccumulator cal(opt.batches), sig(opt.batches);
            stream(calib, [&](const QuadratureRecord& r) { cal.add_record(r, mf, true); });
            stream(records, [&](const QuadratureRecord& r) { sig.add_record(r, mf); });
            const auto r = finish_tomography(cfg, opt, sig.finalize(), cal.finalize());
            for (const auto& f : write_tomography_files(r, an_out)) std::cout << (fs::path(an_out) / f).string() << '\n';
            std::cout << "fidelity " << r.fidelity << ", negativity " << r.negativity << '\n';
            return kOk;
        }
        if (*compare) {
            const auto c = compare_to_theory(read_histogram_csv(data_file), read_histogram_csv(theory_file), max_z);
            const json rep{{"rms", c.rms},
                           {"max_abs_z", c.max_abs_z},
                           {"tolerance", c.tolerance},
                           {"passed", c.passed},
                           {"residuals", c.residuals},
                           {"z_scores", c.z_scores}};
            if (!cmp_out.empty()) write_json_file(cmp_out, rep);
            std::cout << json{{"rms", c.rms}, {"max_abs_z", c.max_abs_z}, {"passed", c.passed}}.dump() << '\n';
            return c.passed ? kOk : kChecksFailed;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
