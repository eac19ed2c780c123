#include "homsim/experiment.hpp"
#include "homsim/records_io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace homsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_SUITE("experiment") {
    TEST_CASE("scenario defaults") {
        CHECK(scenario_names().size() == 7);
        for (const auto& name : scenario_names()) CHECK_NOTHROW(default_spec(name).validate());
        const auto hom = default_spec("hom-dip");
        CHECK(hom.config.shots == 500000);
        CHECK(hom.noise.added_noise_photons_a == 0.0);
        CHECK(hom.noise.filter.enabled());
        const auto tomo = default_spec("noon-tomo");
        CHECK(tomo.config.shots == 1000000);
        CHECK(tomo.noise.added_noise_photons_b == 10.0);
        CHECK_FALSE(tomo.noise.filter.enabled());
        CHECK_FALSE(default_spec("single-source").config.source_a_on);
        CHECK_THROWS(default_spec("nope"));
    }

    TEST_CASE("spec JSON round trip and unknown keys") {
        auto s = default_spec("delay-scan");
        s.config.seed = 99;
        s.analysis.delays = {0.0, 150e-9};
        s.analysis.workers = 3;
        const auto j = to_json(s);
        const auto back = spec_from_json(j, default_spec("hom-dip"));
        CHECK(to_json(back) == j);
        CHECK(back.analysis.delays.size() == 2);
        CHECK(back.analysis.delays[1] == doctest::Approx(150e-9));

        // Manifests wrap the spec.
        const nlohmann::json manifest{{"spec", j}, {"files", nlohmann::json::array()}};
        CHECK(to_json(spec_from_json(manifest, default_spec("hom-dip"))) == j);

        nlohmann::json bad = j;
        bad["analysis"]["batchez"] = 4;
        CHECK_THROWS_WITH_AS(spec_from_json(bad, ExperimentSpec{}), doctest::Contains("analysis.batchez"), ConfigError);
        bad = j;
        bad["analysis"]["batches"] = 0;
        CHECK_THROWS_AS(spec_from_json(bad, ExperimentSpec{}), ConfigError);
    }

    TEST_CASE("sinusoid fit") {
        std::vector<double> phi, y, err;
        for (int d = 0; d < 360; d += 30) {
            const double p = d * std::numbers::pi / 180.0;
            phi.push_back(p);
            y.push_back(0.5 - 0.25 * std::cos(p - 0.4));
            err.push_back(0.01);
        }
        const auto f = fit_sinusoid(phi, y, err);
        CHECK(f.c0 == doctest::Approx(0.5));
        CHECK(f.c1 == doctest::Approx(0.25));
        CHECK(f.phi0 == doctest::Approx(0.4));
        CHECK(f.c0_err == doctest::Approx(0.01 / std::sqrt(12.0)).epsilon(1e-6));
        CHECK(f.c1_err > 0.0);
    }

    TEST_CASE("parallel record loops do not depend on the worker count") {
        ScenarioConfig c;
        c.shots = 20 * 37;
        NoiseModel noise;
        auto run = [&](int w) {
            return for_each_record<MomentAccumulator>(
                c, noise, w, [] { return MomentAccumulator(); },
                [mf = MatchedFilter(c.train, c.train.mode_a(0), noise.dt())](MomentAccumulator& a,
                                                                             const QuadratureRecord& r) {
                    a.add_record(r, mf);
                });
        };
        const auto one = run(1);
        CHECK(one.count() == 740);
        CHECK(run(3) == one);
        CHECK(run(8) == one);
    }

    TEST_CASE("scenario bundle is complete and reproducible") {
        const auto base = fs::temp_directory_path() / "homsim_bundle_test";
        fs::remove_all(base);
        auto s = default_spec("hom-dip");
        s.config.shots = 2000;
        s.analysis.calibration_shots = 2000;
        s.analysis.workers = 2;
        s.output_dir = (base / "a").string();
        const auto b1 = run_scenario(s);
        CHECK(fs::exists(base / "a" / "manifest.json"));
        CHECK_FALSE(b1.checks.empty());
        for (const auto& f : b1.files) CHECK(fs::exists(base / "a" / f));
        const auto m = read_json_file((base / "a" / "manifest.json").string());
        CHECK(m.contains("versions"));
        CHECK(m.contains("seeds"));
        CHECK(m.at("files").size() == b1.files.size());

        s.output_dir = (base / "b").string();
        s.analysis.workers = 1;
        run_scenario(s);
        for (const auto& f : b1.files) CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));

        // Re-running from the manifest reproduces the data files.
        auto again = spec_from_json(m, default_spec("hom-dip"));
        again.output_dir = (base / "c").string();
        run_scenario(again);
        CHECK(slurp(base / "a" / "g2_ab.csv") == slurp(base / "c" / "g2_ab.csv"));
        fs::remove_all(base);
    }

    TEST_CASE("unwritable output directory fails early") {
        auto s = default_spec("calibrate");
        s.config.shots = 100;
        s.output_dir = "/proc/homsim-not-writable";
        CHECK_THROWS(run_scenario(s));
    }
}
