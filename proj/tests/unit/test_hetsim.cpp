#include "homsim/hetsim.hpp"

#include <doctest.h>

#include <cmath>

using namespace homsim;

namespace {

ScenarioConfig small(std::uint64_t shots) {
    ScenarioConfig c;
    c.shots = shots;
    c.seed = 42;
    return c;
}

cplx project(const std::vector<std::complex<float>>& s, const SampledMode& m, double dt) {
    cplx p = 0.0;
    for (std::size_t i = 0; i < m.values.size(); ++i) p += std::conj(m.values[i]) * cplx(s[m.offset + i]);
    return p * dt;
}

}  // namespace

TEST_SUITE("hetsim") {
    TEST_CASE("records are deterministic and independent of generation order") {
        NoiseModel noise;
        RecordSimulator s1(small(200), noise), s2(small(200), noise);
        const auto late = s1.record(7);
        s2.record(2);
        s2.record(9);
        const auto again = s2.record(7);
        CHECK(late.samples_a == again.samples_a);
        CHECK(late.samples_b == again.samples_b);
        CHECK(late.shot_id == 7);
        CHECK(s1.record_count() == 10);
        CHECK_THROWS_AS(s1.record(10), std::out_of_range);
        CHECK(record_seed(1, 0) != record_seed(1, 1));
        CHECK(record_seed(1, 0) != record_seed(2, 0));
    }

    TEST_CASE("partial last record") {
        RecordSimulator sim(small(45), NoiseModel{});
        CHECK(sim.record_count() == 3);
        CHECK(sim.record(0).active_pulses == 20);
        CHECK(sim.record(2).active_pulses == 5);
    }

    TEST_CASE("calibration noise level in vacuum units") {
        NoiseModel noise;
        noise.filter = FilterSpec::none(2e-9);
        noise.added_noise_photons_a = 3.0;
        noise.added_noise_photons_b = 0.5;
        CHECK(noise.vacuum_unit() == doctest::Approx(0.5e9));
        double pa = 0.0, pb = 0.0;
        std::size_t n = 0;
        calibration_records(noise, PulseTrainConfig{}, 400, 3, [&](const QuadratureRecord& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                pa += std::norm(cplx(r.samples_a[i])) / r.vacuum_unit;
                pb += std::norm(cplx(r.samples_b[i])) / r.vacuum_unit;
            }
            n += r.size();
            CHECK(r.tag == "calibration");
        });
        CHECK(pa / double(n) == doctest::Approx(4.0).epsilon(0.01));
        CHECK(pb / double(n) == doctest::Approx(1.5).epsilon(0.01));
    }

    TEST_CASE("single photon split evenly between the outputs") {
        ScenarioConfig c = small(20000);
        c.source_b_on = false;
        NoiseModel noise;
        noise.filter = FilterSpec::none(2e-9);
        noise.added_noise_photons_a = 0.0;
        noise.added_noise_photons_b = 2.0;
        RecordSimulator sim(c, noise);
        const double dt = noise.dt();
        double qa = 0.0, qb = 0.0, qa2 = 0.0;
        int n = 0;
        for (std::uint64_t r = 0; r < sim.record_count(); ++r) {
            const auto rec = sim.record(r);
            for (int p = 0; p < rec.active_pulses; ++p) {
                const auto m = sample_pulse_mode(c.train, c.train.mode_a(p), p, dt);
                const double a = std::norm(project(rec.samples_a, m, dt));
                qa += a;
                qa2 += a * a;
                qb += std::norm(project(rec.samples_b, m, dt));
                ++n;
            }
        }
        // <a a†> = 1 + 1/2 and the added noise adds n̄.
        const double err = std::sqrt((qa2 / n - (qa / n) * (qa / n)) / n);
        CHECK(std::abs(qa / n - 1.5) < 5.0 * err);
        CHECK(std::abs(qb / n - 3.5) < 5.0 * 2.0 * err);
        const auto [trials, accepted] = sim.acceptance();
        CHECK(accepted == std::uint64_t(n));
        CHECK(trials >= accepted);
    }

    TEST_CASE("relative gain scales channel b") {
        NoiseModel noise;
        RecordSimulator s1(small(20), noise);
        noise.relative_gain = 2.0;
        RecordSimulator s2(small(20), noise);
        const auto r1 = s1.record(0), r2 = s2.record(0);
        CHECK(r1.samples_a == r2.samples_a);
        for (std::size_t i = 0; i < r1.size(); i += 97)
            CHECK(std::abs(cplx(r2.samples_b[i]) - 2.0 * cplx(r1.samples_b[i])) < 1e-3 * std::abs(cplx(r1.samples_b[i])) + 1e-6);
    }

    TEST_CASE("JSON round trip and field paths in errors") {
        ScenarioConfig c = small(1234);
        c.beta_a = cplx(0.0, -std::sqrt(0.5));
        c.phi = 0.4;
        c.train.delta_tau = 50e-9;
        c.splitter.convention = PhaseConvention::RealAntisymmetric;
        const auto back = scenario_from_json(to_json(c));
        CHECK(to_json(back) == to_json(c));
        CHECK(back.beta_a == c.beta_a);
        CHECK(back.train.delta_tau == c.train.delta_tau);

        NoiseModel n;
        n.added_noise_photons_b = 7.5;
        n.filter = FilterSpec::none(1e-9);
        CHECK(to_json(noise_from_json(to_json(n))) == to_json(n));

        try {
            scenario_from_json({{"train", {{"t_rr", 1.0}}}});
            FAIL("no error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("train.t_rr") != std::string::npos);
        }
        CHECK_THROWS_AS(noise_from_json({{"added_noise_photons_a", -1.0}}), ConfigError);
        CHECK_THROWS_AS(scenario_from_json({{"shots", 0}}), ConfigError);
    }
}
