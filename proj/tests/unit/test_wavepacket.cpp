#include "homsim/wavepacket.hpp"

#include <doctest.h>

#include <cmath>

using namespace homsim;

namespace {

// Overlap written out by hand for t0_1 <= t0_2.
cplx overlap_oracle(const TemporalMode& m1, const TemporalMode& m2) {
    const TemporalMode& e = m1.t0 <= m2.t0 ? m1 : m2;
    const TemporalMode& l = m1.t0 <= m2.t0 ? m2 : m1;
    const cplx se(e.kappa / 2.0, (&e == &m1 ? -1.0 : 1.0) * e.detuning);
    const cplx sl(l.kappa / 2.0, (&l == &m1 ? -1.0 : 1.0) * l.detuning);
    return std::sqrt(e.kappa * l.kappa) * std::exp(-se * (l.t0 - e.t0)) / (se + sl);
}

}  // namespace

TEST_SUITE("wavepacket") {
    TEST_CASE("overlap: closed form, quadrature and hand-written oracle agree") {
        const TemporalMode base{kappa_from_linewidth(4.1e6), 0.0, 0.0};
        for (double t0 : {0.0, 20e-9, 150e-9, -70e-9})
            for (double det : {0.0, 3e6, -1e7})
                for (double k2 : {kappa_from_linewidth(4.1e6), kappa_from_linewidth(4.6e6)}) {
                    const TemporalMode m2{k2, t0, det};
                    const cplx o = overlap_oracle(base, m2);
                    CHECK(std::abs(mode_overlap_closed_form(base, m2) - o) < 1e-9);
                    CHECK(std::abs(mode_overlap(base, m2) - o) < 1e-6);
                }
        CHECK(std::abs(mode_overlap(base, base) - 1.0) < 1e-9);
    }

    TEST_CASE("coincidence probability for equal decay rates") {
        const double k = kappa_from_linewidth(4.35e6);
        for (double d : {0.0, 50e-9, 100e-9, 150e-9}) {
            const double p = coincidence_probability({k, 0.0, 0.0}, {k, d, 0.0});
            CHECK(p == doctest::Approx(0.5 * (1.0 - std::exp(-k * d))).epsilon(1e-7));
        }
    }

    TEST_CASE("within-pulse terms integrate to the output probabilities") {
        const TemporalMode a{kappa_from_linewidth(4.1e6), 0.0, 0.0};
        const TemporalMode b{kappa_from_linewidth(4.6e6), 60e-9, 0.0};
        const double ov2 = std::norm(mode_overlap_closed_form(a, b));
        const double h = 0.25e-9;
        double cross = 0.0, aut = 0.0;
        for (double t = -3e-6; t <= 3e-6; t += h) {
            cross += within_pulse_cross(a, b, t) * h;
            aut += within_pulse_auto(a, b, t) * h;
        }
        CHECK(cross == doctest::Approx(0.5 * (1.0 - ov2)).epsilon(1e-3));
        CHECK(aut == doctest::Approx(0.5 * (1.0 + ov2)).epsilon(1e-3));
        CHECK(within_pulse_cross(a, a, 0.0) == doctest::Approx(0.0));
        CHECK(within_pulse_cross(a, b, 30e-9) == doctest::Approx(within_pulse_cross(a, b, -30e-9)));
    }

    TEST_CASE("sampled theory curve: dip area and symmetric clusters") {
        PulseTrainConfig cfg;
        cfg.kappa_b = cfg.kappa_a;
        cfg.delta_tau = 150e-9;
        const double dt = 2e-9;
        const TauGrid grid = default_tau_grid(cfg, dt);
        CHECK(grid.max_lag == 2560);
        const auto th = g2_cross_theory(cfg, FilterSpec::none(dt), grid);
        CHECK(th.delta_tau == doctest::Approx(150e-9));
        const auto& within = th.components.at("within-pulse");
        double area = 0.0;
        for (double v : within) area += v * dt;
        CHECK(area == doctest::Approx(0.5 * (1.0 - std::exp(-cfg.kappa_a * cfg.delta_tau))).epsilon(0.03));
        const auto& crossp = th.components.at("cross-pulse");
        for (std::size_t i = 0; i < th.size(); ++i) {
            CHECK(th.values[i] == doctest::Approx(within[i] + crossp[i]));
            CHECK(crossp[i] >= -1e-12);
        }
        CHECK(th.integral(-0.5 * cfg.t_r + cfg.t_r, 1.5 * cfg.t_r) ==
              doctest::Approx(th.integral(-1.5 * cfg.t_r, -0.5 * cfg.t_r)).epsilon(1e-4));

        cfg.delta_tau = 0.0;
        const auto hom = g2_cross_theory(cfg, FilterSpec::none(dt), grid);
        CHECK(std::abs(hom.value_at(0.0)) < 1e-6 * hom.value_at(cfg.t_r));
    }

    TEST_CASE("sampled modes are normalized on the grid") {
        PulseTrainConfig cfg;
        cfg.delta_tau = -40e-9;
        const double dt = 2e-9;
        CHECK(samples_per_record(cfg, dt) == 5120);
        for (int p : {0, 7, 19}) {
            for (const auto& m : {cfg.mode_a(p), cfg.mode_b(p)}) {
                const auto s = sample_pulse_mode(cfg, m, p, dt);
                double n = 0.0;
                for (auto v : s.values) n += std::norm(v) * dt;
                CHECK(n == doctest::Approx(1.0));
                CHECK(s.offset >= std::size_t(p) * 256);
                CHECK(s.offset + s.values.size() <= std::size_t(p + 1) * 256);
            }
        }
        CHECK(cfg.mode_a(0).t0 == doctest::Approx(40e-9));
        cfg.delta_tau = 300e-9;
        CHECK_THROWS(cfg.validate());
    }
}
