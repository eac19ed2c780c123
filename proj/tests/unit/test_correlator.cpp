#include "homsim/correlator.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace homsim;

namespace {

constexpr double kDt = 2e-9, kUnit = 5e8;
constexpr std::size_t kLen = 300;

std::vector<QuadratureRecord> random_records(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, float(std::sqrt(kUnit / 2.0)));
    std::vector<QuadratureRecord> out(count);
    for (int r = 0; r < count; ++r) {
        auto& q = out[r];
        q.dt = kDt;
        q.vacuum_unit = kUnit;
        q.shot_id = r;
        q.active_pulses = 3;
        q.samples_a.resize(kLen);
        q.samples_b.resize(kLen);
        for (std::size_t i = 0; i < kLen; ++i) {
            // A slowly varying envelope gives the lags some structure.
            const float env = 1.0f + 0.5f * float(std::sin(0.03 * double(i)));
            q.samples_a[i] = {env * n(rng), n(rng)};
            q.samples_b[i] = {n(rng), env * n(rng)};
        }
    }
    return out;
}

cplx vac(std::complex<float> s) { return cplx(s) / std::sqrt(kUnit); }

}  // namespace

TEST_SUITE("correlator") {
    TEST_CASE("FFT estimators match direct O(N L) sums") {
        const auto recs = random_records(6, 1);
        const TauGrid grid{kDt, 120};
        const double t_r = 100 * kDt;
        NoiseCalibration cal;
        cal.dt = kDt;
        cal.vacuum_unit = kUnit;
        cal.grid = grid;
        cal.a.N0 = 1.3;
        cal.b.N0 = 0.9;
        for (auto* ch : {&cal.a, &cal.b}) {
            ch->N_tau.resize(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) ch->N_tau[i] = cplx(0.1 * std::cos(0.2 * i), 0.05);
        }

        G2Accumulator::Options o{CorrelationKind::Cross, 0, kLen, grid, t_r, 3, 4, 1.0};
        G2Accumulator cross(o);
        o.kind = CorrelationKind::Auto;
        o.channel = 1;
        G2Accumulator autob(o);
        for (const auto& r : recs) {
            cross.add(r);
            autob.add(r);
        }
        const auto hc = cross.finalize(cal);
        const auto ha = autob.finalize(cal);

        const double phys = kUnit * kUnit * kDt;
        for (int j : {-120, -77, -1, 0, 1, 50, 100, 120}) {
            double sc = 0.0, sa = 0.0;
            const cplx nt = cal.N_tau(1, j);
            for (const auto& r : recs)
                for (int t = 0; t < int(kLen); ++t) {
                    const int u = t + j;
                    if (u < 0 || u >= int(kLen)) continue;
                    const double ia = std::norm(vac(r.samples_a[t])), ib = std::norm(vac(r.samples_b[u]));
                    sc += (ia - cal.a.N0) * (ib - cal.b.N0);
                    const cplx x = vac(r.samples_b[t]), y = vac(r.samples_b[u]);
                    const double jx = std::norm(x), jy = std::norm(y);
                    sa += jx * jy - cal.b.N0 * (jx + jy) - 2.0 * std::real(std::conj(nt) * std::conj(x) * y) +
                          cal.b.N0 * cal.b.N0 + std::norm(nt);
                }
            const int c = int(std::lround(std::abs(j) * kDt / t_r));
            const double pairs = double(recs.size()) * std::max(0, 3 - c);
            CHECK(hc.values[grid.bin(j)] == doctest::Approx(phys * sc / pairs).epsilon(1e-8));
            CHECK(ha.values[grid.bin(j)] == doctest::Approx(phys * sa / pairs).epsilon(1e-8));
        }
    }

    TEST_CASE("noise calibration matches direct moments") {
        const auto recs = random_records(5, 2);
        const TauGrid grid{kDt, 20};
        const auto cal = measure_noise(recs, grid, 1);
        double n0 = 0.0;
        cplx m20 = 0.0, lag7 = 0.0;
        std::size_t pairs = 0;
        for (const auto& r : recs)
            for (std::size_t i = 0; i < kLen; ++i) {
                const cplx x = vac(r.samples_a[i]);
                n0 += std::norm(x);
                m20 += std::conj(x) * std::conj(x);
                if (i + 7 < kLen) {
                    lag7 += std::conj(x) * vac(r.samples_a[i + 7]);
                    ++pairs;
                }
            }
        const double n = double(recs.size() * kLen);
        CHECK(cal.a.N0 == doctest::Approx(n0 / n).epsilon(1e-9));
        CHECK(std::abs(cal.a.moments[2][0] - m20 / n) < 1e-9);
        CHECK(std::abs(cal.N_tau(0, 7) - lag7 / double(pairs)) < 1e-9);
        CHECK(cal.records == 5);
        CHECK_THROWS_AS(cal.N_tau(0, 21), std::out_of_range);
    }

    TEST_CASE("merging partitions is bit-exact") {
        const auto recs = random_records(9, 3);
        const TauGrid grid{kDt, 60};
        G2Accumulator::Options o{CorrelationKind::Cross, 0, kLen, grid, 100 * kDt, 3, 4, 1.0};
        G2Accumulator all(o), p1(o), p2(o), p3(o);
        NoiseAccumulator nall(kLen, grid, 4), n1(kLen, grid, 4), n2(kLen, grid, 4);
        for (std::size_t i = 0; i < recs.size(); ++i) {
            all.add(recs[i]);
            nall.add(recs[i]);
            (i < 3 ? p1 : i < 5 ? p2 : p3).add(recs[i]);
            (i % 2 ? n1 : n2).add(recs[i]);
        }
        p2.merge(p3);
        p1.merge(p2);
        CHECK(p1 == all);
        n2.merge(n1);
        CHECK(n2 == nall);
        CHECK(p1.records() == 9);
    }

    TEST_CASE("vacuum correlations are consistent with zero") {
        ScenarioConfig c;
        c.source_a_on = c.source_b_on = false;
        c.shots = 20 * 256;
        NoiseModel noise;
        noise.added_noise_photons_a = noise.added_noise_photons_b = 2.0;
        const TauGrid grid = default_tau_grid(c.train, noise.dt());
        NoiseAccumulator na(samples_per_record(c.train, noise.dt()), grid);
        calibration_records(noise, c.train, c.shots, 77, [&](const QuadratureRecord& r) { na.add(r); });
        const auto cal = na.finalize();
        CHECK(cal.a.N0 == doctest::Approx(3.0).epsilon(0.01));
        CHECK_FALSE(cal.cross_warning);

        std::vector<QuadratureRecord> recs;
        simulate_records(c, noise, [&](const QuadratureRecord& r) { recs.push_back(r); });
        for (auto kind : {0, 1}) {
            const auto h = kind == 0 ? g2_cross_estimate(recs, cal, grid, c.train)
                                     : g2_auto_estimate(recs, cal, grid, c.train);
            int outliers = 0;
            for (std::size_t i = 0; i < h.size(); ++i)
                if (std::abs(h.values[i]) > 4.5 * h.stderrs[i]) ++outliers;
            CHECK(outliers < int(h.size() / 100));
        }
    }

    TEST_CASE("power balance recovers the channel gain") {
        ScenarioConfig c;
        c.source_b_on = false;
        c.shots = 20000;
        NoiseModel noise;
        noise.added_noise_photons_a = noise.added_noise_photons_b = 0.0;
        noise.relative_gain = 1.3;
        const TauGrid grid{noise.dt(), 4};
        NoiseAccumulator na(samples_per_record(c.train, noise.dt()), grid);
        calibration_records(noise, c.train, c.shots, 5, [&](const QuadratureRecord& r) { na.add(r); });
        PowerBalanceAccumulator pb;
        simulate_records(c, noise, [&](const QuadratureRecord& r) { pb.add(r); });
        const auto g = pb.gain(na.finalize());
        CHECK(std::abs(g.mean - 1.3) < 4.0 * g.error);
        CHECK(g.error < 0.05);
    }
}
