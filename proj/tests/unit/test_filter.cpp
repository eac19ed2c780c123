#include "homsim/filter.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace homsim;

TEST_SUITE("filter") {
    TEST_CASE("taps are symmetric with unit DC gain and -3 dB at half the bandwidth") {
        const FilterSpec f;
        const auto h = f.impulse_response();
        REQUIRE(h.size() == 101);
        CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(h[h.size() - 1 - i]));
        CHECK(f.magnitude_response(0.0) == doctest::Approx(1.0));
        CHECK(f.magnitude_response(10e6) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
        CHECK(f.magnitude_response(60e6) < 0.05);
        CHECK(f.tap_autocorrelation(0) == doctest::Approx(f.noise_power_gain()));
        CHECK(f.tap_autocorrelation(3) == doctest::Approx(f.tap_autocorrelation(-3)));
    }

    TEST_CASE("disabled filter and validation") {
        const auto off = FilterSpec::none(2e-9);
        CHECK(off.impulse_response() == std::vector<double>{1.0});
        CHECK(off.noise_power_gain() == 1.0);
        CHECK_THROWS_AS((FilterSpec{300e6, 2e-9, 101}.validate()), UndersampledInput);
        CHECK_THROWS_AS((FilterSpec{20e6, 2e-9, 100}.validate()), std::invalid_argument);
    }

    TEST_CASE("FFT filter equals direct convolution") {
        const FilterSpec f;
        const auto h = f.impulse_response();
        const int half = int(h.size()) / 2;
        std::mt19937_64 rng(7);
        std::normal_distribution<double> n;
        std::vector<std::complex<double>> x(700);
        for (auto& v : x) v = {n(rng), n(rng)};
        std::vector<std::complex<double>> ref(x.size());
        for (int i = 0; i < int(x.size()); ++i)
            for (int k = -half; k <= half; ++k) {
                const int j = i - k;
                if (j >= 0 && j < int(x.size())) ref[i] += h[k + half] * x[j];
            }
        const auto direct = apply_detection_filter(std::span<const std::complex<double>>(x), f, 2e-9);
        auto fast = x;
        RecordFilter(f, x.size()).apply(fast);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(std::abs(direct[i] - ref[i]) < 1e-12);
            CHECK(std::abs(fast[i] - ref[i]) < 1e-10);
        }
    }

    TEST_CASE("filtered white noise power") {
        const FilterSpec f;
        std::mt19937_64 rng(11);
        std::normal_distribution<double> n;
        std::vector<std::complex<double>> x(1 << 16);
        for (auto& v : x) v = {n(rng), n(rng)};
        RecordFilter(f, x.size()).apply(x);
        double p = 0.0;
        for (std::size_t i = 200; i < x.size() - 200; ++i) p += std::norm(x[i]);
        p /= double(x.size() - 400);
        CHECK(p == doctest::Approx(2.0 * f.noise_power_gain()).epsilon(0.03));
    }
}
