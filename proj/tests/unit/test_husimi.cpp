#include "homsim/husimi.hpp"

#include <doctest.h>

#include <cmath>

using namespace homsim;

TEST_SUITE("husimi") {
    TEST_CASE("single-photon Q function moments") {
        const MultimodeState one(1, {{{1, 0, 0, 0}, 1.0}});
        HusimiSampler s(one);
        std::mt19937_64 rng(3);
        const int n = 200000;
        double m2 = 0.0, m4 = 0.0;
        cplx m1 = 0.0;
        cplx a;
        for (int i = 0; i < n; ++i) {
            s.sample(rng, std::span<cplx>(&a, 1));
            m1 += a;
            m2 += std::norm(a);
            m4 += std::norm(a) * std::norm(a);
        }
        // Antinormal moments: <a a†> = 2, <a² a†²> = 6.
        CHECK(m2 / n == doctest::Approx(2.0).epsilon(0.01));
        CHECK(m4 / n == doctest::Approx(6.0).epsilon(0.03));
        CHECK(std::abs(m1 / double(n)) < 0.01);
        CHECK(s.accepted() == s.trials());
    }

    TEST_CASE("NOON state draws reproduce antinormally ordered moments") {
        const auto noon = apply_beam_splitter(TwoModeState::basis(1, 1));
        const auto mm = MultimodeState::from_two_mode(noon, 1e-14);
        CHECK(mm.terms().size() == 2);
        CHECK(mm.max_occupation() == 2);
        HusimiSampler s(mm);
        std::mt19937_64 rng(5);
        const int n = 400000;
        double na = 0.0, nab = 0.0;
        cplx coh = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto [a, b] = sample_husimi(noon, rng);
            na += std::norm(a);
            nab += std::norm(a) * std::norm(b);
            coh += a * a * std::conj(b * b);
        }
        CHECK(na / n == doctest::Approx(2.0).epsilon(0.01));
        CHECK(nab / n == doctest::Approx(3.0).epsilon(0.02));
        CHECK(std::abs(coh / double(n) - 1.0) < 0.04);

        std::array<cplx, 2> out;
        for (int i = 0; i < n; ++i) s.sample(rng, out);
        const double rate = double(s.accepted()) / double(s.trials());
        CHECK(rate == doctest::Approx(s.analytic_acceptance()).epsilon(0.02));
    }

    TEST_CASE("product of linear combinations matches the beam-splitter output") {
        // (1 + i b_1)/sqrt 2 ... two single photons mixed on a 50:50 splitter.
        const double r = std::sqrt(0.5);
        const auto mm = MultimodeState::product_of_linear(
            2, {0.0, 0.0}, {1.0, 1.0}, {{cplx(r), cplx(0.0, r)}, {cplx(0.0, r), cplx(r)}});
        const auto noon = apply_beam_splitter(TwoModeState::basis(1, 1));
        CHECK(mm.norm() == doctest::Approx(1.0));
        for (const auto& t : mm.terms())
            CHECK(std::abs(t.amplitude - noon.amplitude(t.n[0], t.n[1])) < 1e-12);
    }

    TEST_CASE("draws depend only on the generator state") {
        const auto psi = apply_beam_splitter(prepare_input(cplx(0.0, -std::sqrt(0.5)), std::sqrt(0.5)));
        HusimiSampler s1(MultimodeState::from_two_mode(psi)), s2(MultimodeState::from_two_mode(psi));
        std::mt19937_64 g1(9), g2(9);
        std::array<cplx, 2> x, y;
        s1.sample(g1, x);  // s1 now carries history s2 lacks
        g2 = g1;
        s1.sample(g1, x);
        s2.sample(g2, y);
        CHECK(x == y);
    }
}
