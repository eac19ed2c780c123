#include "homsim/fockspace.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

using namespace homsim;

namespace {

// Independent oracle: exp(iθ(a†b + b†a)) built from ladder operators in a
// larger truncated space, restricted to the first (c+1)² basis states.
Eigen::MatrixXcd ladder_unitary(int cutoff, double theta) {
    const int big = 2 * cutoff + 2, d1 = big + 1;
    Eigen::MatrixXcd a1 = Eigen::MatrixXcd::Zero(d1, d1);
    for (int n = 1; n <= big; ++n) a1(n - 1, n) = std::sqrt(double(n));
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d1, d1);
    Eigen::MatrixXcd a(d1 * d1, d1 * d1), b(d1 * d1, d1 * d1);
    for (int i = 0; i < d1; ++i)
        for (int j = 0; j < d1; ++j) {
            a.block(i * d1, j * d1, d1, d1) = a1(i, j) * id;
            b.block(i * d1, j * d1, d1, d1) = id(i, j) * a1;
        }
    const Eigen::MatrixXcd g = a.adjoint() * b + b.adjoint() * a;
    const Eigen::MatrixXcd u = (cplx(0.0, theta) * g).exp();
    const int d = cutoff + 1;
    Eigen::MatrixXcd out(d * d, d * d);
    for (int r = 0; r < d * d; ++r)
        for (int c = 0; c < d * d; ++c) out(r, c) = u((r / d) * d1 + r % d, (c / d) * d1 + c % d);
    return out;
}

}  // namespace

TEST_SUITE("fockspace") {
    TEST_CASE("two single photons coalesce into a NOON state") {
        const auto out = apply_beam_splitter(TwoModeState::basis(1, 1));
        CHECK(std::abs(out.amplitude(1, 1)) < 1e-14);
        CHECK(std::norm(out.amplitude(2, 0)) == doctest::Approx(0.5));
        CHECK(std::norm(out.amplitude(0, 2)) == doctest::Approx(0.5));
        // Symmetric convention: i(|20> + |02>)/sqrt 2
        CHECK(std::abs(out.amplitude(2, 0) - cplx(0.0, std::sqrt(0.5))) < 1e-14);
        CHECK(std::abs(out.amplitude(0, 2) - out.amplitude(2, 0)) < 1e-14);
    }

    TEST_CASE("beam splitter matches the ladder-operator exponential") {
        for (int cutoff : {2, 3}) {
            const Eigen::MatrixXcd u = beam_splitter_matrix(cutoff);
            const Eigen::MatrixXcd oracle = ladder_unitary(cutoff, std::numbers::pi / 4.0);
            const int d = cutoff + 1;
            for (int na = 0; na <= cutoff; ++na)
                for (int nb = 0; na + nb <= cutoff; ++nb) {
                    const int col = na * d + nb;
                    CHECK((u.col(col) - oracle.col(col)).norm() < 1e-10);
                }
        }
    }

    TEST_CASE("beam splitter is unitary on closed sectors and conserves photons") {
        const int c = 3;
        const Eigen::MatrixXcd u = beam_splitter_matrix(c);
        std::vector<int> keep;
        for (int na = 0; na <= c; ++na)
            for (int nb = 0; na + nb <= c; ++nb) keep.push_back(na * (c + 1) + nb);
        Eigen::MatrixXcd s(keep.size(), keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i)
            for (std::size_t j = 0; j < keep.size(); ++j) s(i, j) = u(keep[i], keep[j]);
        CHECK((s.adjoint() * s - Eigen::MatrixXcd::Identity(s.rows(), s.cols())).norm() < 1e-12);

        BeamSplitterConfig rt{0.3, PhaseConvention::RealAntisymmetric};
        const auto psi = apply_beam_splitter(prepare_input(0.6, cplx(0.0, 0.8)), rt);
        const auto moments = [&](const TwoModeState& x) {
            return (moment_expectation(x, {1, 1, 0, 0}) + moment_expectation(x, {0, 0, 1, 1})).real();
        };
        CHECK(moments(psi) == doctest::Approx(moments(prepare_input(0.6, cplx(0.0, 0.8)))));
    }

    TEST_CASE("cutoff overflow is reported") {
        CHECK_THROWS_AS(apply_beam_splitter(TwoModeState::basis(1, 1, 1)), CutoffOverflow);
        CHECK_THROWS_AS(with_cutoff(apply_beam_splitter(TwoModeState::basis(1, 1)), 1), CutoffOverflow);
        CHECK_THROWS_AS(prepare_input(1.2, 0.0), std::domain_error);
        CHECK_THROWS(TwoModeState::basis(4, 0, 3));
    }

    TEST_CASE("negativity by brute-force partial transpose") {
        const auto noon = apply_beam_splitter(TwoModeState::basis(1, 1));
        const auto rho = DensityMatrix::pure(noon);
        // Oracle: explicit index swap of the a subsystem.
        const int d = rho.cutoff() + 1;
        Eigen::MatrixXcd pt(d * d, d * d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l) pt(i * d + j, k * d + l) = rho.matrix()(k * d + j, i * d + l);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pt);
        double neg = 0.0;
        for (int i = 0; i < es.eigenvalues().size(); ++i) neg += std::max(0.0, -es.eigenvalues()(i));
        CHECK(neg == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(negativity(rho) == doctest::Approx(neg).epsilon(1e-12));
        CHECK(negativity(DensityMatrix::pure(TwoModeState::basis(1, 1))) == doctest::Approx(0.0));
        CHECK(negativity(DensityMatrix::maximally_mixed(2)) == doctest::Approx(0.0));
    }

    TEST_CASE("fidelity and trace distance") {
        const auto noon = apply_beam_splitter(TwoModeState::basis(1, 1));
        const auto rho = DensityMatrix::pure(noon);
        CHECK(fidelity(rho, noon) == doctest::Approx(1.0));
        CHECK(trace_distance(rho, rho) == doctest::Approx(0.0));
        // Equal mixture of |20> and |02>: fidelity 1/2, trace distance 1/2.
        Eigen::MatrixXcd mix = Eigen::MatrixXcd::Zero(rho.dim(), rho.dim());
        mix(rho.index(2, 0), rho.index(2, 0)) = 0.5;
        mix(rho.index(0, 2), rho.index(0, 2)) = 0.5;
        const auto m = DensityMatrix::from_matrix(rho.cutoff(), mix);
        CHECK(fidelity(m, noon) == doctest::Approx(0.5));
        CHECK(trace_distance(m, rho) == doctest::Approx(0.5));
        CHECK(negativity(m) == doctest::Approx(0.0));
    }

    TEST_CASE("moments of the NOON state") {
        const auto noon = apply_beam_splitter(TwoModeState::basis(1, 1));
        CHECK(moment_expectation(noon, {1, 1, 0, 0}).real() == doctest::Approx(1.0));
        CHECK(moment_expectation(noon, {2, 2, 0, 0}).real() == doctest::Approx(1.0));
        CHECK(std::abs(moment_expectation(noon, {1, 1, 1, 1})) < 1e-14);
        CHECK(std::abs(moment_expectation(noon, {0, 2, 2, 0})) == doctest::Approx(1.0));
        CHECK(std::abs(moment_expectation(noon, {1, 0, 0, 0})) < 1e-14);
        // Coherent-like input: <a> = beta (1 - |beta|^2)^(1/2) for (sqrt(1-|b|²)|0> + b|1>)
        const auto in = prepare_input(0.6, 0.0);
        CHECK(moment_expectation(in, {0, 1, 0, 0}).real() == doctest::Approx(0.6 * 0.8));
        CHECK_THROWS_AS(moment_expectation(noon, {4, 4, 0, 0}), std::out_of_range);
    }

    TEST_CASE("density matrix validation and JSON round trip") {
        Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(4, 4);
        CHECK_THROWS_AS(DensityMatrix::from_matrix(1, bad), std::invalid_argument);
        const auto rho = DensityMatrix::pure(apply_beam_splitter(prepare_input(cplx(0, -std::sqrt(0.5)), std::sqrt(0.5))));
        const auto back = density_matrix_from_json(to_json(rho));
        CHECK((back.matrix() - rho.matrix()).norm() < 1e-15);
        const auto psi = apply_beam_splitter(TwoModeState::basis(1, 1));
        CHECK((state_from_json(to_json(psi)).amplitudes() - psi.amplitudes()).norm() < 1e-15);
        CHECK(phase_convention_from_string(to_string(PhaseConvention::RealAntisymmetric)) ==
              PhaseConvention::RealAntisymmetric);
    }

    TEST_CASE("local phase rotation leaves populations unchanged") {
        const auto rho = DensityMatrix::pure(apply_beam_splitter(TwoModeState::basis(1, 1)));
        const auto r = local_phase_rotation(rho, 0.7);
        for (int i = 0; i < rho.dim(); ++i) CHECK(std::abs(r(i, i) - rho(i, i)) < 1e-14);
        CHECK(negativity(r) == doctest::Approx(0.5));
    }
}
