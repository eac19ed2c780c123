// End-to-end acceptance run: one PASS/FAIL line per criterion at the default
// shot counts. `--only 1,4` restricts the run; exit status 1 if any fails.

#include "homsim/experiment.hpp"
#include "homsim/records_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

using namespace homsim;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct Outcome {
    bool passed = true;
    std::string detail;

    // Records one sub-check; the criterion passes only if all of them do.
    void require(bool ok, const std::string& what) {
        passed = passed && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "[x] ") + what;
    }
};

// Current resident set size in bytes.
std::size_t resident_bytes() {
    std::ifstream in("/proc/self/statm");
    std::size_t pages = 0, resident = 0;
    in >> pages >> resident;
    return resident * static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
}

// ------------------------------------------------------------------ shared runs

std::optional<G2Run> g_hom;
const G2Run& hom_run() {
    if (!g_hom) {
        const auto s = default_spec("hom-dip");
        g_hom = run_g2(s.config, s.noise, s.analysis);
    }
    return *g_hom;
}

std::optional<TomographyRun> g_noon;
const TomographyRun& noon_run() {
    if (!g_noon) {
        const auto s = default_spec("noon-tomo");
        g_noon = run_tomography(s.config, s.noise, s.analysis);
    }
    return *g_noon;
}

TwoModeState printed_noon() {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(9);
    v(2 * 3 + 0) = v(0 * 3 + 2) = std::sqrt(0.5);
    return TwoModeState::from_amplitudes(2, v);
}

// (√2|00> − i(1 − e^{iφ})|10> + (1 + e^{iφ})|01> + e^{iφ}(|20> + |02>)) / √8
TwoModeState printed_superposition(double phi) {
    const cplx e = std::polar(1.0, phi), i(0.0, 1.0);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(9);
    v(0) = std::sqrt(2.0);
    v(1 * 3 + 0) = -i * (1.0 - e);
    v(0 * 3 + 1) = 1.0 + e;
    v(2 * 3 + 0) = v(0 * 3 + 2) = e;
    return TwoModeState::from_amplitudes(2, v / std::sqrt(8.0));
}

double max_imag(const DensityMatrix& rho) { return rho.matrix().imag().cwiseAbs().maxCoeff(); }

// ------------------------------------------------------------------ criteria

Outcome hom_dip() {
    const auto& r = hom_run();
    const auto& h = r.cross_norm;
    const double tr = default_spec("hom-dip").config.train.t_r;
    Outcome o;
    double dip = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (std::abs(h.tau[i]) < 0.5 * tr) dip = std::max(dip, std::abs(h.values[i]));
    o.require(dip < 0.05, fmt("max |G2_ab| inside ±t_r/2 = %.4f (< 0.05)", dip));
    double worst = 0.0;
    int worst_n = 0;
    for (int n = -10; n <= 10; ++n) {
        if (n == 0) continue;
        const double d = std::abs(h.value_at(n * tr) - 1.0);
        if (d > worst) {
            worst = d;
            worst_n = n;
        }
    }
    o.require(worst < 0.05, fmt("max |G2_ab(n t_r) - 1| = %.4f at n = %d (< 0.05)", worst, worst_n));
    return o;
}

Outcome delay_scans() {
    const auto base = default_spec("delay-scan");
    Outcome o;
    for (double d : {50e-9, 150e-9}) {
        ScenarioConfig c = base.config;
        c.train.delta_tau = d;
        c.seed = record_seed(base.config.seed, d < 100e-9 ? 1 : 2);
        const auto r = run_g2(c, base.noise, base.analysis);
        const auto& h = r.cross_norm;
        const double tr = c.train.t_r;
        if (d < 100e-9) {
            const double z = h.value_at(0.0);
            o.require(z < 0.05, fmt("50 ns: G2_ab(0) = %.4f (< 0.05)", z));
            for (double s : {-1.0, 1.0}) {
                const double v = h.value_at(s * d), e = h.stderr_at(s * d);
                o.require(v > 3.0 * e, fmt("50 ns: G2_ab(%+.0f ns) = %.4f ± %.4f (> 3σ)", s * 50, v, e));
            }
        } else {
            for (double s : {-1.0, 1.0}) {
                const double v = h.value_at(s * d);
                o.require(std::abs(v - 0.25) < 0.05, fmt("150 ns: G2_ab(%+.0f ns) = %.4f (0.25 ± 0.05)", s * 150, v));
            }
            double sum = 0.0;
            for (int n = 1; n <= 10; ++n) sum += h.value_at(n * tr) + h.value_at(-n * tr);
            const double mean = sum / 20.0;
            o.require(std::abs(mean - 0.5) < 0.05, fmt("150 ns: mean G2_ab(n t_r) = %.4f (0.5 ± 0.05)", mean));
        }
    }
    return o;
}

Outcome autocorrelation() {
    const auto& r = hom_run();
    const double tr = default_spec("hom-dip").config.train.t_r;
    Outcome o;
    const double a0 = r.autocorr_norm.value_at(0.0);
    o.require(std::abs(a0 - 1.0) < 0.1, fmt("HOM G2_aa(0) = %.4f (1 ± 0.1)", a0));
    double worst = 0.0;
    for (int n = -10; n <= 10; ++n)
        if (n != 0) worst = std::max(worst, std::abs(r.autocorr_norm.value_at(n * tr) - 1.0));
    o.require(worst < 0.1, fmt("max |G2_aa(n t_r) - 1| = %.4f (< 0.1)", worst));

    const auto s = default_spec("single-source");
    const auto single = run_g2(s.config, s.noise, s.analysis);
    const double s0 = single.autocorr_norm.value_at(0.0);
    o.require(s0 < 0.05, fmt("single source G2_aa(0) = %.4f (< 0.05)", s0));
    return o;
}

Outcome noon_moments() {
    const auto& m = noon_run().moments;
    Outcome o;
    for (MomentIndex i : {MomentIndex{1, 1, 0, 0}, {0, 0, 1, 1}, {2, 2, 0, 0}, {0, 0, 2, 2}, {0, 2, 2, 0}}) {
        const cplx v = m.value(i);
        o.require(std::abs(v - 1.0) < 0.1,
                  fmt("%s = %.3f%+.3fi ± %.3f", to_string(i).c_str(), v.real(), v.imag(), m.error(i)));
    }
    const cplx c = m.value({1, 1, 1, 1});
    o.require(std::abs(c) < 0.05, fmt("<a†a b†b> = %.3f ± %.3f (0 ± 0.05)", c.real(), m.error({1, 1, 1, 1})));
    int bad = 0, total = 0;
    double worst = 0.0;
    for (const auto& [i, e] : m.entries()) {
        const int ord = i.order();
        if (ord == 0 || (ord % 2 == 0 && ord <= 4)) continue;
        ++total;
        const double z = e.stderr_value > 0.0 ? std::abs(e.value) / e.stderr_value : std::abs(e.value) > 0.0 ? INFINITY : 0.0;
        worst = std::max(worst, z);
        if (z > 4.0) ++bad;
    }
    o.require(bad == 0, fmt("odd or order >= 5: %d of %d beyond 4σ (worst %.2fσ)", bad, total, worst));
    return o;
}

Outcome mle_recovery() {
    Outcome o;
    const auto ideal = printed_noon();
    const auto fit = mle_fit(MomentSet::from_state(DensityMatrix::pure(ideal)));
    const double f = fidelity(fit.rho, ideal), n = negativity(fit.rho);
    o.require(fit.converged, fmt("exact moments: converged after %d iterations", fit.iterations));
    o.require(f > 0.999, fmt("exact moments: fidelity %.6f (> 0.999)", f));
    o.require(std::abs(n - 0.5) < 0.005, fmt("exact moments: negativity %.5f (0.5 ± 0.005)", n));

    const auto& r = noon_run();
    const double td = trace_distance(r.mle.rho, DensityMatrix::pure(ideal));
    o.require(td <= 0.05, fmt("n̄ = 10 pipeline: trace distance %.4f (<= 0.05)", td));
    const double im = max_imag(r.mle.rho);
    o.require(im <= 0.02, fmt("n̄ = 10 pipeline: max |Im rho| %.4f (<= 0.02)", im));
    return o;
}

Outcome superposition() {
    Outcome o;
    const auto target = printed_superposition(0.0);
    auto s = default_spec("noon-tomo");
    s.config.beta_a = cplx(0.0, -std::sqrt(0.5));
    s.config.beta_b = std::sqrt(0.5);
    s.config.phi = 0.0;
    s.config.seed = 2;
    const auto noisy = run_tomography(s.config, s.noise, s.analysis);
    const double fn = fidelity(noisy.mle.rho, target);
    o.require(fn >= 0.95, fmt("n̄ = 10 pipeline: fidelity %.4f (>= 0.95)", fn));

    const auto exact = with_cutoff(apply_beam_splitter(s.config.input_state(), s.config.splitter), 2, 1e-9);
    const auto fit = mle_fit(MomentSet::from_state(DensityMatrix::pure(exact)));
    const double fa = fidelity(fit.rho, target);
    o.require(fa >= 0.999, fmt("noiseless analytic: fidelity %.6f (>= 0.999)", fa));
    return o;
}

Outcome phase_sweep() {
    const auto s = default_spec("phase-sweep");
    std::vector<double> phases;
    for (int d = 0; d < 360; d += 30) phases.push_back(d * kPi / 180.0);
    const MomentSet noise = noise_mode_moments(s.config, s.noise, s.analysis);
    std::vector<double> ya, yb, ea, eb;
    double flat = 0.0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        ScenarioConfig c = s.config;
        c.phi = phases[i];
        c.seed = record_seed(s.config.seed, 2 * i);
        const auto p = run_powers(c, s.noise, s.analysis, noise);
        ya.push_back(p.na.mean);
        yb.push_back(p.nb.mean);
        ea.push_back(p.na.error);
        eb.push_back(p.nb.error);
        c.source_a_on = false;
        c.seed = record_seed(s.config.seed, 2 * i + 1);
        const auto q = run_powers(c, s.noise, s.analysis, noise);
        flat = std::max({flat, std::abs(q.na.mean - 0.25), std::abs(q.nb.mean - 0.25)});
    }
    const auto fa = fit_sinusoid(phases, ya, ea), fb = fit_sinusoid(phases, yb, eb);
    Outcome o;
    o.require(std::abs(fa.c0 - 0.5) < 0.02, fmt("a: c0 = %.4f ± %.4f (0.50 ± 0.02)", fa.c0, fa.c0_err));
    o.require(std::abs(fa.c1 - 0.25) < 0.02, fmt("a: c1 = %.4f ± %.4f (0.25 ± 0.02)", fa.c1, fa.c1_err));
    o.require(std::abs(fb.c0 - 0.5) < 0.02 && std::abs(fb.c1 - 0.25) < 0.02,
              fmt("b: c0 = %.4f, c1 = %.4f", fb.c0, fb.c1));
    const double dphi = std::remainder(fb.phi0 - fa.phi0 - kPi, 2.0 * kPi);
    o.require(std::abs(dphi) < 0.2, fmt("b - a phase offset - pi = %.3f rad (|.| < 0.2)", dphi));
    o.require(flat < 0.02, fmt("single source: max |n - 0.25| = %.4f (< 0.02)", flat));
    return o;
}

Outcome overlap_law() {
    Outcome o;
    const double kappa = kappa_from_linewidth(4.35e6);
    double worst_closed = 0.0, worst_quad = 0.0;
    for (double d = 0.0; d <= 150e-9 + 1e-12; d += 10e-9) {
        const TemporalMode a{kappa, 0.0, 0.0}, b{kappa, d, 0.0};
        const double law = 0.5 * (1.0 - std::exp(-kappa * d));
        worst_closed = std::max(worst_closed, std::abs(0.5 * (1.0 - std::norm(mode_overlap_closed_form(a, b))) - law));
        worst_quad = std::max(worst_quad, std::abs(coincidence_probability(a, b) - law));
    }
    o.require(worst_closed < 1e-6 && worst_quad < 1e-6,
              fmt("closed form %.1e, quadrature %.1e from the law (< 1e-6)", worst_closed, worst_quad));

    auto s = default_spec("hom-dip");
    s.config.train.kappa_a = s.config.train.kappa_b = kappa;
    s.config.shots = 200000;
    s.noise.filter = FilterSpec::none(s.noise.dt());
    int k = 0;
    for (double d : {0.0, 50e-9, 100e-9, 150e-9}) {
        ScenarioConfig c = s.config;
        c.train.delta_tau = d;
        c.seed = record_seed(s.config.seed, 100 + k++);
        const auto m = run_mode_coincidence(c, s.noise, s.analysis);
        const double law = 0.5 * (1.0 - std::exp(-kappa * d));
        const double z = (m.nab.mean - law) / m.nab.error;
        o.require(std::abs(z) < 3.0,
                  fmt("%.0f ns: P11 = %.4f ± %.4f vs %.4f (%.1fσ)", d * 1e9, m.nab.mean, m.nab.error, law, z));
    }
    return o;
}

// Normally ordered moments of a product of coherent or thermal modes.
cplx closed_form(const MomentIndex& i, bool thermal, cplx a, cplx b, double na, double nb) {
    auto one = [&](int p, int q, cplx alpha, double n) -> cplx {
        if (!thermal) return std::pow(std::conj(alpha), p) * std::pow(alpha, q);
        return p == q ? std::tgamma(p + 1.0) * std::pow(n, p) : 0.0;
    };
    return one(i.n, i.m, a, na) * one(i.k, i.l, b, nb);
}

Outcome deconvolution_oracle() {
    Outcome o;
    const double nbar = 2.0;
    const int samples = 1000000, batches = kDefaultBatches;
    const cplx alpha_a(0.8, 0.3), alpha_b(0.0, -0.5);
    const double th_a = 0.7, th_b = 0.3;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    auto gauss = [&](double power) { return cplx(g(rng), g(rng)) * std::sqrt(0.5 * power); };

    // Heterodyne noise: vacuum plus n̄ added photons per channel.
    MomentAccumulator cal(batches);
    for (int i = 0; i < samples; ++i) cal.add(gauss(1.0 + nbar), gauss(1.0 + nbar), i);
    const MomentSet noise = cal.finalize();

    for (bool thermal : {false, true}) {
        MomentAccumulator acc(batches);
        for (int i = 0; i < samples; ++i) {
            // Sample of the P function plus the heterodyne noise.
            const cplx pa = thermal ? gauss(th_a) : alpha_a, pb = thermal ? gauss(th_b) : alpha_b;
            acc.add(pa + gauss(1.0 + nbar), pb + gauss(1.0 + nbar), i);
        }
        const MomentSet m = deconvolve_noise(acc.finalize(), noise);
        int bad = 0, total = 0;
        double worst = 0.0;
        std::string worst_idx;
        for (const auto& idx : MomentSet::all_indices()) {
            if (idx.order() == 0 || idx.order() > 4) continue;
            ++total;
            const cplx expect = closed_form(idx, thermal, alpha_a, alpha_b, th_a, th_b);
            const double z = std::abs(m.value(idx) - expect) / m.error(idx);
            if (z > worst) {
                worst = z;
                worst_idx = to_string(idx);
            }
            if (z > 3.0) ++bad;
        }
        o.require(bad == 0, fmt("%s: %d of %d moments beyond 3σ (worst %.2fσ at %s)", thermal ? "thermal" : "coherent",
                                bad, total, worst, worst_idx.c_str()));
    }
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome engineering() {
    Outcome o;
    // Bit-identical bundles from the same seed, with different worker counts.
    const auto dir = fs::temp_directory_path() / ("homsim_acceptance_" + std::to_string(::getpid()));
    auto s = default_spec("hom-dip");
    s.config.shots = 10000;
    s.output_dir = (dir / "one").string();
    s.analysis.workers = 1;
    const auto b1 = run_scenario(s);
    s.output_dir = (dir / "two").string();
    s.analysis.workers = 4;
    const auto b2 = run_scenario(s);
    bool same = b1.files == b2.files && !b1.files.empty();
    for (const auto& f : b1.files) same = same && slurp(dir / "one" / f) == slurp(dir / "two" / f);
    o.require(same, fmt("same seed: %zu data files bit-identical (1 vs 4 workers)", b1.files.size()));
    fs::remove_all(dir);

    // Partitioned accumulation in different groupings equals a single pass.
    ScenarioConfig c = s.config;
    c.shots = 20 * 24;
    const NoiseModel noise = s.noise;
    const TauGrid grid = default_tau_grid(c.train, noise.dt());
    const auto opt = g2_options(c, noise, s.analysis);
    RecordSimulator sim(c, noise);
    G2Accumulator single(opt), p1(opt), p2(opt), p3(opt);
    NoiseAccumulator nsingle(sim.samples_per_record(), grid), n1(sim.samples_per_record(), grid),
        n2(sim.samples_per_record(), grid);
    for (std::uint64_t r = 0; r < sim.record_count(); ++r) {
        const auto rec = sim.record(r);
        single.add(rec);
        nsingle.add(rec);
        (r < 7 ? p1 : r < 15 ? p2 : p3).add(rec);
        (r % 2 ? n1 : n2).add(rec);
    }
    G2Accumulator left = p1, right = p2;
    left.merge(p2);
    left.merge(p3);    // (p1 + p2) + p3
    right.merge(p3);
    G2Accumulator alt = p1;
    alt.merge(right);  // p1 + (p2 + p3)
    n2.merge(n1);
    o.require(left == single && alt == single && n2 == nsingle,
              "partitioned G2 and noise sums equal the single pass in every grouping");

    // One pass over >= 1e8 samples per channel; memory must stay flat.
    ScenarioConfig big = calibration_scenario(c.train, 0, 11);
    const std::uint64_t per = samples_per_record(c.train, noise.dt());
    const std::uint64_t records = (100000000 + per - 1) / per;
    big.shots = records * static_cast<std::uint64_t>(c.train.pulses_per_sequence);
    RecordSimulator bsim(big, noise);
    G2Accumulator acc(opt);
    NoiseAccumulator nacc(per, grid);
    const std::size_t rss0 = resident_bytes();
    std::size_t peak = rss0, mid = 0;
    for (std::uint64_t r = 0; r < records; ++r) {
        const auto rec = bsim.record(r);
        acc.add(rec);
        nacc.add(rec);
        if (r % 256 == 0) peak = std::max(peak, resident_bytes());
        if (r == records / 2) mid = resident_bytes();
    }
    peak = std::max(peak, resident_bytes());
    const double growth = double(peak - rss0) / (1 << 20), late = double(peak > mid ? peak - mid : 0) / (1 << 20);
    const double raw_mb = double(records * per) * 2 * sizeof(std::complex<float>) / (1 << 20);
    const auto h = acc.finalize(nacc.finalize());
    o.require(records * per >= 100000000 && growth < 64.0 && late < 4.0 && h.size() == grid.size(),
              fmt("%llu samples/channel in one pass: RSS growth %.1f MiB (second half %.1f MiB) vs %.0f MiB of samples",
                  static_cast<unsigned long long>(records * per), growth, late, raw_mb));
    return o;
}

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria at default shot counts"};
    std::vector<int> only;
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all = {
        {1, "HOM dip at zero delay", hom_dip},
        {2, "delay scans at 50 ns and 150 ns", delay_scans},
        {3, "auto-correlation, HOM and single source", autocorrelation},
        {4, "NOON moments with 10 noise photons", noon_moments},
        {5, "maximum-likelihood recovery", mle_recovery},
        {6, "superposition tomography", superposition},
        {7, "phase sweep of output powers", phase_sweep},
        {8, "overlap law", overlap_law},
        {9, "noise deconvolution oracle", deconvolution_oracle},
        {10, "reproducibility, merging and bounded memory", engineering},
    };
    const std::set<int> selected(only.begin(), only.end());
    int failed = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.passed) ++failed;
        std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.title << "  [" << o.detail
                  << "]  (" << fmt("%.0f s", secs) << ")" << std::endl;
    }
    return failed ? 1 : 0;
}
