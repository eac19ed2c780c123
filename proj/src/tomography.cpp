#include "homsim/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace homsim {

namespace {

constexpr int flat(int n, int m, int k, int l) { return ((n * 3 + m) * 3 + k) * 3 + l; }
constexpr int flat(const MomentIndex& i) { return flat(i.n, i.m, i.k, i.l); }

// Products conj(a)^n a^m conj(b)^k b^l for all exponents <= 2.
void products(cplx a, cplx b, std::array<cplx, 81>& out) {
    const cplx ca = std::conj(a), cb = std::conj(b);
    const cplx pa[3][3] = {{1.0, a, a * a}, {ca, ca * a, ca * a * a}, {ca * ca, ca * ca * a, ca * ca * a * a}};
    const cplx pb[3][3] = {{1.0, b, b * b}, {cb, cb * b, cb * b * b}, {cb * cb, cb * cb * b, cb * cb * b * b}};
    for (int n = 0; n < 3; ++n)
        for (int m = 0; m < 3; ++m)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) out[flat(n, m, k, l)] = pa[n][m] * pb[k][l];
}

double binom(int n, int k) {
    static const double t[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
    return t[n][k];
}

}  // namespace

// --------------------------------------------------------- matched filter

MatchedFilter::MatchedFilter(const PulseTrainConfig& train, const TemporalMode& mode, double dt) : dt_(dt) {
    train.validate();
    mode.validate();
    for (int p = 0; p < train.pulses_per_sequence; ++p) {
        TemporalMode m = mode;
        m.t0 += p * train.t_r;
        modes_.push_back(sample_pulse_mode(train, m, p, dt));
    }
}

std::pair<cplx, cplx> MatchedFilter::project(const QuadratureRecord& rec, int pulse) const {
    if (pulse < 0 || pulse >= pulses()) throw std::out_of_range("pulse index outside the record");
    if (std::abs(rec.dt - dt_) > 1e-12 * dt_) throw std::invalid_argument("record dt differs from the filter's");
    const auto& e = modes_[static_cast<std::size_t>(pulse)];
    if (e.offset + e.values.size() > rec.size()) throw std::out_of_range("matched-filter window overruns the record");
    cplx sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < e.values.size(); ++i) {
        const cplx w = std::conj(e.values[i]);
        sa += w * cplx(rec.samples_a[e.offset + i]);
        sb += w * cplx(rec.samples_b[e.offset + i]);
    }
    // Σ ξ* s dt has vacuum variance dt * vacuum_unit.
    const double scale = std::sqrt(rec.dt / rec.vacuum_unit);
    return {sa * scale, sb * scale};
}

std::pair<cplx, cplx> matched_filter(const QuadratureRecord& rec, const TemporalMode& mode, int pulse,
                                     const PulseTrainConfig& train) {
    TemporalMode rel = mode;
    rel.t0 -= pulse * train.t_r;
    return MatchedFilter(train, rel, rec.dt).project(rec, pulse);
}

// ---------------------------------------------------------- raw moments

MomentAccumulator::MomentAccumulator(int batches) {
    if (batches < 1) throw std::invalid_argument("batch count must be >= 1");
    batches_.resize(static_cast<std::size_t>(batches));
}

void MomentAccumulator::add_sums(const std::array<cplx, 81>& s, std::uint64_t n, std::uint64_t batch) {
    auto& b = batches_[batch % batches_.size()];
    for (int i = 0; i < 81; ++i) b.sum[i].add(s[i]);
    b.n += n;
}

void MomentAccumulator::add(cplx sa, cplx sb, std::uint64_t batch) {
    std::array<cplx, 81> p;
    products(sa, sb, p);
    add_sums(p, 1, batch);
}

void MomentAccumulator::add_record(const QuadratureRecord& rec, const MatchedFilter& mf, bool all_pulses) {
    const int pulses = all_pulses ? mf.pulses() : std::min(rec.active_pulses, mf.pulses());
    std::array<cplx, 81> s{}, p;
    for (int q = 0; q < pulses; ++q) {
        const auto [a, b] = mf.project(rec, q);
        products(a, b, p);
        for (int i = 0; i < 81; ++i) s[i] += p[i];
    }
    add_sums(s, static_cast<std::uint64_t>(std::max(0, pulses)), rec.shot_id);
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
    if (o.batches_.size() != batches_.size()) throw std::invalid_argument("batch count mismatch");
    for (std::size_t i = 0; i < batches_.size(); ++i) {
        batches_[i].n += o.batches_[i].n;
        for (int k = 0; k < 81; ++k) batches_[i].sum[k].merge(o.batches_[i].sum[k]);
    }
}

std::uint64_t MomentAccumulator::count() const {
    std::uint64_t n = 0;
    for (const auto& b : batches_) n += b.n;
    return n;
}

MomentSet MomentAccumulator::finalize() const {
    const std::uint64_t n = count();
    if (n == 0) throw std::runtime_error("no amplitudes accumulated");
    MomentSet out;
    const auto idx = MomentSet::all_indices();
    for (int i = 0; i < 81; ++i) {
        ComplexFixedSum t;
        std::vector<cplx> per;
        std::vector<double> re, im;
        for (const auto& b : batches_) {
            t.merge(b.sum[i]);
            if (b.n == 0) continue;
            const cplx v = b.sum[i].value() / double(b.n);
            per.push_back(v);
            re.push_back(v.real());
            im.push_back(v.imag());
        }
        const cplx v = idx[i].order() == 0 ? cplx(1.0) : t.value() / double(n);
        const double e = std::hypot(batch_stat(re).error, batch_stat(im).error);
        out.set(idx[i], v, e, std::move(per));
    }
    return out;
}

MomentSet accumulate_raw_moments(const std::vector<std::pair<cplx, cplx>>& amplitudes, int batches) {
    MomentAccumulator acc(batches);
    for (std::size_t i = 0; i < amplitudes.size(); ++i) acc.add(amplitudes[i].first, amplitudes[i].second, i);
    return acc.finalize();
}

// ------------------------------------------------------------ histogram

Histogram4D::Histogram4D(int bins, double half_range) {
    if (bins < 1) throw std::invalid_argument("histogram needs at least one bin per axis");
    if (!(half_range > 0.0)) throw std::invalid_argument("histogram range must be positive");
    if (bins > 128) throw std::invalid_argument("at most 128 bins per axis");
    edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) edges[i] = -half_range + 2.0 * half_range * i / bins;
    counts.assign(static_cast<std::size_t>(bins) * bins * bins * bins, 0);
}

void Histogram4D::add(cplx sa, cplx sb, OutOfRange policy) {
    const double v[4] = {sa.real(), sa.imag(), sb.real(), sb.imag()};
    const int n = bins();
    const double lo = edges.front(), w = (edges.back() - edges.front()) / n;
    std::size_t flat_index = 0;
    bool clamp = false;
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite amplitude");
        int i = static_cast<int>(std::floor((x - lo) / w));
        if (i < 0 || i >= n) {
            if (policy == OutOfRange::Error) throw std::out_of_range("amplitude outside the histogram range");
            i = std::clamp(i, 0, n - 1);
            clamp = true;
        }
        flat_index = flat_index * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
    }
    ++counts[flat_index];
    ++total;
    if (clamp) ++clamped;
}

void Histogram4D::merge(const Histogram4D& o) {
    if (o.edges != edges) throw std::invalid_argument("histogram edges differ");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    total += o.total;
    clamped += o.clamped;
}

std::vector<std::uint64_t> Histogram4D::marginal(int axis) const {
    if (axis < 0 || axis > 3) throw std::out_of_range("axis must be 0..3");
    const std::size_t n = static_cast<std::size_t>(bins());
    std::size_t stride = 1;
    for (int a = 3; a > axis; --a) stride *= n;
    std::vector<std::uint64_t> out(n, 0);
    for (std::size_t i = 0; i < counts.size(); ++i) out[(i / stride) % n] += counts[i];
    return out;
}

MomentSet Histogram4D::moments() const {
    if (total == 0) throw std::runtime_error("empty histogram");
    const std::size_t n = static_cast<std::size_t>(bins());
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = 0.5 * (edges[i] + edges[i + 1]);
    const std::size_t plane = n * n;
    // Channel-b sums for each channel-a cell: Σ_b counts * conj(b)^k b^l.
    std::vector<std::array<cplx, 9>> inner(plane);
    std::vector<std::array<cplx, 9>> fb(plane);
    for (std::size_t i = 0; i < plane; ++i) {
        const cplx b(c[i / n], c[i % n]), cb = std::conj(b);
        const cplx pc[3] = {1.0, cb, cb * cb}, pv[3] = {1.0, b, b * b};
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) fb[i][k * 3 + l] = pc[k] * pv[l];
    }
    for (std::size_t ia = 0; ia < plane; ++ia) {
        std::array<cplx, 9> s{};
        const std::uint32_t* row = &counts[ia * plane];
        for (std::size_t ib = 0; ib < plane; ++ib) {
            if (row[ib] == 0) continue;
            const double w = row[ib];
            for (int q = 0; q < 9; ++q) s[q] += w * fb[ib][q];
        }
        inner[ia] = s;
    }
    std::array<cplx, 81> sum{};
    for (std::size_t ia = 0; ia < plane; ++ia) {
        const cplx a(c[ia / n], c[ia % n]), ca = std::conj(a);
        const cplx pc[3] = {1.0, ca, ca * ca}, pv[3] = {1.0, a, a * a};
        for (int nn = 0; nn < 3; ++nn)
            for (int m = 0; m < 3; ++m)
                for (int q = 0; q < 9; ++q) sum[(nn * 3 + m) * 9 + q] += pc[nn] * pv[m] * inner[ia][q];
    }
    MomentSet out;
    const auto idx = MomentSet::all_indices();
    for (int i = 0; i < 81; ++i) out.set(idx[i], sum[i] / double(total));
    return out;
}

Histogram4D build_histogram4(const std::vector<std::pair<cplx, cplx>>& amplitudes, int bins, double half_range,
                             OutOfRange policy) {
    Histogram4D h(bins, half_range);
    for (const auto& [a, b] : amplitudes) h.add(a, b, policy);
    return h;
}

// --------------------------------------------------------- deconvolution

namespace {

// One deconvolution pass on plain values.
std::array<cplx, 81> invert(const std::array<cplx, 81>& raw, const std::array<cplx, 81>& noise) {
    std::array<cplx, 81> sig{};
    // Increasing total order guarantees all lower-order signal moments are known.
    auto idx = MomentSet::all_indices();
    std::stable_sort(idx.begin(), idx.end(), [](const MomentIndex& x, const MomentIndex& y) { return x.order() < y.order(); });
    for (const auto& t : idx) {
        cplx acc = raw[flat(t)];
        for (int i = 0; i <= t.n; ++i)
            for (int j = 0; j <= t.m; ++j)
                for (int p = 0; p <= t.k; ++p)
                    for (int q = 0; q <= t.l; ++q) {
                        if (i == t.n && j == t.m && p == t.k && q == t.l) continue;
                        const double c = binom(t.n, i) * binom(t.m, j) * binom(t.k, p) * binom(t.l, q);
                        acc -= c * sig[flat(i, j, p, q)] * noise[flat(t.n - i, t.m - j, 0, 0)] *
                               noise[flat(0, 0, t.k - p, t.l - q)];
                    }
        sig[flat(t)] = acc;  // noise (0,0,0,0) = 1
    }
    return sig;
}

std::array<cplx, 81> values_of(const MomentSet& m) {
    std::array<cplx, 81> v{};
    const auto idx = MomentSet::all_indices();
    for (int i = 0; i < 81; ++i) {
        if (!m.contains(idx[i])) throw std::invalid_argument("missing moment order: " + to_string(idx[i]));
        v[i] = m.value(idx[i]);
    }
    v[0] = 1.0;
    return v;
}

std::array<cplx, 81> batch_of(const MomentSet& m, std::size_t b) {
    std::array<cplx, 81> v{};
    const auto idx = MomentSet::all_indices();
    for (int i = 0; i < 81; ++i) v[i] = m.at(idx[i]).batches.at(b);
    v[0] = 1.0;
    return v;
}

}  // namespace

MomentSet deconvolve_noise(const MomentSet& raw, const MomentSet& noise) {
    const auto sig = invert(values_of(raw), values_of(noise));
    const std::size_t nb = raw.batch_count();
    const bool paired = nb > 1 && noise.batch_count() == nb;
    const auto nvals = values_of(noise);
    std::vector<std::array<cplx, 81>> per;
    for (std::size_t b = 0; b < nb; ++b) per.push_back(invert(batch_of(raw, b), paired ? batch_of(noise, b) : nvals));

    MomentSet out;
    const auto idx = MomentSet::all_indices();
    for (int i = 0; i < 81; ++i) {
        std::vector<cplx> bv;
        std::vector<double> re, im;
        for (const auto& p : per) {
            bv.push_back(p[i]);
            re.push_back(p[i].real());
            im.push_back(p[i].imag());
        }
        double err = std::hypot(batch_stat(re).error, batch_stat(im).error);
        if (nb <= 1) err = raw.error(idx[i]);
        out.set(idx[i], i == 0 ? cplx(1.0) : sig[i], i == 0 ? 0.0 : err, std::move(bv));
    }
    return out;
}

MomentSet deconvolve_noise(const MomentSet& raw, const NoiseCalibration& cal) {
    if (!cal.mode_moments) throw std::invalid_argument("calibration carries no matched-filter noise moments");
    return deconvolve_noise(raw, *cal.mode_moments);
}

MomentSet correct_gain(const MomentSet& m, double gain_b) {
    if (!(gain_b > 0.0)) throw std::invalid_argument("gain must be positive");
    MomentSet out;
    for (const auto& [idx, e] : m.entries()) {
        const double f = std::pow(gain_b, -(idx.k + idx.l));
        std::vector<cplx> b = e.batches;
        for (auto& v : b) v *= f;
        out.set(idx, e.value * f, e.stderr_value * f, std::move(b));
    }
    return out;
}

BatchStat gain_from_moments(const MomentSet& s) {
    const MomentIndex na{1, 1, 0, 0}, nb{0, 0, 1, 1};
    const double a = s.value(na).real(), b = s.value(nb).real();
    if (!(a > 0.0) || !(b > 0.0)) throw std::runtime_error("gain estimation needs power in both outputs");
    std::vector<double> g;
    const auto& ba = s.at(na).batches;
    const auto& bb = s.at(nb).batches;
    for (std::size_t i = 0; i < std::min(ba.size(), bb.size()); ++i) {
        if (ba[i].real() > 0.0 && bb[i].real() > 0.0) g.push_back(std::sqrt(bb[i].real() / ba[i].real()));
    }
    return {std::sqrt(b / a), batch_stat(g).error};
}

}  // namespace homsim
