#include "homsim/correlator.hpp"

#include <cmath>
#include <stdexcept>

namespace homsim {

namespace {

void check_unit(double& unit, double& dt, const QuadratureRecord& rec) {
    rec.validate();
    if (unit == 0.0) {
        unit = rec.vacuum_unit;
        dt = rec.dt;
        return;
    }
    if (std::abs(rec.vacuum_unit - unit) > 1e-9 * unit || std::abs(rec.dt - dt) > 1e-12 * dt) {
        throw std::invalid_argument("records differ in sample interval or vacuum unit");
    }
}

void check_grid(const TauGrid& grid, std::size_t length) {
    if (grid.max_lag < 0 || static_cast<std::size_t>(grid.max_lag) >= length) {
        throw std::invalid_argument("tau grid exceeds the record span");
    }
}

// Records in vacuum units.
void to_vacuum_units(const std::vector<std::complex<float>>& in, double scale, std::vector<cplx>& out) {
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = cplx(in[i]) * scale;
}

// c[j mod M] = Σ_t conj(x(t)) x(t + j) for a zero-padded FFT of x.
void autocorrelate(const Fft& fft, std::vector<cplx>& buf) {
    fft.forward(buf);
    for (auto& v : buf) v = std::norm(v);
    fft.inverse(buf);
}

std::size_t wrap(int lag, std::size_t m) {
    return lag >= 0 ? static_cast<std::size_t>(lag) : m - static_cast<std::size_t>(-lag);
}

}  // namespace

cplx NoiseCalibration::N_tau(int ch, int lag) const {
    if (std::abs(lag) > grid.max_lag) throw std::out_of_range("missing lagged calibration for the requested tau");
    return channel(ch).N_tau[grid.bin(lag)];
}

// ------------------------------------------------------------- noise

NoiseAccumulator::NoiseAccumulator(std::size_t record_length, const TauGrid& grid, int batches)
    : length_(record_length), grid_(grid) {
    check_grid(grid, record_length);
    if (batches < 1) throw std::invalid_argument("batch count must be >= 1");
    batches_.resize(static_cast<std::size_t>(batches));
    for (auto& b : batches_) {
        for (auto& l : b.lag) l.resize(grid.size());
        b.pairs.assign(grid.size(), 0);
    }
    fft_size_ = next_pow2(record_length + static_cast<std::size_t>(grid.max_lag) + 1);
    fft_ = std::make_shared<Fft>(fft_size_);
}

void NoiseAccumulator::add(const QuadratureRecord& rec) {
    if (rec.size() != length_) throw std::invalid_argument("record length differs from the accumulator's");
    check_unit(unit_, dt_, rec);
    auto& b = batches_[rec.shot_id % batches_.size()];
    const double scale = 1.0 / std::sqrt(rec.vacuum_unit);
    std::vector<cplx> x[2];
    to_vacuum_units(rec.samples_a, scale, x[0]);
    to_vacuum_units(rec.samples_b, scale, x[1]);

    for (int ch = 0; ch < 2; ++ch) {
        std::array<std::array<cplx, 3>, 3> s{};
        for (const cplx v : x[ch]) {
            const cplx c = std::conj(v);
            const cplx pc[3] = {1.0, c, c * c};
            const cplx pv[3] = {1.0, v, v * v};
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) s[j][k] += pc[j] * pv[k];
        }
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) b.mom[ch][j][k].add(s[j][k]);

        std::vector<cplx> buf(fft_size_, 0.0);
        std::copy(x[ch].begin(), x[ch].end(), buf.begin());
        autocorrelate(*fft_, buf);
        for (std::size_t bin = 0; bin < grid_.size(); ++bin) b.lag[ch][bin].add(buf[wrap(grid_.lag(bin), fft_size_)]);
    }
    cplx cr = 0.0;
    for (std::size_t i = 0; i < length_; ++i) cr += std::conj(x[0][i]) * x[1][i];
    b.cross.add(cr);
    for (std::size_t bin = 0; bin < grid_.size(); ++bin) {
        b.pairs[bin] += length_ - static_cast<std::size_t>(std::abs(grid_.lag(bin)));
    }
    ++b.records;
    b.samples += length_;
}

void NoiseAccumulator::merge(const NoiseAccumulator& o) {
    if (o.length_ != length_ || o.grid_.max_lag != grid_.max_lag || o.batches_.size() != batches_.size()) {
        throw std::invalid_argument("cannot merge differently configured noise accumulators");
    }
    if (o.unit_ != 0.0) {
        if (unit_ == 0.0) {
            unit_ = o.unit_;
            dt_ = o.dt_;
        } else if (std::abs(o.unit_ - unit_) > 1e-9 * unit_) {
            throw std::invalid_argument("cannot merge accumulators with different vacuum units");
        }
    }
    for (std::size_t i = 0; i < batches_.size(); ++i) {
        auto& b = batches_[i];
        const auto& c = o.batches_[i];
        b.records += c.records;
        b.samples += c.samples;
        for (int ch = 0; ch < 2; ++ch) {
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) b.mom[ch][j][k].merge(c.mom[ch][j][k]);
            for (std::size_t bin = 0; bin < b.lag[ch].size(); ++bin) b.lag[ch][bin].merge(c.lag[ch][bin]);
        }
        for (std::size_t bin = 0; bin < b.pairs.size(); ++bin) b.pairs[bin] += c.pairs[bin];
        b.cross.merge(c.cross);
    }
}

bool NoiseAccumulator::operator==(const NoiseAccumulator& o) const {
    return length_ == o.length_ && grid_.max_lag == o.grid_.max_lag && unit_ == o.unit_ && batches_ == o.batches_;
}

NoiseCalibration NoiseAccumulator::finalize() const {
    std::uint64_t records = 0, samples = 0;
    for (const auto& b : batches_) {
        records += b.records;
        samples += b.samples;
    }
    if (records == 0) throw std::runtime_error("no calibration records");

    NoiseCalibration cal;
    cal.dt = dt_;
    cal.vacuum_unit = unit_;
    cal.grid = grid_;
    cal.records = records;

    auto stat = [&](auto&& per_batch, auto&& total) {
        std::vector<double> re, im;
        for (const auto& b : batches_) {
            if (b.records == 0) continue;
            const cplx v = per_batch(b);
            re.push_back(v.real());
            im.push_back(v.imag());
        }
        const double e = std::hypot(batch_stat(re).error, batch_stat(im).error);
        return std::make_pair(total(), e);
    };

    for (int ch = 0; ch < 2; ++ch) {
        ChannelNoise& cn = ch == 0 ? cal.a : cal.b;
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                auto [v, e] = stat([&](const Batch& b) { return b.mom[ch][j][k].value() / double(b.samples); },
                                   [&] {
                                       ComplexFixedSum t;
                                       for (const auto& b : batches_) t.merge(b.mom[ch][j][k]);
                                       return t.value() / double(samples);
                                   });
                cn.moments[j][k] = v;
                cn.moment_errors[j][k] = e;
            }
        }
        cn.N0 = cn.moments[1][1].real();
        cn.N0_err = cn.moment_errors[1][1];
        cn.N_tau.resize(grid_.size());
        for (std::size_t bin = 0; bin < grid_.size(); ++bin) {
            ComplexFixedSum t;
            std::uint64_t n = 0;
            for (const auto& b : batches_) {
                t.merge(b.lag[ch][bin]);
                n += b.pairs[bin];
            }
            cn.N_tau[bin] = t.value() / double(n);
        }
    }
    auto [cr, ce] = stat([&](const Batch& b) { return b.cross.value() / double(b.samples); },
                         [&] {
                             ComplexFixedSum t;
                             for (const auto& b : batches_) t.merge(b.cross);
                             return t.value() / double(samples);
                         });
    cal.cross = cr;
    cal.cross_err = ce;
    cal.cross_warning = ce > 0.0 && std::abs(cr) > 5.0 * ce;
    return cal;
}

NoiseCalibration measure_noise(const std::vector<QuadratureRecord>& cal, const TauGrid& grid, int batches) {
    if (cal.empty()) throw std::invalid_argument("no calibration records");
    NoiseAccumulator acc(cal.front().size(), grid, batches);
    for (const auto& r : cal) acc.add(r);
    return acc.finalize();
}

// ---------------------------------------------------------------- G²

G2Accumulator::G2Accumulator(const Options& opt) : opt_(opt) {
    check_grid(opt.grid, opt.record_length);
    if (opt.batches < 1) throw std::invalid_argument("batch count must be >= 1");
    if (opt.channel < 0 || opt.channel > 1) throw std::invalid_argument("channel must be 0 (a) or 1 (b)");
    if (!(opt.gain_b > 0.0)) throw std::invalid_argument("gain must be positive");
    if (!(opt.t_r > 0.0) || opt.pulses_per_sequence < 1) throw std::invalid_argument("invalid pulse train");
    fft_size_ = next_pow2(opt.record_length + static_cast<std::size_t>(opt.grid.max_lag) + 1);
    fft_ = std::make_shared<Fft>(fft_size_);
    max_cluster_ = cluster(opt.grid.max_lag);
    batches_.resize(static_cast<std::size_t>(opt.batches));
    const std::size_t n = opt.grid.size();
    for (auto& b : batches_) {
        b.C.resize(n);
        b.A.resize(n);
        b.B.resize(n);
        if (opt.kind == CorrelationKind::Auto) b.R.resize(n);
        b.pulse_pairs.assign(static_cast<std::size_t>(max_cluster_) + 1, 0);
    }
}

int G2Accumulator::cluster(int lag) const {
    return static_cast<int>(std::abs(std::lround(lag * opt_.grid.dt / opt_.t_r)));
}

void G2Accumulator::add(const QuadratureRecord& rec) {
    if (rec.size() != opt_.record_length) throw std::invalid_argument("record length differs from the accumulator's");
    check_unit(unit_, dt_, rec);
    if (std::abs(rec.dt - opt_.grid.dt) > 1e-12 * rec.dt) throw std::invalid_argument("record dt differs from grid dt");
    auto& b = batches_[rec.shot_id % batches_.size()];
    const std::size_t n = rec.size(), m = fft_size_;
    const double sa = 1.0 / std::sqrt(rec.vacuum_unit);
    const double sb = sa / opt_.gain_b;

    std::vector<cplx> x, y;
    if (opt_.kind == CorrelationKind::Cross) {
        to_vacuum_units(rec.samples_a, sa, x);
        to_vacuum_units(rec.samples_b, sb, y);
    } else {
        to_vacuum_units(opt_.channel == 0 ? rec.samples_a : rec.samples_b, opt_.channel == 0 ? sa : sb, x);
    }
    std::vector<double> ix(n), iy(n);
    for (std::size_t i = 0; i < n; ++i) ix[i] = std::norm(x[i]);
    if (opt_.kind == CorrelationKind::Cross) {
        for (std::size_t i = 0; i < n; ++i) iy[i] = std::norm(y[i]);
    } else {
        iy = ix;
    }

    std::vector<cplx> corr(m, 0.0);
    if (opt_.kind == CorrelationKind::Cross) {
        // Two real transforms packed into one complex FFT.
        for (std::size_t i = 0; i < n; ++i) corr[i] = cplx(ix[i], iy[i]);
        fft_->forward(corr);
        std::vector<cplx> w(m);
        for (std::size_t k = 0; k < m; ++k) {
            const cplx zk = corr[k], zc = std::conj(corr[(m - k) % m]);
            const cplx fa = 0.5 * (zk + zc);
            const cplx fb = cplx(0.0, -0.5) * (zk - zc);
            w[k] = std::conj(fa) * fb;
        }
        fft_->inverse(w);
        corr.swap(w);
    } else {
        for (std::size_t i = 0; i < n; ++i) corr[i] = ix[i];
        autocorrelate(*fft_, corr);
        std::vector<cplx> r(m, 0.0);
        std::copy(x.begin(), x.end(), r.begin());
        autocorrelate(*fft_, r);
        for (std::size_t bin = 0; bin < opt_.grid.size(); ++bin) b.R[bin].add(r[wrap(opt_.grid.lag(bin), m)]);
    }

    std::vector<double> px(n + 1, 0.0), py(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        px[i + 1] = px[i] + ix[i];
        py[i + 1] = py[i] + iy[i];
    }
    for (std::size_t bin = 0; bin < opt_.grid.size(); ++bin) {
        const int j = opt_.grid.lag(bin);
        const std::size_t aj = static_cast<std::size_t>(std::abs(j));
        b.C[bin].add(corr[wrap(j, m)].real());
        if (j >= 0) {
            b.A[bin].add(px[n - aj]);
            b.B[bin].add(py[n] - py[aj]);
        } else {
            b.A[bin].add(px[n] - px[aj]);
            b.B[bin].add(py[n - aj]);
        }
    }
    for (int c = 0; c <= max_cluster_; ++c) {
        b.pulse_pairs[c] += static_cast<std::uint64_t>(std::max(0, rec.active_pulses - c));
    }
    ++b.records;
}

void G2Accumulator::merge(const G2Accumulator& o) {
    if (o.opt_.kind != opt_.kind || o.opt_.channel != opt_.channel || o.opt_.record_length != opt_.record_length ||
        o.opt_.grid.max_lag != opt_.grid.max_lag || o.batches_.size() != batches_.size() ||
        o.opt_.gain_b != opt_.gain_b) {
        throw std::invalid_argument("cannot merge differently configured G2 accumulators");
    }
    if (o.unit_ != 0.0) {
        if (unit_ == 0.0) {
            unit_ = o.unit_;
            dt_ = o.dt_;
        } else if (std::abs(o.unit_ - unit_) > 1e-9 * unit_) {
            throw std::invalid_argument("cannot merge accumulators with different vacuum units");
        }
    }
    for (std::size_t i = 0; i < batches_.size(); ++i) {
        auto& b = batches_[i];
        const auto& c = o.batches_[i];
        b.records += c.records;
        for (std::size_t k = 0; k < b.C.size(); ++k) {
            b.C[k].merge(c.C[k]);
            b.A[k].merge(c.A[k]);
            b.B[k].merge(c.B[k]);
        }
        for (std::size_t k = 0; k < b.R.size(); ++k) b.R[k].merge(c.R[k]);
        for (std::size_t k = 0; k < b.pulse_pairs.size(); ++k) b.pulse_pairs[k] += c.pulse_pairs[k];
    }
}

std::uint64_t G2Accumulator::records() const {
    std::uint64_t r = 0;
    for (const auto& b : batches_) r += b.records;
    return r;
}

bool G2Accumulator::operator==(const G2Accumulator& o) const {
    return opt_.kind == o.opt_.kind && opt_.grid.max_lag == o.opt_.grid.max_lag && unit_ == o.unit_ &&
           batches_ == o.batches_;
}

CorrelationHistogram G2Accumulator::finalize(const NoiseCalibration& cal) const {
    if (records() == 0) throw std::runtime_error("no records accumulated");
    if (std::abs(cal.vacuum_unit - unit_) > 1e-9 * unit_ || std::abs(cal.dt - dt_) > 1e-12 * dt_) {
        throw std::invalid_argument("records and calibration differ in sample interval or filter");
    }
    const double g2 = opt_.gain_b * opt_.gain_b;
    const double n0a = cal.a.N0, n0b = cal.b.N0 / g2;
    const bool cross = opt_.kind == CorrelationKind::Cross;
    const int ch = opt_.channel;
    const double n0 = ch == 0 ? n0a : n0b;
    const double len = static_cast<double>(opt_.record_length);
    const double phys = unit_ * unit_ * dt_;

    // G summed over t for one set of sums.
    auto g_sum = [&](const Batch& b, std::size_t bin) {
        const int j = opt_.grid.lag(bin);
        const double k = static_cast<double>(b.records) * (len - std::abs(j));
        const double c = b.C[bin].value(), a = b.A[bin].value(), bb = b.B[bin].value();
        if (cross) return c - n0b * a - n0a * bb + n0a * n0b * k;
        const cplx nt = cal.N_tau(ch, j) / (ch == 0 ? 1.0 : g2);
        return c - n0 * (a + bb) - 2.0 * std::real(std::conj(nt) * b.R[bin].value()) + (n0 * n0 + std::norm(nt)) * k;
    };

    Batch total = batches_.front();
    for (std::size_t i = 1; i < batches_.size(); ++i) {
        const auto& c = batches_[i];
        total.records += c.records;
        for (std::size_t k = 0; k < total.C.size(); ++k) {
            total.C[k].merge(c.C[k]);
            total.A[k].merge(c.A[k]);
            total.B[k].merge(c.B[k]);
        }
        for (std::size_t k = 0; k < total.R.size(); ++k) total.R[k].merge(c.R[k]);
        for (std::size_t k = 0; k < total.pulse_pairs.size(); ++k) total.pulse_pairs[k] += c.pulse_pairs[k];
    }

    CorrelationHistogram h;
    h.kind = opt_.kind;
    h.tau = opt_.grid.taus();
    h.values.resize(h.tau.size());
    h.stderrs.resize(h.tau.size());
    std::vector<double> per_batch;
    for (std::size_t bin = 0; bin < h.tau.size(); ++bin) {
        const int c = cluster(opt_.grid.lag(bin));
        const auto pairs = total.pulse_pairs[c];
        h.values[bin] = pairs ? phys * g_sum(total, bin) / double(pairs) : 0.0;
        per_batch.clear();
        for (const auto& b : batches_) {
            if (b.pulse_pairs[c] == 0) continue;
            per_batch.push_back(phys * g_sum(b, bin) / double(b.pulse_pairs[c]));
        }
        h.stderrs[bin] = batch_stat(per_batch).error;
    }
    return h;
}

CorrelationHistogram g2_cross_estimate(const std::vector<QuadratureRecord>& records, const NoiseCalibration& cal,
                                       const TauGrid& grid, const PulseTrainConfig& train, double gain_b) {
    if (records.empty()) throw std::invalid_argument("no records");
    G2Accumulator acc({CorrelationKind::Cross, 0, records.front().size(), grid, train.t_r, train.pulses_per_sequence,
                       kDefaultBatches, gain_b});
    for (const auto& r : records) acc.add(r);
    return acc.finalize(cal);
}

CorrelationHistogram g2_auto_estimate(const std::vector<QuadratureRecord>& records, const NoiseCalibration& cal,
                                      const TauGrid& grid, const PulseTrainConfig& train, int channel, double gain_b) {
    if (records.empty()) throw std::invalid_argument("no records");
    G2Accumulator acc({CorrelationKind::Auto, channel, records.front().size(), grid, train.t_r,
                       train.pulses_per_sequence, kDefaultBatches, gain_b});
    for (const auto& r : records) acc.add(r);
    return acc.finalize(cal);
}

// ------------------------------------------------------------ gain

PowerBalanceAccumulator::PowerBalanceAccumulator(int batches) {
    if (batches < 1) throw std::invalid_argument("batch count must be >= 1");
    batches_.resize(static_cast<std::size_t>(batches));
}

void PowerBalanceAccumulator::add(const QuadratureRecord& rec) {
    rec.validate();
    auto& b = batches_[rec.shot_id % batches_.size()];
    double pa = 0.0, pb = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        pa += std::norm(cplx(rec.samples_a[i]));
        pb += std::norm(cplx(rec.samples_b[i]));
    }
    b.pa.add(pa / rec.vacuum_unit);
    b.pb.add(pb / rec.vacuum_unit);
    b.samples += rec.size();
}

void PowerBalanceAccumulator::merge(const PowerBalanceAccumulator& o) {
    if (o.batches_.size() != batches_.size()) throw std::invalid_argument("batch count mismatch");
    for (std::size_t i = 0; i < batches_.size(); ++i) {
        batches_[i].samples += o.batches_[i].samples;
        batches_[i].pa.merge(o.batches_[i].pa);
        batches_[i].pb.merge(o.batches_[i].pb);
    }
}

BatchStat PowerBalanceAccumulator::gain(const NoiseCalibration& cal) const {
    std::vector<double> g;
    FixedSum pa, pb;
    std::uint64_t samples = 0;
    for (const auto& b : batches_) {
        if (b.samples == 0) continue;
        const double ns = static_cast<double>(b.samples);
        const double r = (b.pb.value() / ns - cal.b.N0) / (b.pa.value() / ns - cal.a.N0);
        g.push_back(std::sqrt(std::max(0.0, r)));
        pa.merge(b.pa);
        pb.merge(b.pb);
        samples += b.samples;
    }
    if (samples == 0) throw std::runtime_error("no records for gain estimation");
    const double ns = static_cast<double>(samples);
    const double pa_sig = pa.value() / ns - cal.a.N0;
    if (!(pa_sig > 0.0)) throw std::runtime_error("no signal power in channel a for gain estimation");
    const double r = (pb.value() / ns - cal.b.N0) / pa_sig;
    return {std::sqrt(std::max(0.0, r)), batch_stat(g).error};
}

// ----------------------------------------------- mode-resolved coincidences

ModeCoincidenceAccumulator::ModeCoincidenceAccumulator(std::vector<PulseModes> modes, int batches)
    : modes_(std::move(modes)) {
    if (batches < 1) throw std::invalid_argument("batch count must be >= 1");
    batches_.resize(static_cast<std::size_t>(batches));
}

void ModeCoincidenceAccumulator::add(const QuadratureRecord& rec, bool calibration) {
    rec.validate();
    auto& b = batches_[rec.shot_id % batches_.size()];
    // S = Σ e* s dt has vacuum variance dt * vacuum_unit (1 when unfiltered).
    const double scale = std::sqrt(rec.dt / rec.vacuum_unit);
    const int pulses = calibration ? static_cast<int>(modes_.size()) : rec.active_pulses;
    double sa = 0.0, sb = 0.0, sab = 0.0;
    for (int p = 0; p < pulses && p < static_cast<int>(modes_.size()); ++p) {
        double xa = 0.0, xb = 0.0;
        for (const auto& e : modes_[p].basis) {
            if (e.offset + e.values.size() > rec.size()) throw std::out_of_range("temporal mode beyond record");
            cplx pa = 0.0, pb = 0.0;
            for (std::size_t i = 0; i < e.values.size(); ++i) {
                const cplx w = std::conj(e.values[i]);
                pa += w * cplx(rec.samples_a[e.offset + i]);
                pb += w * cplx(rec.samples_b[e.offset + i]);
            }
            xa += std::norm(pa * scale);
            xb += std::norm(pb * scale);
        }
        sa += xa;
        sb += xb;
        sab += xa * xb;
    }
    if (calibration) {
        b.cal_a.add(sa);
        b.cal_b.add(sb);
        b.cal_pulses += static_cast<std::uint64_t>(pulses);
    } else {
        b.na.add(sa);
        b.nb.add(sb);
        b.nab.add(sab);
        b.pulses += static_cast<std::uint64_t>(std::max(0, pulses));
    }
}

void ModeCoincidenceAccumulator::merge(const ModeCoincidenceAccumulator& o) {
    if (o.batches_.size() != batches_.size()) throw std::invalid_argument("batch count mismatch");
    for (std::size_t i = 0; i < batches_.size(); ++i) {
        auto& b = batches_[i];
        const auto& c = o.batches_[i];
        b.pulses += c.pulses;
        b.cal_pulses += c.cal_pulses;
        b.na.merge(c.na);
        b.nb.merge(c.nb);
        b.nab.merge(c.nab);
        b.cal_a.merge(c.cal_a);
        b.cal_b.merge(c.cal_b);
    }
}

ModeCoincidence ModeCoincidenceAccumulator::finalize() const {
    struct Est {
        double na, nb, nab;
    };
    auto estimate = [](double pulses, double cal_pulses, double na, double nb, double nab, double ca, double cb) {
        const double n0a = ca / cal_pulses, n0b = cb / cal_pulses;
        const double ea = na / pulses, eb = nb / pulses, eab = nab / pulses;
        return Est{ea - n0a, eb - n0b, eab - n0b * ea - n0a * eb + n0a * n0b};
    };
    std::vector<double> va, vb, vab, vn;
    Batch t;
    for (const auto& b : batches_) {
        t.pulses += b.pulses;
        t.cal_pulses += b.cal_pulses;
        t.na.merge(b.na);
        t.nb.merge(b.nb);
        t.nab.merge(b.nab);
        t.cal_a.merge(b.cal_a);
        t.cal_b.merge(b.cal_b);
        if (b.pulses == 0 || b.cal_pulses == 0) continue;
        const Est e = estimate(double(b.pulses), double(b.cal_pulses), b.na.value(), b.nb.value(), b.nab.value(),
                               b.cal_a.value(), b.cal_b.value());
        va.push_back(e.na);
        vb.push_back(e.nb);
        vab.push_back(e.nab);
        vn.push_back(e.nab / (e.na * e.nb));
    }
    if (t.pulses == 0 || t.cal_pulses == 0) throw std::runtime_error("mode coincidences need signal and calibration");
    const Est e = estimate(double(t.pulses), double(t.cal_pulses), t.na.value(), t.nb.value(), t.nab.value(),
                           t.cal_a.value(), t.cal_b.value());
    ModeCoincidence out;
    out.na = {e.na, batch_stat(va).error};
    out.nb = {e.nb, batch_stat(vb).error};
    out.nab = {e.nab, batch_stat(vab).error};
    out.normalized = {e.nab / (e.na * e.nb), batch_stat(vn).error};
    return out;
}

}  // namespace homsim
