#include "homsim/hetsim.hpp"

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace homsim {

void ScenarioConfig::validate() const {
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    if (std::abs(beta_a) > 1.0 + 1e-12 || std::abs(beta_b) > 1.0 + 1e-12) {
        throw std::invalid_argument("|beta| must not exceed 1");
    }
    if (!std::isfinite(phi)) throw std::invalid_argument("phi must be finite");
    train.validate();
    splitter.validate();
}

cplx ScenarioConfig::effective_beta_b() const {
    return source_b_on ? beta_b * std::polar(1.0, phi) : cplx(0.0);
}

std::uint64_t ScenarioConfig::records() const {
    const auto p = static_cast<std::uint64_t>(train.pulses_per_sequence);
    return (shots + p - 1) / p;
}

TwoModeState ScenarioConfig::input_state(int cutoff) const {
    return prepare_input(effective_beta_a(), effective_beta_b(), cutoff);
}

void NoiseModel::validate() const {
    if (!(added_noise_photons_a >= 0.0) || !(added_noise_photons_b >= 0.0) || !std::isfinite(added_noise_photons_a) ||
        !std::isfinite(added_noise_photons_b)) {
        throw std::invalid_argument("added noise photons must be finite and >= 0");
    }
    if (!(relative_gain > 0.0) || !std::isfinite(relative_gain)) {
        throw std::invalid_argument("relative_gain must be positive");
    }
    if (!(filter.dt > 0.0)) throw std::invalid_argument("sample interval must be positive");
    filter.validate();
}

double NoiseModel::vacuum_unit() const {
    return (filter.enabled() ? filter.noise_power_gain() : 1.0) / filter.dt;
}

void QuadratureRecord::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("record dt must be positive");
    if (samples_a.size() != samples_b.size()) throw std::invalid_argument("record channels differ in length");
    if (!(vacuum_unit > 0.0)) throw std::invalid_argument("record vacuum unit must be positive");
}

std::uint64_t record_seed(std::uint64_t seed, std::uint64_t index) {
    // SplitMix64 finalizer over a golden-ratio stride.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ------------------------------------------------------------ pulse modes

namespace {

cplx grid_inner(const SampledMode& x, const SampledMode& y, double dt) {
    const std::size_t lo = std::max(x.offset, y.offset);
    const std::size_t hi = std::min(x.offset + x.values.size(), y.offset + y.values.size());
    cplx s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += std::conj(x.values[i - x.offset]) * y.values[i - y.offset];
    return s * dt;
}

}  // namespace

PulseModes pulse_modes(const ScenarioConfig& cfg, int pulse, double dt) {
    cfg.validate();
    PulseModes out;
    const Eigen::Matrix2cd c = cfg.splitter.creation_map();
    std::vector<cplx> alphas, betas;
    std::vector<std::vector<cplx>> lin;  // coefficients over (e_j) for each source, before channel split
    std::vector<int> port;

    if (cfg.source_a_on) {
        out.basis.push_back(sample_pulse_mode(cfg.train, cfg.train.mode_a(pulse), pulse, dt));
        lin.push_back({1.0});
        port.push_back(0);
    }
    if (cfg.source_b_on) {
        const auto xb = sample_pulse_mode(cfg.train, cfg.train.mode_b(pulse), pulse, dt);
        if (out.basis.empty()) {
            out.basis.push_back(xb);
            lin.push_back({1.0});
        } else {
            const auto& e1 = out.basis[0];
            const cplx ov = grid_inner(e1, xb, dt);
            SampledMode r;
            r.offset = std::min(e1.offset, xb.offset);
            const std::size_t end = std::max(e1.offset + e1.values.size(), xb.offset + xb.values.size());
            r.values.assign(end - r.offset, 0.0);
            for (std::size_t i = 0; i < xb.values.size(); ++i) r.values[xb.offset + i - r.offset] += xb.values[i];
            for (std::size_t i = 0; i < e1.values.size(); ++i) r.values[e1.offset + i - r.offset] -= ov * e1.values[i];
            const double s = std::sqrt(std::max(0.0, grid_inner(r, r, dt).real()));
            if (s > 1e-9) {
                for (auto& v : r.values) v /= s;
                out.basis.push_back(std::move(r));
                lin.push_back({ov, s});
            } else {
                lin.push_back({ov});
            }
        }
        port.push_back(1);
    }
    if (lin.empty()) return out;  // both idle: no signal modes

    const int m = static_cast<int>(out.basis.size());
    std::vector<std::vector<cplx>> coeffs;
    for (std::size_t s = 0; s < lin.size(); ++s) {
        std::vector<cplx> row(2 * m, 0.0);
        for (int j = 0; j < static_cast<int>(lin[s].size()); ++j) {
            row[out.index(0, j)] = lin[s][j] * c(port[s], 0);
            row[out.index(1, j)] = lin[s][j] * c(port[s], 1);
        }
        coeffs.push_back(std::move(row));
        const cplx beta = port[s] == 0 ? cfg.effective_beta_a() : cfg.effective_beta_b();
        betas.push_back(beta);
        alphas.push_back(std::sqrt(std::max(0.0, 1.0 - std::norm(beta))));
    }
    out.state = MultimodeState::product_of_linear(2 * m, alphas, betas, coeffs);
    if (std::abs(out.state.norm() - 1.0) > 1e-9) throw std::logic_error("output state not normalized");
    return out;
}

// -------------------------------------------------------------- simulator

RecordSimulator::RecordSimulator(ScenarioConfig cfg, NoiseModel noise) : cfg_(std::move(cfg)), noise_(noise) {
    cfg_.validate();
    noise_.validate();
    length_ = homsim::samples_per_record(cfg_.train, noise_.dt());
    for (int p = 0; p < cfg_.train.pulses_per_sequence; ++p) {
        modes_.push_back(pulse_modes(cfg_, p, noise_.dt()));
        samplers_.emplace_back(modes_.back().state);
    }
    if (noise_.filter.enabled()) filter_ = std::make_unique<RecordFilter>(noise_.filter, length_);
}

QuadratureRecord RecordSimulator::record(std::uint64_t index) {
    if (index >= record_count()) throw std::out_of_range("record index beyond the scenario");
    std::mt19937_64 rng(record_seed(cfg_.seed, index));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = noise_.dt();
    const double nbar[2] = {noise_.added_noise_photons_a, noise_.added_noise_photons_b};

    std::vector<cplx> ch[2];
    for (int k = 0; k < 2; ++k) {
        const double sigma = std::sqrt((1.0 + nbar[k]) / (2.0 * dt));
        ch[k].resize(length_);
        for (auto& v : ch[k]) {
            const double re = normal(rng);
            v = cplx(re, normal(rng)) * sigma;
        }
    }

    const auto pulses = static_cast<std::uint64_t>(cfg_.train.pulses_per_sequence);
    const std::uint64_t done = index * pulses;
    const int active = static_cast<int>(std::min<std::uint64_t>(pulses, cfg_.shots - done));
    std::array<cplx, kMaxModes> alpha{};
    for (int p = 0; p < active; ++p) {
        const auto& pm = modes_[p];
        if (pm.basis.empty()) continue;
        samplers_[p].sample(rng, alpha);
        for (int k = 0; k < 2; ++k) {
            for (int j = 0; j < static_cast<int>(pm.basis.size()); ++j) {
                const auto& e = pm.basis[j];
                cplx proj = 0.0;
                for (std::size_t i = 0; i < e.values.size(); ++i) proj += std::conj(e.values[i]) * ch[k][e.offset + i];
                proj *= dt;
                const double re = normal(rng);
                const cplx added = cplx(re, normal(rng)) * std::sqrt(0.5 * nbar[k]);
                const cplx shift = alpha[pm.index(k, j)] + added - proj;
                for (std::size_t i = 0; i < e.values.size(); ++i) ch[k][e.offset + i] += shift * e.values[i];
            }
        }
    }

    if (filter_) {
        filter_->apply(ch[0]);
        filter_->apply(ch[1]);
    }

    QuadratureRecord rec;
    rec.dt = dt;
    rec.shot_id = index;
    rec.tag = cfg_.tag;
    rec.vacuum_unit = noise_.vacuum_unit();
    rec.active_pulses = active;
    rec.samples_a.resize(length_);
    rec.samples_b.resize(length_);
    const double g = noise_.relative_gain;
    for (std::size_t i = 0; i < length_; ++i) {
        rec.samples_a[i] = std::complex<float>(ch[0][i]);
        rec.samples_b[i] = std::complex<float>(ch[1][i] * g);
    }
    return rec;
}

std::pair<std::uint64_t, std::uint64_t> RecordSimulator::acceptance() const {
    std::uint64_t t = 0, a = 0;
    for (const auto& s : samplers_) {
        t += s.trials();
        a += s.accepted();
    }
    return {t, a};
}

void simulate_records(const ScenarioConfig& cfg, const NoiseModel& noise, const RecordSink& sink) {
    RecordSimulator sim(cfg, noise);
    for (std::uint64_t i = 0; i < sim.record_count(); ++i) sink(sim.record(i));
}

ScenarioConfig calibration_scenario(const PulseTrainConfig& train, std::uint64_t shots, std::uint64_t seed) {
    ScenarioConfig c;
    c.source_a_on = false;
    c.source_b_on = false;
    c.train = train;
    c.shots = shots;
    c.seed = seed;
    c.tag = "calibration";
    return c;
}

void calibration_records(const NoiseModel& noise, const PulseTrainConfig& train, std::uint64_t shots,
                         std::uint64_t seed, const RecordSink& sink) {
    simulate_records(calibration_scenario(train, shots, seed), noise, sink);
}

// ------------------------------------------------------------------- JSON

namespace {

using nlohmann::json;

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cfrom(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

void check_keys(const json& j, const std::set<std::string>& known, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw ConfigError(path + "." + k + ": unknown field");
    }
}

template <class T>
void read(const json& j, const char* key, T& dst, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        if constexpr (std::is_same_v<T, cplx>) {
            dst = cfrom(j.at(key));
        } else {
            dst = j.at(key).get<T>();
        }
    } catch (const std::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

template <class F>
void validated(const std::string& path, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace

json to_json(const PulseTrainConfig& t) {
    return {{"t_r", t.t_r},           {"pulses_per_sequence", t.pulses_per_sequence},
            {"sequence_period", t.sequence_period}, {"delta_tau", t.delta_tau},
            {"kappa_a", t.kappa_a},   {"kappa_b", t.kappa_b},
            {"detuning_a", t.detuning_a}, {"detuning_b", t.detuning_b}};
}

json to_json(const FilterSpec& f) { return {{"bandwidth", f.bandwidth}, {"dt", f.dt}, {"taps", f.taps}}; }

json to_json(const NoiseModel& n) {
    return {{"added_noise_photons_a", n.added_noise_photons_a},
            {"added_noise_photons_b", n.added_noise_photons_b},
            {"relative_gain", n.relative_gain},
            {"filter", to_json(n.filter)}};
}

json to_json(const ScenarioConfig& c) {
    return {{"source_a_on", c.source_a_on},
            {"source_b_on", c.source_b_on},
            {"beta_a", cjson(c.beta_a)},
            {"beta_b", cjson(c.beta_b)},
            {"phi", c.phi},
            {"shots", c.shots},
            {"seed", c.seed},
            {"tag", c.tag},
            {"train", to_json(c.train)},
            {"splitter",
             {{"transmissivity", c.splitter.transmissivity}, {"convention", to_string(c.splitter.convention)}}}};
}

PulseTrainConfig train_from_json(const json& j, PulseTrainConfig t) {
    const std::string path = "train";
    check_keys(j, {"t_r", "pulses_per_sequence", "sequence_period", "delta_tau", "kappa_a", "kappa_b", "detuning_a",
                   "detuning_b"},
               path);
    read(j, "t_r", t.t_r, path);
    read(j, "pulses_per_sequence", t.pulses_per_sequence, path);
    read(j, "sequence_period", t.sequence_period, path);
    read(j, "delta_tau", t.delta_tau, path);
    read(j, "kappa_a", t.kappa_a, path);
    read(j, "kappa_b", t.kappa_b, path);
    read(j, "detuning_a", t.detuning_a, path);
    read(j, "detuning_b", t.detuning_b, path);
    validated(path, [&] { t.validate(); });
    return t;
}

FilterSpec filter_from_json(const json& j, FilterSpec f) {
    const std::string path = "noise.filter";
    check_keys(j, {"bandwidth", "dt", "taps"}, path);
    read(j, "bandwidth", f.bandwidth, path);
    read(j, "dt", f.dt, path);
    read(j, "taps", f.taps, path);
    validated(path, [&] { f.validate(); });
    return f;
}

NoiseModel noise_from_json(const json& j, NoiseModel n) {
    const std::string path = "noise";
    check_keys(j, {"added_noise_photons_a", "added_noise_photons_b", "relative_gain", "filter"}, path);
    read(j, "added_noise_photons_a", n.added_noise_photons_a, path);
    read(j, "added_noise_photons_b", n.added_noise_photons_b, path);
    read(j, "relative_gain", n.relative_gain, path);
    if (j.contains("filter")) n.filter = filter_from_json(j.at("filter"), n.filter);
    validated(path, [&] { n.validate(); });
    return n;
}

ScenarioConfig scenario_from_json(const json& j, ScenarioConfig c) {
    const std::string path = "scenario";
    check_keys(j, {"source_a_on", "source_b_on", "beta_a", "beta_b", "phi", "shots", "seed", "tag", "train", "splitter"},
               path);
    read(j, "source_a_on", c.source_a_on, path);
    read(j, "source_b_on", c.source_b_on, path);
    read(j, "beta_a", c.beta_a, path);
    read(j, "beta_b", c.beta_b, path);
    read(j, "phi", c.phi, path);
    read(j, "shots", c.shots, path);
    read(j, "seed", c.seed, path);
    read(j, "tag", c.tag, path);
    if (j.contains("train")) c.train = train_from_json(j.at("train"), c.train);
    if (j.contains("splitter")) {
        const auto& s = j.at("splitter");
        check_keys(s, {"transmissivity", "convention"}, path + ".splitter");
        read(s, "transmissivity", c.splitter.transmissivity, path + ".splitter");
        if (s.contains("convention")) {
            validated(path + ".splitter.convention",
                      [&] { c.splitter.convention = phase_convention_from_string(s.at("convention").get<std::string>()); });
        }
    }
    validated(path, [&] { c.validate(); });
    return c;
}

}  // namespace homsim
