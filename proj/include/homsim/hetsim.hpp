#pragma once

// Synthetic dual-channel heterodyne records of the beam-splitter outputs.
//
// Records are stored in physical units: a photon in mode ξ contributes α ξ(t)
// with ∫|ξ|² dt = 1, and vacuum white noise has per-sample power 1/dt before
// the detection filter. `vacuum_unit` is the per-sample vacuum power after the
// filter, so |S|² / vacuum_unit is in photon units.

#include "homsim/filter.hpp"
#include "homsim/fockspace.hpp"
#include "homsim/husimi.hpp"
#include "homsim/wavepacket.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace homsim {

/// Invalid configuration value; the message starts with the field path.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ScenarioConfig {
    bool source_a_on = true;
    bool source_b_on = true;
    cplx beta_a = 1.0;
    cplx beta_b = 1.0;
    double phi = 0.0;  ///< rad, multiplies beta_b by exp(i phi)
    PulseTrainConfig train;
    BeamSplitterConfig splitter;
    std::uint64_t shots = 500000;  ///< pulse pairs
    std::uint64_t seed = 1;
    std::string tag = "scenario";

    void validate() const;
    cplx effective_beta_a() const { return source_a_on ? beta_a : cplx(0.0); }
    cplx effective_beta_b() const;
    /// Records needed for `shots` pulse pairs (the last record may be partial).
    std::uint64_t records() const;
    /// Input state of one pulse pair for a single temporal mode per source.
    TwoModeState input_state(int cutoff = kDefaultCutoff) const;
};

struct NoiseModel {
    double added_noise_photons_a = 10.0;
    double added_noise_photons_b = 10.0;
    FilterSpec filter;  ///< its dt is the record sample interval
    double relative_gain = 1.0;  ///< amplitude gain of channel b relative to a

    void validate() const;
    double dt() const { return filter.dt; }
    /// Per-sample vacuum power of a record.
    double vacuum_unit() const;
};

struct QuadratureRecord {
    double dt = 0.0;
    std::vector<std::complex<float>> samples_a, samples_b;
    std::uint64_t shot_id = 0;  ///< record index within its stream
    std::string tag;
    double vacuum_unit = 0.0;
    /// Pulses in this record that carried sources (the last record of a run may
    /// be partially filled; the remaining pulse windows are vacuum).
    int active_pulses = 0;

    void validate() const;
    std::size_t size() const { return samples_a.size(); }
};

/// Deterministic per-record generator seed.
std::uint64_t record_seed(std::uint64_t seed, std::uint64_t index);

/// Output-mode decomposition of one pulse pair: orthonormal temporal modes
/// (grid-sampled) and the multimode state over (a, e_1..e_m, b, e_1..e_m).
struct PulseModes {
    std::vector<SampledMode> basis;  ///< e_j, orthonormal on the grid
    MultimodeState state{1, {{{}, 1.0}}};
    /// Mode index of (channel, temporal mode j): channel * basis.size() + j.
    int index(int channel, int j) const { return channel * static_cast<int>(basis.size()) + j; }
};

PulseModes pulse_modes(const ScenarioConfig& cfg, int pulse, double dt);

class RecordSimulator {
public:
    RecordSimulator(ScenarioConfig cfg, NoiseModel noise);

    const ScenarioConfig& config() const { return cfg_; }
    const NoiseModel& noise() const { return noise_; }
    std::uint64_t record_count() const { return cfg_.records(); }
    std::size_t samples_per_record() const { return length_; }

    /// Record `index`; independent of the order in which records are produced.
    /// Not thread-safe (sampler statistics); use one simulator per worker.
    QuadratureRecord record(std::uint64_t index);
    /// Husimi acceptance statistics accumulated by this object (trials, accepted).
    std::pair<std::uint64_t, std::uint64_t> acceptance() const;

private:
    ScenarioConfig cfg_;
    NoiseModel noise_;
    std::size_t length_;
    std::vector<PulseModes> modes_;  ///< per pulse in a record
    std::unique_ptr<RecordFilter> filter_;
    std::vector<HusimiSampler> samplers_;
};

using RecordSink = std::function<void(const QuadratureRecord&)>;

/// Generates all records of the scenario in index order.
void simulate_records(const ScenarioConfig& cfg, const NoiseModel& noise, const RecordSink& sink);

/// Both sources idle; tagged "calibration". `shots` counts pulse pairs as above.
ScenarioConfig calibration_scenario(const PulseTrainConfig& train, std::uint64_t shots, std::uint64_t seed);
void calibration_records(const NoiseModel& noise, const PulseTrainConfig& train, std::uint64_t shots,
                         std::uint64_t seed, const RecordSink& sink);

nlohmann::json to_json(const ScenarioConfig& cfg);
nlohmann::json to_json(const NoiseModel& noise);
nlohmann::json to_json(const PulseTrainConfig& train);
nlohmann::json to_json(const FilterSpec& filter);
ScenarioConfig scenario_from_json(const nlohmann::json& j, ScenarioConfig base = {});
NoiseModel noise_from_json(const nlohmann::json& j, NoiseModel base = {});
PulseTrainConfig train_from_json(const nlohmann::json& j, PulseTrainConfig base = {});
FilterSpec filter_from_json(const nlohmann::json& j, FilterSpec base = {});

}  // namespace homsim
