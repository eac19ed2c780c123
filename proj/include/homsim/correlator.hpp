#pragma once

// Streaming noise calibration and second-order correlation estimators.
//
// All sums are taken in vacuum units x = S / sqrt(vacuum_unit), where a vacuum
// sample has <|x|²> = 1. Per-record contributions are computed with FFTs and
// accumulated in fixed point, one set of sums per shot batch (record index mod
// batch count), so memory depends only on the τ grid and record length.

#include "homsim/accum.hpp"
#include "homsim/fft.hpp"
#include "homsim/hetsim.hpp"
#include "homsim/histogram.hpp"
#include "homsim/moments.hpp"

#include <array>
#include <optional>
#include <vector>

namespace homsim {

inline constexpr int kDefaultBatches = 32;

struct ChannelNoise {
    double N0 = 0.0;  ///< <|h|²> in vacuum units (1 + n̄, times gain²)
    double N0_err = 0.0;
    std::vector<cplx> N_tau;  ///< <h*(t) h(t + τ)> on the calibration grid
    /// Per-sample moments <h*^j h^k>, j, k <= 2, and their standard errors.
    std::array<std::array<cplx, 3>, 3> moments{};
    std::array<std::array<double, 3>, 3> moment_errors{};
};

struct NoiseCalibration {
    double dt = 0.0;
    double vacuum_unit = 0.0;
    TauGrid grid;
    ChannelNoise a, b;
    /// Cross-channel diagnostic <h_a* h_b> (assumed zero by the estimators).
    cplx cross;
    double cross_err = 0.0;
    bool cross_warning = false;  ///< |cross| > 5 standard errors
    std::uint64_t records = 0;
    /// Matched-filter envelope moments of calibration amplitudes (tomography).
    std::optional<MomentSet> mode_moments;

    const ChannelNoise& channel(int ch) const { return ch == 0 ? a : b; }
    cplx N_tau(int ch, int lag) const;
};

class NoiseAccumulator {
public:
    NoiseAccumulator(std::size_t record_length, const TauGrid& grid, int batches = kDefaultBatches);

    void add(const QuadratureRecord& rec);
    void merge(const NoiseAccumulator& o);
    /// Throws if no records were added or the grid exceeds the record span.
    NoiseCalibration finalize() const;
    bool operator==(const NoiseAccumulator& o) const;

private:
    struct Batch {
        std::uint64_t records = 0, samples = 0;
        std::array<std::array<std::array<ComplexFixedSum, 3>, 3>, 2> mom;  // [ch][j][k]
        std::array<std::vector<ComplexFixedSum>, 2> lag;                   // Σ x*(t) x(t+j)
        std::vector<std::uint64_t> pairs;                                  // per lag bin
        ComplexFixedSum cross;
        bool operator==(const Batch&) const = default;
    };
    std::size_t length_;
    TauGrid grid_;
    double dt_ = 0.0, unit_ = 0.0;
    std::vector<Batch> batches_;
    std::size_t fft_size_;
    std::shared_ptr<Fft> fft_;
};

NoiseCalibration measure_noise(const std::vector<QuadratureRecord>& cal, const TauGrid& grid,
                               int batches = kDefaultBatches);

/// Time-resolved G² accumulator. Cross: channel a at t, b at t + τ.
/// Auto: one channel (0 = a, 1 = b) at t and t + τ.
class G2Accumulator {
public:
    struct Options {
        CorrelationKind kind = CorrelationKind::Cross;
        int channel = 0;  ///< auto-correlation channel
        std::size_t record_length = 0;
        TauGrid grid;
        double t_r = 512e-9;
        int pulses_per_sequence = 20;
        int batches = kDefaultBatches;
        double gain_b = 1.0;  ///< estimated amplitude gain of channel b, divided out
    };

    explicit G2Accumulator(const Options& opt);

    void add(const QuadratureRecord& rec);
    void merge(const G2Accumulator& o);
    /// Values are ∫dt G(t, t + τ) per pulse pair in 1/s (same units as the theory curves).
    CorrelationHistogram finalize(const NoiseCalibration& cal) const;
    const Options& options() const { return opt_; }
    std::uint64_t records() const;
    bool operator==(const G2Accumulator& o) const;

private:
    struct Batch {
        std::uint64_t records = 0;
        std::vector<FixedSum> C, A, B;  // Σ I_x(t) I_y(t+j), Σ I_x(t), Σ I_y(t+j)
        std::vector<ComplexFixedSum> R;  // auto: Σ x*(t) x(t+j)
        std::vector<std::uint64_t> pulse_pairs;  // by |n| of the lag cluster
        bool operator==(const Batch&) const = default;
    };
    Options opt_;
    double dt_ = 0.0, unit_ = 0.0;
    std::size_t fft_size_;
    int max_cluster_;
    std::shared_ptr<Fft> fft_;
    std::vector<Batch> batches_;
    int cluster(int lag) const;
};

/// Convenience wrappers over a record vector.
CorrelationHistogram g2_cross_estimate(const std::vector<QuadratureRecord>& records, const NoiseCalibration& cal,
                                       const TauGrid& grid, const PulseTrainConfig& train, double gain_b = 1.0);
CorrelationHistogram g2_auto_estimate(const std::vector<QuadratureRecord>& records, const NoiseCalibration& cal,
                                      const TauGrid& grid, const PulseTrainConfig& train, int channel = 0,
                                      double gain_b = 1.0);

/// Relative amplitude gain of channel b from the output power balance of a
/// single-source run on a balanced splitter: g² = P_b / P_a.
class PowerBalanceAccumulator {
public:
    explicit PowerBalanceAccumulator(int batches = kDefaultBatches);
    void add(const QuadratureRecord& rec);
    void merge(const PowerBalanceAccumulator& o);
    BatchStat gain(const NoiseCalibration& cal) const;

private:
    struct Batch {
        std::uint64_t samples = 0;
        FixedSum pa, pb;
    };
    std::vector<Batch> batches_;
};

/// Photon-number coincidences between the two outputs resolved over the
/// orthonormal temporal modes e_j of each pulse pair:
/// <:N_a N_b:> = Σ_jk <a_j† a_j b_k† b_k>, <N_a>, <N_b>.
struct ModeCoincidence {
    BatchStat na, nb, nab;
    BatchStat normalized;  ///< <:N_a N_b:> / (<N_a><N_b>)
};

class ModeCoincidenceAccumulator {
public:
    /// `modes` as returned by pulse_modes for each pulse of a record.
    ModeCoincidenceAccumulator(std::vector<PulseModes> modes, int batches = kDefaultBatches);
    void add(const QuadratureRecord& rec, bool calibration);
    void merge(const ModeCoincidenceAccumulator& o);
    ModeCoincidence finalize() const;

private:
    struct Batch {
        std::uint64_t pulses = 0, cal_pulses = 0;
        FixedSum na, nb, nab;          // Σ|S_a|², Σ|S_b|², Σ|S_a|²|S_b|² summed over mode pairs
        FixedSum cal_a, cal_b;         // calibration Σ|S|² per channel summed over modes
    };
    std::vector<PulseModes> modes_;
    std::vector<Batch> batches_;
};

}  // namespace homsim
