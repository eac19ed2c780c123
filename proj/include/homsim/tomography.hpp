#pragma once

// Moment tomography: matched filtering of pulse windows, envelope moment
// accumulation, four-dimensional quadrature histograms and noise
// deconvolution down to normally ordered field moments.

#include "homsim/accum.hpp"
#include "homsim/correlator.hpp"
#include "homsim/hetsim.hpp"
#include "homsim/moments.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace homsim {

/// Projects pulse windows of a record onto a temporal mode. `mode.t0` is
/// relative to the start of each pulse window.
class MatchedFilter {
public:
    MatchedFilter(const PulseTrainConfig& train, const TemporalMode& mode, double dt);

    /// (S_a, S_b) of one pulse in vacuum units: vacuum gives <|S|²> = 1.
    std::pair<cplx, cplx> project(const QuadratureRecord& rec, int pulse) const;
    int pulses() const { return static_cast<int>(modes_.size()); }
    const SampledMode& mode(int pulse) const { return modes_.at(static_cast<std::size_t>(pulse)); }

private:
    double dt_;
    std::vector<SampledMode> modes_;
};

std::pair<cplx, cplx> matched_filter(const QuadratureRecord& rec, const TemporalMode& mode, int pulse,
                                     const PulseTrainConfig& train);

/// Envelope moments <S_a*^n S_a^m S_b*^k S_b^l>, every exponent <= 2.
class MomentAccumulator {
public:
    explicit MomentAccumulator(int batches = kDefaultBatches);

    void add(cplx sa, cplx sb, std::uint64_t batch);
    /// All active pulses of a record (all pulses for calibration records).
    void add_record(const QuadratureRecord& rec, const MatchedFilter& mf, bool all_pulses = false);
    void merge(const MomentAccumulator& o);
    std::uint64_t count() const;
    MomentSet finalize() const;
    bool operator==(const MomentAccumulator& o) const = default;

private:
    void add_sums(const std::array<cplx, 81>& s, std::uint64_t n, std::uint64_t batch);
    struct Batch {
        std::uint64_t n = 0;
        std::array<ComplexFixedSum, 81> sum;
        bool operator==(const Batch&) const = default;
    };
    std::vector<Batch> batches_;
};

MomentSet accumulate_raw_moments(const std::vector<std::pair<cplx, cplx>>& amplitudes,
                                 int batches = kDefaultBatches);

enum class OutOfRange { Error, ClampToEdge };

struct Histogram4D {
    /// Axes X_a, P_a, X_b, P_b share the same edges.
    std::vector<double> edges;
    std::vector<std::uint32_t> counts;  ///< row-major (X_a, P_a, X_b, P_b)
    std::uint64_t total = 0;
    std::uint64_t clamped = 0;

    Histogram4D(int bins, double half_range);
    int bins() const { return static_cast<int>(edges.size()) - 1; }
    void add(cplx sa, cplx sb, OutOfRange policy = OutOfRange::Error);
    void merge(const Histogram4D& o);
    /// Moments from bin centres.
    MomentSet moments() const;
    /// Counts summed over all axes except `axis` (0..3).
    std::vector<std::uint64_t> marginal(int axis) const;
};

Histogram4D build_histogram4(const std::vector<std::pair<cplx, cplx>>& amplitudes, int bins = 64,
                             double half_range = 5.0, OutOfRange policy = OutOfRange::Error);

/// Exact inversion of <S*^n S^m ...> = Σ binomials <signal> <noise> with the
/// noise factorized over channels. Calibration moments are taken from
/// cal.mode_moments. With equal batch counts each signal batch is paired with
/// the calibration batch of the same index and errors are batch spreads.
MomentSet deconvolve_noise(const MomentSet& raw, const NoiseCalibration& cal);
MomentSet deconvolve_noise(const MomentSet& raw, const MomentSet& noise);

/// Divides moments by g^(k+l) (channel b amplitude gain g).
MomentSet correct_gain(const MomentSet& m, double gain_b);

/// Relative amplitude gain of channel b from deconvolved single-source moments:
/// sqrt(<b†b> / <a†a>).
BatchStat gain_from_moments(const MomentSet& single_source);

}  // namespace homsim
