#pragma once

// Detection band limit: linear-phase windowed-sinc FIR low-pass, unit DC gain,
// -3 dB at half the full bandwidth. Applied zero-phase (centered taps), so a
// filtered curve stays aligned with the input sample grid.

#include "homsim/fft.hpp"

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace homsim {

class UndersampledInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct FilterSpec {
    double bandwidth = 20e6;  ///< full width in Hz; <= 0 disables the filter
    double dt = 2e-9;         ///< sample interval the taps are designed for
    int taps = 101;           ///< odd

    static FilterSpec none(double dt) { return {0.0, dt, 1}; }

    bool enabled() const { return bandwidth > 0.0; }
    void validate() const;

    /// Symmetric taps, sum exactly 1, length `taps` (1 when disabled).
    std::vector<double> impulse_response() const;
    /// |H(f)| of the designed taps.
    double magnitude_response(double frequency) const;
    /// Sum of squared taps: per-sample power of filtered unit-density white noise is
    /// noise_power_gain() / dt.
    double noise_power_gain() const;
    /// Autocorrelation sum_k h[k] h[k + lag].
    double tap_autocorrelation(int lag) const;
};

/// Direct zero-phase convolution; output has the input's length (zero padding).
std::vector<std::complex<double>> apply_detection_filter(std::span<const std::complex<double>> x,
                                                         const FilterSpec& f, double dt);
std::vector<double> apply_detection_filter(std::span<const double> x, const FilterSpec& f, double dt);

/// FFT-based filter for repeated use on equal-length records.
class RecordFilter {
public:
    RecordFilter(const FilterSpec& f, std::size_t length);

    std::size_t length() const { return length_; }
    void apply(std::span<std::complex<double>> samples) const;

private:
    std::size_t length_;
    int half_;
    bool enabled_;
    std::shared_ptr<Fft> fft_;
    std::vector<std::complex<double>> response_;
};

}  // namespace homsim
