#include "homsim/filter.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace homsim {

namespace {

std::vector<double> windowed_sinc(int taps, double cutoff_hz, double dt) {
    const int half = taps / 2;
    std::vector<double> h(taps);
    double sum = 0.0;
    for (int k = 0; k < taps; ++k) {
        const double x = 2.0 * cutoff_hz * (k - half) * dt;
        const double sinc = (x == 0.0) ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / (taps - 1));
        h[k] = sinc * window;
        sum += h[k];
    }
    for (auto& v : h) v /= sum;
    return h;
}

double response(const std::vector<double>& h, double f, double dt) {
    const int half = static_cast<int>(h.size()) / 2;
    double acc = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        acc += h[k] * std::cos(2.0 * std::numbers::pi * f * (static_cast<int>(k) - half) * dt);
    }
    return std::abs(acc);
}

}  // namespace

void FilterSpec::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("filter dt must be positive");
    if (!enabled()) return;
    if (taps < 3 || taps % 2 == 0) throw std::invalid_argument("filter taps must be odd and >= 3");
    // Complex baseband: the band [-B/2, B/2] needs a sample rate of at least B.
    if (1.0 / dt < 2.0 * bandwidth) {
        throw UndersampledInput("sample rate is below twice the detection bandwidth");
    }
}

std::vector<double> FilterSpec::impulse_response() const {
    validate();
    if (!enabled()) return {1.0};
    const double target = 1.0 / std::sqrt(2.0);
    const double f3 = 0.5 * bandwidth;
    // |H(f3)| increases monotonically with the sinc cutoff in this range.
    double lo = 0.25 * f3, hi = std::min(4.0 * f3, 0.5 / dt);
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (response(windowed_sinc(taps, mid, dt), f3, dt) < target) lo = mid; else hi = mid;
    }
    return windowed_sinc(taps, 0.5 * (lo + hi), dt);
}

double FilterSpec::magnitude_response(double frequency) const {
    return response(impulse_response(), frequency, dt);
}

double FilterSpec::noise_power_gain() const {
    double s = 0.0;
    for (double v : impulse_response()) s += v * v;
    return s;
}

double FilterSpec::tap_autocorrelation(int lag) const {
    const auto h = impulse_response();
    const int n = static_cast<int>(h.size());
    lag = std::abs(lag);
    double s = 0.0;
    for (int k = 0; k + lag < n; ++k) s += h[k] * h[k + lag];
    return s;
}

namespace {

template <typename T>
std::vector<T> convolve_centered(std::span<const T> x, const FilterSpec& f, double dt) {
    if (std::abs(dt - f.dt) > 1e-6 * f.dt) {
        throw std::invalid_argument("input sample interval does not match the filter design");
    }
    const auto h = f.impulse_response();
    const int half = static_cast<int>(h.size()) / 2;
    const int n = static_cast<int>(x.size());
    std::vector<T> y(x.size(), T{});
    for (int i = 0; i < n; ++i) {
        T acc{};
        for (int k = 0; k < static_cast<int>(h.size()); ++k) {
            const int j = i - (k - half);
            if (j >= 0 && j < n) acc += h[k] * x[j];
        }
        y[i] = acc;
    }
    return y;
}

}  // namespace

std::vector<std::complex<double>> apply_detection_filter(std::span<const std::complex<double>> x,
                                                         const FilterSpec& f, double dt) {
    return convolve_centered(x, f, dt);
}

std::vector<double> apply_detection_filter(std::span<const double> x, const FilterSpec& f, double dt) {
    return convolve_centered(x, f, dt);
}

RecordFilter::RecordFilter(const FilterSpec& f, std::size_t length)
    : length_(length), half_(0), enabled_(f.enabled()) {
    f.validate();
    if (!enabled_) return;
    const auto h = f.impulse_response();
    half_ = static_cast<int>(h.size()) / 2;
    fft_ = std::make_shared<Fft>(next_pow2(length + h.size()));
    response_.assign(fft_->size(), 0.0);
    // Centered kernel placed with wrap-around so the product is zero-phase.
    for (std::size_t k = 0; k < h.size(); ++k) {
        const long idx = static_cast<long>(k) - half_;
        response_[(idx + static_cast<long>(fft_->size())) % static_cast<long>(fft_->size())] = h[k];
    }
    fft_->forward(response_);
}

void RecordFilter::apply(std::span<std::complex<double>> samples) const {
    if (!enabled_) return;
    if (samples.size() != length_) throw std::invalid_argument("record length does not match the filter");
    std::vector<std::complex<double>> buf(fft_->size(), 0.0);
    std::copy(samples.begin(), samples.end(), buf.begin());
    fft_->forward(buf);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= response_[i];
    fft_->inverse(buf);
    std::copy(buf.begin(), buf.begin() + static_cast<long>(length_), samples.begin());
}

}  // namespace homsim
