#include "homsim/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace homsim {

std::vector<double> TauGrid::taus() const {
    std::vector<double> t(size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = tau(i);
    return t;
}

std::string to_string(CorrelationKind kind) { return kind == CorrelationKind::Cross ? "cross" : "auto"; }

CorrelationKind correlation_kind_from_string(const std::string& s) {
    if (s == "cross") return CorrelationKind::Cross;
    if (s == "auto") return CorrelationKind::Auto;
    throw std::invalid_argument("unknown correlation kind: " + s);
}

void CorrelationHistogram::validate() const {
    if (values.size() != tau.size() || stderrs.size() != tau.size()) {
        throw std::invalid_argument("histogram arrays have inconsistent lengths");
    }
    for (std::size_t i = 1; i < tau.size(); ++i) {
        if (!(tau[i] > tau[i - 1])) throw std::invalid_argument("histogram tau grid is not strictly increasing");
    }
    for (double e : stderrs) {
        if (!(e >= 0.0)) throw std::invalid_argument("histogram standard errors must be non-negative");
    }
}

std::size_t CorrelationHistogram::nearest(double t) const {
    if (tau.empty()) throw std::out_of_range("empty histogram");
    auto it = std::lower_bound(tau.begin(), tau.end(), t);
    if (it == tau.end()) return tau.size() - 1;
    const auto i = static_cast<std::size_t>(it - tau.begin());
    if (i > 0 && std::abs(tau[i - 1] - t) <= std::abs(tau[i] - t)) return i - 1;
    return i;
}

double CorrelationHistogram::integral(double lo, double hi) const {
    if (tau.size() < 2) return 0.0;
    const double width = tau[1] - tau[0];
    const double eps = 1e-6 * width;
    double s = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] >= lo - eps && tau[i] < hi - eps) s += values[i];
    }
    return s * width;
}

std::vector<std::size_t> quiet_bins(const CorrelationHistogram& h, const NormalizationOptions& opt) {
    const double hw = opt.quiet_halfwidth > 0.0 ? opt.quiet_halfwidth : 0.25 * opt.t_r;
    std::vector<double> centres;
    for (int n = -opt.max_peak - 1; n <= opt.max_peak + 1; ++n) {
        centres.push_back(n * opt.t_r);
        if (opt.delta_tau != 0.0) {
            centres.push_back(n * opt.t_r + opt.delta_tau);
            centres.push_back(n * opt.t_r - opt.delta_tau);
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < h.tau.size(); ++i) {
        double d = std::numeric_limits<double>::infinity();
        for (double c : centres) d = std::min(d, std::abs(h.tau[i] - c));
        if (d >= hw) out.push_back(i);
    }
    return out;
}

CorrelationHistogram normalize_and_offset(const CorrelationHistogram& h, const NormalizationOptions& opt) {
    h.validate();
    if (!(opt.t_r > 0.0)) throw std::invalid_argument("t_r must be positive");
    CorrelationHistogram out = h;

    double offset = 0.0, offset_var = 0.0;
    if (opt.subtract_offset) {
        const auto bins = quiet_bins(h, opt);
        if (bins.empty()) throw NoQuietWindow("no quiet window between correlation peaks");
        for (auto i : bins) {
            offset += h.values[i];
            offset_var += h.stderrs[i] * h.stderrs[i];
        }
        offset /= static_cast<double>(bins.size());
        offset_var /= static_cast<double>(bins.size() * bins.size());
        for (auto& v : out.values) v -= offset;
    }

    const double lo = h.tau.front(), hi = h.tau.back();
    double sum = 0.0;
    std::vector<int> used;
    for (int n = -opt.max_peak; n <= opt.max_peak; ++n) {
        if (n == 0) continue;
        const double a = (n - 0.5) * opt.t_r, b = (n + 0.5) * opt.t_r;
        const double width = h.tau.size() > 1 ? h.tau[1] - h.tau[0] : 0.0;
        if (a < lo - 0.5 * width || b > hi + width) continue;
        sum += out.integral(a, b);
        used.push_back(n);
    }
    if (std::find(used.begin(), used.end(), 1) == used.end() ||
        std::find(used.begin(), used.end(), -1) == used.end()) {
        throw std::invalid_argument("histogram must cover the cross-pulse peaks n = ±1");
    }
    const double scale = sum / static_cast<double>(used.size());
    if (!(std::abs(scale) > 0.0)) throw std::runtime_error("cross-pulse peaks integrate to zero");
    const double factor = (opt.reference_width > 0.0 ? opt.reference_width : 1.0) / scale;
    for (auto& v : out.values) v *= factor;
    for (auto& e : out.stderrs) e *= std::abs(factor);
    for (auto& [name, comp] : out.components) {
        for (auto& v : comp) v *= factor;
    }

    out.norm.normalized = true;
    out.norm.scale = scale;
    out.norm.reference_width = opt.reference_width;
    out.norm.offset_estimated = opt.subtract_offset;
    out.norm.offset = offset * factor;
    out.norm.offset_std = std::sqrt(offset_var) * std::abs(factor);
    out.norm.peaks = used;
    return out;
}

TheoryComparison compare_to_theory(const CorrelationHistogram& data, const CorrelationHistogram& theory,
                                   double max_z) {
    data.validate();
    theory.validate();
    if (data.size() != theory.size()) throw std::invalid_argument("tau grid mismatch: different bin counts");
    const double width = data.size() > 1 ? data.tau[1] - data.tau[0] : 1.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (std::abs(data.tau[i] - theory.tau[i]) > 1e-3 * width) {
            throw std::invalid_argument("tau grid mismatch between data and theory");
        }
    }
    if (data.delta_tau && theory.delta_tau && std::abs(*data.delta_tau - *theory.delta_tau) > 1e-3 * width)
        throw std::invalid_argument("delta_tau mismatch between data and theory");
    TheoryComparison r;
    r.tolerance = max_z;
    r.residuals.resize(data.size());
    r.z_scores.resize(data.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double res = data.values[i] - theory.values[i];
        r.residuals[i] = res;
        ss += res * res;
        double z = 0.0;
        if (data.stderrs[i] > 0.0) z = res / data.stderrs[i];
        else if (res != 0.0) z = std::numeric_limits<double>::infinity();
        r.z_scores[i] = z;
        r.max_abs_z = std::max(r.max_abs_z, std::abs(z));
    }
    r.rms = std::sqrt(ss / static_cast<double>(data.size()));
    r.passed = r.max_abs_z < max_z;
    return r;
}

// --------------------------------------------------------------------- files

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

void write_histogram_csv(const CorrelationHistogram& h, const std::string& path) {
    h.validate();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "tau_ns,value,stderr,kind,delta_tau_ns\n";
    const std::string kind = to_string(h.kind);
    const std::string dtau = h.delta_tau ? fmt(*h.delta_tau * 1e9) : "";
    for (std::size_t i = 0; i < h.size(); ++i) {
        os << fmt(h.tau[i] * 1e9) << ',' << fmt(h.values[i]) << ',' << fmt(h.stderrs[i]) << ',' << kind << ',' << dtau
           << '\n';
    }
}

void write_theory_csv(const CorrelationHistogram& h, const std::string& path) {
    h.validate();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "tau_ns,value,component,delta_tau_ns\n";
    const std::string dtau = h.delta_tau ? fmt(*h.delta_tau * 1e9) : "";
    for (const auto& [name, comp] : h.components) {
        for (std::size_t i = 0; i < h.size(); ++i)
            os << fmt(h.tau[i] * 1e9) << ',' << fmt(comp[i]) << ',' << name << ',' << dtau << '\n';
    }
    for (std::size_t i = 0; i < h.size(); ++i)
        os << fmt(h.tau[i] * 1e9) << ',' << fmt(h.values[i]) << ",total," << dtau << '\n';
}

CorrelationHistogram read_histogram_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty histogram file " + path);
    const auto header = split(line);
    const bool theory = header.size() >= 3 && header[2] == "component";
    const std::size_t base = theory ? 3 : 4;
    const bool has_dtau = header.size() == base + 1 && header.back() == "delta_tau_ns";
    if (header.size() != base && !has_dtau) throw std::runtime_error("unrecognized header in " + path);
    CorrelationHistogram h;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        // A trailing empty delta_tau cell is dropped by the splitter.
        if (cells.size() != base && cells.size() != base + 1) throw std::runtime_error("malformed row in " + path);
        if (has_dtau && cells.size() == base + 1 && !cells[base].empty()) h.delta_tau = std::stod(cells[base]) * 1e-9;
        const double t = std::stod(cells[0]) * 1e-9, v = std::stod(cells[1]);
        if (theory) {
            if (cells[2] == "total") {
                h.tau.push_back(t);
                h.values.push_back(v);
                h.stderrs.push_back(0.0);
            } else {
                h.components[cells[2]].push_back(v);
            }
        } else {
            h.tau.push_back(t);
            h.values.push_back(v);
            h.stderrs.push_back(std::stod(cells[2]));
            h.kind = correlation_kind_from_string(cells[3]);
        }
    }
    h.validate();
    return h;
}

nlohmann::json metadata_json(const CorrelationHistogram& h) {
    const auto& n = h.norm;
    nlohmann::json j = {{"kind", to_string(h.kind)},
                        {"normalized", n.normalized},
                        {"scale", n.scale},
                        {"reference_width_s", n.reference_width},
                        {"offset_estimated", n.offset_estimated},
                        {"peak_set", n.peaks}};
    if (n.offset_estimated) {
        j["offset"] = n.offset;
        j["offset_std"] = n.offset_std;
    } else {
        j["offset"] = nullptr;
        j["offset_std"] = nullptr;
    }
    return j;
}

void apply_metadata(CorrelationHistogram& h, const nlohmann::json& j) {
    h.kind = correlation_kind_from_string(j.at("kind").get<std::string>());
    auto& n = h.norm;
    n.normalized = j.value("normalized", false);
    n.scale = j.value("scale", 1.0);
    n.reference_width = j.value("reference_width_s", 0.0);
    n.offset_estimated = j.value("offset_estimated", false);
    if (n.offset_estimated) {
        n.offset = j.at("offset").get<double>();
        n.offset_std = j.at("offset_std").get<double>();
    }
    n.peaks = j.value("peak_set", std::vector<int>{});
}

}  // namespace homsim
