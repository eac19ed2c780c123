#include "homsim/moments.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace homsim {

std::vector<MomentIndex> MomentSet::all_indices() {
    std::vector<MomentIndex> out;
    for (int n = 0; n <= 2; ++n)
        for (int m = 0; m <= 2; ++m)
            for (int k = 0; k <= 2; ++k)
                for (int l = 0; l <= 2; ++l) out.push_back({n, m, k, l});
    return out;
}

void MomentSet::set(const MomentIndex& idx, cplx value, double err, std::vector<cplx> batches) {
    if (!idx.valid()) throw std::invalid_argument("moment index out of range: " + to_string(idx));
    if (!(err >= 0.0)) throw std::invalid_argument("moment error must be >= 0");
    entries_[idx] = {value, err, std::move(batches)};
}

const MomentEntry& MomentSet::at(const MomentIndex& idx) const {
    auto it = entries_.find(idx);
    if (it == entries_.end()) throw std::out_of_range("moment not available: " + to_string(idx));
    return it->second;
}

std::size_t MomentSet::batch_count() const {
    return entries_.empty() ? 0 : entries_.begin()->second.batches.size();
}

MomentSet MomentSet::from_state(const DensityMatrix& rho, int max_order) {
    MomentSet s;
    for (const auto& idx : all_indices()) {
        if (idx.order() <= max_order && idx.order() <= 2 * rho.cutoff()) s.set(idx, moment_expectation(rho, idx));
    }
    return s;
}

void write_moments_csv(const MomentSet& m, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    std::fprintf(f, "n,m,k,l,re,im,stderr\n");
    for (const auto& [idx, e] : m.entries()) {
        std::fprintf(f, "%d,%d,%d,%d,%.12g,%.12g,%.12g\n", idx.n, idx.m, idx.k, idx.l, e.value.real(), e.value.imag(),
                     e.stderr_value);
    }
    std::fclose(f);
}

MomentSet read_moments_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("n,m,k,l,re,im,stderr", 0) != 0) throw std::runtime_error(path + ": unexpected moment CSV header");
    MomentSet out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MomentIndex idx;
        double re = 0, im = 0, err = 0;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%lf,%lf,%lf", &idx.n, &idx.m, &idx.k, &idx.l, &re, &im, &err) != 7) {
            throw std::runtime_error(path + ": malformed line: " + line);
        }
        out.set(idx, {re, im}, err);
    }
    return out;
}

}  // namespace homsim
