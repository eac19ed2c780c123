#pragma once

// Sets of two-mode moments <(a†)^n a^m (b†)^k b^l> (or the corresponding
// envelope moments <S_a*^n S_a^m S_b*^k S_b^l>) with batch-based errors.

#include "homsim/fockspace.hpp"

#include <map>
#include <string>
#include <vector>

namespace homsim {

struct MomentEntry {
    cplx value;
    double stderr_value = 0.0;
    std::vector<cplx> batches;  ///< per-batch estimates (may be empty)
};

class MomentSet {
public:
    /// All indices with each exponent <= 2.
    static std::vector<MomentIndex> all_indices();

    void set(const MomentIndex& idx, cplx value, double err = 0.0, std::vector<cplx> batches = {});
    bool contains(const MomentIndex& idx) const { return entries_.count(idx) != 0; }
    const MomentEntry& at(const MomentIndex& idx) const;
    cplx value(const MomentIndex& idx) const { return at(idx).value; }
    double error(const MomentIndex& idx) const { return at(idx).stderr_value; }
    std::size_t batch_count() const;
    const std::map<MomentIndex, MomentEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    /// Exact moments of a state (zero errors).
    static MomentSet from_state(const DensityMatrix& rho, int max_order = 4);

private:
    std::map<MomentIndex, MomentEntry> entries_;
};

/// CSV columns n,m,k,l,re,im,stderr.
void write_moments_csv(const MomentSet& m, const std::string& path);
MomentSet read_moments_csv(const std::string& path);

}  // namespace homsim
