#pragma once

// Binary record files.
//
// Header (little endian): magic "HOMSREC\0", u32 version, u32 channels (2),
// f64 dt, u64 samples per channel, f64 vacuum unit, u32 tag length, tag bytes.
// Each record: u64 shot_id, i32 active pulses, then samples interleaved as
// f32 (re_a, im_a, re_b, im_b) per time step.

#include "homsim/hetsim.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

namespace homsim {

struct RecordFileHeader {
    std::uint32_t version = 1;
    std::uint32_t channels = 2;
    double dt = 0.0;
    std::uint64_t samples = 0;
    double vacuum_unit = 0.0;
    std::string tag;
};

class RecordWriter {
public:
    RecordWriter(const std::string& path, const RecordFileHeader& header);
    void write(const QuadratureRecord& rec);
    std::uint64_t count() const { return count_; }
    void close();

private:
    std::ofstream out_;
    RecordFileHeader header_;
    std::uint64_t count_ = 0;
};

class RecordReader {
public:
    explicit RecordReader(const std::string& path);
    const RecordFileHeader& header() const { return header_; }
    /// False at end of file; throws on a truncated record.
    bool next(QuadratureRecord& rec);

private:
    std::ifstream in_;
    RecordFileHeader header_;
    std::vector<float> buf_;
};

RecordFileHeader header_for(const RecordSimulator& sim);

/// Provenance sidecar next to a record file.
void write_sidecar(const std::string& path, const ScenarioConfig& cfg, const NoiseModel& noise);
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace homsim
