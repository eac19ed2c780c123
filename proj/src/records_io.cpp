#include "homsim/records_io.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace homsim {

static_assert(std::endian::native == std::endian::little, "record files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'O', 'M', 'S', 'R', 'E', 'C', '\0'};

template <class T>
void put(std::ostream& o, const T& v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& i) {
    T v{};
    i.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!i) throw std::runtime_error("record file: truncated header");
    return v;
}

}  // namespace

RecordWriter::RecordWriter(const std::string& path, const RecordFileHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc), header_(header) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    out_.write(kMagic, sizeof(kMagic));
    put(out_, header_.version);
    put(out_, header_.channels);
    put(out_, header_.dt);
    put(out_, header_.samples);
    put(out_, header_.vacuum_unit);
    put(out_, static_cast<std::uint32_t>(header_.tag.size()));
    out_.write(header_.tag.data(), static_cast<std::streamsize>(header_.tag.size()));
}

void RecordWriter::write(const QuadratureRecord& rec) {
    if (rec.size() != header_.samples || rec.dt != header_.dt) {
        throw std::invalid_argument("record does not match the file header");
    }
    put(out_, rec.shot_id);
    put(out_, static_cast<std::int32_t>(rec.active_pulses));
    std::vector<float> buf(4 * rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        buf[4 * i] = rec.samples_a[i].real();
        buf[4 * i + 1] = rec.samples_a[i].imag();
        buf[4 * i + 2] = rec.samples_b[i].real();
        buf[4 * i + 3] = rec.samples_b[i].imag();
    }
    out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out_) throw std::runtime_error("record file: write failed");
    ++count_;
}

void RecordWriter::close() { out_.close(); }

RecordReader::RecordReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in_.read(magic, sizeof(magic));
    if (!in_ || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error(path + ": not a record file");
    header_.version = get<std::uint32_t>(in_);
    if (header_.version != 1) throw std::runtime_error(path + ": unsupported record file version");
    header_.channels = get<std::uint32_t>(in_);
    if (header_.channels != 2) throw std::runtime_error(path + ": expected two channels");
    header_.dt = get<double>(in_);
    header_.samples = get<std::uint64_t>(in_);
    header_.vacuum_unit = get<double>(in_);
    const auto n = get<std::uint32_t>(in_);
    header_.tag.resize(n);
    in_.read(header_.tag.data(), n);
    if (!in_) throw std::runtime_error(path + ": truncated header");
}

bool RecordReader::next(QuadratureRecord& rec) {
    std::uint64_t id = 0;
    in_.read(reinterpret_cast<char*>(&id), sizeof(id));
    if (in_.gcount() == 0 && in_.eof()) return false;
    std::int32_t active = 0;
    in_.read(reinterpret_cast<char*>(&active), sizeof(active));
    buf_.resize(4 * header_.samples);
    in_.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(buf_.size() * sizeof(float)));
    if (!in_) throw std::runtime_error("record file: truncated record");
    rec.dt = header_.dt;
    rec.vacuum_unit = header_.vacuum_unit;
    rec.tag = header_.tag;
    rec.shot_id = id;
    rec.active_pulses = active;
    rec.samples_a.resize(header_.samples);
    rec.samples_b.resize(header_.samples);
    for (std::size_t i = 0; i < header_.samples; ++i) {
        rec.samples_a[i] = {buf_[4 * i], buf_[4 * i + 1]};
        rec.samples_b[i] = {buf_[4 * i + 2], buf_[4 * i + 3]};
    }
    return true;
}

RecordFileHeader header_for(const RecordSimulator& sim) {
    RecordFileHeader h;
    h.dt = sim.noise().dt();
    h.samples = sim.samples_per_record();
    h.vacuum_unit = sim.noise().vacuum_unit();
    h.tag = sim.config().tag;
    return h;
}

void write_sidecar(const std::string& path, const ScenarioConfig& cfg, const NoiseModel& noise) {
    write_json_file(path, {{"scenario", to_json(cfg)}, {"noise", to_json(noise)}});
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace homsim
