#include "duet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian f64; big-endian hosts are unsupported");

namespace duet {

using nlohmann::json;

void save_checkpoint_file(const std::filesystem::path& path, const std::string& magic,
                          const std::map<std::string, std::string>& hyper,
                          const std::vector<const Parameter*>& params) {
    if (magic.size() != 8) throw ContractError("checkpoint magic must be 8 bytes");
    json manifest;
    manifest["hyper"] = hyper;
    json plist = json::array();
    uint64_t offset = 0;
    for (const Parameter* p : params) {
        json e;
        e["name"] = p->name;
        e["shape"] = p->value.shape;
        e["offset"] = offset;
        plist.push_back(e);
        offset += p->value.numel() * sizeof(double);
    }
    manifest["params"] = plist;
    const std::string mjson = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot write " + path.string());
    out.write(magic.data(), 8);
    const uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const auto mlen = static_cast<uint32_t>(mjson.size());
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
    for (const Parameter* p : params)
        out.write(reinterpret_cast<const char*>(p->value.data.data()),
                  static_cast<std::streamsize>(p->value.numel() * sizeof(double)));
    if (!out) throw CheckpointError(CheckpointError::Kind::io, "write failed: " + path.string());
}

CheckpointData load_checkpoint_file(const std::filesystem::path& path,
                                    const std::string& expected_magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 16)
        throw CheckpointError(CheckpointError::Kind::truncated, "file shorter than header");
    const std::string magic = bytes.substr(0, 8);
    if (magic != expected_magic)
        throw CheckpointError(CheckpointError::Kind::bad_magic,
                              "expected magic " + expected_magic + ", found \"" + magic + "\"");
    uint32_t version = 0, mlen = 0;
    std::memcpy(&version, bytes.data() + 8, 4);
    std::memcpy(&mlen, bytes.data() + 12, 4);
    if (version != kCheckpointVersion)
        throw CheckpointError(CheckpointError::Kind::bad_version,
                              "unsupported checkpoint version " + std::to_string(version));
    if (bytes.size() < 16 + static_cast<size_t>(mlen))
        throw CheckpointError(CheckpointError::Kind::truncated, "manifest truncated");

    json manifest;
    try {
        manifest = json::parse(bytes.substr(16, mlen));
    } catch (const json::exception& e) {
        throw CheckpointError(CheckpointError::Kind::corrupt,
                              std::string("manifest is not valid JSON: ") + e.what());
    }

    CheckpointData data;
    data.magic = magic;
    if (manifest.contains("hyper"))
        data.hyper = manifest.at("hyper").get<std::map<std::string, std::string>>();

    const size_t payload_start = 16 + mlen;
    uint64_t expected_offset = 0;
    for (const auto& e : manifest.at("params")) {
        const auto name = e.at("name").get<std::string>();
        const auto shape = e.at("shape").get<Shape>();
        const auto offset = e.at("offset").get<uint64_t>();
        if (offset != expected_offset)
            throw CheckpointError(CheckpointError::Kind::corrupt,
                                  "stored offset for " + name +
                                      " disagrees with offset recomputed from shapes");
        const size_t n = shape_numel(shape);
        const size_t byte_len = n * sizeof(double);
        if (payload_start + offset + byte_len > bytes.size())
            throw CheckpointError(CheckpointError::Kind::truncated,
                                  "payload truncated mid-parameter: " + name);
        std::vector<double> values(n);
        std::memcpy(values.data(), bytes.data() + payload_start + offset, byte_len);
        data.params.emplace_back(name, Tensor(shape, std::move(values)));
        expected_offset += byte_len;
    }
    if (payload_start + expected_offset != bytes.size())
        throw CheckpointError(CheckpointError::Kind::corrupt,
                              "payload length disagrees with manifest");
    return data;
}

}  // namespace duet
