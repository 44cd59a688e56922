#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "duet/autodiff.hpp"

namespace duet {

// Checkpoint container: 8-byte magic, little-endian u32 version, u32 manifest
// length, JSON manifest (parameter names, shapes, payload byte offsets, plus
// free-form hyperparameter strings), then raw little-endian f64 payloads.
// Round trips are bit-exact.
struct CheckpointData {
    std::string magic;  // "DUET0001" fine model, "DUETC001" coarse model
    std::map<std::string, std::string> hyper;
    std::vector<Parameter> params;  // in manifest order
};

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr const char* kFineMagic = "DUET0001";
inline constexpr const char* kCoarseMagic = "DUETC001";

void save_checkpoint_file(const std::filesystem::path& path, const std::string& magic,
                          const std::map<std::string, std::string>& hyper,
                          const std::vector<const Parameter*>& params);

// Verifies magic, version, manifest/payload consistency (recomputed offsets
// must match stored ones) and payload length before returning tensors.
CheckpointData load_checkpoint_file(const std::filesystem::path& path,
                                    const std::string& expected_magic);

}  // namespace duet
