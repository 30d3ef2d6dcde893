#pragma once

// Checkpoint file:
//
//   "MTODCKPT" | u32 version | u64 header bytes | JSON header | f32 payload | u64 FNV-1a
//
// The header holds the model config, the full vocabulary, the tensor
// manifest (name, shape, offset in floats) and caller metadata. All integers
// and floats are little-endian; the checksum covers every preceding byte.

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "mtod/model.hpp"
#include "mtod/vocab.hpp"

namespace mtod {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Transformer<float> model;
    Vocab vocab;
    nlohmann::json meta;  // free-form, e.g. objective and context settings
};

void save_checkpoint(const std::filesystem::path& path, const Transformer<float>& model,
                     const Vocab& vocab, const nlohmann::json& meta = nlohmann::json::object());

// Throws DataError on a missing file, bad magic, version mismatch, checksum
// failure (including truncation) or a tensor whose shape disagrees with the
// config or the vocabulary.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size);

}  // namespace mtod
