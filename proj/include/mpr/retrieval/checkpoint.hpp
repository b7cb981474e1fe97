#pragma once

#include <filesystem>
#include <optional>

#include "mpr/retrieval/grm.hpp"

namespace mpr::retrieval {

/// "MPRW1", 32-byte config hash, u32 length + config JSON, u32 tensor count,
/// then per tensor u32 length + name and an MPRT1 tensor.
void save_checkpoint(const std::filesystem::path& path, const grm& net);

/// Rebuilds the network from the stored config. When `expected` is given its
/// hash must match the stored one.
grm load_checkpoint(const std::filesystem::path& path, const std::optional<grm_config>& expected = std::nullopt);

/// Values rounded through f32, as they are after a save/load round trip.
void round_to_storage(grm& net);

/// SHA-256 of a file's bytes.
sha256_digest file_digest(const std::filesystem::path& path);

} // namespace mpr::retrieval
