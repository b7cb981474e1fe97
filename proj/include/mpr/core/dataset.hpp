#pragma once

#include <filesystem>
#include <vector>

#include "mpr/core/hash.hpp"
#include "mpr/core/types.hpp"

namespace mpr {

/// Raw cloud file: little-endian 4 x f32 records (x, y, z, intensity), no header.
point_cloud read_cloud(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, const point_cloud& cloud);

/// Loads every frame of a JSON manifest, in manifest order. Errors carry the
/// offending frame_id.
std::vector<frame> load_dataset(const std::filesystem::path& manifest_path);

/// Writes images, clouds and the manifest under `root`. Frames sharing an
/// identical calibration share one calibration block.
void save_dataset(const std::filesystem::path& root, const std::vector<frame>& frames,
                  const std::string& manifest_name = "manifest.json");

/// Frames whose sequence index equals `sequence`.
std::vector<frame> select_sequence(const std::vector<frame>& frames, int sequence);

/// Content hash over ids, timestamps, poses, calibrations, pixels and points.
sha256_digest dataset_hash(const std::vector<frame>& frames);

} // namespace mpr
