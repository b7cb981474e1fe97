#pragma once

#include <filesystem>
#include <iosfwd>
#include <unordered_set>
#include <vector>

#include "mpr/backbone/backbone.hpp"
#include "mpr/retrieval/grm.hpp"

namespace mpr::index {

struct candidate {
    frame_id_t frame_id = 0;
    double distance = 0.0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();

    bool operator==(const candidate& other) const {
        return frame_id == other.frame_id && distance == other.distance && position == other.position;
    }
};

using candidate_list = std::vector<candidate>;

struct database_metadata {
    sha256_digest checkpoint_hash{};
    sha256_digest dataset_hash{};

    bool operator==(const database_metadata&) const = default;
};

/// Exact Euclidean nearest-neighbour store. Descriptor values are held in f32,
/// exactly as persisted, so a loaded database answers identically.
class descriptor_database {
public:
    explicit descriptor_database(std::uint32_t dimension = 0, database_metadata metadata = {});

    void add(const global_descriptor& d);

    /// k nearest entries ascending by distance, ties by ascending frame id.
    candidate_list query(const Eigen::VectorXd& probe, std::size_t k) const;

    std::uint32_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    const database_metadata& metadata() const noexcept { return metadata_; }

    frame_id_t frame_id(std::size_t i) const { return ids_[i]; }
    const Eigen::Vector3d& position(std::size_t i) const { return positions_[i]; }
    Eigen::VectorXd values(std::size_t i) const;
    /// Index of a frame id, or size() when absent.
    std::size_t find(frame_id_t id) const;

    /// "MPRDB1", u32 dimension, u64 count, two 32-byte hashes, then per entry
    /// u64 frame id, 3 x f64 position, dimension x f32 values; little-endian.
    void write(std::ostream& os) const;
    static descriptor_database read(std::istream& is, const std::string& source);
    void save(const std::filesystem::path& path) const;
    static descriptor_database load(const std::filesystem::path& path);

    bool operator==(const descriptor_database& other) const;

private:
    std::uint32_t dimension_;
    database_metadata metadata_;
    std::vector<frame_id_t> ids_;
    std::vector<Eigen::Vector3d> positions_;
    std::vector<float> values_;
    std::unordered_set<frame_id_t> seen_;
};

/// One entry per frame in input order.
descriptor_database build(const std::vector<frame>& frames, retrieval::grm& net, const backbone& provider,
                          const database_metadata& metadata, const depth::densify_config& densify = {});

} // namespace mpr::index
