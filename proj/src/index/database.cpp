#include "mpr/index/database.hpp"

#include <algorithm>
#include <fstream>

#include "mpr/core/binary_io.hpp"
#include "mpr/core/error.hpp"

namespace mpr::index {

namespace {

constexpr const char* magic = "MPRDB1";

} // namespace

descriptor_database::descriptor_database(const std::uint32_t dimension, database_metadata metadata)
    : dimension_(dimension), metadata_(metadata) {}

void descriptor_database::add(const global_descriptor& d) {
    if (dimension_ == 0 && ids_.empty()) {
        dimension_ = static_cast<std::uint32_t>(d.values.size());
    }
    if (d.values.size() != static_cast<Eigen::Index>(dimension_)) {
        throw error(error_category::dimension, "frame " + std::to_string(d.frame_id) + ": descriptor length " +
                                                   std::to_string(d.values.size()) + ", database dimension " +
                                                   std::to_string(dimension_));
    }
    if (!d.values.allFinite()) {
        throw error(error_category::invalid_argument, "frame " + std::to_string(d.frame_id) + ": non-finite descriptor");
    }
    if (!seen_.insert(d.frame_id).second) {
        throw error(error_category::invalid_argument, "duplicate frame id " + std::to_string(d.frame_id));
    }
    ids_.push_back(d.frame_id);
    positions_.push_back(d.position);
    for (Eigen::Index i = 0; i < d.values.size(); ++i) {
        values_.push_back(static_cast<float>(d.values(i)));
    }
}

Eigen::VectorXd descriptor_database::values(const std::size_t i) const {
    return Eigen::Map<const Eigen::VectorXf>(values_.data() + i * dimension_, dimension_).cast<double>();
}

std::size_t descriptor_database::find(const frame_id_t id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    return static_cast<std::size_t>(it - ids_.begin());
}

candidate_list descriptor_database::query(const Eigen::VectorXd& probe, const std::size_t k) const {
    if (probe.size() != static_cast<Eigen::Index>(dimension_)) {
        throw error(error_category::dimension, "probe length " + std::to_string(probe.size()) +
                                                   ", database dimension " + std::to_string(dimension_));
    }
    const std::size_t n = ids_.size();
    if (n == 0 || k == 0) {
        return {};
    }
    const Eigen::Map<const Eigen::MatrixXf> stored(values_.data(), dimension_, static_cast<Eigen::Index>(n));
    const Eigen::VectorXd sq = (stored.cast<double>().colwise() - probe).colwise().squaredNorm().transpose();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    const std::size_t m = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](const std::size_t a, const std::size_t b) {
                          const auto ia = static_cast<Eigen::Index>(a);
                          const auto ib = static_cast<Eigen::Index>(b);
                          return sq(ia) != sq(ib) ? sq(ia) < sq(ib) : ids_[a] < ids_[b];
                      });
    candidate_list out;
    out.reserve(m);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t i = order[r];
        out.push_back({ids_[i], std::sqrt(sq(static_cast<Eigen::Index>(i))), positions_[i]});
    }
    return out;
}

void descriptor_database::write(std::ostream& os) const {
    os.write(magic, 6);
    binary::write_le(os, dimension_);
    binary::write_le(os, static_cast<std::uint64_t>(ids_.size()));
    os.write(reinterpret_cast<const char*>(metadata_.checkpoint_hash.data()), 32);
    os.write(reinterpret_cast<const char*>(metadata_.dataset_hash.data()), 32);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        binary::write_le(os, static_cast<std::uint64_t>(ids_[i]));
        for (int c = 0; c < 3; ++c) {
            binary::write_f64(os, positions_[i](c));
        }
        for (std::uint32_t j = 0; j < dimension_; ++j) {
            binary::write_f32(os, values_[i * dimension_ + j]);
        }
    }
}

descriptor_database descriptor_database::read(std::istream& is, const std::string& source) {
    binary::expect_magic(is, magic, source);
    const auto dim = binary::read_le<std::uint32_t>(is, "database dimension");
    const auto count = binary::read_le<std::uint64_t>(is, "database count");
    database_metadata meta;
    if (!is.read(reinterpret_cast<char*>(meta.checkpoint_hash.data()), 32) ||
        !is.read(reinterpret_cast<char*>(meta.dataset_hash.data()), 32)) {
        throw error(error_category::format, "truncated metadata in " + source);
    }
    descriptor_database db(dim, meta);
    for (std::uint64_t i = 0; i < count; ++i) {
        global_descriptor d;
        d.frame_id = binary::read_le<std::uint64_t>(is, "frame id");
        for (int c = 0; c < 3; ++c) {
            d.position(c) = binary::read_f64(is, "position");
        }
        d.values.resize(dim);
        for (std::uint32_t j = 0; j < dim; ++j) {
            d.values(j) = binary::read_f32(is, "descriptor");
        }
        db.add(d);
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw error(error_category::format, "trailing bytes in " + source);
    }
    return db;
}

void descriptor_database::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw error(error_category::io, "cannot write database " + path.string());
    }
    write(os);
    if (!os) {
        throw error(error_category::io, "failed writing database " + path.string());
    }
}

descriptor_database descriptor_database::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw error(error_category::io, "cannot open database " + path.string());
    }
    return read(is, path.string());
}

bool descriptor_database::operator==(const descriptor_database& other) const {
    return dimension_ == other.dimension_ && metadata_ == other.metadata_ && ids_ == other.ids_ &&
           positions_ == other.positions_ && values_ == other.values_;
}

descriptor_database build(const std::vector<frame>& frames, retrieval::grm& net, const backbone& provider,
                          const database_metadata& metadata, const depth::densify_config& densify) {
    descriptor_database db(static_cast<std::uint32_t>(2 * net.config().descriptor_dim), metadata);
    for (const auto& f : frames) {
        try {
            db.add(retrieval::describe(f, provider, net, densify));
        } catch (const error& e) {
            throw error(e.category(), "frame " + std::to_string(f.id) + ": " + e.what());
        }
    }
    return db;
}

} // namespace mpr::index
