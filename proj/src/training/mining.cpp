#include "mpr/training/mining.hpp"

#include "mpr/core/error.hpp"
#include "mpr/core/random.hpp"

namespace mpr::training {

namespace {

std::vector<frame_id_t> sample(std::vector<frame_id_t> pool, const int count, rng& gen) {
    for (int i = 0; i < count; ++i) {
        const auto j = static_cast<std::size_t>(i) + gen.below(pool.size() - static_cast<std::size_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(count));
    return pool;
}

} // namespace

void mining_config::validate() const {
    if (!(positive_m > 0.0) || !(negative_m >= positive_m) || n_pos < 1 || n_neg < 1) {
        throw error(error_category::config, "mining needs 0 < positive_m <= negative_m and n_pos, n_neg >= 1");
    }
}

mining_result mine_tuples(const std::vector<located_frame>& frames, const mining_config& config,
                          const std::uint64_t seed) {
    config.validate();
    rng gen(mix64(seed, 0x7E1));
    mining_result out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::vector<frame_id_t> pos;
        std::vector<frame_id_t> neg;
        for (std::size_t j = 0; j < frames.size(); ++j) {
            if (i == j) {
                continue;
            }
            const double d = (frames[i].position - frames[j].position).norm();
            if (d <= config.positive_m) {
                pos.push_back(frames[j].id);
            } else if (d > config.negative_m) {
                neg.push_back(frames[j].id);
            }
        }
        if (pos.size() < static_cast<std::size_t>(config.n_pos) || neg.size() < static_cast<std::size_t>(config.n_neg)) {
            ++out.skipped;
            continue;
        }
        training_tuple t;
        t.query = frames[i].id;
        t.positives = sample(std::move(pos), config.n_pos, gen);
        t.negatives = sample(std::move(neg), config.n_neg, gen);
        out.tuples.push_back(std::move(t));
    }
    return out;
}

mining_result mine_tuples(const std::vector<frame>& frames, const mining_config& config, const std::uint64_t seed) {
    std::vector<located_frame> located;
    located.reserve(frames.size());
    for (const auto& f : frames) {
        located.push_back({f.id, f.world_pose.position});
    }
    return mine_tuples(located, config, seed);
}

} // namespace mpr::training
