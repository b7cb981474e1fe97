#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "json.hpp"

#include "mpr/retrieval/grm.hpp"
#include "mpr/training/loss.hpp"
#include "mpr/training/mining.hpp"

namespace mpr::training {

struct training_config {
    int epochs = 10;
    double learning_rate = 1e-5;
    int batch_size = 4;
    std::uint64_t seed = 0;
    loss_variant variant = loss_variant::paper;
    mining_config mining;
    double margin_beta = 0.5;

    void validate() const;
    nlohmann::json to_json() const;
    static training_config from_json(const nlohmann::json& j);
};

struct training_report {
    /// Mean tuple loss per epoch, measured before each batch's update.
    std::vector<double> epoch_losses;
    std::size_t tuple_count = 0;
    std::size_t skipped_queries = 0;
    std::size_t steps = 0;
    sha256_digest backbone_before{};
    sha256_digest backbone_after{};
};

using input_cache = std::map<frame_id_t, retrieval::grm_input>;

/// Loss and parameter gradients (accumulated into net.params()) for one tuple.
loss_value accumulate_tuple(retrieval::grm& net, const input_cache& inputs, const training_tuple& tuple,
                            const training_config& config);

/// Optimizes `net` over pre-computed network inputs.
training_report train(const std::vector<located_frame>& frames, const input_cache& inputs, retrieval::grm& net,
                      const training_config& config);

/// Computes the inputs with the frozen backbone, then trains.
training_report train(const std::vector<frame>& frames, const backbone& provider, retrieval::grm& net,
                      const training_config& config, const depth::densify_config& densify = {});

input_cache prepare_inputs(const std::vector<frame>& frames, const backbone& provider,
                           const depth::densify_config& densify = {});

/// "epoch,mean_loss" rows.
void write_loss_csv(const std::filesystem::path& path, const training_report& report);

} // namespace mpr::training
