#include "mpr/training/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "mpr/core/error.hpp"
#include "mpr/core/random.hpp"
#include "mpr/nn/adam.hpp"

namespace mpr::training {

void training_config::validate() const {
    if (epochs < 0 || batch_size < 1 || !(learning_rate >= 0.0) || !(margin_beta >= 0.0)) {
        throw error(error_category::config, "training needs epochs >= 0, batch_size >= 1, learning_rate >= 0");
    }
    mining.validate();
}

nlohmann::json training_config::to_json() const {
    return {{"epochs", epochs},
            {"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"seed", seed},
            {"loss", {{"variant", to_string(variant)}}},
            {"thresholds", {{"positive_m", mining.positive_m}, {"negative_m", mining.negative_m}}},
            {"n_pos", mining.n_pos},
            {"n_neg", mining.n_neg},
            {"margin_beta", margin_beta}};
}

training_config training_config::from_json(const nlohmann::json& j) {
    training_config c;
    for (const auto& [key, value] : j.items()) {
        if (key == "epochs") {
            c.epochs = value.get<int>();
        } else if (key == "learning_rate") {
            c.learning_rate = value.get<double>();
        } else if (key == "batch_size") {
            c.batch_size = value.get<int>();
        } else if (key == "seed") {
            c.seed = value.get<std::uint64_t>();
        } else if (key == "loss") {
            for (const auto& [k, v] : value.items()) {
                if (k != "variant") {
                    throw error(error_category::config, "training.loss: unknown key " + k);
                }
                c.variant = parse_loss_variant(v.get<std::string>());
            }
        } else if (key == "thresholds") {
            for (const auto& [k, v] : value.items()) {
                if (k == "positive_m") {
                    c.mining.positive_m = v.get<double>();
                } else if (k == "negative_m") {
                    c.mining.negative_m = v.get<double>();
                } else {
                    throw error(error_category::config, "training.thresholds: unknown key " + k);
                }
            }
        } else if (key == "n_pos") {
            c.mining.n_pos = value.get<int>();
        } else if (key == "n_neg") {
            c.mining.n_neg = value.get<int>();
        } else if (key == "margin_beta") {
            c.margin_beta = value.get<double>();
        } else {
            throw error(error_category::config, "training: unknown key " + key);
        }
    }
    c.validate();
    return c;
}

loss_value accumulate_tuple(retrieval::grm& net, const input_cache& inputs, const training_tuple& tuple,
                            const training_config& config) {
    const auto input_of = [&](const frame_id_t id) -> const retrieval::grm_input& {
        const auto it = inputs.find(id);
        if (it == inputs.end()) {
            throw error(error_category::invalid_argument, "no network input for frame " + std::to_string(id));
        }
        return it->second;
    };
    nn::tape t;
    const nn::var q = net.describe(t, input_of(tuple.query));
    std::vector<nn::var> pv;
    std::vector<nn::var> nv;
    for (const frame_id_t id : tuple.positives) {
        pv.push_back(net.describe(t, input_of(id)));
    }
    for (const frame_id_t id : tuple.negatives) {
        nv.push_back(net.describe(t, input_of(id)));
    }
    const auto as_vec = [](const nn::var v) -> Eigen::VectorXd { return v.value().row(0).transpose(); };
    std::vector<Eigen::VectorXd> pos;
    std::vector<Eigen::VectorXd> neg;
    for (const auto v : pv) {
        pos.push_back(as_vec(v));
    }
    for (const auto v : nv) {
        neg.push_back(as_vec(v));
    }
    loss_gradient g;
    const loss_value loss = lazy_triplet_loss(as_vec(q), pos, neg, config.margin_beta, config.variant, &g);
    if (!std::isfinite(loss.value)) {
        throw error(error_category::divergence, "non-finite loss for query " + std::to_string(tuple.query));
    }
    if (loss.value > 0.0) {
        std::vector<std::pair<nn::var, nn::matrix>> seeds;
        seeds.emplace_back(q, g.query.transpose());
        for (std::size_t i = 0; i < pv.size(); ++i) {
            seeds.emplace_back(pv[i], g.positives[i].transpose());
        }
        for (std::size_t i = 0; i < nv.size(); ++i) {
            seeds.emplace_back(nv[i], g.negatives[i].transpose());
        }
        t.backward(seeds);
    }
    return loss;
}

training_report train(const std::vector<located_frame>& frames, const input_cache& inputs, retrieval::grm& net,
                      const training_config& config) {
    config.validate();
    const mining_result mined = mine_tuples(frames, config.mining, config.seed);
    if (mined.tuples.empty()) {
        throw error(error_category::invalid_argument,
                    "no training tuples: all " + std::to_string(mined.skipped) + " queries lack positives or negatives");
    }
    training_report report;
    report.tuple_count = mined.tuples.size();
    report.skipped_queries = mined.skipped;
    spdlog::info("training on {} tuples ({} queries skipped), {} parameters", mined.tuples.size(), mined.skipped,
                 net.parameter_count());

    nn::adam optimizer(net.params(), {config.learning_rate});
    rng gen(mix64(config.seed, 0x5EED));
    std::vector<std::size_t> order(mined.tuples.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[gen.below(i)]);
        }
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            net.params().zero_grad();
            for (std::size_t b = start; b < stop; ++b) {
                total += accumulate_tuple(net, inputs, mined.tuples[order[b]], config).value;
            }
            optimizer.step(net.params());
            ++report.steps;
        }
        const double mean = total / static_cast<double>(order.size());
        if (!std::isfinite(mean)) {
            throw error(error_category::divergence, "non-finite loss in epoch " + std::to_string(epoch + 1));
        }
        for (const auto& e : net.params()) {
            if (!e.value.allFinite()) {
                throw error(error_category::divergence, "parameter " + e.name + " became non-finite");
            }
        }
        report.epoch_losses.push_back(mean);
        spdlog::info("epoch {}/{} mean loss {:.6f}", epoch + 1, config.epochs, mean);
    }
    return report;
}

input_cache prepare_inputs(const std::vector<frame>& frames, const backbone& provider,
                           const depth::densify_config& densify) {
    input_cache inputs;
    for (const auto& f : frames) {
        try {
            inputs.emplace(f.id, retrieval::prepare_input(f, provider, densify));
        } catch (const error& e) {
            throw error(e.category(), "frame " + std::to_string(f.id) + ": " + e.what());
        }
    }
    return inputs;
}

training_report train(const std::vector<frame>& frames, const backbone& provider, retrieval::grm& net,
                      const training_config& config, const depth::densify_config& densify) {
    const sha256_digest before = provider.state_checksum();
    const input_cache inputs = prepare_inputs(frames, provider, densify);
    std::vector<located_frame> located;
    for (const auto& f : frames) {
        located.push_back({f.id, f.world_pose.position});
    }
    training_report report = train(located, inputs, net, config);
    report.backbone_before = before;
    report.backbone_after = provider.state_checksum();
    return report;
}

void write_loss_csv(const std::filesystem::path& path, const training_report& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw error(error_category::io, "cannot write " + path.string());
    }
    os << "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t i = 0; i < report.epoch_losses.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g", report.epoch_losses[i]);
        os << (i + 1) << ',' << buf << '\n';
    }
}

} // namespace mpr::training
