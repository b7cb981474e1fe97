#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "mpr/backbone/fixture_backbone.hpp"
#include "mpr/core/dataset.hpp"
#include "mpr/core/error.hpp"
#include "mpr/core/image_io.hpp"
#include "mpr/pipeline/pipeline.hpp"
#include "mpr/pipeline/visualize.hpp"
#include "mpr/retrieval/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace mpr;

namespace {

struct common_options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string provider;
};

pipeline::pipeline_config resolve_config(const common_options& opts) {
    pipeline::pipeline_config config =
        opts.config_path.empty() ? pipeline::pipeline_config{} : pipeline::pipeline_config::load(opts.config_path);
    if (opts.seed) {
        config.apply_seed(*opts.seed);
    }
    if (!opts.provider.empty()) {
        config.provider.kind = pipeline::parse_provider_kind(opts.provider);
    }
    config.validate();
    return config;
}

fs::path dataset_dir(const fs::path& manifest) {
    const fs::path dir = manifest.parent_path();
    return dir.empty() ? fs::path(".") : dir;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("mpr");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("MPR_LOG")) {
        spdlog::set_level(spdlog::level::from_str(level));
    }
}

const frame& find_frame(const std::vector<frame>& frames, const frame_id_t id) {
    for (const auto& f : frames) {
        if (f.id == id) {
            return f;
        }
    }
    throw error(error_category::invalid_argument, "frame " + std::to_string(id) + " is not in the dataset");
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Multimodal place recognition: synthetic data, training, retrieval, re-ranking, evaluation"};
    app.require_subcommand(1);
    app.fallthrough();

    common_options common;
    app.add_option("--config", common.config_path, "JSON pipeline config")->check(CLI::ExistingFile);
    app.add_option("--seed", common.seed, "Sets every seed");
    app.add_option("--provider", common.provider, "Backbone provider")
        ->check(CLI::IsMember({"synthetic", "fixture"}));

    std::string out;
    std::string data;
    std::string checkpoint;
    std::string db_path;
    std::string report_path;
    std::size_t k = 30;
    bool rerank = true;
    bool tracks = false;
    std::vector<frame_id_t> query_ids;
    std::optional<int> sequence;
    std::optional<int> places;
    std::optional<int> traversals;
    std::optional<double> aliasing;
    std::optional<double> occlusion;
    bool training_world = false;
    std::size_t top = 3;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--places", places);
    synth->add_option("--traversals", traversals);
    synth->add_option("--aliasing", aliasing, "Aliasing pair rate");
    synth->add_option("--occlusion", occlusion, "Occluded frame rate");
    synth->add_flag("--training-world", training_world, "Use the training world spec");

    auto* train = app.add_subcommand("train", "Train the retrieval network");
    train->add_option("--data", data, "Training manifest")->required()->check(CLI::ExistingFile);
    train->add_option("--out", out, "Checkpoint path")->required();

    auto* build = app.add_subcommand("build-db", "Build the descriptor database");
    build->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
    build->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    build->add_option("--out", out, "Database path")->required();
    build->add_option("--sequence", sequence, "Traversal to index");

    auto* query = app.add_subcommand("query", "Retrieve (and re-rank) candidates for query frames");
    query->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
    query->add_option("--db", db_path)->required()->check(CLI::ExistingFile);
    query->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    query->add_option("--query-id", query_ids, "Query frame ids");
    query->add_option("--sequence", sequence, "Query every frame of this traversal");
    query->add_option("--k", k, "Candidates to retrieve");
    query->add_flag("--rerank,!--no-rerank", rerank, "Re-rank the candidates");
    query->add_flag("--tracks", tracks, "Store track points in the report");
    query->add_option("--out", out, "Report path (JSON lines)")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Recall with and without re-ranking");
    evaluate->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--db", db_path)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--k", k, "Retrieval depth");
    evaluate->add_flag("--tracks", tracks, "Store track points in the report");
    evaluate->add_option("--out", out, "Output directory")->required();

    auto* visualize = app.add_subcommand("visualize", "Render query/candidate correspondences");
    visualize->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
    visualize->add_option("--report", report_path)->required()->check(CLI::ExistingFile);
    visualize->add_option("--query-id", query_ids)->required();
    visualize->add_option("--top", top, "Candidates per query");
    visualize->add_option("--out", out, "Output directory")->required();

    auto* densify = app.add_subcommand("densify", "Export metric depth for frames");
    densify->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
    densify->add_option("--frame", query_ids, "Frame ids")->required();
    densify->add_option("--out", out, "Output directory")->required();

    auto* fixtures = app.add_subcommand("export-fixtures", "Record provider outputs as fixture tensors");
    fixtures->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
    fixtures->add_option("--db", db_path, "Also record tracks for the evaluation queries")->check(CLI::ExistingFile);
    fixtures->add_option("--checkpoint", checkpoint)->check(CLI::ExistingFile);
    fixtures->add_option("--out", out, "Fixture directory")->required();

    auto* run = app.add_subcommand("run", "synth, train, build-db and evaluate in one go");
    run->add_option("--out", out, "Work directory")->required();
    run->add_flag("--tracks", tracks, "Store track points in the report");

    auto* print_config = app.add_subcommand("print-config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        pipeline::pipeline_config config = resolve_config(common);

        if (*synth) {
            pipeline::world_spec spec = training_world ? config.training_world : config.synth;
            if (places) {
                spec.places = *places;
            }
            if (traversals) {
                spec.traversals = *traversals;
            }
            if (aliasing) {
                spec.aliasing_rate = *aliasing;
            }
            if (occlusion) {
                spec.occlusion_rate = *occlusion;
            }
            spec.validate(config.training.mining.negative_m);
            const auto world = pipeline::generate_world(spec);
            pipeline::write_world(world, out);
            std::cout << nlohmann::json{{"frames", world.frames.size()},
                                        {"alias_pairs", world.alias_pairs.size()},
                                        {"manifest", (fs::path(out) / "manifest.json").string()}}
                             .dump()
                      << '\n';
        } else if (*train) {
            const auto frames = load_dataset(data);
            const auto provider = pipeline::make_provider(config, dataset_dir(data));
            auto trained = pipeline::run_train(config, frames, *provider);
            retrieval::save_checkpoint(out, trained.net);
            const fs::path csv = fs::path(out).replace_extension(".loss.csv");
            training::write_loss_csv(csv, trained.report);
            std::cout << nlohmann::json{{"checkpoint", out},
                                        {"loss_csv", csv.string()},
                                        {"tuples", trained.report.tuple_count},
                                        {"skipped", trained.report.skipped_queries},
                                        {"epoch_losses", trained.report.epoch_losses}}
                             .dump()
                      << '\n';
        } else if (*build) {
            auto frames = load_dataset(data);
            frames = select_sequence(frames, sequence.value_or(config.evaluation.database_sequence));
            const auto provider = pipeline::make_provider(config, dataset_dir(data));
            auto net = pipeline::load_network(config, checkpoint);
            const auto db = pipeline::run_build_db(config, frames, net, *provider, retrieval::file_digest(checkpoint));
            db.save(out);
            std::cout << nlohmann::json{{"database", out}, {"entries", db.size()}, {"dimension", db.dimension()}}.dump()
                      << '\n';
        } else if (*query) {
            const auto frames = load_dataset(data);
            const auto db = index::descriptor_database::load(db_path);
            pipeline::check_database(db, checkpoint);
            const auto provider = pipeline::make_provider(config, dataset_dir(data));
            auto net = pipeline::load_network(config, checkpoint);
            const pipeline::frame_store store(frames);
            std::vector<const frame*> queries;
            for (const frame_id_t id : query_ids) {
                queries.push_back(&find_frame(frames, id));
            }
            if (sequence) {
                for (const auto& f : frames) {
                    if (f.sequence == *sequence) {
                        queries.push_back(&f);
                    }
                }
            }
            if (queries.empty()) {
                throw error(error_category::invalid_argument, "give --query-id or --sequence");
            }
            std::vector<rerank::rerank_result> results;
            for (const frame* q : queries) {
                results.push_back(pipeline::run_query(config, *q, db, store, net, *provider, k, rerank, tracks));
            }
            rerank::write_report(out, results);
            std::cout << nlohmann::json{{"report", out}, {"queries", results.size()}, {"reranked", rerank}}.dump()
                      << '\n';
        } else if (*evaluate) {
            config.evaluation.retrieval_k = k;
            const auto frames = load_dataset(data);
            const auto db = index::descriptor_database::load(db_path);
            pipeline::check_database(db, checkpoint);
            const auto provider = pipeline::make_provider(config, dataset_dir(data));
            auto net = pipeline::load_network(config, checkpoint);
            const auto outputs = pipeline::run_evaluate(config, frames, db, net, *provider, out, tracks);
            std::cout << outputs.comparison.summary().dump() << '\n';
        } else if (*visualize) {
            const auto frames = load_dataset(data);
            const auto results = rerank::read_report(report_path);
            fs::create_directories(out);
            std::size_t written = 0;
            for (const frame_id_t id : query_ids) {
                const auto it = std::find_if(results.begin(), results.end(),
                                             [&](const rerank::rerank_result& r) { return r.query == id; });
                if (it == results.end()) {
                    throw error(error_category::invalid_argument, "query " + std::to_string(id) + " is not in the report");
                }
                const frame& qf = find_frame(frames, id);
                for (std::size_t i = 0; i < it->ranked.size() && i < top; ++i) {
                    const auto& c = it->ranked[i];
                    if (!c.track) {
                        throw error(error_category::invalid_argument,
                                    "report has no track data for query " + std::to_string(id) +
                                        " (run query or evaluate with --tracks)");
                    }
                    const frame& cf = find_frame(frames, c.candidate.frame_id);
                    const double dist = (cf.world_pose.position - qf.world_pose.position).norm();
                    const camera_image img =
                        pipeline::render_pair(qf.image, cf.image, it->extraction.keypoints.points,
                                              c.track->predicted_points, c.track->sampled_confidences,
                                              c.score.s_total, dist);
                    const fs::path file = fs::path(out) / (std::to_string(id) + "_rank" + std::to_string(i + 1) + "_" +
                                                           std::to_string(c.candidate.frame_id) + ".png");
                    write_png(file, img);
                    ++written;
                }
            }
            std::cout << nlohmann::json{{"images", written}, {"out", out}}.dump() << '\n';
        } else if (*densify) {
            const auto frames = load_dataset(data);
            const auto provider = pipeline::make_provider(config, dataset_dir(data));
            fs::create_directories(out);
            nlohmann::json rows = nlohmann::json::array();
            for (const frame_id_t id : query_ids) {
                const frame& f = find_frame(frames, id);
                const auto embedded = provider->embed(image_view::of(f));
                const auto metric =
                    depth::estimate_metric_depth(embedded.relative_depth, f.cloud, f.calib, config.densify);
                write_tensor_file(fs::path(out) / (std::to_string(id) + ".depth.mprt"), to_tensor(metric.values));
                const double max_depth = std::max(1e-9, metric.values.maxCoeff());
                camera_image img(static_cast<int>(metric.values.rows()), static_cast<int>(metric.values.cols()), 0, 0,
                                 0);
                for (int y = 0; y < img.height(); ++y) {
                    for (int x = 0; x < img.width(); ++x) {
                        const auto v = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - metric.values(y, x) / max_depth)));
                        img.set(x, y, v, v, v);
                    }
                }
                write_png(fs::path(out) / (std::to_string(id) + ".depth.png"), img);
                rows.push_back({{"frame_id", id},
                                {"scale", metric.scale},
                                {"offset", metric.offset},
                                {"anchors", metric.anchor_count},
                                {"degenerate", metric.degenerate}});
            }
            std::cout << rows.dump() << '\n';
        } else if (*fixtures) {
            const auto frames = load_dataset(data);
            const auto provider = pipeline::make_provider(config, dataset_dir(data));
            fs::create_directories(out);
            const recording_backbone recorder(*provider, out);
            for (const auto& f : frames) {
                recorder.embed(image_view::of(f));
                recorder.segment(image_view::of(f));
            }
            std::size_t queries = 0;
            if (!db_path.empty()) {
                if (checkpoint.empty()) {
                    throw error(error_category::invalid_argument, "--db needs --checkpoint");
                }
                const auto db = index::descriptor_database::load(db_path);
                pipeline::check_database(db, checkpoint);
                auto net = pipeline::load_network(config, checkpoint);
                const pipeline::frame_store store(frames);
                for (const auto& f : select_sequence(frames, config.evaluation.query_sequence)) {
                    pipeline::run_query(config, f, db, store, net, recorder, config.evaluation.retrieval_k, true,
                                        false);
                    ++queries;
                }
            }
            std::cout << nlohmann::json{{"fixtures", out}, {"frames", frames.size()}, {"tracked_queries", queries}}.dump()
                      << '\n';
        } else if (*run) {
            const auto result = pipeline::run_end_to_end(config, out, tracks);
            std::cout << result.evaluation.comparison.summary().dump() << '\n';
        } else if (*print_config) {
            std::cout << config.to_json().dump(2) << '\n';
        }
        return 0;
    } catch (const error& e) {
        std::cerr << to_string(e.category()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal: " << e.what() << '\n';
        return 1;
    }
}
