#include "mpr/pipeline/pipeline.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "mpr/backbone/fixture_backbone.hpp"
#include "mpr/core/dataset.hpp"
#include "mpr/core/error.hpp"
#include "mpr/retrieval/checkpoint.hpp"

namespace mpr::pipeline {

std::unique_ptr<backbone> make_provider(const pipeline_config& config, const std::filesystem::path& dataset_dir) {
    if (config.provider.kind == provider_kind::fixture) {
        std::filesystem::path dir = config.provider.fixture_dir;
        if (dir.is_relative()) {
            dir = dataset_dir / dir;
        }
        return std::make_unique<fixture_backbone>(dir, config.network.patch_stride);
    }
    std::shared_ptr<const synthetic::scene_catalog> catalog;
    const auto world = dataset_dir / world_file;
    if (std::filesystem::exists(world)) {
        catalog = std::make_shared<const synthetic::scene_catalog>(synthetic::scene_catalog::load(world));
    } else {
        spdlog::warn("no {} in {}, synthetic provider uses image-only outputs", world_file, dataset_dir.string());
    }
    return std::make_unique<synthetic_backbone>(config.provider.synthetic, std::move(catalog));
}

frame_store::frame_store(const std::vector<frame>& frames) {
    for (const auto& f : frames) {
        by_id_.emplace(f.id, &f);
    }
}

const frame* frame_store::find(const frame_id_t id) const {
    const auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : it->second;
}

rerank::frame_lookup frame_store::lookup() const {
    return [this](const frame_id_t id) { return find(id); };
}

train_outcome run_train(const pipeline_config& config, const std::vector<frame>& frames, const backbone& provider) {
    train_outcome out{retrieval::grm(config.network), {}};
    out.report = training::train(frames, provider, out.net, config.training, config.densify);
    if (out.report.backbone_before != out.report.backbone_after) {
        throw error(error_category::provider, "backbone state changed during training");
    }
    return out;
}

index::descriptor_database run_build_db(const pipeline_config& config, const std::vector<frame>& frames,
                                        retrieval::grm& net, const backbone& provider,
                                        const sha256_digest& checkpoint_digest) {
    return index::build(frames, net, provider, {checkpoint_digest, dataset_hash(frames)}, config.densify);
}

rerank::rerank_result run_query(const pipeline_config& config, const frame& query,
                                const index::descriptor_database& db, const frame_store& store, retrieval::grm& net,
                                const backbone& provider, const std::size_t k, const bool rerank,
                                const bool keep_tracks) {
    const global_descriptor d = retrieval::describe(query, provider, net, config.densify);
    const index::candidate_list candidates =
        eval::retrieve(db, d.values, query.id, k, config.evaluation.exclusion_window);
    if (!rerank) {
        return rerank::passthrough(query.id, candidates);
    }
    return rerank::rerank_candidates(query, candidates, store.lookup(), provider, config.rerank, keep_tracks);
}

retrieval::grm load_network(const pipeline_config& config, const std::filesystem::path& checkpoint) {
    return retrieval::load_checkpoint(checkpoint, config.network);
}

void check_database(const index::descriptor_database& db, const std::filesystem::path& checkpoint) {
    if (db.metadata().checkpoint_hash != retrieval::file_digest(checkpoint)) {
        throw error(error_category::config, "database was built from a different checkpoint than " +
                                                checkpoint.string());
    }
}

evaluation_outputs run_evaluate(const pipeline_config& config, const std::vector<frame>& frames,
                                const index::descriptor_database& db, retrieval::grm& net, const backbone& provider,
                                const std::filesystem::path& out_dir, const bool keep_tracks) {
    std::filesystem::create_directories(out_dir);
    const std::vector<frame> queries = select_sequence(frames, config.evaluation.query_sequence);
    const frame_store store(frames);
    evaluation_outputs out;
    out.comparison = eval::compare_pipelines(queries, db, net, provider, store.lookup(), config.evaluation,
                                             config.rerank, config.densify, keep_tracks);
    out.report = out_dir / "report.jsonl";
    out.recall_csv = out_dir / "recall.csv";
    out.detail_csv = out_dir / "detail.csv";
    out.summary = out_dir / "summary.json";
    rerank::write_report(out.report, out.comparison.reports);
    eval::write_recall_csv(out.recall_csv, out.comparison);
    eval::write_detail_csv(out.detail_csv, out.comparison);
    nlohmann::json summary = out.comparison.summary();
    summary["config_hash"] = to_hex(config.hash());
    summary["checkpoint_hash"] = to_hex(db.metadata().checkpoint_hash);
    summary["dataset_hash"] = to_hex(db.metadata().dataset_hash);
    std::ofstream os(out.summary, std::ios::trunc);
    if (!os) {
        throw error(error_category::io, "cannot write " + out.summary.string());
    }
    os << summary.dump(2) << '\n';
    return out;
}

end_to_end_result run_end_to_end(const pipeline_config& config, const std::filesystem::path& work_dir,
                                 const bool keep_tracks) {
    config.validate();
    std::filesystem::create_directories(work_dir);
    const auto eval_dir = work_dir / "world";
    const auto train_dir = work_dir / "train_world";
    spdlog::info("generating evaluation world ({} places x {} traversals)", config.synth.places,
                 config.synth.traversals);
    write_world(generate_world(config.synth), eval_dir);
    spdlog::info("generating training world ({} places x {} traversals)", config.training_world.places,
                 config.training_world.traversals);
    write_world(generate_world(config.training_world), train_dir);

    end_to_end_result out;
    {
        const std::vector<frame> train_frames = load_dataset(train_dir / "manifest.json");
        const auto provider = make_provider(config, train_dir);
        train_outcome trained = run_train(config, train_frames, *provider);
        out.training = trained.report;
        out.checkpoint = work_dir / "model.mprw";
        retrieval::save_checkpoint(out.checkpoint, trained.net);
        training::write_loss_csv(work_dir / "loss.csv", trained.report);
    }

    retrieval::grm net = load_network(config, out.checkpoint);
    const std::vector<frame> frames = load_dataset(eval_dir / "manifest.json");
    const auto provider = make_provider(config, eval_dir);
    const std::vector<frame> database_frames = select_sequence(frames, config.evaluation.database_sequence);
    const index::descriptor_database db =
        run_build_db(config, database_frames, net, *provider, retrieval::file_digest(out.checkpoint));
    out.database = work_dir / "db.mprdb";
    db.save(out.database);
    out.evaluation = run_evaluate(config, frames, db, net, *provider, work_dir / "eval", keep_tracks);
    spdlog::info("retrieval AR@1 {:.4f}, re-ranked AR@1 {:.4f}", out.evaluation.comparison.retrieval.recall.front(),
                 out.evaluation.comparison.reranked.recall.front());
    return out;
}

} // namespace mpr::pipeline
