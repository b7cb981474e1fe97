#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "mpr/eval/compare.hpp"
#include "mpr/index/database.hpp"
#include "mpr/pipeline/config.hpp"
#include "mpr/rerank/report.hpp"

namespace mpr::pipeline {

/// Synthetic providers pick up `world.json` next to the manifest when present;
/// fixture providers read `provider.fixture_dir`, relative to the dataset.
std::unique_ptr<backbone> make_provider(const pipeline_config& config, const std::filesystem::path& dataset_dir);

/// Frames by id, for candidate image lookup.
class frame_store {
public:
    explicit frame_store(const std::vector<frame>& frames);
    const frame* find(frame_id_t id) const;
    rerank::frame_lookup lookup() const;

private:
    std::map<frame_id_t, const frame*> by_id_;
};

struct train_outcome {
    retrieval::grm net;
    training::training_report report;
};

train_outcome run_train(const pipeline_config& config, const std::vector<frame>& frames, const backbone& provider);

index::descriptor_database run_build_db(const pipeline_config& config, const std::vector<frame>& frames,
                                        retrieval::grm& net, const backbone& provider,
                                        const sha256_digest& checkpoint_digest);

rerank::rerank_result run_query(const pipeline_config& config, const frame& query,
                                const index::descriptor_database& db, const frame_store& store, retrieval::grm& net,
                                const backbone& provider, std::size_t k, bool rerank, bool keep_tracks);

/// Loads a checkpoint and rejects one whose network config differs from `config`.
retrieval::grm load_network(const pipeline_config& config, const std::filesystem::path& checkpoint);

/// Rejects a database built from another checkpoint.
void check_database(const index::descriptor_database& db, const std::filesystem::path& checkpoint);

struct evaluation_outputs {
    eval::comparison comparison;
    std::filesystem::path report;
    std::filesystem::path recall_csv;
    std::filesystem::path detail_csv;
    std::filesystem::path summary;
};

/// Both arms on the query traversal against the database traversal; writes
/// report.jsonl, recall.csv, detail.csv and summary.json into out_dir.
evaluation_outputs run_evaluate(const pipeline_config& config, const std::vector<frame>& frames,
                                const index::descriptor_database& db, retrieval::grm& net, const backbone& provider,
                                const std::filesystem::path& out_dir, bool keep_tracks);

struct end_to_end_result {
    training::training_report training;
    evaluation_outputs evaluation;
    std::filesystem::path checkpoint;
    std::filesystem::path database;
};

/// synth (evaluation and training worlds) -> train -> checkpoint -> build -> evaluate, all under work_dir.
end_to_end_result run_end_to_end(const pipeline_config& config, const std::filesystem::path& work_dir,
                                 bool keep_tracks = false);

} // namespace mpr::pipeline
