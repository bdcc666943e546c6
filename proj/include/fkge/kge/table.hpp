#pragma once
// Dense embedding storage for one graph plus the per-model extra parameters,
// uniform [-6/sqrt(d), 6/sqrt(d)] init with per-vector L2 normalization, and
// the FKE1 checkpoint format.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fkge/kg/graph.hpp"
#include "fkge/util/rng.hpp"

namespace fkge::kge {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

enum class ModelKind : std::uint32_t { TransE = 0, TransH = 1, TransR = 2, TransD = 3 };

const char* model_name(ModelKind m);
ModelKind model_from_name(const std::string& name);

struct TrainConfig {
    ModelKind model = ModelKind::TransE;
    int dim = 100;
    double learning_rate = 0.5;
    int batch_size = 100;
    double margin = 1.0;
    int norm_order = 1;  // 1 or 2
    int epochs_per_round = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

class EmbeddingTable {
public:
    EmbeddingTable() = default;

    ModelKind model() const { return model_; }
    int dim() const { return dim_; }
    Eigen::Index entity_count() const { return entities_.rows(); }
    Eigen::Index relation_count() const { return relations_.rows(); }

    MatRM& entities() { return entities_; }
    const MatRM& entities() const { return entities_; }
    MatRM& relations() { return relations_; }
    const MatRM& relations() const { return relations_; }

    // Model extras; empty matrices when unused by the model.
    MatRM& transh_normals() { return transh_normals_; }
    const MatRM& transh_normals() const { return transh_normals_; }
    std::vector<MatRM>& transr_proj() { return transr_proj_; }
    const std::vector<MatRM>& transr_proj() const { return transr_proj_; }
    MatRM& transd_ent_proj() { return transd_ent_proj_; }
    const MatRM& transd_ent_proj() const { return transd_ent_proj_; }
    MatRM& transd_rel_proj() { return transd_rel_proj_; }
    const MatRM& transd_rel_proj() const { return transd_rel_proj_; }

    // Appends rows for virtual entities/relations. Entity rows take the given
    // vectors; model extras for new rows start at their neutral init.
    void append_entity_rows(const MatRM& rows);
    void append_relation_rows(const MatRM& rows);
    void truncate(Eigen::Index n_entities, Eigen::Index n_relations);

    bool all_finite() const;
    double max_entity_norm() const;

    bool operator==(const EmbeddingTable& other) const;

    static EmbeddingTable init(std::size_t n_entities, std::size_t n_relations,
                               const TrainConfig& cfg);

    friend void save_embeddings(const EmbeddingTable& tbl, std::ostream& out);
    friend EmbeddingTable load_embeddings(std::istream& in);

private:
    ModelKind model_ = ModelKind::TransE;
    int dim_ = 0;
    MatRM entities_;
    MatRM relations_;
    MatRM transh_normals_;
    std::vector<MatRM> transr_proj_;
    MatRM transd_ent_proj_;
    MatRM transd_rel_proj_;
};

EmbeddingTable init_embeddings(const kg::KnowledgeGraph& g, const TrainConfig& cfg);

// FKE1 checkpoint: magic, u32 dim, u64 entity/relation counts, u32 model tag,
// then little-endian f64 payloads.
void save_embeddings(const EmbeddingTable& tbl, std::ostream& out);
void save_embeddings_file(const EmbeddingTable& tbl, const std::filesystem::path& path);
EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings_file(const std::filesystem::path& path);

// Payload bytes a checkpoint of this shape occupies (sizing checks only).
std::uint64_t checkpoint_payload_bytes(ModelKind model, std::uint64_t n_entities,
                                       std::uint64_t n_relations, std::uint32_t dim);

}  // namespace fkge::kge
