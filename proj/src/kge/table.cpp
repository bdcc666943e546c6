#include "fkge/kge/table.hpp"

#include <fstream>
#include <stdexcept>

#include "fkge/util/binary_io.hpp"

namespace fkge::kge {

const char* model_name(ModelKind m) {
    switch (m) {
        case ModelKind::TransE: return "TransE";
        case ModelKind::TransH: return "TransH";
        case ModelKind::TransR: return "TransR";
        case ModelKind::TransD: return "TransD";
    }
    return "?";
}

ModelKind model_from_name(const std::string& name) {
    if (name == "TransE" || name == "transe") return ModelKind::TransE;
    if (name == "TransH" || name == "transh") return ModelKind::TransH;
    if (name == "TransR" || name == "transr") return ModelKind::TransR;
    if (name == "TransD" || name == "transd") return ModelKind::TransD;
    throw std::invalid_argument("unknown embedding model: " + name);
}

void TrainConfig::validate() const {
    if (dim <= 0) throw std::invalid_argument("embedding dimension must be positive");
    if (learning_rate <= 0) throw std::invalid_argument("learning rate must be positive");
    if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
    if (margin < 0) throw std::invalid_argument("margin must be non-negative");
    if (norm_order != 1 && norm_order != 2) throw std::invalid_argument("norm order must be 1 or 2");
    if (epochs_per_round <= 0) throw std::invalid_argument("epochs per round must be positive");
}

namespace {

void fill_uniform_normalized(MatRM& m, double bound, util::Rng& rng) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rng.uniform_range(-bound, bound);
        const double n = m.row(i).norm();
        if (n > 0) m.row(i) /= n;
    }
}

}  // namespace

EmbeddingTable EmbeddingTable::init(std::size_t n_entities, std::size_t n_relations,
                                    const TrainConfig& cfg) {
    cfg.validate();
    EmbeddingTable tbl;
    tbl.model_ = cfg.model;
    tbl.dim_ = cfg.dim;
    const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
    util::Rng rng(util::derive_seed(cfg.seed, 0x696E6974ull));
    tbl.entities_.resize(static_cast<Eigen::Index>(n_entities), cfg.dim);
    tbl.relations_.resize(static_cast<Eigen::Index>(n_relations), cfg.dim);
    fill_uniform_normalized(tbl.entities_, bound, rng);
    fill_uniform_normalized(tbl.relations_, bound, rng);
    switch (cfg.model) {
        case ModelKind::TransE: break;
        case ModelKind::TransH:
            tbl.transh_normals_.resize(static_cast<Eigen::Index>(n_relations), cfg.dim);
            fill_uniform_normalized(tbl.transh_normals_, bound, rng);
            break;
        case ModelKind::TransR:
            // Identity projections avoid collapsing entity space early on.
            tbl.transr_proj_.assign(n_relations, MatRM::Identity(cfg.dim, cfg.dim));
            break;
        case ModelKind::TransD:
            tbl.transd_ent_proj_ = MatRM::Zero(static_cast<Eigen::Index>(n_entities), cfg.dim);
            tbl.transd_rel_proj_ = MatRM::Zero(static_cast<Eigen::Index>(n_relations), cfg.dim);
            break;
    }
    return tbl;
}

EmbeddingTable init_embeddings(const kg::KnowledgeGraph& g, const TrainConfig& cfg) {
    return EmbeddingTable::init(g.entity_count(), g.relation_count(), cfg);
}

void EmbeddingTable::append_entity_rows(const MatRM& rows) {
    if (rows.cols() != dim_) throw std::invalid_argument("appended entity rows have wrong dimension");
    const Eigen::Index old_n = entities_.rows();
    entities_.conservativeResize(old_n + rows.rows(), Eigen::NoChange);
    entities_.bottomRows(rows.rows()) = rows;
    if (model_ == ModelKind::TransD) {
        transd_ent_proj_.conservativeResize(old_n + rows.rows(), Eigen::NoChange);
        transd_ent_proj_.bottomRows(rows.rows()).setZero();
    }
}

void EmbeddingTable::append_relation_rows(const MatRM& rows) {
    if (rows.cols() != dim_) throw std::invalid_argument("appended relation rows have wrong dimension");
    const Eigen::Index old_n = relations_.rows();
    relations_.conservativeResize(old_n + rows.rows(), Eigen::NoChange);
    relations_.bottomRows(rows.rows()) = rows;
    switch (model_) {
        case ModelKind::TransE: break;
        case ModelKind::TransH: {
            transh_normals_.conservativeResize(old_n + rows.rows(), Eigen::NoChange);
            // Fresh unit normals along distinct axes keep projections sane.
            for (Eigen::Index i = 0; i < rows.rows(); ++i) {
                transh_normals_.row(old_n + i).setZero();
                transh_normals_(old_n + i, (old_n + i) % dim_) = 1.0;
            }
            break;
        }
        case ModelKind::TransR:
            for (Eigen::Index i = 0; i < rows.rows(); ++i)
                transr_proj_.push_back(MatRM::Identity(dim_, dim_));
            break;
        case ModelKind::TransD:
            transd_rel_proj_.conservativeResize(old_n + rows.rows(), Eigen::NoChange);
            transd_rel_proj_.bottomRows(rows.rows()).setZero();
            break;
    }
}

void EmbeddingTable::truncate(Eigen::Index n_entities, Eigen::Index n_relations) {
    if (n_entities > entities_.rows() || n_relations > relations_.rows())
        throw std::invalid_argument("truncate cannot grow a table");
    entities_.conservativeResize(n_entities, Eigen::NoChange);
    relations_.conservativeResize(n_relations, Eigen::NoChange);
    switch (model_) {
        case ModelKind::TransE: break;
        case ModelKind::TransH:
            transh_normals_.conservativeResize(n_relations, Eigen::NoChange);
            break;
        case ModelKind::TransR:
            transr_proj_.resize(static_cast<std::size_t>(n_relations));
            break;
        case ModelKind::TransD:
            transd_ent_proj_.conservativeResize(n_entities, Eigen::NoChange);
            transd_rel_proj_.conservativeResize(n_relations, Eigen::NoChange);
            break;
    }
}

bool EmbeddingTable::all_finite() const {
    auto ok = [](const MatRM& m) { return m.allFinite(); };
    if (!ok(entities_) || !ok(relations_)) return false;
    if (transh_normals_.size() && !ok(transh_normals_)) return false;
    for (const auto& p : transr_proj_)
        if (!ok(p)) return false;
    if (transd_ent_proj_.size() && !ok(transd_ent_proj_)) return false;
    if (transd_rel_proj_.size() && !ok(transd_rel_proj_)) return false;
    return true;
}

double EmbeddingTable::max_entity_norm() const {
    double best = 0.0;
    for (Eigen::Index i = 0; i < entities_.rows(); ++i)
        best = std::max(best, entities_.row(i).norm());
    return best;
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
    auto eq = [](const MatRM& a, const MatRM& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    if (model_ != other.model_ || dim_ != other.dim_) return false;
    if (!eq(entities_, other.entities_) || !eq(relations_, other.relations_)) return false;
    if (!eq(transh_normals_, other.transh_normals_)) return false;
    if (transr_proj_.size() != other.transr_proj_.size()) return false;
    for (std::size_t i = 0; i < transr_proj_.size(); ++i)
        if (!eq(transr_proj_[i], other.transr_proj_[i])) return false;
    return eq(transd_ent_proj_, other.transd_ent_proj_) &&
           eq(transd_rel_proj_, other.transd_rel_proj_);
}

namespace {

void write_matrix(std::ostream& out, const MatRM& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

void read_matrix(std::istream& in, MatRM& m, const char* what) {
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw std::runtime_error(std::string("truncated checkpoint payload reading ") + what);
}

}  // namespace

void save_embeddings(const EmbeddingTable& tbl, std::ostream& out) {
    out.write("FKE1", 4);
    util::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tbl.dim_));
    util::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(tbl.entities_.rows()));
    util::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(tbl.relations_.rows()));
    util::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tbl.model_));
    write_matrix(out, tbl.entities_);
    write_matrix(out, tbl.relations_);
    switch (tbl.model_) {
        case ModelKind::TransE: break;
        case ModelKind::TransH: write_matrix(out, tbl.transh_normals_); break;
        case ModelKind::TransR:
            for (const auto& p : tbl.transr_proj_) write_matrix(out, p);
            break;
        case ModelKind::TransD:
            write_matrix(out, tbl.transd_ent_proj_);
            write_matrix(out, tbl.transd_rel_proj_);
            break;
    }
    if (!out) throw std::runtime_error("checkpoint write failed");
}

EmbeddingTable load_embeddings(std::istream& in) {
    util::expect_magic(in, "FKE1", "FKE1 checkpoint");
    EmbeddingTable tbl;
    tbl.dim_ = static_cast<int>(util::read_pod<std::uint32_t>(in, "dim"));
    const auto n_ent = util::read_pod<std::uint64_t>(in, "entity count");
    const auto n_rel = util::read_pod<std::uint64_t>(in, "relation count");
    const auto tag = util::read_pod<std::uint32_t>(in, "model tag");
    if (tag > 3) throw std::runtime_error("unknown model tag in checkpoint");
    tbl.model_ = static_cast<ModelKind>(tag);
    if (tbl.dim_ <= 0) throw std::runtime_error("corrupt checkpoint dimension");
    tbl.entities_.resize(static_cast<Eigen::Index>(n_ent), tbl.dim_);
    tbl.relations_.resize(static_cast<Eigen::Index>(n_rel), tbl.dim_);
    read_matrix(in, tbl.entities_, "entities");
    read_matrix(in, tbl.relations_, "relations");
    switch (tbl.model_) {
        case ModelKind::TransE: break;
        case ModelKind::TransH:
            tbl.transh_normals_.resize(static_cast<Eigen::Index>(n_rel), tbl.dim_);
            read_matrix(in, tbl.transh_normals_, "relation normals");
            break;
        case ModelKind::TransR:
            tbl.transr_proj_.resize(n_rel);
            for (auto& p : tbl.transr_proj_) {
                p.resize(tbl.dim_, tbl.dim_);
                read_matrix(in, p, "relation projections");
            }
            break;
        case ModelKind::TransD:
            tbl.transd_ent_proj_.resize(static_cast<Eigen::Index>(n_ent), tbl.dim_);
            tbl.transd_rel_proj_.resize(static_cast<Eigen::Index>(n_rel), tbl.dim_);
            read_matrix(in, tbl.transd_ent_proj_, "entity projections");
            read_matrix(in, tbl.transd_rel_proj_, "relation projections");
            break;
    }
    return tbl;
}

void save_embeddings_file(const EmbeddingTable& tbl, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    save_embeddings(tbl, out);
}

EmbeddingTable load_embeddings_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    return load_embeddings(in);
}

std::uint64_t checkpoint_payload_bytes(ModelKind model, std::uint64_t n_entities,
                                       std::uint64_t n_relations, std::uint32_t dim) {
    const std::uint64_t d = dim;
    std::uint64_t doubles = (n_entities + n_relations) * d;
    switch (model) {
        case ModelKind::TransE: break;
        case ModelKind::TransH: doubles += n_relations * d; break;
        case ModelKind::TransR: doubles += n_relations * d * d; break;
        case ModelKind::TransD: doubles += (n_entities + n_relations) * d; break;
    }
    return doubles * sizeof(double);
}

}  // namespace fkge::kge
