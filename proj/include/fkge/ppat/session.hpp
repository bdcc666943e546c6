#pragma once
// One directed adversarial-translation session between a client graph (owns
// the generator matrix W) and a host graph (owns teacher and student
// discriminators plus the privacy ledger). The client never reveals raw
// embeddings: only W-translated rows go out, only d x d matrices come back.
//
// Both the in-process driver (run_session) and the federation message loop
// drive the same step functions, so protocol tests and benchmarks exercise
// identical code.

#include <optional>

#include "fkge/dp/accountant.hpp"
#include "fkge/kg/graph.hpp"
#include "fkge/ppat/mlp.hpp"

namespace fkge::ppat {

enum class WInit { Orthogonal, Identity };

struct PpatHyper {
    int batch = 32;
    int teachers = 4;
    double lr = 0.02;
    double momentum = 0.9;
    int hidden = 64;
    int max_epochs = 200;
    int min_epochs = 20;
    int patience = 15;
    int moving_avg_window = 5;
    double min_delta = 0.005;   // required drop to count as generator progress
    double ortho_beta = 0.01;   // orthogonality maintenance step for W
    bool csls_refine = false;
    int csls_iters = 5;
    int csls_k = 10;
    int csls_restarts = 4;      // best-scoring training epochs tried as starts
    WInit w_init = WInit::Orthogonal;
};

// Replays the client's 1-hop structure around aligned entities in host terms.
struct VirtualTripleSpec {
    std::uint32_t aligned_entity_index;  // index into the alignment's entity pairs
    std::uint32_t virtual_relation;      // index into TranslatedBundle::virtual_relations
    std::uint32_t virtual_entity;        // index into TranslatedBundle::virtual_entities
    bool center_is_head;
};

struct TranslatedBundle {
    std::uint64_t session_tag = 0;
    MatRM translated;         // aligned entity rows then aligned relation rows
    MatRM virtual_entities;   // translated neighbor-entity embeddings
    MatRM virtual_relations;  // translated joining-relation embeddings
    std::vector<VirtualTripleSpec> virtual_triples;

    bool empty_extension() const {
        return virtual_entities.rows() == 0 && virtual_relations.rows() == 0 &&
               virtual_triples.empty();
    }
};

MatRM random_orthogonal(int dim, util::Rng& rng);

// Raw neighbor material for the virtual extension: one row per distinct
// adjacent entity / joining relation, one spec per 1-hop edge.
struct NeighborPayload {
    MatRM entity_rows;
    MatRM relation_rows;
    std::vector<VirtualTripleSpec> triples;
};

NeighborPayload build_neighbor_payload(const std::vector<kg::NeighborContext>& contexts,
                                       const MatRM& entity_table, const MatRM& relation_table);

// Session-tagged label for a virtual row; the tag keeps ids from distinct
// sessions apart so the host can strip them later.
std::string virtual_label(std::uint64_t session_tag, char kind, std::uint32_t index);

class ClientSession {
public:
    // aligned_rows: n x d client embeddings (entities then relations).
    ClientSession(MatRM aligned_rows, const PpatHyper& hyper, std::uint64_t seed);

    // N(X): raw neighbor material for the virtual extension, set before the
    // bundle is built. Skipped entirely in simple (no-virtual) mode.
    void set_neighbor_payload(MatRM entity_rows, MatRM relation_rows,
                              std::vector<VirtualTripleSpec> triples);

    int dim() const { return static_cast<int>(w_.cols()); }
    Eigen::Index sample_count() const { return x_.rows(); }
    const MatRM& w() const { return w_; }
    void set_w(const MatRM& w) { w_ = w; }

    // G(rows) = rows * W^T; the only transformation applied to outgoing data.
    MatRM translate(const MatRM& rows) const;

    // Full G(X) in batch-sized chunks (probe passes and refine passes).
    std::vector<MatRM> probe_chunks() const;

    // Next training batch of G(X) under the per-epoch shuffle.
    MatRM next_training_batch();

    // Host sends M = (1/m) sum g_m u_m^T; exact dL/dW is M * W^-T.
    void apply_generator_grad(const MatRM& m_matrix);
    void apply_refine(const MatRM& f_matrix);

    // Refinement bookkeeping: per-epoch W snapshots (kept only when the
    // refinement is enabled), candidate restore and final selection.
    static constexpr std::uint32_t kKeepCurrentW = 0xFFFFFFFFu;
    void prepare_refine_probe(std::uint32_t restore_epoch, bool new_candidate);
    void finish_refine(std::uint32_t best_candidate);
    std::size_t snapshot_count() const { return w_snapshots_.size(); }

    TranslatedBundle make_bundle(std::uint64_t session_tag) const;

private:
    MatRM x_;
    MatRM w_;
    MatRM velocity_;
    PpatHyper hyper_;
    util::Rng rng_;
    std::vector<Eigen::Index> order_;
    std::size_t cursor_ = 0;
    MatRM neighbor_entities_;
    MatRM neighbor_relations_;
    std::vector<VirtualTripleSpec> neighbor_triples_;
    std::vector<MatRM> w_snapshots_;       // one per finished epoch
    std::vector<MatRM> candidate_finals_;  // refined W per restart candidate
    bool candidate_open_ = false;
};

class HostSession {
public:
    HostSession(MatRM aligned_rows, const PpatHyper& hyper, double lambda, double delta,
                std::size_t max_moment, std::uint64_t seed);

    Eigen::Index sample_count() const { return y_.rows(); }
    const PpatHyper& hyper() const { return hyper_; }
    int teacher_count() const { return static_cast<int>(teachers_.size()); }
    int batches_per_epoch() const { return batches_per_epoch_; }
    const dp::PrivacyLedger& ledger() const { return ledger_; }
    dp::PrivacyLedger& ledger() { return ledger_; }
    const std::vector<std::vector<Eigen::Index>>& partitions() const { return partitions_; }
    const std::vector<double>& epoch_accuracy() const { return epoch_accuracy_; }
    std::uint64_t labels_issued() const { return labels_issued_; }
    int epochs_run() const { return epoch_; }

    // Probe handling: true once all chunks arrived; equality result follows.
    bool on_probe_chunk(const MatRM& rows);
    bool probe_found_equal() const { return probe_equal_; }
    void reset_probe(int expected_chunks);

    enum class Phase { Continue, Converged };
    struct StepResult {
        Phase phase = Phase::Continue;
        MatRM generator_grad;  // M = (1/m) sum g u^T
    };
    StepResult on_training_batch(const MatRM& fake_rows);

    // M = (1/m) sum_m g_m u_m^T through the current student; the client
    // recovers dL/dW exactly as M W^-T without revealing its inputs.
    MatRM generator_gradient(const MatRM& fake_rows) const;

    // CSLS mutual-neighbor matching + orthogonal Procrustes factor for the
    // received translated rows; applied client-side as W <- F W. Centered
    // mode removes the common offset before matching (endgame sharpening).
    MatRM csls_refine_matrix(const MatRM& translated_rows, bool centered = false) const;

    // Rotation-invariant bootstrap: matches rows by their sorted inner-product
    // profiles (preserved exactly under any orthogonal W) and solves the
    // Procrustes problem on the mutual matches.
    MatRM structural_refine_matrix(const MatRM& translated_rows) const;

    // Solve on the alignment-order pairing itself (correspondences are given
    // in this protocol; matching is only needed for exploratory passes).
    MatRM anchored_refine_matrix(const MatRM& translated_rows) const;
    // Mean cosine over the alignment-order pairing.
    double aligned_cosine(const MatRM& translated_rows) const;

    // Alignment quality the host can judge on its own: coverage-weighted mean
    // cosine over mutual-CSLS-matched pairs.
    double match_score(const MatRM& translated_rows) const;
    const std::vector<double>& epoch_match_scores() const { return epoch_scores_; }

    // --- refinement protocol (driven after training convergence) ---
    struct RefineDirective {
        enum class Kind { RequestProbe, Finish } kind = Kind::Finish;
        std::uint32_t restore_epoch = 0xFFFFFFFFu;  // client snapshot to restore first
        std::uint32_t best_candidate = 0;           // defined when kind == Finish
        bool new_candidate = false;                 // opens a fresh restart candidate
    };
    struct RefineStep {
        MatRM f;                  // orthogonal factor for the completed pass
        RefineDirective next;
    };
    // Builds the restart plan from the best-scoring epochs.
    RefineDirective refine_begin();
    // Feeds one refine-probe chunk; returns true and fills `out` once the
    // pass is complete.
    bool on_refine_probe_chunk(const MatRM& rows, RefineStep* out);

    // Loss values (Eq.-style sums) for inspection and tests.
    double generator_loss_value(const MatRM& fake_rows) const;
    double teacher_loss_value(int teacher_index, const MatRM& fake_rows) const;
    double student_loss_value(const MatRM& fake_rows, const std::vector<int>& labels) const;

    // One teacher/vote/student pass without convergence bookkeeping;
    // returns the released labels (test hook).
    std::vector<int> discriminator_step(const MatRM& fake_rows, bool zero_noise = false);

    const Mlp& student() const { return student_; }
    Mlp& student() { return student_; }
    const Mlp& teacher(int i) const { return teachers_[static_cast<std::size_t>(i)]; }
    Mlp& teacher(int i) { return teachers_[static_cast<std::size_t>(i)]; }

private:
    void finish_epoch();

    MatRM y_;
    PpatHyper hyper_;
    std::vector<Mlp> teachers_;
    std::vector<MlpGrads> teacher_velocity_;
    Mlp student_;
    MlpGrads student_velocity_;
    std::vector<std::vector<Eigen::Index>> partitions_;
    dp::PrivacyLedger ledger_;
    util::Rng noise_rng_;
    util::Rng init_rng_;

    int batches_per_epoch_ = 1;
    int batch_in_epoch_ = 0;
    int epoch_ = 0;
    double epoch_correct_ = 0.0;
    double epoch_total_ = 0.0;
    std::vector<double> epoch_accuracy_;
    double best_moving_avg_ = 0.0;
    bool has_best_ = false;
    int since_best_ = 0;
    bool converged_ = false;
    std::uint64_t labels_issued_ = 0;

    int probe_expected_ = 0;
    int probe_seen_ = 0;
    bool probe_equal_ = true;
    Eigen::Index probe_row_cursor_ = 0;

    MatRM epoch_rows_;  // this epoch's fake rows, for host-side match scoring
    Eigen::Index epoch_rows_cursor_ = 0;
    std::vector<double> epoch_scores_;

    std::vector<std::uint32_t> refine_candidates_;  // epoch ids, best first
    std::size_t refine_candidate_idx_ = 0;
    int refine_pass_idx_ = 0;  // 0..csls_iters: last pass only scores
    std::vector<double> candidate_scores_;
    MatRM refine_buffer_;
    Eigen::Index refine_rows_ = 0;
};

struct SessionResult {
    TranslatedBundle bundle;
    dp::PrivacyLedger ledger;
    MatRM w;
    int epochs = 0;
    bool converged_immediately = false;
    std::uint64_t labels_issued = 0;
};

// In-process driver: probe pass, training loop, optional CSLS refinement,
// final bundle. The federation layer replays the same sequence over the bus.
SessionResult run_session(ClientSession& client, HostSession& host, std::uint64_t session_tag);

}  // namespace fkge::ppat
