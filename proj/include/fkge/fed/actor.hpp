#pragma once
// One knowledge-graph owner: private graph + embedding table, Ready/Busy/
// Sleep state machine, handshake queue, translation sessions in both roles,
// KGEmb-Update with backtrack, and broadcast on improvement.

#include <memory>
#include <set>

#include "fkge/eval/metrics.hpp"
#include "fkge/fed/bus.hpp"
#include "fkge/kg/store.hpp"
#include "fkge/kge/train.hpp"
#include "fkge/ppat/session.hpp"

namespace fkge::fed {

enum class ActorState { Ready, Busy, Sleep };

struct ActorConfig {
    kge::TrainConfig train;
    int initial_epochs = 1000;
    int round_budget = 8;            // post-baseline update rounds (any role)
    bool self_train_when_idle = true;
    bool federate = true;            // baseline mode: no broadcasts, no sessions
    bool fkge_simple = false;        // drop virtual additions
    double lambda = 0.05;
    double delta = 1e-5;
    std::size_t max_moment = 32;
    ppat::PpatHyper ppat;
    std::uint64_t train_seed = 1;
    std::uint64_t eval_seed = 2;
    std::uint64_t session_seed = 3;
    int eval_norm_order = 1;
    // Corruptions per valid triple in the backtrack signal. The negative set
    // is drawn once per actor, so round-over-round scores differ only through
    // the embeddings, not through fresh sampling noise.
    int backtrack_negatives = 4;
};

struct UpdateOutcome {
    bool improved = false;
    double score = 0.0;
    double previous_best = 0.0;
    std::size_t virtual_entities = 0;
    std::size_t virtual_relations = 0;
    std::size_t virtual_triples = 0;
};

struct RoundRecord {
    std::uint64_t logical_time = 0;  // bus send counter at record time
    std::string event;               // baseline | self_train | host_update | client_update
    std::string peer;
    double score = 0.0;
    double best_score = 0.0;
    bool improved = false;
    std::size_t virtual_triples = 0;
    double epsilon_hat = -1.0;       // < 0 when no session ledger applies
};

// Rows every client must keep private; filled at session start, scanned
// against trace payloads afterwards.
class RawRowRegistry {
public:
    void add_table(const kge::EmbeddingTable& tbl) {
        rows_.push_back(tbl.entities());
        rows_.push_back(tbl.relations());
    }
    const std::vector<kge::MatRM>& tables() const { return rows_; }

private:
    std::vector<kge::MatRM> rows_;
};

class OwnerActor : public ActorBase {
public:
    OwnerActor(SimBus& bus, kg::KnowledgeGraph graph, const ActorConfig& cfg);

    void add_alignment(const kg::AlignmentSet* align,
                       const std::unordered_set<kg::EntityId>* neighbor_excluded = nullptr);
    void set_raw_registry(RawRowRegistry* registry) { registry_ = registry; }

    // Baseline training, best snapshot, Ready state, improvement flag set.
    void initialize();

    const std::string& actor_id() const override { return id_; }
    void on_message(const Message& msg) override;
    bool tick() override;
    bool is_quiescent() const override;

    // --- direct-call surface (tests and the in-process runner) ---
    UpdateOutcome apply_bundle(const ppat::TranslatedBundle& bundle,
                               const kg::AlignmentSet& client_oriented, bool as_host);
    void self_train_round();
    double evaluate_valid();

    const kg::KnowledgeGraph& graph() const { return graph_; }
    const kge::EmbeddingTable& table() const { return table_; }
    const kge::EmbeddingTable& best_table() const { return best_table_; }
    double best_score() const { return best_score_; }
    ActorState state() const { return state_; }
    bool improved_flag() const { return improved_flag_; }
    bool parked() const { return parked_; }
    int rounds_used() const { return rounds_used_; }
    const std::vector<RoundRecord>& history() const { return history_; }
    const std::vector<std::string>& session_ledgers() const { return session_ledgers_; }
    std::uint64_t labels_issued() const { return labels_issued_; }
    std::uint64_t ledger_queries() const { return ledger_queries_; }
    const std::deque<std::string>& queue() const { return queue_; }
    double max_session_epsilon() const { return max_session_epsilon_; }

private:
    struct ClientSide {
        enum class Phase { Probe, Training, CslsProbe, AwaitClose };
        std::string host;
        std::uint64_t tag = 0;
        Phase phase = Phase::Probe;
        kg::AlignmentSet oriented;  // client-first
        std::unique_ptr<ppat::ClientSession> session;
    };
    struct HostSide {
        enum class Phase { Probe, Training, CslsProbe, AwaitBundle };
        std::string client;
        std::uint64_t tag = 0;
        Phase phase = Phase::Probe;
        kg::AlignmentSet client_oriented;  // client-first; .second = my local ids
        std::unique_ptr<ppat::HostSession> session;
        int probe_chunks_expected = 0;
        bool first_chunk_seen = false;
    };

    const kg::AlignmentSet* alignment_with(const std::string& peer) const;
    kge::MatRM aligned_rows(const kg::AlignmentSet& client_first, bool client_side) const;
    void build_neighbor_payload(ClientSide& side);
    void start_client_session(const std::string& host, std::uint64_t tag);
    bool attempt_drain();
    void broadcast_requests();
    void send_wakeups();
    void finish_session_common();
    void park_if_exhausted();
    void record(const std::string& event, const std::string& peer, double score, bool improved,
                std::size_t virtual_triples, double eps);
    std::uint64_t round_seed();
    std::uint64_t make_session_tag(const std::string& client);
    int rounds_left() const { return cfg_.round_budget - rounds_used_; }

    bool queue_blocked() const;
    void handle_request(const Message& msg);
    void handle_accept(const Message& msg);
    void handle_reject(const Message& msg);
    void handle_adv(const Message& msg);
    void handle_grad(const Message& msg);
    void handle_bundle(const Message& msg);
    void handle_done(const Message& msg);
    void handle_wakeup(const Message& msg);

    SimBus& bus_;
    std::string id_;
    kg::KnowledgeGraph graph_;
    ActorConfig cfg_;
    kge::EmbeddingTable table_;
    kge::EmbeddingTable best_table_;
    double best_score_ = 0.0;
    ActorState state_ = ActorState::Sleep;
    bool improved_flag_ = false;  // U_p
    bool parked_ = false;
    std::deque<std::string> queue_;
    std::set<std::string> queued_;    // dedup
    std::set<std::string> deferred_;  // peers that declined; cleared on their wake signals
    std::vector<const kg::AlignmentSet*> alignments_;
    std::unordered_map<const kg::AlignmentSet*, const std::unordered_set<kg::EntityId>*>
        neighbor_excluded_;
    std::vector<std::string> peers_;  // aligned peer ids, sorted
    std::optional<ClientSide> client_side_;
    std::optional<HostSide> host_side_;
    int rounds_used_ = 0;
    std::uint64_t session_counter_ = 0;
    std::vector<RoundRecord> history_;
    std::vector<kg::Triple> eval_positives_;  // fixed backtrack eval set
    std::vector<kg::Triple> eval_negatives_;
    std::vector<std::string> session_ledgers_;
    std::uint64_t labels_issued_ = 0;
    std::uint64_t ledger_queries_ = 0;
    double max_session_epsilon_ = -1.0;
    bool initialized_ = false;
    RawRowRegistry* registry_ = nullptr;
};

}  // namespace fkge::fed
