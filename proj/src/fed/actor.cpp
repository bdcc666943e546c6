#include "fkge/fed/actor.hpp"

#include <algorithm>
#include <stdexcept>

namespace fkge::fed {

using util::fnv1a;

OwnerActor::OwnerActor(SimBus& bus, kg::KnowledgeGraph graph, const ActorConfig& cfg)
    : bus_(bus), id_(graph.id()), graph_(std::move(graph)), cfg_(cfg) {
    if (id_.empty()) throw std::invalid_argument("actor graph needs a non-empty id");
    cfg_.train.validate();
}

void OwnerActor::add_alignment(const kg::AlignmentSet* align,
                               const std::unordered_set<kg::EntityId>* neighbor_excluded) {
    if (!align->involves(id_)) throw std::invalid_argument("alignment does not involve " + id_);
    if (align->size() == 0) return;
    alignments_.push_back(align);
    if (neighbor_excluded) neighbor_excluded_[align] = neighbor_excluded;
    const std::string peer = align->graph_a == id_ ? align->graph_b : align->graph_a;
    peers_.push_back(peer);
    std::sort(peers_.begin(), peers_.end());
}

void OwnerActor::initialize() {
    graph_.mark_base();
    table_ = kge::init_embeddings(graph_, cfg_.train);
    kge::train_epochs(graph_, table_, cfg_.train, util::derive_seed(cfg_.train_seed, fnv1a(id_), 0),
                      cfg_.initial_epochs);
    best_table_ = table_;
    best_score_ = evaluate_valid();
    state_ = ActorState::Ready;
    improved_flag_ = true;  // the baseline itself is the first improvement
    initialized_ = true;
    record("baseline", "", best_score_, true, 0, -1.0);
}

const kg::AlignmentSet* OwnerActor::alignment_with(const std::string& peer) const {
    for (const auto* a : alignments_)
        if (a->involves(peer)) return a;
    return nullptr;
}

kge::MatRM OwnerActor::aligned_rows(const kg::AlignmentSet& client_first, bool client_side) const {
    const auto n_ent = client_first.entity_pairs.size();
    const auto n_rel = client_first.relation_pairs.size();
    kge::MatRM rows(static_cast<Eigen::Index>(n_ent + n_rel), table_.dim());
    for (std::size_t i = 0; i < n_ent; ++i) {
        const auto id = client_side ? client_first.entity_pairs[i].first
                                    : client_first.entity_pairs[i].second;
        rows.row(static_cast<Eigen::Index>(i)) = table_.entities().row(id);
    }
    for (std::size_t j = 0; j < n_rel; ++j) {
        const auto id = client_side ? client_first.relation_pairs[j].first
                                    : client_first.relation_pairs[j].second;
        rows.row(static_cast<Eigen::Index>(n_ent + j)) = table_.relations().row(id);
    }
    return rows;
}

std::uint64_t OwnerActor::round_seed() {
    return util::derive_seed(cfg_.train_seed, fnv1a(id_),
                             static_cast<std::uint64_t>(rounds_used_));
}

std::uint64_t OwnerActor::make_session_tag(const std::string& client) {
    ++session_counter_;
    return util::splitmix64(fnv1a(id_) ^ util::splitmix64(fnv1a(client)) ^
                            (session_counter_ * 0x9E3779B97F4A7C15ull) ^ cfg_.session_seed);
}

double OwnerActor::evaluate_valid() {
    if (eval_positives_.empty()) {
        // Fixed eval set: valid positives with k corruptions each, drawn once.
        util::Rng rng(util::derive_seed(cfg_.eval_seed, fnv1a(id_)));
        const auto n_ent = graph_.base_entity_count() ? graph_.base_entity_count()
                                                      : graph_.entity_count();
        for (std::size_t i = 0; i < graph_.triple_count(); ++i) {
            if (graph_.split_of(i) != kg::Split::Valid) continue;
            const auto& pos = graph_.triples()[i];
            eval_positives_.push_back(pos);
            for (int k = 0; k < std::max(1, cfg_.backtrack_negatives); ++k) {
                kg::Triple neg = pos;
                for (int attempt = 0; attempt < 500; ++attempt) {
                    neg = pos;
                    const auto cand = static_cast<kg::EntityId>(rng.uniform_int(n_ent));
                    if (rng.coin()) neg.head = cand;
                    else neg.tail = cand;
                    if (neg != pos && !graph_.contains(neg)) break;
                }
                eval_negatives_.push_back(neg);
            }
        }
        if (eval_positives_.empty()) throw std::runtime_error(id_ + " has an empty valid split");
    }
    const int k = std::max(1, cfg_.backtrack_negatives);
    std::map<kg::RelationId, std::vector<eval::LabeledScore>> by_rel;
    for (std::size_t i = 0; i < eval_positives_.size(); ++i) {
        const auto& pos = eval_positives_[i];
        by_rel[pos.relation].push_back(
            {kge::score_triple(table_, pos, cfg_.eval_norm_order), true});
        for (int j = 0; j < k; ++j) {
            const auto& neg = eval_negatives_[i * static_cast<std::size_t>(k) +
                                              static_cast<std::size_t>(j)];
            by_rel[neg.relation].push_back(
                {kge::score_triple(table_, neg, cfg_.eval_norm_order), false});
        }
    }
    return eval::classify_with_thresholds(by_rel, by_rel);
}

void OwnerActor::record(const std::string& event, const std::string& peer, double score,
                        bool improved, std::size_t virtual_triples, double eps) {
    history_.push_back(
        {bus_.logical_time(), event, peer, score, best_score_, improved, virtual_triples, eps});
}

UpdateOutcome OwnerActor::apply_bundle(const ppat::TranslatedBundle& bundle,
                                       const kg::AlignmentSet& client_oriented, bool as_host) {
    const auto n_ent = client_oriented.entity_pairs.size();
    const auto n_rel = client_oriented.relation_pairs.size();
    if (static_cast<std::size_t>(bundle.translated.rows()) != n_ent + n_rel)
        throw std::invalid_argument("bundle row count does not match alignment");
    if (bundle.translated.cols() != table_.dim())
        throw std::invalid_argument("bundle dimension does not match table");

    UpdateOutcome outcome;
    outcome.previous_best = best_score_;

    for (std::size_t i = 0; i < n_ent; ++i) {
        const auto id =
            as_host ? client_oriented.entity_pairs[i].second : client_oriented.entity_pairs[i].first;
        table_.entities().row(id) = bundle.translated.row(static_cast<Eigen::Index>(i));
    }
    for (std::size_t j = 0; j < n_rel; ++j) {
        const auto id = as_host ? client_oriented.relation_pairs[j].second
                                : client_oriented.relation_pairs[j].first;
        table_.relations().row(id) = bundle.translated.row(static_cast<Eigen::Index>(n_ent + j));
    }

    if (as_host && !cfg_.fkge_simple && !bundle.empty_extension()) {
        const auto rel_base = static_cast<kg::RelationId>(graph_.relation_count());
        for (Eigen::Index i = 0; i < bundle.virtual_relations.rows(); ++i)
            graph_.add_virtual_relation(ppat::virtual_label(bundle.session_tag, 'r',
                                                            static_cast<std::uint32_t>(i)));
        table_.append_relation_rows(bundle.virtual_relations);
        const auto ent_base = static_cast<kg::EntityId>(graph_.entity_count());
        for (Eigen::Index i = 0; i < bundle.virtual_entities.rows(); ++i)
            graph_.add_virtual_entity(ppat::virtual_label(bundle.session_tag, 'e',
                                                          static_cast<std::uint32_t>(i)));
        table_.append_entity_rows(bundle.virtual_entities);
        for (const auto& spec : bundle.virtual_triples) {
            if (spec.aligned_entity_index >= n_ent)
                throw std::invalid_argument("virtual triple references unknown aligned entity");
            const auto center = client_oriented.entity_pairs[spec.aligned_entity_index].second;
            const auto vent = static_cast<kg::EntityId>(ent_base + spec.virtual_entity);
            const auto vrel = static_cast<kg::RelationId>(rel_base + spec.virtual_relation);
            const kg::Triple t = spec.center_is_head ? kg::Triple{center, vrel, vent}
                                                     : kg::Triple{vent, vrel, center};
            graph_.add_virtual_triple(t);
            ++outcome.virtual_triples;
        }
        outcome.virtual_entities = static_cast<std::size_t>(bundle.virtual_entities.rows());
        outcome.virtual_relations = static_cast<std::size_t>(bundle.virtual_relations.rows());
    }

    ++rounds_used_;
    kge::train_epochs(graph_, table_, cfg_.train, round_seed());
    outcome.score = evaluate_valid();

    graph_.strip_virtual();
    table_.truncate(static_cast<Eigen::Index>(graph_.base_entity_count()),
                    static_cast<Eigen::Index>(graph_.base_relation_count()));

    if (outcome.score > best_score_) {
        outcome.improved = true;
        best_score_ = outcome.score;
        best_table_ = table_;
        improved_flag_ = true;
    } else {
        table_ = best_table_;
    }
    return outcome;
}

void OwnerActor::self_train_round() {
    ++rounds_used_;
    kge::train_epochs(graph_, table_, cfg_.train, round_seed());
    const double score = evaluate_valid();
    bool improved = false;
    if (score > best_score_) {
        improved = true;
        best_score_ = score;
        best_table_ = table_;
        improved_flag_ = true;
    } else {
        table_ = best_table_;
    }
    record("self_train", "", score, improved, 0, -1.0);
}

void OwnerActor::broadcast_requests() {
    for (const auto& peer : peers_)
        bus_.send({MessageKind::HandshakeRequest, id_, peer, {}, 0});
}

void OwnerActor::send_wakeups() {
    for (const auto& peer : peers_)
        bus_.send({MessageKind::WakeUpBroadcast, id_, peer, {}, 0});
}

void OwnerActor::park_if_exhausted() {
    if (!parked_ && rounds_left() <= 0 && state_ != ActorState::Busy) {
        parked_ = true;
        state_ = ActorState::Sleep;
        queue_.clear();
        queued_.clear();
    }
}

bool OwnerActor::attempt_drain() {
    if (state_ != ActorState::Ready || parked_ || !cfg_.federate || rounds_left() <= 0)
        return false;
    for (std::size_t i = 0; i < queue_.size(); ++i) {
        const std::string client = queue_[i];
        if (deferred_.count(client)) continue;
        if (const auto scripted = bus_.scripted_next()) {
            if (scripted->first != client || scripted->second != id_) continue;
        }
        queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(i));
        queued_.erase(client);

        const auto* align = alignment_with(client);
        if (!align) {
            bus_.send({MessageKind::HandshakeReject, id_, client, {}, 0});
            return true;
        }
        HostSide side;
        side.client = client;
        side.tag = make_session_tag(client);
        side.client_oriented = align->oriented(client);
        const auto y = aligned_rows(side.client_oriented, false);
        side.session = std::make_unique<ppat::HostSession>(
            y, cfg_.ppat, cfg_.lambda, cfg_.delta, cfg_.max_moment,
            util::derive_seed(cfg_.session_seed, side.tag, 0x686F7374ull));
        const auto n = y.rows();
        const auto b = std::min<Eigen::Index>(cfg_.ppat.batch, n);
        side.probe_chunks_expected = static_cast<int>((n + b - 1) / b);
        side.session->reset_probe(side.probe_chunks_expected);
        side.phase = HostSide::Phase::Probe;
        host_side_ = std::move(side);
        state_ = ActorState::Busy;
        bus_.send({MessageKind::HandshakeAccept, id_, client, encode_accept(host_side_->tag), 0});
        return true;
    }
    return false;
}

void OwnerActor::start_client_session(const std::string& host, std::uint64_t tag) {
    const auto* align = alignment_with(host);
    if (!align) {
        bus_.send({MessageKind::HandshakeReject, id_, host, {}, 0});
        return;
    }
    ClientSide side;
    side.host = host;
    side.tag = tag;
    side.oriented = align->oriented(id_);
    if (registry_) registry_->add_table(table_);
    side.session = std::make_unique<ppat::ClientSession>(
        aligned_rows(side.oriented, true), cfg_.ppat,
        util::derive_seed(cfg_.session_seed, tag, 0x636C6E74ull));
    if (!cfg_.fkge_simple) build_neighbor_payload(side);
    side.phase = ClientSide::Phase::Probe;
    client_side_ = std::move(side);
    state_ = ActorState::Busy;
    for (const auto& chunk : client_side_->session->probe_chunks())
        bus_.send({MessageKind::AdvBatch, id_, host, encode_matrix(chunk), 0});
}

void OwnerActor::build_neighbor_payload(ClientSide& side) {
    const std::unordered_set<kg::EntityId>* excluded = nullptr;
    if (const auto* align = alignment_with(side.host)) {
        const auto it = neighbor_excluded_.find(align);
        if (it != neighbor_excluded_.end()) excluded = it->second;
    }
    const auto contexts = kg::extract_neighbor_context(graph_, side.oriented, id_, excluded);
    auto payload = ppat::build_neighbor_payload(contexts, table_.entities(), table_.relations());
    side.session->set_neighbor_payload(std::move(payload.entity_rows),
                                       std::move(payload.relation_rows),
                                       std::move(payload.triples));
}

void OwnerActor::finish_session_common() {
    state_ = ActorState::Ready;
    send_wakeups();
    park_if_exhausted();
    if (!parked_) attempt_drain();
}

void OwnerActor::on_message(const Message& msg) {
    if (!initialized_) throw std::logic_error("actor received message before initialize()");
    switch (msg.kind) {
        case MessageKind::HandshakeRequest: handle_request(msg); return;
        case MessageKind::HandshakeAccept: handle_accept(msg); return;
        case MessageKind::HandshakeReject: handle_reject(msg); return;
        case MessageKind::AdvBatch: handle_adv(msg); return;
        case MessageKind::GradBatch: handle_grad(msg); return;
        case MessageKind::TranslatedBundle: handle_bundle(msg); return;
        case MessageKind::WakeUpBroadcast: handle_wakeup(msg); return;
        case MessageKind::SessionDone: handle_done(msg); return;
    }
}

void OwnerActor::handle_request(const Message& msg) {
    deferred_.erase(msg.from);  // the peer is active again
    if (parked_ || !cfg_.federate) return;
    if (!alignment_with(msg.from)) {
        bus_.send({MessageKind::HandshakeReject, id_, msg.from, {}, 0});
        return;
    }
    if (state_ == ActorState::Sleep) state_ = ActorState::Ready;  // woken by the request
    if (!queued_.count(msg.from)) {
        queue_.push_back(msg.from);
        queued_.insert(msg.from);
    }
    if (state_ == ActorState::Ready) attempt_drain();
}

void OwnerActor::handle_accept(const Message& msg) {
    // Mutual-accept collision: both sides proposed to host the other at the
    // same time. The lower id keeps its host role, the higher id yields and
    // joins as client; the crossing rejects resolve as no-ops.
    if (host_side_ && host_side_->phase == HostSide::Phase::Probe &&
        !host_side_->first_chunk_seen && host_side_->client == msg.from) {
        if (id_ < msg.from) {
            bus_.send({MessageKind::HandshakeReject, id_, msg.from, {}, 0});
            return;
        }
        host_side_.reset();
        state_ = ActorState::Ready;
        if (!queued_.count(msg.from)) {  // their request stays serviceable later
            queue_.push_back(msg.from);
            queued_.insert(msg.from);
        }
    }
    // Busy or out of budget: decline so the host moves on.
    if (state_ == ActorState::Busy || parked_ || rounds_left() <= 0 || !cfg_.federate) {
        bus_.send({MessageKind::HandshakeReject, id_, msg.from, {}, 0});
        return;
    }
    if (state_ == ActorState::Sleep) state_ = ActorState::Ready;
    start_client_session(msg.from, decode_accept(msg.payload));
}

void OwnerActor::handle_reject(const Message& msg) {
    // Our accept was declined; re-queue the client for a later sweep.
    if (host_side_ && host_side_->phase == HostSide::Phase::Probe &&
        !host_side_->first_chunk_seen && host_side_->client == msg.from) {
        host_side_.reset();
        state_ = ActorState::Ready;
        deferred_.insert(msg.from);
        if (!queued_.count(msg.from)) {
            queue_.push_back(msg.from);
            queued_.insert(msg.from);
        }
        attempt_drain();
    }
}

void OwnerActor::handle_adv(const Message& msg) {
    if (!host_side_ || host_side_->client != msg.from)
        throw std::logic_error(id_ + " received AdvBatch outside a host session");
    auto& side = *host_side_;
    const auto rows = decode_matrix(msg.payload, table_.dim());
    switch (side.phase) {
        case HostSide::Phase::Probe: {
            if (!side.first_chunk_seen) {
                side.first_chunk_seen = true;
                if (bus_.script_active()) bus_.script_advance();  // session confirmed
            }
            if (side.session->on_probe_chunk(rows)) {
                if (side.session->probe_found_equal()) {
                    side.phase = HostSide::Phase::AwaitBundle;
                    bus_.send({MessageKind::SessionDone, id_, side.client,
                               encode_done(DoneCode::SendBundle), 0});
                } else {
                    side.phase = HostSide::Phase::Training;
                    const kge::MatRM zero = kge::MatRM::Zero(table_.dim(), table_.dim());
                    bus_.send({MessageKind::GradBatch, id_, side.client, encode_matrix(zero), 0});
                }
            }
            return;
        }
        case HostSide::Phase::Training: {
            const auto step = side.session->on_training_batch(rows);
            if (step.phase == ppat::HostSession::Phase::Continue) {
                bus_.send({MessageKind::GradBatch, id_, side.client,
                           encode_matrix(step.generator_grad), 0});
            } else if (cfg_.ppat.csls_refine) {
                side.phase = HostSide::Phase::CslsProbe;
                const auto directive = side.session->refine_begin();
                bus_.send({MessageKind::SessionDone, id_, side.client,
                           encode_done(DoneCode::SendRefineProbe, false, directive.restore_epoch,
                                       directive.new_candidate),
                           0});
            } else {
                side.phase = HostSide::Phase::AwaitBundle;
                bus_.send({MessageKind::SessionDone, id_, side.client,
                           encode_done(DoneCode::SendBundle), 0});
            }
            return;
        }
        case HostSide::Phase::CslsProbe: {
            ppat::HostSession::RefineStep step;
            if (!side.session->on_refine_probe_chunk(rows, &step)) return;
            bus_.send({MessageKind::GradBatch, id_, side.client, encode_matrix(step.f), 0});
            if (step.next.kind == ppat::HostSession::RefineDirective::Kind::RequestProbe) {
                bus_.send({MessageKind::SessionDone, id_, side.client,
                           encode_done(DoneCode::SendRefineProbe, false, step.next.restore_epoch,
                                       step.next.new_candidate),
                           0});
            } else {
                side.phase = HostSide::Phase::AwaitBundle;
                bus_.send({MessageKind::SessionDone, id_, side.client,
                           encode_done(DoneCode::SendBundle, false, step.next.best_candidate),
                           0});
            }
            return;
        }
        case HostSide::Phase::AwaitBundle:
            throw std::logic_error("AdvBatch while awaiting bundle");
    }
}

void OwnerActor::handle_grad(const Message& msg) {
    if (!client_side_ || client_side_->host != msg.from)
        throw std::logic_error(id_ + " received GradBatch outside a client session");
    auto& side = *client_side_;
    const auto m = decode_matrix(msg.payload, table_.dim());
    switch (side.phase) {
        case ClientSide::Phase::Probe:
            side.phase = ClientSide::Phase::Training;
            [[fallthrough]];
        case ClientSide::Phase::Training:
            side.session->apply_generator_grad(m);
            bus_.send({MessageKind::AdvBatch, id_, side.host,
                       encode_matrix(side.session->next_training_batch()), 0});
            return;
        case ClientSide::Phase::CslsProbe:
            side.session->apply_refine(m);
            return;
        case ClientSide::Phase::AwaitClose:
            throw std::logic_error("GradBatch after bundle was sent");
    }
}

void OwnerActor::handle_done(const Message& msg) {
    if (!client_side_ || client_side_->host != msg.from)
        throw std::logic_error(id_ + " received SessionDone outside a client session");
    auto& side = *client_side_;
    const auto done = decode_done(msg.payload);
    switch (done.code) {
        case DoneCode::SendRefineProbe: {
            side.phase = ClientSide::Phase::CslsProbe;
            side.session->prepare_refine_probe(done.index, done.new_candidate);
            for (const auto& chunk : side.session->probe_chunks())
                bus_.send({MessageKind::AdvBatch, id_, side.host, encode_matrix(chunk), 0});
            return;
        }
        case DoneCode::SendBundle: {
            side.session->finish_refine(done.index);
            const auto bundle = side.session->make_bundle(side.tag);
            bus_.send({MessageKind::TranslatedBundle, id_, side.host, encode_bundle(bundle), 0});
            // Both sides adopt the refined embeddings; each side's own
            // backtrack decides whether they stick.
            const auto outcome = apply_bundle(bundle, side.oriented, false);
            record("client_update", side.host, outcome.score, outcome.improved, 0, -1.0);
            side.phase = ClientSide::Phase::AwaitClose;
            return;
        }
        case DoneCode::Complete: {
            client_side_.reset();
            finish_session_common();
            return;
        }
    }
}

void OwnerActor::handle_bundle(const Message& msg) {
    if (!host_side_ || host_side_->client != msg.from ||
        host_side_->phase != HostSide::Phase::AwaitBundle)
        throw std::logic_error(id_ + " received TranslatedBundle outside a host session");
    auto side = std::move(*host_side_);
    host_side_.reset();
    const auto bundle = decode_bundle(msg.payload, table_.dim());
    const auto outcome = apply_bundle(bundle, side.client_oriented, true);
    const auto& ledger = side.session->ledger();
    session_ledgers_.push_back(ledger.to_json());
    labels_issued_ += side.session->labels_issued();
    ledger_queries_ += ledger.query_count();
    max_session_epsilon_ = std::max(max_session_epsilon_, ledger.epsilon_hat());
    record("host_update", side.client, outcome.score, outcome.improved, outcome.virtual_triples,
           ledger.epsilon_hat());
    bus_.send({MessageKind::SessionDone, id_, side.client,
               encode_done(DoneCode::Complete, outcome.improved), 0});
    finish_session_common();
}

void OwnerActor::handle_wakeup(const Message& msg) {
    deferred_.erase(msg.from);
    if (parked_) return;
    if (state_ == ActorState::Sleep && !queue_.empty()) state_ = ActorState::Ready;
    if (state_ == ActorState::Ready) attempt_drain();
}

bool OwnerActor::tick() {
    if (!initialized_ || parked_ || state_ == ActorState::Busy) return false;
    if (rounds_left() <= 0) {
        park_if_exhausted();
        return false;
    }
    if (state_ == ActorState::Sleep) {
        if (queue_.empty()) return false;
        state_ = ActorState::Ready;
    }
    if (!queue_.empty() && attempt_drain()) return true;
    // A queue whose entries are all deferred behaves like an empty one:
    // deferred peers only come back through their own wake signals.
    const bool startable = !queue_.empty() && !queue_blocked();
    if (startable) return false;  // waiting on scripted order
    if (improved_flag_) {
        improved_flag_ = false;
        if (cfg_.federate && !peers_.empty()) {
            broadcast_requests();
            return true;
        }
    }
    if (rounds_left() > 0 && cfg_.self_train_when_idle) {
        self_train_round();
        send_wakeups();  // announce availability; clears peers' deferral of us
        park_if_exhausted();
        return true;
    }
    park_if_exhausted();
    if (!parked_) state_ = ActorState::Sleep;
    return false;
}

bool OwnerActor::queue_blocked() const {
    for (const auto& c : queue_)
        if (!deferred_.count(c)) return false;
    return true;
}

bool OwnerActor::is_quiescent() const {
    if (state_ == ActorState::Busy) return false;
    if (parked_) return true;
    return !improved_flag_ && queue_.empty();
}

}  // namespace fkge::fed
