#pragma once
// Deterministic simulated message bus. Actors exchange typed messages; the
// scheduler policy fixes delivery order, so a (config, seed) pair replays to
// an identical trace. The full trace (with payload bytes) is retained for
// replay checks and the raw-embedding scan.

#include <deque>
#include <functional>
#include <map>
#include <optional>

#include "fkge/fed/message.hpp"
#include "fkge/util/rng.hpp"

namespace fkge::fed {

enum class SchedulerPolicy {
    Fifo,      // global FIFO by send sequence
    Seeded,    // seeded choice among per-channel heads (per-channel FIFO kept)
    Scripted,  // FIFO delivery; session formation follows a pair script
};

struct TraceEntry {
    std::uint64_t seq;
    MessageKind kind;
    std::string from;
    std::string to;
    std::uint64_t digest;
    std::size_t payload_size;
};

class ActorBase {
public:
    virtual ~ActorBase() = default;
    virtual const std::string& actor_id() const = 0;
    virtual void on_message(const Message& msg) = 0;
    // One scheduler step when the bus is quiet; returns true if any work ran.
    virtual bool tick() = 0;
    virtual bool is_quiescent() const = 0;
};

class SimBus {
public:
    SimBus(SchedulerPolicy policy, std::uint64_t scheduler_seed);

    void register_actor(ActorBase* actor);
    bool has_actor(const std::string& id) const { return actors_.count(id) != 0; }

    // Scripted policy: (client, host) pairs consumed in order as sessions form.
    void set_pair_script(std::vector<std::pair<std::string, std::string>> script);
    std::optional<std::pair<std::string, std::string>> scripted_next() const;
    void script_advance();
    bool script_active() const { return policy_ == SchedulerPolicy::Scripted && script_pos_ < script_.size(); }

    // Optional constant per-edge latency in delivery-order units.
    void set_latency(const std::string& from, const std::string& to, std::uint64_t delay);

    void send(Message msg);

    // Runs until quiescent (no messages in flight, no actor has work) or the
    // step limit trips. Returns the number of delivered messages.
    std::uint64_t run(std::uint64_t max_steps = 10'000'000);

    const std::vector<TraceEntry>& trace() const { return trace_; }
    const std::vector<std::vector<std::uint8_t>>& trace_payloads() const { return payloads_; }
    void set_keep_payloads(bool keep) { keep_payloads_ = keep; }

    // Monotone logical clock: messages sent so far.
    std::uint64_t logical_time() const { return next_seq_; }

private:
    std::size_t pick_next();

    SchedulerPolicy policy_;
    util::Rng rng_;
    std::map<std::string, ActorBase*> actors_;  // ordered: deterministic tick order
    std::deque<Message> in_flight_;
    std::vector<TraceEntry> trace_;
    std::vector<std::vector<std::uint8_t>> payloads_;
    bool keep_payloads_ = true;
    std::uint64_t next_seq_ = 0;
    std::vector<std::pair<std::string, std::string>> script_;
    std::size_t script_pos_ = 0;
    std::map<std::pair<std::string, std::string>, std::uint64_t> latency_;
};

}  // namespace fkge::fed
