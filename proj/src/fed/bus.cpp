#include "fkge/fed/bus.hpp"

#include <stdexcept>

namespace fkge::fed {

SimBus::SimBus(SchedulerPolicy policy, std::uint64_t scheduler_seed)
    : policy_(policy), rng_(util::derive_seed(scheduler_seed, 0x627573ull)) {}

void SimBus::register_actor(ActorBase* actor) {
    if (!actors_.emplace(actor->actor_id(), actor).second)
        throw std::invalid_argument("duplicate actor id: " + actor->actor_id());
}

void SimBus::set_pair_script(std::vector<std::pair<std::string, std::string>> script) {
    script_ = std::move(script);
    script_pos_ = 0;
}

std::optional<std::pair<std::string, std::string>> SimBus::scripted_next() const {
    if (policy_ != SchedulerPolicy::Scripted || script_pos_ >= script_.size()) return std::nullopt;
    return script_[script_pos_];
}

void SimBus::script_advance() {
    if (script_pos_ < script_.size()) ++script_pos_;
}

void SimBus::set_latency(const std::string& from, const std::string& to, std::uint64_t delay) {
    latency_[{from, to}] = delay;
}

void SimBus::send(Message msg) {
    if (!actors_.count(msg.to))
        throw std::invalid_argument("message addressed to unregistered actor: " + msg.to);
    if (!actors_.count(msg.from))
        throw std::invalid_argument("message sent by unregistered actor: " + msg.from);
    msg.seq = next_seq_++;
    in_flight_.push_back(std::move(msg));
}

std::size_t SimBus::pick_next() {
    if (policy_ == SchedulerPolicy::Seeded) {
        // Per-channel FIFO: candidates are the lowest-seq message per channel.
        std::map<std::pair<std::string, std::string>, std::size_t> heads;
        for (std::size_t i = 0; i < in_flight_.size(); ++i) {
            const auto key = std::make_pair(in_flight_[i].from, in_flight_[i].to);
            auto it = heads.find(key);
            if (it == heads.end() || in_flight_[i].seq < in_flight_[it->second].seq)
                heads[key] = i;
        }
        std::vector<std::size_t> candidates;
        candidates.reserve(heads.size());
        for (const auto& [key, idx] : heads) candidates.push_back(idx);
        return candidates[rng_.uniform_int(candidates.size())];
    }
    if (!latency_.empty()) {
        // Constant per-edge delay reorders deliveries: lowest (seq + delay) first.
        std::size_t best = 0;
        std::uint64_t best_key = UINT64_MAX;
        for (std::size_t i = 0; i < in_flight_.size(); ++i) {
            const auto it = latency_.find({in_flight_[i].from, in_flight_[i].to});
            const std::uint64_t delay = it == latency_.end() ? 0 : it->second;
            const std::uint64_t key = in_flight_[i].seq + delay;
            if (key < best_key) {
                best_key = key;
                best = i;
            }
        }
        return best;
    }
    return 0;  // global FIFO
}

std::uint64_t SimBus::run(std::uint64_t max_steps) {
    std::uint64_t delivered = 0;
    std::uint64_t steps = 0;
    while (steps++ < max_steps) {
        if (!in_flight_.empty()) {
            const std::size_t idx = pick_next();
            Message msg = std::move(in_flight_[idx]);
            in_flight_.erase(in_flight_.begin() + static_cast<std::ptrdiff_t>(idx));
            trace_.push_back({msg.seq, msg.kind, msg.from, msg.to, payload_digest(msg.payload),
                              msg.payload.size()});
            if (keep_payloads_) payloads_.push_back(msg.payload);
            ++delivered;
            actors_.at(msg.to)->on_message(msg);
            continue;
        }
        bool any_work = false;
        for (auto& [id, actor] : actors_)
            if (actor->tick()) any_work = true;
        // No messages and no actor progress: nothing can change any more.
        if (!any_work && in_flight_.empty()) break;
    }
    return delivered;
}

}  // namespace fkge::fed
