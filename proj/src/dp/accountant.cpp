#include "fkge/dp/accountant.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fkge::dp {

PrivacyLedger::PrivacyLedger(double lambda, double delta, std::size_t max_moment)
    : lambda_(lambda), delta_(delta), moments_(max_moment, 0.0) {
    if (lambda <= 0) throw std::invalid_argument("lambda must be positive");
    if (delta <= 0 || delta >= 1) throw std::invalid_argument("delta must lie in (0,1)");
    if (max_moment < 1) throw std::invalid_argument("need at least one moment order");
}

double vote_q(double lambda, std::uint32_t n0, std::uint32_t n1) {
    const double gap = lambda * std::abs(static_cast<double>(n0) - static_cast<double>(n1));
    return (2.0 + gap) / (4.0 * std::exp(gap));
}

double moment_increment(double lambda, double q, std::size_t l) {
    const double ld = static_cast<double>(l);
    const double data_independent = 2.0 * lambda * lambda * ld * (ld + 1.0);
    const double e2l = std::exp(2.0 * lambda);
    const double denom = 1.0 - e2l * q;
    if (denom <= 0.0) return data_independent;
    const double term =
        (1.0 - q) * std::pow((1.0 - q) / denom, ld) + q * std::exp(2.0 * lambda * ld);
    if (!(term > 0.0) || !std::isfinite(term)) return data_independent;
    const double data_dependent = std::log(term);
    if (!std::isfinite(data_dependent)) return data_independent;
    return std::min(data_independent, data_dependent);
}

void PrivacyLedger::record_query(const VoteRecord& vote) {
    const double q = vote_q(lambda_, vote.n0, vote.n1);
    for (std::size_t l = 1; l <= moments_.size(); ++l)
        moments_[l - 1] += moment_increment(lambda_, q, l);
    ++query_count_;
}

double PrivacyLedger::epsilon_hat() const {
    const double log_inv_delta = std::log(1.0 / delta_);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 1; l <= moments_.size(); ++l)
        best = std::min(best, (moments_[l - 1] + log_inv_delta) / static_cast<double>(l));
    return best;
}

std::size_t PrivacyLedger::epsilon_hat_argmin() const {
    const double log_inv_delta = std::log(1.0 / delta_);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 1;
    for (std::size_t l = 1; l <= moments_.size(); ++l) {
        const double v = (moments_[l - 1] + log_inv_delta) / static_cast<double>(l);
        if (v < best) {
            best = v;
            arg = l;
        }
    }
    return arg;
}

std::string PrivacyLedger::to_json() const {
    nlohmann::json j;
    j["lambda"] = lambda_;
    j["delta"] = delta_;
    j["query_count"] = query_count_;
    j["alpha"] = moments_;
    j["epsilon_hat"] = epsilon_hat();
    return j.dump(2);
}

PrivacyLedger PrivacyLedger::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PrivacyLedger ledger(j.at("lambda").get<double>(), j.at("delta").get<double>(),
                         j.at("alpha").size());
    ledger.moments_ = j.at("alpha").get<std::vector<double>>();
    ledger.query_count_ = j.value("query_count", std::uint64_t{0});
    return ledger;
}

namespace {

VoteRecord release_label(const std::vector<int>& preds, double v0, double v1) {
    if (preds.empty()) throw std::invalid_argument("pate vote needs at least one prediction");
    VoteRecord rec;
    for (const int p : preds) {
        if (p == 0) ++rec.n0;
        else if (p == 1) ++rec.n1;
        else throw std::invalid_argument("teacher predictions must be 0 or 1");
    }
    const double s0 = static_cast<double>(rec.n0) + v0;
    const double s1 = static_cast<double>(rec.n1) + v1;
    rec.label = s1 >= s0 ? 1 : 0;
    return rec;
}

}  // namespace

VoteRecord pate_vote(const std::vector<int>& teacher_predictions, PrivacyLedger& ledger,
                     util::Rng& rng) {
    const double scale = 1.0 / ledger.lambda();
    const double v0 = rng.laplace(scale);
    const double v1 = rng.laplace(scale);
    auto rec = release_label(teacher_predictions, v0, v1);
    ledger.record_query(rec);
    return rec;
}

VoteRecord pate_vote_with_noise(const std::vector<int>& teacher_predictions,
                                PrivacyLedger& ledger, double v0, double v1) {
    auto rec = release_label(teacher_predictions, v0, v1);
    ledger.record_query(rec);
    return rec;
}

}  // namespace fkge::dp
