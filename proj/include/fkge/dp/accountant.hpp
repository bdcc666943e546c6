#pragma once
// Privacy ledger for one adversarial-translation session: Laplace noise on
// teacher votes, released noisy argmax, per-moment accumulators alpha(l) and
// the derived privacy budget bound.

#include <cstdint>
#include <string>
#include <vector>

#include "fkge/util/rng.hpp"

namespace fkge::dp {

struct VoteRecord {
    std::uint32_t n0 = 0;  // teachers voting 0 (fake)
    std::uint32_t n1 = 0;  // teachers voting 1 (real)
    int label = 0;         // released noisy argmax
};

class PrivacyLedger {
public:
    PrivacyLedger() = default;
    PrivacyLedger(double lambda, double delta, std::size_t max_moment = 32);

    double lambda() const { return lambda_; }
    double delta() const { return delta_; }
    std::size_t max_moment() const { return moments_.size(); }
    std::uint64_t query_count() const { return query_count_; }
    const std::vector<double>& moments() const { return moments_; }
    double moment(std::size_t l) const { return moments_.at(l - 1); }

    void record_query(const VoteRecord& vote);
    double epsilon_hat() const;
    // The moment order achieving the minimum in epsilon_hat.
    std::size_t epsilon_hat_argmin() const;

    std::string to_json() const;
    static PrivacyLedger from_json(const std::string& text);

private:
    double lambda_ = 0.05;
    double delta_ = 1e-5;
    std::vector<double> moments_;  // alpha(l), index l-1
    std::uint64_t query_count_ = 0;
};

// q = (2 + lambda*|n0-n1|) / (4 * exp(lambda*|n0-n1|)); always in (0, 1/2].
double vote_q(double lambda, std::uint32_t n0, std::uint32_t n1);

// Per-query increment to alpha(l): min of the data-independent bound
// 2*lambda^2*l*(l+1) and the data-dependent log term; the log branch is
// skipped whenever exp(2*lambda)*q >= 1 or the term is non-finite.
double moment_increment(double lambda, double q, std::size_t l);

// Noisy argmax over binary teacher votes: argmax_j (n_j + V_j) with fresh
// V_j ~ Lap(1/lambda). Ties after noise break toward 1. Records the query.
VoteRecord pate_vote(const std::vector<int>& teacher_predictions, PrivacyLedger& ledger,
                     util::Rng& rng);

// Deterministic variant with the noise values supplied (test hook).
VoteRecord pate_vote_with_noise(const std::vector<int>& teacher_predictions,
                                PrivacyLedger& ledger, double v0, double v1);

}  // namespace fkge::dp
