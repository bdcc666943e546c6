#include "fkge/ppat/session.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

namespace fkge::ppat {

MatRM random_orthogonal(int dim, util::Rng& rng) {
    Eigen::MatrixXd g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = rng.uniform() * 2.0 - 1.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Fix signs so the factorization is unique given g.
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i)
        if (r(i, i) < 0) q.col(i) = -q.col(i);
    return MatRM(q);
}

NeighborPayload build_neighbor_payload(const std::vector<kg::NeighborContext>& contexts,
                                       const MatRM& entity_table, const MatRM& relation_table) {
    std::unordered_map<kg::EntityId, std::uint32_t> ent_index;
    std::unordered_map<kg::RelationId, std::uint32_t> rel_index;
    std::vector<kg::EntityId> ent_order;
    std::vector<kg::RelationId> rel_order;
    NeighborPayload payload;
    for (std::size_t ci = 0; ci < contexts.size(); ++ci) {
        for (const auto& edge : contexts[ci].edges) {
            auto [eit, enew] =
                ent_index.try_emplace(edge.neighbor, static_cast<std::uint32_t>(ent_order.size()));
            if (enew) ent_order.push_back(edge.neighbor);
            auto [rit, rnew] =
                rel_index.try_emplace(edge.relation, static_cast<std::uint32_t>(rel_order.size()));
            if (rnew) rel_order.push_back(edge.relation);
            payload.triples.push_back({static_cast<std::uint32_t>(ci), rit->second, eit->second,
                                       edge.center_is_head});
        }
    }
    payload.entity_rows.resize(static_cast<Eigen::Index>(ent_order.size()), entity_table.cols());
    for (std::size_t i = 0; i < ent_order.size(); ++i)
        payload.entity_rows.row(static_cast<Eigen::Index>(i)) = entity_table.row(ent_order[i]);
    payload.relation_rows.resize(static_cast<Eigen::Index>(rel_order.size()),
                                 relation_table.cols());
    for (std::size_t i = 0; i < rel_order.size(); ++i)
        payload.relation_rows.row(static_cast<Eigen::Index>(i)) = relation_table.row(rel_order[i]);
    return payload;
}

std::string virtual_label(std::uint64_t session_tag, char kind, std::uint32_t index) {
    static const char* digits = "0123456789abcdef";
    std::string out = "__v";
    for (int shift = 60; shift >= 0; shift -= 4)
        out.push_back(digits[(session_tag >> shift) & 0xF]);
    out.push_back('_');
    out.push_back(kind);
    out += std::to_string(index);
    return out;
}

ClientSession::ClientSession(MatRM aligned_rows, const PpatHyper& hyper, std::uint64_t seed)
    : x_(std::move(aligned_rows)),
      hyper_(hyper),
      rng_(util::derive_seed(seed, 0x636C69ull)) {
    if (x_.rows() == 0) throw std::invalid_argument("session needs a non-empty alignment");
    const int d = static_cast<int>(x_.cols());
    w_ = hyper_.w_init == WInit::Identity ? MatRM::Identity(d, d) : random_orthogonal(d, rng_);
    velocity_ = MatRM::Zero(d, d);
    order_.resize(static_cast<std::size_t>(x_.rows()));
    for (Eigen::Index i = 0; i < x_.rows(); ++i) order_[static_cast<std::size_t>(i)] = i;
}

void ClientSession::set_neighbor_payload(MatRM entity_rows, MatRM relation_rows,
                                         std::vector<VirtualTripleSpec> triples) {
    neighbor_entities_ = std::move(entity_rows);
    neighbor_relations_ = std::move(relation_rows);
    neighbor_triples_ = std::move(triples);
}

MatRM ClientSession::translate(const MatRM& rows) const {
    if (rows.cols() != w_.cols()) throw std::invalid_argument("row dimension does not match W");
    return rows * w_.transpose();
}

std::vector<MatRM> ClientSession::probe_chunks() const {
    std::vector<MatRM> chunks;
    const auto n = x_.rows();
    const auto b = static_cast<Eigen::Index>(std::min<Eigen::Index>(hyper_.batch, n));
    for (Eigen::Index start = 0; start < n; start += b) {
        const auto rows = std::min(b, n - start);
        chunks.push_back(translate(x_.middleRows(start, rows)));
    }
    return chunks;
}

MatRM ClientSession::next_training_batch() {
    const auto n = static_cast<std::size_t>(x_.rows());
    const auto b = std::min<std::size_t>(static_cast<std::size_t>(hyper_.batch), n);
    if (cursor_ == 0) rng_.shuffle(order_);
    const std::size_t take = std::min(b, n - cursor_);
    MatRM batch(static_cast<Eigen::Index>(take), x_.cols());
    for (std::size_t i = 0; i < take; ++i) batch.row(static_cast<Eigen::Index>(i)) = x_.row(order_[cursor_ + i]);
    cursor_ += take;
    if (cursor_ >= n) {
        cursor_ = 0;
        // This W produced the pass that the host scores as one epoch.
        if (hyper_.csls_refine) w_snapshots_.push_back(w_);
    }
    return translate(batch);
}

void ClientSession::prepare_refine_probe(std::uint32_t restore_epoch, bool new_candidate) {
    if (new_candidate) {
        if (candidate_open_) candidate_finals_.push_back(w_);
        candidate_open_ = true;
    }
    if (restore_epoch != kKeepCurrentW) w_ = w_snapshots_.at(restore_epoch);
}

void ClientSession::finish_refine(std::uint32_t best_candidate) {
    if (candidate_open_) {
        candidate_finals_.push_back(w_);
        candidate_open_ = false;
    }
    if (!candidate_finals_.empty()) w_ = candidate_finals_.at(best_candidate);
}

void ClientSession::apply_generator_grad(const MatRM& m_matrix) {
    if (m_matrix.rows() != w_.rows() || m_matrix.cols() != w_.cols())
        throw std::invalid_argument("generator gradient has wrong shape");
    // M = dL/dW * W^T, so dL/dW = M * W^-T. Solve W gradW^T = M^T.
    const Eigen::MatrixXd w_dense = w_;
    const Eigen::MatrixXd m_dense = m_matrix.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(w_dense);
    const Eigen::MatrixXd grad_t = lu.solve(m_dense);
    const MatRM grad = MatRM(grad_t.transpose());
    if (!grad.allFinite()) return;  // singular W; skip this step
    velocity_ = hyper_.momentum * velocity_ - hyper_.lr * grad;
    w_ += velocity_;
    if (hyper_.ortho_beta > 0.0)
        w_ = (1.0 + hyper_.ortho_beta) * w_ - hyper_.ortho_beta * (w_ * w_.transpose()) * w_;
}

void ClientSession::apply_refine(const MatRM& f_matrix) {
    if (f_matrix.rows() != w_.rows() || f_matrix.cols() != w_.cols())
        throw std::invalid_argument("refine matrix has wrong shape");
    w_ = f_matrix * w_;
}

TranslatedBundle ClientSession::make_bundle(std::uint64_t session_tag) const {
    TranslatedBundle bundle;
    bundle.session_tag = session_tag;
    bundle.translated = translate(x_);
    if (neighbor_entities_.rows() > 0) bundle.virtual_entities = translate(neighbor_entities_);
    if (neighbor_relations_.rows() > 0) bundle.virtual_relations = translate(neighbor_relations_);
    bundle.virtual_triples = neighbor_triples_;
    return bundle;
}

HostSession::HostSession(MatRM aligned_rows, const PpatHyper& hyper, double lambda, double delta,
                         std::size_t max_moment, std::uint64_t seed)
    : y_(std::move(aligned_rows)),
      hyper_(hyper),
      ledger_(lambda, delta, max_moment),
      noise_rng_(util::derive_seed(seed, 0x6E6F69ull)),
      init_rng_(util::derive_seed(seed, 0x686F73ull)) {
    if (y_.rows() == 0) throw std::invalid_argument("session needs a non-empty alignment");
    const int d = static_cast<int>(y_.cols());
    const auto n = y_.rows();

    int teachers = hyper_.teachers;
    if (n < teachers) teachers = std::max<int>(1, static_cast<int>(n));  // keep partitions non-empty
    teachers_.reserve(static_cast<std::size_t>(teachers));
    teacher_velocity_.resize(static_cast<std::size_t>(teachers));
    for (int i = 0; i < teachers; ++i) {
        teachers_.push_back(Mlp::init(d, hyper_.hidden, init_rng_));
        teacher_velocity_[static_cast<std::size_t>(i)].init_zero(d, hyper_.hidden);
    }
    student_ = Mlp::init(d, hyper_.hidden, init_rng_);
    student_velocity_.init_zero(d, hyper_.hidden);

    // Disjoint, exhaustive real-sample partitions, |D_i| = n/|T| up to remainder.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    init_rng_.shuffle(perm);
    partitions_.resize(static_cast<std::size_t>(teachers));
    for (std::size_t i = 0; i < perm.size(); ++i)
        partitions_[i % static_cast<std::size_t>(teachers)].push_back(perm[i]);

    const auto b = std::min<Eigen::Index>(hyper_.batch, n);
    batches_per_epoch_ = static_cast<int>((n + b - 1) / b);
    if (hyper_.csls_refine) epoch_rows_.resize(n, d);
}

void HostSession::reset_probe(int expected_chunks) {
    probe_expected_ = expected_chunks;
    probe_seen_ = 0;
    probe_equal_ = true;
    probe_row_cursor_ = 0;
}

bool HostSession::on_probe_chunk(const MatRM& rows) {
    if (probe_row_cursor_ + rows.rows() > y_.rows())
        throw std::invalid_argument("probe pass longer than alignment");
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        if (rows.row(i) != y_.row(probe_row_cursor_ + i)) probe_equal_ = false;
    probe_row_cursor_ += rows.rows();
    ++probe_seen_;
    return probe_seen_ >= probe_expected_;
}

std::vector<int> HostSession::discriminator_step(const MatRM& fake_rows, bool zero_noise) {
    const auto m = fake_rows.rows();
    const int d = static_cast<int>(fake_rows.cols());
    MlpGrads grads;
    grads.init_zero(d, hyper_.hidden);

    // Teacher step: full fake batch plus the teacher's own real partition.
    for (std::size_t ti = 0; ti < teachers_.size(); ++ti) {
        grads.zero();
        Mlp::Cache cache;
        auto& teacher = teachers_[ti];
        for (Eigen::Index i = 0; i < m; ++i) {
            const double p = clamp_prob(teacher.forward_cached(fake_rows.row(i), cache));
            teacher.backward(cache, 1.0 / (1.0 - p), grads, nullptr);
        }
        for (const auto yi : partitions_[ti]) {
            const double p = clamp_prob(teacher.forward_cached(y_.row(yi), cache));
            teacher.backward(cache, -1.0 / p, grads, nullptr);
        }
        teacher.sgd_momentum_step(grads, teacher_velocity_[ti], hyper_.lr, hyper_.momentum);
    }

    // Noisy aggregation: every student label passes through the ledger.
    std::vector<int> labels(static_cast<std::size_t>(m));
    std::vector<int> preds(teachers_.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        for (std::size_t ti = 0; ti < teachers_.size(); ++ti)
            preds[ti] = teachers_[ti].forward(fake_rows.row(i)) >= 0.5 ? 1 : 0;
        const auto rec = zero_noise ? dp::pate_vote_with_noise(preds, ledger_, 0.0, 0.0)
                                    : dp::pate_vote(preds, ledger_, noise_rng_);
        labels[static_cast<std::size_t>(i)] = rec.label;
        ++labels_issued_;
    }

    // Student step: maximize Eq.-style label likelihood on (G(x), label).
    grads.zero();
    Mlp::Cache cache;
    double correct = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double p = clamp_prob(student_.forward_cached(fake_rows.row(i), cache));
        const int label = labels[static_cast<std::size_t>(i)];
        correct += ((p >= 0.5 ? 1 : 0) == label) ? 1.0 : 0.0;
        const double dLdp =
            -(label == 1 ? 1.0 / p : -1.0 / (1.0 - p)) / static_cast<double>(m);
        student_.backward(cache, dLdp, grads, nullptr);
    }
    student_.sgd_momentum_step(grads, student_velocity_, hyper_.lr, hyper_.momentum);
    epoch_correct_ += correct;
    epoch_total_ += static_cast<double>(m);
    return labels;
}

MatRM HostSession::generator_gradient(const MatRM& fake_rows) const {
    const auto m = fake_rows.rows();
    const int d = static_cast<int>(fake_rows.cols());
    MatRM grad_matrix = MatRM::Zero(d, d);
    MlpGrads scratch;
    scratch.init_zero(d, hyper_.hidden);
    Mlp::Cache cache;
    Vec du(d);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double p = clamp_prob(student_.forward_cached(fake_rows.row(i), cache));
        const double dLdp = -1.0 / ((1.0 - p) * static_cast<double>(m));
        student_.backward(cache, dLdp, scratch, &du);
        // M accumulates g_m u_m^T; only u (already translated) is used.
        grad_matrix += du * fake_rows.row(i);
    }
    return grad_matrix;
}

void HostSession::finish_epoch() {
    const double acc = epoch_total_ > 0 ? epoch_correct_ / epoch_total_ : 0.5;
    epoch_accuracy_.push_back(acc);
    epoch_correct_ = 0.0;
    epoch_total_ = 0.0;
    ++epoch_;
    if (hyper_.csls_refine) {
        epoch_scores_.push_back(match_score(epoch_rows_));
        epoch_rows_cursor_ = 0;
    }

    const int w = hyper_.moving_avg_window;
    if (static_cast<int>(epoch_accuracy_.size()) >= w) {
        double ma = 0.0;
        for (std::size_t i = epoch_accuracy_.size() - static_cast<std::size_t>(w);
             i < epoch_accuracy_.size(); ++i)
            ma += epoch_accuracy_[i];
        ma /= static_cast<double>(w);
        // The student losing discriminative power is generator progress; a new
        // minimum of the moving average resets the patience counter.
        if (!has_best_ || ma < best_moving_avg_ - hyper_.min_delta) {
            best_moving_avg_ = ma;
            has_best_ = true;
            since_best_ = 0;
        } else {
            ++since_best_;
        }
    }
    if (epoch_ >= hyper_.max_epochs) converged_ = true;
    if (epoch_ >= hyper_.min_epochs && since_best_ >= hyper_.patience) converged_ = true;
}

HostSession::StepResult HostSession::on_training_batch(const MatRM& fake_rows) {
    StepResult result;
    if (hyper_.csls_refine) {
        if (epoch_rows_cursor_ + fake_rows.rows() > epoch_rows_.rows())
            throw std::invalid_argument("epoch pass longer than alignment");
        epoch_rows_.middleRows(epoch_rows_cursor_, fake_rows.rows()) = fake_rows;
        epoch_rows_cursor_ += fake_rows.rows();
    }
    discriminator_step(fake_rows);
    result.generator_grad = generator_gradient(fake_rows);
    if (++batch_in_epoch_ >= batches_per_epoch_) {
        batch_in_epoch_ = 0;
        finish_epoch();
    }
    result.phase = converged_ ? Phase::Converged : Phase::Continue;
    return result;
}

double HostSession::generator_loss_value(const MatRM& fake_rows) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < fake_rows.rows(); ++i)
        total += std::log(1.0 - clamp_prob(student_.forward(fake_rows.row(i))));
    return total / static_cast<double>(fake_rows.rows());
}

double HostSession::teacher_loss_value(int teacher_index, const MatRM& fake_rows) const {
    const auto& teacher = teachers_.at(static_cast<std::size_t>(teacher_index));
    double total = 0.0;
    for (Eigen::Index i = 0; i < fake_rows.rows(); ++i)
        total += std::log(1.0 - clamp_prob(teacher.forward(fake_rows.row(i))));
    for (const auto yi : partitions_[static_cast<std::size_t>(teacher_index)])
        total += std::log(clamp_prob(teacher.forward(y_.row(yi))));
    return -total;
}

double HostSession::student_loss_value(const MatRM& fake_rows,
                                       const std::vector<int>& labels) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < fake_rows.rows(); ++i) {
        const double p = clamp_prob(student_.forward(fake_rows.row(i)));
        const int label = labels.at(static_cast<std::size_t>(i));
        total += label == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return total / static_cast<double>(fake_rows.rows());
}

namespace {

struct MutualMatch {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (translated, real)
    std::vector<double> margins;  // csls gap to the runner-up, per pair
    double mean_matched_cos = 0.0;
};

// Mutual nearest neighbors under the hubness-corrected CSLS similarity.
// Both clouds are centered first: a common offset otherwise dominates the
// cosine and washes out the per-point geometry.
MutualMatch mutual_csls_match(const MatRM& translated_rows, const MatRM& real_rows, int k,
                              bool centered) {
    const auto n = translated_rows.rows();
    auto center_normalize = [centered](const MatRM& m) {
        MatRM out = m;
        if (centered) {
            const Eigen::RowVectorXd mean = out.colwise().mean();
            out.rowwise() -= mean;
        }
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            const double norm = out.row(i).norm();
            if (norm > 0) out.row(i) /= norm;
        }
        return out;
    };
    const MatRM t = center_normalize(translated_rows);
    const MatRM y = center_normalize(real_rows);
    const Eigen::MatrixXd cos = t * y.transpose();

    const int kk = std::max(1, std::min<int>(k, static_cast<int>(n)));
    auto mean_topk = [&](const Eigen::VectorXd& sims) {
        std::vector<double> v(sims.data(), sims.data() + sims.size());
        std::nth_element(v.begin(), v.begin() + (kk - 1), v.end(), std::greater<double>());
        double s = 0.0;
        for (int i = 0; i < kk; ++i) s += v[static_cast<std::size_t>(i)];
        return s / static_cast<double>(kk);
    };
    Eigen::VectorXd rt(n), ry(n);
    for (Eigen::Index i = 0; i < n; ++i) rt(i) = mean_topk(cos.row(i).transpose());
    for (Eigen::Index j = 0; j < n; ++j) ry(j) = mean_topk(cos.col(j));

    Eigen::MatrixXd csls = 2.0 * cos;
    csls.colwise() -= rt;
    csls.rowwise() -= ry.transpose();

    std::vector<Eigen::Index> best_for_t(static_cast<std::size_t>(n));
    std::vector<Eigen::Index> best_for_y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index arg;
        csls.row(i).maxCoeff(&arg);
        best_for_t[static_cast<std::size_t>(i)] = arg;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index arg;
        csls.col(j).maxCoeff(&arg);
        best_for_y[static_cast<std::size_t>(j)] = arg;
    }
    MutualMatch match;
    double cos_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = best_for_t[static_cast<std::size_t>(i)];
        if (best_for_y[static_cast<std::size_t>(j)] != i) continue;
        match.pairs.emplace_back(i, j);
        double runner_up = -1e300;
        for (Eigen::Index jj = 0; jj < n; ++jj)
            if (jj != j) runner_up = std::max(runner_up, csls(i, jj));
        match.margins.push_back(std::max(0.0, csls(i, j) - runner_up));
        cos_sum += cos(i, j);
    }
    if (!match.pairs.empty()) match.mean_matched_cos = cos_sum / static_cast<double>(match.pairs.size());
    return match;
}

}  // namespace

namespace {

// Procrustes factor from a matched pair set: trimmed to the most unambiguous
// matches and margin-weighted, solved in centered coordinates.
MatRM procrustes_from_match(const MutualMatch& match, const MatRM& translated_rows,
                            const MatRM& real_rows, bool centered) {
    const int d = static_cast<int>(real_rows.cols());
    if (match.pairs.size() < 2) return MatRM::Identity(d, d);
    std::vector<std::size_t> by_margin(match.pairs.size());
    for (std::size_t p = 0; p < by_margin.size(); ++p) by_margin[p] = p;
    std::sort(by_margin.begin(), by_margin.end(), [&](std::size_t a, std::size_t b) {
        if (match.margins[a] != match.margins[b]) return match.margins[a] > match.margins[b];
        return a < b;
    });
    const std::size_t keep =
        std::max<std::size_t>(std::min<std::size_t>(6, match.pairs.size()),
                              (match.pairs.size() * 2) / 3);
    Eigen::RowVectorXd mu_t = Eigen::RowVectorXd::Zero(d);
    Eigen::RowVectorXd mu_y = Eigen::RowVectorXd::Zero(d);
    if (centered) {
        mu_t = translated_rows.colwise().mean();
        mu_y = real_rows.colwise().mean();
    }
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t p = 0; p < keep; ++p) {
        const auto [i, j] = match.pairs[by_margin[p]];
        const double w = 1e-3 + match.margins[by_margin[p]];
        c += w * ((real_rows.row(j) - mu_y).transpose() * (translated_rows.row(i) - mu_t));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return MatRM(svd.matrixU() * svd.matrixV().transpose());
}

// Matching on rotation-invariant structure: each row's sorted inner-product
// profile against its own side. Identical clouds match exactly from any W.
MutualMatch mutual_profile_match(const MatRM& translated_rows, const MatRM& real_rows) {
    const auto n = translated_rows.rows();
    auto profiles = [n](const MatRM& m) {
        const Eigen::MatrixXd gram = m * m.transpose();
        Eigen::MatrixXd prof(n, n - 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            std::vector<double> row;
            row.reserve(static_cast<std::size_t>(n - 1));
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) row.push_back(gram(i, j));
            std::sort(row.begin(), row.end());
            for (Eigen::Index j = 0; j + 1 < n; ++j) prof(i, j) = row[static_cast<std::size_t>(j)];
        }
        return prof;
    };
    const Eigen::MatrixXd pt = profiles(translated_rows);
    const Eigen::MatrixXd py = profiles(real_rows);
    Eigen::MatrixXd sim(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            sim(i, j) = -(pt.row(i) - py.row(j)).lpNorm<1>();

    MutualMatch match;
    std::vector<Eigen::Index> best_for_t(static_cast<std::size_t>(n));
    std::vector<Eigen::Index> best_for_y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index arg;
        sim.row(i).maxCoeff(&arg);
        best_for_t[static_cast<std::size_t>(i)] = arg;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index arg;
        sim.col(j).maxCoeff(&arg);
        best_for_y[static_cast<std::size_t>(j)] = arg;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = best_for_t[static_cast<std::size_t>(i)];
        if (best_for_y[static_cast<std::size_t>(j)] != i) continue;
        match.pairs.emplace_back(i, j);
        double runner_up = -1e300;
        for (Eigen::Index jj = 0; jj < n; ++jj)
            if (jj != j) runner_up = std::max(runner_up, sim(i, jj));
        match.margins.push_back(std::max(0.0, sim(i, j) - runner_up));
    }
    return match;
}

}  // namespace

MatRM HostSession::structural_refine_matrix(const MatRM& translated_rows) const {
    if (translated_rows.rows() != y_.rows())
        throw std::invalid_argument("refine pass must cover the full alignment");
    return procrustes_from_match(mutual_profile_match(translated_rows, y_), translated_rows, y_,
                                 true);
}

MatRM HostSession::anchored_refine_matrix(const MatRM& translated_rows) const {
    if (translated_rows.rows() != y_.rows())
        throw std::invalid_argument("refine pass must cover the full alignment");
    // Refine probes stream in alignment order: row i of the pass corresponds
    // to y row i by construction, so the pairing needs no matching at all.
    MutualMatch match;
    for (Eigen::Index i = 0; i < y_.rows(); ++i) {
        match.pairs.emplace_back(i, i);
        match.margins.push_back(1.0);
    }
    return procrustes_from_match(match, translated_rows, y_, true);
}

double HostSession::aligned_cosine(const MatRM& translated_rows) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < y_.rows(); ++i) {
        const Vec t = translated_rows.row(i);
        const Vec y = y_.row(i);
        const double denom = t.norm() * y.norm();
        total += denom > 0 ? t.dot(y) / denom : 0.0;
    }
    return total / static_cast<double>(y_.rows());
}

MatRM HostSession::csls_refine_matrix(const MatRM& translated_rows, bool centered) const {
    const auto n = translated_rows.rows();
    if (n != y_.rows()) throw std::invalid_argument("refine pass must cover the full alignment");
    const int d = static_cast<int>(y_.cols());
    const auto match = mutual_csls_match(translated_rows, y_, hyper_.csls_k, centered);
    if (match.pairs.size() < 2) return MatRM::Identity(d, d);
    return procrustes_from_match(match, translated_rows, y_, centered);
}

double HostSession::match_score(const MatRM& translated_rows) const {
    const auto match = mutual_csls_match(translated_rows, y_, hyper_.csls_k, false);
    if (match.pairs.size() < 2) return 0.0;
    const double coverage =
        static_cast<double>(match.pairs.size()) / static_cast<double>(y_.rows());
    return coverage * match.mean_matched_cos;
}

HostSession::RefineDirective HostSession::refine_begin() {
    refine_candidates_.clear();
    candidate_scores_.clear();
    refine_candidate_idx_ = 0;
    refine_pass_idx_ = 0;
    refine_buffer_.resize(y_.rows(), y_.cols());
    refine_rows_ = 0;

    // Restart candidates: best-scoring training epochs with a minimum
    // separation (neighbouring epochs share a basin), then the final W.
    std::vector<std::uint32_t> order(epoch_scores_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (epoch_scores_[a] != epoch_scores_[b]) return epoch_scores_[a] > epoch_scores_[b];
        return a < b;
    });
    const std::size_t keep = static_cast<std::size_t>(std::max(0, hyper_.csls_restarts));
    const std::uint32_t min_gap =
        std::max<std::uint32_t>(25, static_cast<std::uint32_t>(epoch_scores_.size() / 40));
    refine_candidates_.push_back(ClientSession::kKeepCurrentW);  // structural bootstrap
    std::vector<std::uint32_t> epoch_picks;
    for (const auto epoch : order) {
        if (epoch_picks.size() >= keep) break;
        bool far_enough = true;
        for (const auto chosen : epoch_picks) {
            const auto gap = epoch > chosen ? epoch - chosen : chosen - epoch;
            if (gap < min_gap) far_enough = false;
        }
        if (far_enough) epoch_picks.push_back(epoch);
    }
    refine_candidates_.insert(refine_candidates_.end(), epoch_picks.begin(), epoch_picks.end());
    refine_candidates_.push_back(ClientSession::kKeepCurrentW);

    RefineDirective directive;
    directive.kind = RefineDirective::Kind::RequestProbe;
    directive.restore_epoch = refine_candidates_.front();
    directive.new_candidate = true;
    return directive;
}

bool HostSession::on_refine_probe_chunk(const MatRM& rows, RefineStep* out) {
    if (refine_rows_ + rows.rows() > refine_buffer_.rows())
        throw std::invalid_argument("refine pass longer than alignment");
    refine_buffer_.middleRows(refine_rows_, rows.rows()) = rows;
    refine_rows_ += rows.rows();
    if (refine_rows_ < refine_buffer_.rows()) return false;
    refine_rows_ = 0;

    const int d = static_cast<int>(y_.cols());
    if (refine_pass_idx_ < hyper_.csls_iters) {
        const bool structural = refine_candidate_idx_ == 0 && refine_pass_idx_ == 0;
        // The last refining pass anchors on the given alignment-order pairing.
        const bool anchored = refine_pass_idx_ == hyper_.csls_iters - 1;
        const bool centered = refine_pass_idx_ >= (hyper_.csls_iters * 3) / 5;
        out->f = structural  ? structural_refine_matrix(refine_buffer_)
                 : anchored  ? anchored_refine_matrix(refine_buffer_)
                             : csls_refine_matrix(refine_buffer_, centered);
        ++refine_pass_idx_;
        out->next.kind = RefineDirective::Kind::RequestProbe;
        out->next.restore_epoch = ClientSession::kKeepCurrentW;
        out->next.new_candidate = false;
        return true;
    }
    // Scoring pass: candidate finished, no further rotation applied. Probes
    // arrive in alignment order, so the supervised cosine is available here.
    candidate_scores_.push_back(aligned_cosine(refine_buffer_));
    out->f = MatRM::Identity(d, d);
    ++refine_candidate_idx_;
    refine_pass_idx_ = 0;
    if (refine_candidate_idx_ < refine_candidates_.size()) {
        out->next.kind = RefineDirective::Kind::RequestProbe;
        out->next.restore_epoch = refine_candidates_[refine_candidate_idx_];
        out->next.new_candidate = true;
    } else {
        out->next.kind = RefineDirective::Kind::Finish;
        std::uint32_t best = 0;
        for (std::size_t i = 1; i < candidate_scores_.size(); ++i)
            if (candidate_scores_[i] > candidate_scores_[best]) best = static_cast<std::uint32_t>(i);
        out->next.best_candidate = best;
    }
    return true;
}

SessionResult run_session(ClientSession& client, HostSession& host, std::uint64_t session_tag) {
    SessionResult result;

    // Probe pass: identical distributions are unlearnable, so a bit-exact
    // match between G(X) and Y ends the session with zero training.
    auto probe = client.probe_chunks();
    host.reset_probe(static_cast<int>(probe.size()));
    for (const auto& chunk : probe) host.on_probe_chunk(chunk);
    if (host.probe_found_equal()) {
        result.converged_immediately = true;
    } else {
        bool training = true;
        while (training) {
            const MatRM batch = client.next_training_batch();
            const auto step = host.on_training_batch(batch);
            if (step.phase == HostSession::Phase::Converged) training = false;
            else client.apply_generator_grad(step.generator_grad);
        }
        // Refinement keeps raw data local: the client streams G(X) again and
        // only d x d orthogonal factors travel back. The host restarts from
        // the best-scoring epochs it observed and keeps the best outcome.
        if (host.hyper().csls_refine) {
            auto directive = host.refine_begin();
            while (directive.kind == HostSession::RefineDirective::Kind::RequestProbe) {
                client.prepare_refine_probe(directive.restore_epoch, directive.new_candidate);
                HostSession::RefineStep step;
                for (const auto& chunk : client.probe_chunks())
                    if (host.on_refine_probe_chunk(chunk, &step)) break;
                client.apply_refine(step.f);
                directive = step.next;
            }
            client.finish_refine(directive.best_candidate);
        }
    }

    result.bundle = client.make_bundle(session_tag);
    result.ledger = host.ledger();
    result.w = client.w();
    result.epochs = host.epochs_run();
    result.labels_issued = host.labels_issued();
    return result;
}

}  // namespace fkge::ppat
