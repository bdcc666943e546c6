#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fkge/ppat/session.hpp"

using namespace fkge;
using ppat::MatRM;
using ppat::Vec;

namespace {

MatRM random_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
    util::Rng rng(seed);
    MatRM m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = scale * (rng.uniform() * 2.0 - 1.0);
    return m;
}

ppat::PpatHyper small_hyper() {
    ppat::PpatHyper h;
    h.batch = 8;
    h.teachers = 2;
    h.hidden = 8;
    h.max_epochs = 10;
    h.min_epochs = 2;
    h.patience = 3;
    return h;
}

// A teacher that reads coordinate 0: strongly negative -> fake, positive -> real.
ppat::Mlp coordinate_teacher(int dim) {
    auto mlp = ppat::Mlp::constant_half(dim, 1);
    mlp.w1()(0, 0) = 1.0;
    mlp.w2()(0) = 10.0;
    return mlp;
}

}  // namespace

TEST_CASE("generate: identity and zero mappings behave exactly") {
    const auto x = random_rows(5, 4, 1);
    ppat::PpatHyper hyper = small_hyper();
    hyper.w_init = ppat::WInit::Identity;
    ppat::ClientSession client(x, hyper, 3);
    CHECK(client.translate(x) == x);
    client.set_w(MatRM::Zero(4, 4));
    CHECK(client.translate(x) == MatRM::Zero(5, 4));
}

TEST_CASE("generate matches a naive triple-loop matmul oracle") {
    const auto x = random_rows(7, 5, 2);
    const auto w = random_rows(5, 5, 3);
    ppat::PpatHyper hyper = small_hyper();
    ppat::ClientSession client(x, hyper, 4);
    client.set_w(w);
    const auto out = client.translate(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index r = 0; r < 5; ++r) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < 5; ++c) acc += w(r, c) * x(i, c);
            CHECK(out(i, r) == doctest::Approx(acc).epsilon(1e-12));
        }
    CHECK_THROWS_AS(client.translate(random_rows(2, 4, 5)), std::invalid_argument);
}

TEST_CASE("generator loss: constant-half student gives log one-half") {
    const auto y = random_rows(6, 4, 7);
    ppat::HostSession host(y, small_hyper(), 2.0, 1e-5, 32, 11);
    host.student() = ppat::Mlp::constant_half(4, small_hyper().hidden);
    const auto fakes = random_rows(6, 4, 8);
    CHECK(host.generator_loss_value(fakes) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("generator loss saturates at the clamp, not minus infinity") {
    const auto y = random_rows(4, 4, 9);
    ppat::HostSession host(y, small_hyper(), 2.0, 1e-5, 32, 12);
    auto fooled = ppat::Mlp::constant_half(4, small_hyper().hidden);
    fooled.b2() = 50.0;  // sigmoid(50) ~ 1: the generator fully fools the student
    host.student() = fooled;
    const auto fakes = random_rows(4, 4, 10);
    CHECK(host.generator_loss_value(fakes) == doctest::Approx(std::log(1e-7)).epsilon(1e-9));
}

TEST_CASE("generator gradient through W matches finite differences") {
    const int d = 4;
    const auto x = random_rows(6, d, 13, 0.8);
    const auto y = random_rows(6, d, 14, 0.8);
    ppat::PpatHyper hyper = small_hyper();
    ppat::HostSession host(y, hyper, 2.0, 1e-5, 32, 15);

    util::Rng wrng(16);
    MatRM w = ppat::random_orthogonal(d, wrng);
    auto loss_at = [&](const MatRM& w_probe) {
        return host.generator_loss_value(x * w_probe.transpose());
    };
    const MatRM m = host.generator_gradient(x * w.transpose());
    const MatRM analytic = m * MatRM(w.inverse()).transpose();
    const double h = 1e-6;
    double max_rel = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            MatRM up = w, down = w;
            up(i, j) += h;
            down(i, j) -= h;
            const double numeric = (loss_at(up) - loss_at(down)) / (2.0 * h);
            const double denom = std::max({1e-8, std::abs(numeric), std::abs(analytic(i, j))});
            max_rel = std::max(max_rel, std::abs(numeric - analytic(i, j)) / denom);
        }
    CHECK(max_rel < 1e-5);
}

TEST_CASE("teacher loss: near-perfect teacher scores near zero") {
    const int d = 4;
    MatRM y = random_rows(10, d, 17, 0.3);
    y.col(0).setConstant(5.0);  // reals strongly positive on coordinate 0
    ppat::PpatHyper hyper = small_hyper();
    hyper.hidden = 1;
    ppat::HostSession host(y, hyper, 2.0, 1e-5, 32, 18);
    host.teacher(0) = coordinate_teacher(d);
    MatRM fakes = random_rows(6, d, 19, 0.3);
    fakes.col(0).setConstant(-5.0);
    CHECK(host.teacher_loss_value(0, fakes) < 0.01);
    CHECK(host.teacher_loss_value(0, fakes) >= 0.0);
}

TEST_CASE("teacher loss: constant-half teacher gives the summed log-2 form") {
    const int d = 4;
    const auto y = random_rows(9, d, 20);
    ppat::PpatHyper hyper = small_hyper();
    hyper.teachers = 2;
    ppat::HostSession host(y, hyper, 2.0, 1e-5, 32, 21);
    host.teacher(0) = ppat::Mlp::constant_half(d, hyper.hidden);
    const auto fakes = random_rows(5, d, 22);
    const double expected =
        (static_cast<double>(fakes.rows()) + static_cast<double>(host.partitions()[0].size())) *
        std::log(2.0);
    CHECK(host.teacher_loss_value(0, fakes) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("discriminator parameter gradients match finite differences") {
    const int d = 4, hidden = 5;
    util::Rng rng(23);
    auto mlp = ppat::Mlp::init(d, hidden, rng);
    const auto fakes = random_rows(5, d, 24, 0.7);
    const auto reals = random_rows(6, d, 25, 0.7);

    // Teacher-style objective; the same backward path serves the student.
    auto loss = [&](const ppat::Mlp& net) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < fakes.rows(); ++i)
            total += std::log(1.0 - ppat::clamp_prob(net.forward(fakes.row(i))));
        for (Eigen::Index i = 0; i < reals.rows(); ++i)
            total += std::log(ppat::clamp_prob(net.forward(reals.row(i))));
        return -total;
    };
    ppat::MlpGrads grads;
    grads.init_zero(d, hidden);
    ppat::Mlp::Cache cache;
    for (Eigen::Index i = 0; i < fakes.rows(); ++i) {
        const double p = ppat::clamp_prob(mlp.forward_cached(fakes.row(i), cache));
        mlp.backward(cache, 1.0 / (1.0 - p), grads, nullptr);
    }
    for (Eigen::Index i = 0; i < reals.rows(); ++i) {
        const double p = ppat::clamp_prob(mlp.forward_cached(reals.row(i), cache));
        mlp.backward(cache, -1.0 / p, grads, nullptr);
    }

    const double h = 1e-6;
    double max_rel = 0.0;
    auto fd_check = [&](double* slot, double analytic) {
        const double orig = *slot;
        *slot = orig + h;
        const double up = loss(mlp);
        *slot = orig - h;
        const double down = loss(mlp);
        *slot = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({1e-8, std::abs(numeric), std::abs(analytic)});
        max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
    };
    for (int i = 0; i < hidden; ++i)
        for (int j = 0; j < d; ++j) fd_check(&mlp.w1()(i, j), grads.w1(i, j));
    for (int i = 0; i < hidden; ++i) fd_check(&mlp.b1()(i), grads.b1(i));
    for (int i = 0; i < hidden; ++i) fd_check(&mlp.w2()(i), grads.w2(i));
    fd_check(&mlp.b2(), grads.b2);
    CHECK(max_rel < 1e-5);
}

TEST_CASE("input gradient of the discriminator matches finite differences") {
    const int d = 5, hidden = 6;
    util::Rng rng(26);
    auto mlp = ppat::Mlp::init(d, hidden, rng);
    Vec x = random_rows(1, d, 27, 0.6).row(0);
    ppat::MlpGrads grads;
    grads.init_zero(d, hidden);
    ppat::Mlp::Cache cache;
    const double p = ppat::clamp_prob(mlp.forward_cached(x, cache));
    Vec dx(d);
    mlp.backward(cache, -1.0 / (1.0 - p), grads, &dx);  // d/dx of log(1-p)
    const double h = 1e-6;
    for (int k = 0; k < d; ++k) {
        Vec up = x, down = x;
        up(k) += h;
        down(k) -= h;
        const double numeric = (std::log(1.0 - ppat::clamp_prob(mlp.forward(up))) -
                                std::log(1.0 - ppat::clamp_prob(mlp.forward(down)))) /
                               (2.0 * h);
        CHECK(dx(k) == doctest::Approx(numeric).epsilon(1e-5));
    }
}

TEST_CASE("student labels: unanimous teachers with zero noise give gamma = 1") {
    const int d = 4;
    const auto y = random_rows(8, d, 28);
    ppat::PpatHyper hyper = small_hyper();
    ppat::HostSession host(y, hyper, 2.0, 1e-5, 32, 29);
    auto confident = ppat::Mlp::constant_half(d, hyper.hidden);
    confident.b2() = std::log(0.9 / 0.1);  // outputs 0.9 everywhere
    for (int i = 0; i < host.teacher_count(); ++i) host.teacher(i) = confident;
    const auto fakes = random_rows(4, d, 30);
    const auto labels = host.discriminator_step(fakes, /*zero_noise=*/true);
    for (const int label : labels) CHECK(label == 1);
    // With gamma = 1 the per-sample loss term is log S(G(x)).
    double expected = 0.0;
    for (Eigen::Index i = 0; i < fakes.rows(); ++i)
        expected += std::log(ppat::clamp_prob(host.student().forward(fakes.row(i))));
    expected /= static_cast<double>(fakes.rows());
    CHECK(host.student_loss_value(fakes, labels) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("student loss: gamma zero and constant-half student gives log one-half") {
    const int d = 4;
    const auto y = random_rows(6, d, 31);
    ppat::PpatHyper hyper = small_hyper();
    ppat::HostSession host(y, hyper, 2.0, 1e-5, 32, 32);
    host.student() = ppat::Mlp::constant_half(d, hyper.hidden);
    const auto fakes = random_rows(3, d, 33);
    CHECK(host.student_loss_value(fakes, {0, 0, 0}) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("every student label passes through the ledger") {
    const int d = 4;
    const auto y = random_rows(20, d, 34);
    ppat::PpatHyper hyper = small_hyper();
    ppat::HostSession host(y, hyper, 0.05, 1e-5, 32, 35);
    std::uint64_t independent_counter = 0;
    for (int step = 0; step < 7; ++step) {
        const auto fakes = random_rows(hyper.batch, d, 100 + static_cast<std::uint64_t>(step));
        const auto labels = host.discriminator_step(fakes);
        independent_counter += labels.size();
    }
    CHECK(host.ledger().query_count() == independent_counter);
    CHECK(host.labels_issued() == independent_counter);
}

TEST_CASE("partitions are disjoint, exhaustive and balanced") {
    for (const int n : {7, 16, 33}) {
        for (const int teachers : {1, 2, 4, 5}) {
            ppat::PpatHyper hyper = small_hyper();
            hyper.teachers = teachers;
            ppat::HostSession host(random_rows(n, 3, 40 + static_cast<std::uint64_t>(n)), hyper,
                                   2.0, 1e-5, 32, 41);
            std::set<Eigen::Index> seen;
            std::size_t total = 0;
            const auto expected_teachers = std::min<std::size_t>(
                static_cast<std::size_t>(teachers), static_cast<std::size_t>(n));
            CHECK(host.partitions().size() == std::max<std::size_t>(1, expected_teachers));
            for (const auto& part : host.partitions()) {
                CHECK(part.size() >=
                      static_cast<std::size_t>(n) / host.partitions().size());
                CHECK(part.size() <=
                      static_cast<std::size_t>(n) / host.partitions().size() + 1);
                for (const auto idx : part) {
                    CHECK(seen.insert(idx).second);  // disjoint
                    ++total;
                }
            }
            CHECK(total == static_cast<std::size_t>(n));  // exhaustive
        }
    }
}

TEST_CASE("alignment smaller than the teacher count shrinks the ensemble") {
    ppat::PpatHyper hyper = small_hyper();
    hyper.teachers = 4;
    ppat::HostSession host(random_rows(2, 3, 50), hyper, 2.0, 1e-5, 32, 51);
    CHECK(host.teacher_count() == 2);
    ppat::HostSession host1(random_rows(1, 3, 52), hyper, 2.0, 1e-5, 32, 53);
    CHECK(host1.teacher_count() == 1);
}

TEST_CASE("identical embeddings on both sides converge immediately") {
    const auto x = random_rows(12, 6, 60);
    ppat::PpatHyper hyper = small_hyper();
    hyper.w_init = ppat::WInit::Identity;
    ppat::ClientSession client(x, hyper, 61);
    ppat::HostSession host(x, hyper, 0.05, 1e-5, 32, 62);
    const auto result = ppat::run_session(client, host, 777);
    CHECK(result.converged_immediately);
    CHECK(result.epochs == 0);
    CHECK(result.ledger.query_count() == 0);
    CHECK(result.bundle.translated == x);
    CHECK(result.bundle.empty_extension());
}

TEST_CASE("defaults carry the standard adversarial hyperparameters") {
    ppat::PpatHyper hyper;
    CHECK(hyper.batch == 32);
    CHECK(hyper.teachers == 4);
    CHECK(hyper.lr == 0.02);
    CHECK(hyper.momentum == 0.9);
}

// Shifted uneven cluster mixture: the kind of anisotropic cloud trained
// embeddings form, and the shape the adversarial phase can learn from.
MatRM benchmark_cloud(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    util::Rng rng(seed);
    Vec shift(d);
    for (Eigen::Index j = 0; j < d; ++j) shift(j) = rng.uniform() * 2 - 1;
    shift /= shift.norm();
    const int sizes[] = {16, 12, 10, 8, 6, 5, 4, 3};
    MatRM m(n, d);
    Eigen::Index row = 0;
    for (int c = 0; c < 8 && row < n; ++c) {
        Vec center(d);
        for (Eigen::Index j = 0; j < d; ++j) center(j) = rng.uniform() * 2 - 1;
        center /= center.norm();
        for (int k = 0; k < sizes[c] && row < n; ++k, ++row)
            for (Eigen::Index j = 0; j < d; ++j)
                m(row, j) = shift(j) + center(j) + 0.08 * (rng.uniform() * 2 - 1);
    }
    return m;
}

ppat::PpatHyper rotation_benchmark_hyper() {
    ppat::PpatHyper hyper;
    hyper.batch = 64;
    hyper.teachers = 4;
    hyper.hidden = 8;
    hyper.lr = 0.1;
    hyper.max_epochs = 2000;
    hyper.min_epochs = 1500;
    hyper.patience = 1500;
    hyper.moving_avg_window = 50;
    hyper.min_delta = 0.01;
    hyper.csls_refine = true;
    hyper.csls_iters = 12;
    hyper.csls_restarts = 12;
    return hyper;
}

TEST_CASE("session recovers a planted rotation on paired clouds") {
    const int d = 8, n = 64;
    const std::uint64_t seed = 1;
    util::Rng rng(seed);
    const MatRM x = benchmark_cloud(n, d, seed + 100);
    const MatRM rot = ppat::random_orthogonal(d, rng);
    const MatRM y = x * rot.transpose();  // y_i = R x_i

    const auto hyper = rotation_benchmark_hyper();
    ppat::ClientSession client(x, hyper, seed * 31 + 7);
    ppat::HostSession host(y, hyper, 1.0, 1e-5, 32, seed * 17 + 3);
    const auto result = ppat::run_session(client, host, 778);

    double cos_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec gx = result.bundle.translated.row(i);
        const Vec yi = y.row(i);
        cos_sum += gx.dot(yi) / (gx.norm() * yi.norm());
    }
    CHECK(cos_sum / n > 0.9);
    CHECK(result.ledger.epsilon_hat() > 0.0);
    CHECK(result.labels_issued == result.ledger.query_count());
}

TEST_CASE("neighbor payload dedups rows and keeps one spec per edge") {
    // Context: center with 3 neighbors over 2 relations.
    std::vector<kg::NeighborContext> contexts(1);
    contexts[0].center = 0;
    contexts[0].edges = {{5, 1, true}, {6, 1, true}, {7, 2, false}};
    const auto ents = random_rows(10, 4, 80);
    const auto rels = random_rows(4, 4, 81);
    const auto payload = ppat::build_neighbor_payload(contexts, ents, rels);
    CHECK(payload.entity_rows.rows() == 3);
    CHECK(payload.relation_rows.rows() == 2);
    CHECK(payload.triples.size() == 3);
    CHECK(payload.entity_rows.row(0) == ents.row(5));
    CHECK(payload.relation_rows.row(1) == rels.row(2));
    CHECK(payload.triples[2].center_is_head == false);
    CHECK(payload.triples[2].aligned_entity_index == 0);

    // Shared neighbors across contexts collapse to one row.
    std::vector<kg::NeighborContext> two(2);
    two[0].center = 0;
    two[0].edges = {{5, 1, true}};
    two[1].center = 1;
    two[1].edges = {{5, 1, false}};
    const auto shared = ppat::build_neighbor_payload(two, ents, rels);
    CHECK(shared.entity_rows.rows() == 1);
    CHECK(shared.triples.size() == 2);
    CHECK(shared.triples[1].aligned_entity_index == 1);
}

TEST_CASE("virtual labels never collide across many sessions") {
    util::Rng rng(90);
    std::set<std::string> labels;
    for (int session = 0; session < 10'000; ++session) {
        const std::uint64_t tag = rng.next_u64();
        CHECK(labels.insert(ppat::virtual_label(tag, 'e', 0)).second);
        CHECK(labels.insert(ppat::virtual_label(tag, 'r', 0)).second);
    }
    // Distinct indices under one tag stay distinct too.
    CHECK(ppat::virtual_label(1, 'e', 1) != ppat::virtual_label(1, 'e', 11));
}

TEST_CASE("bundle carries translated neighbor rows and structure") {
    const auto x = random_rows(4, 4, 95);
    ppat::PpatHyper hyper = small_hyper();
    ppat::ClientSession client(x, hyper, 96);
    const auto nent = random_rows(3, 4, 97);
    const auto nrel = random_rows(2, 4, 98);
    std::vector<ppat::VirtualTripleSpec> specs = {{0, 0, 0, true}, {1, 1, 2, false}};
    client.set_neighbor_payload(nent, nrel, specs);
    const auto bundle = client.make_bundle(1234);
    CHECK(bundle.session_tag == 1234);
    CHECK(bundle.translated.rows() == 4);
    CHECK(bundle.virtual_entities.rows() == 3);
    CHECK(bundle.virtual_relations.rows() == 2);
    CHECK(bundle.virtual_triples.size() == 2);
    CHECK(bundle.virtual_entities == client.translate(nent));
    CHECK(bundle.virtual_relations == client.translate(nrel));
}
