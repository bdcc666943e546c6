#include "fkge/ppat/mlp.hpp"

namespace fkge::ppat {

namespace {

constexpr double kLeakySlope = 0.2;

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

void MlpGrads::init_zero(int dim, int hidden) {
    w1 = MatRM::Zero(hidden, dim);
    b1 = Vec::Zero(hidden);
    w2 = Vec::Zero(hidden);
    b2 = 0.0;
}

void MlpGrads::zero() {
    w1.setZero();
    b1.setZero();
    w2.setZero();
    b2 = 0.0;
}

Mlp Mlp::init(int dim, int hidden, util::Rng& rng) {
    Mlp m;
    const double bound1 = std::sqrt(6.0 / static_cast<double>(dim + hidden));
    const double bound2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    m.w1_.resize(hidden, dim);
    for (Eigen::Index i = 0; i < m.w1_.rows(); ++i)
        for (Eigen::Index j = 0; j < m.w1_.cols(); ++j)
            m.w1_(i, j) = rng.uniform_range(-bound1, bound1);
    m.b1_ = Vec::Zero(hidden);
    m.w2_.resize(hidden);
    for (Eigen::Index i = 0; i < hidden; ++i) m.w2_(i) = rng.uniform_range(-bound2, bound2);
    m.b2_ = 0.0;
    return m;
}

Mlp Mlp::constant_half(int dim, int hidden) {
    Mlp m;
    m.w1_ = MatRM::Zero(hidden, dim);
    m.b1_ = Vec::Zero(hidden);
    m.w2_ = Vec::Zero(hidden);
    m.b2_ = 0.0;
    return m;
}

double Mlp::forward(const Vec& x) const {
    const Vec z1 = w1_ * x + b1_;
    const Vec a1 = z1.unaryExpr([](double z) { return z > 0 ? z : kLeakySlope * z; });
    return sigmoid(w2_.dot(a1) + b2_);
}

double Mlp::forward_cached(const Vec& x, Cache& cache) const {
    cache.x = x;
    cache.z1 = w1_ * x + b1_;
    cache.a1 = cache.z1.unaryExpr([](double z) { return z > 0 ? z : kLeakySlope * z; });
    cache.z2 = w2_.dot(cache.a1) + b2_;
    cache.p = sigmoid(cache.z2);
    return cache.p;
}

void Mlp::backward(const Cache& cache, double dLdp, MlpGrads& grads, Vec* dx) const {
    const double dz2 = dLdp * cache.p * (1.0 - cache.p);
    grads.w2 += dz2 * cache.a1;
    grads.b2 += dz2;
    const Vec da1 = dz2 * w2_;
    const Vec dz1 = da1.cwiseProduct(
        cache.z1.unaryExpr([](double z) { return z > 0 ? 1.0 : kLeakySlope; }));
    grads.w1 += dz1 * cache.x.transpose();
    grads.b1 += dz1;
    if (dx) *dx = w1_.transpose() * dz1;
}

void Mlp::sgd_momentum_step(const MlpGrads& grads, MlpGrads& velocity, double lr,
                            double momentum) {
    velocity.w1 = momentum * velocity.w1 - lr * grads.w1;
    velocity.b1 = momentum * velocity.b1 - lr * grads.b1;
    velocity.w2 = momentum * velocity.w2 - lr * grads.w2;
    velocity.b2 = momentum * velocity.b2 - lr * grads.b2;
    w1_ += velocity.w1;
    b1_ += velocity.b1;
    w2_ += velocity.w2;
    b2_ += velocity.b2;
}

}  // namespace fkge::ppat
