#pragma once
// Two-layer perceptron used for teacher and student discriminators:
// d -> hidden (leaky ReLU, slope 0.2) -> 1 (sigmoid).

#include <Eigen/Dense>

#include "fkge/kge/table.hpp"
#include "fkge/util/rng.hpp"

namespace fkge::ppat {

using kge::MatRM;
using kge::Vec;

// Probabilities are clamped away from {0,1} before logs and their derivatives.
inline constexpr double kProbClamp = 1e-7;

inline double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}

struct MlpGrads {
    MatRM w1;
    Vec b1;
    Vec w2;
    double b2 = 0.0;

    void init_zero(int dim, int hidden);
    void zero();
};

class Mlp {
public:
    Mlp() = default;
    static Mlp init(int dim, int hidden, util::Rng& rng);
    // All-zero parameters; outputs exactly 0.5 everywhere.
    static Mlp constant_half(int dim, int hidden);

    int dim() const { return static_cast<int>(w1_.cols()); }
    int hidden() const { return static_cast<int>(w1_.rows()); }

    struct Cache {
        Vec x, z1, a1;
        double z2 = 0.0, p = 0.5;
    };

    double forward(const Vec& x) const;
    double forward_cached(const Vec& x, Cache& cache) const;

    // Accumulates dL/dparams for a sample given dL/dp; when dx is non-null,
    // also writes dL/dx (the path the generator gradient flows through).
    void backward(const Cache& cache, double dLdp, MlpGrads& grads, Vec* dx) const;

    void sgd_momentum_step(const MlpGrads& grads, MlpGrads& velocity, double lr, double momentum);

    // Direct parameter access for finite-difference checks.
    MatRM& w1() { return w1_; }
    Vec& b1() { return b1_; }
    Vec& w2() { return w2_; }
    double& b2() { return b2_; }

private:
    MatRM w1_;  // hidden x d
    Vec b1_;    // hidden
    Vec w2_;    // hidden
    double b2_ = 0.0;
};

}  // namespace fkge::ppat
