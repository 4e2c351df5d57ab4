#pragma once

#include <span>
#include <vector>

#include "models.hpp"
#include "pde.hpp"
#include "rng.hpp"
#include "tape.hpp"

namespace epinn::train {

struct LossWeights {
    double w_data = 1.0;
    double w_pde = 1.0;
    double w_bc = 10.0;
    double w_kappa = 1.0;
};

struct LossBreakdown {
    double total = 0.0;
    double data = 0.0;
    double pde = 0.0;
    double bc = 0.0;
    double kappa = 0.0;
};

// Manufactured source values at the collocation points, computed once per
// training run.
std::vector<double> source_cache(const pde::Problem& p, const pde::PointSet& ps);

// Assembles L = w_data*L_data + w_pde*L_pde + w_bc*L_bc (+ w_kappa*Var[kappa])
// on the tape; each term is the mean of squared residuals over its channel,
// with empty channels contributing zero. Boundary and initial targets share
// the boundary channel.
ad::Var composite_loss(models::TrainableModel& m, const pde::PointSet& ps, const LossWeights& w,
                       std::span<const double> sources, ad::Tape& tape,
                       LossBreakdown* breakdown = nullptr);

// Population variance of the kappa-field tape variables over the collocation
// set (the field-smoothness penalty for inverse runs).
ad::Var kappa_penalty(ad::Tape& tape, std::span<const ad::Var> kappa_vars);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(std::size_t n, AdamConfig cfg = {});
    void step(std::span<double> params, std::span<const double> grad);
    long steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

struct TrainLogRow {
    long epoch = 0;
    double total = 0, data = 0, pde = 0, bc = 0, kappa = 0;
    double wall_seconds = 0;
};

struct TrainOptions {
    long log_every = 100;
    double divergence_threshold = 1e8;
    // When set, log rows are mirrored here as they are produced, so a
    // diverging run still leaves a partial log behind.
    std::vector<TrainLogRow>* log_sink = nullptr;
};

struct TrainResult {
    std::vector<TrainLogRow> log;
    long epochs = 0;
    double wall_seconds = 0;
};

// Full-batch gradient descent over fixed point sets; one stochastic element
// (epistemic index / dropout masks) drawn per epoch from rng. Throws
// DivergedError on non-finite or runaway loss.
TrainResult train(models::TrainableModel& m, const pde::PointSet& ps, const LossWeights& w,
                  long epochs, Rng& rng, const TrainOptions& opt = {});

} // namespace epinn::train
