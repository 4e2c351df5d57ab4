#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmc.hpp"
#include "mlp.hpp"
#include "pde.hpp"

namespace epinn::uq {

// Per-point predictive moments over M stochastic forward passes. Variance is
// the population (1/M) estimator.
struct Ensemble {
    std::size_t n = 0;
    long M = 0;
    std::vector<double> mu;
    std::vector<double> var;
};

// Welford accumulation in fixed sample order (bit-reproducible).
class EnsembleAccumulator {
public:
    explicit EnsembleAccumulator(std::size_t n) : n_(n), mean_(n, 0.0), m2_(n, 0.0) {}

    void add(std::span<const double> sample);
    Ensemble finish() const;
    long count() const { return count_; }

private:
    std::size_t n_;
    long count_ = 0;
    std::vector<double> mean_, m2_;
};

// Inverse standard-normal CDF, |error| < 1e-8 (rational approximation plus
// one Halley refinement).
double normal_quantile(double p);

// (4/N) * sum of sigma(x_i): the average +/-2 sigma band width.
double sharpness(const Ensemble& e);

// Fraction of points with |u - mu| <= q * sigma, q = Phi^-1((1+gamma)/2).
// A zero-sigma point counts as covered only when mu equals u exactly.
double coverage(const Ensemble& e, std::span<const double> exact, double gamma = 0.95);

double rmse(const Ensemble& e, std::span<const double> exact);

// ---------------------------------------------------------------------------
// Method-specific Monte Carlo prediction
// ---------------------------------------------------------------------------

struct EpinnArtifacts {
    const ad::NetworkParams* base = nullptr;
    const ad::NetworkParams* learnable = nullptr;
    const ad::NetworkParams* prior = nullptr;
    double alpha = 0.05;
    int d_z = 8;
};

// Value-only evaluator for the additive-correction model: caches the frozen
// base outputs/features per point, then sweeps epistemic indices cheaply.
class EpinnValueEvaluator {
public:
    EpinnValueEvaluator(const pde::Problem& p, const EpinnArtifacts& a,
                        std::span<const double> points, std::size_t n);

    std::size_t n() const { return n_; }
    int out_dim() const { return out_dim_; }
    // component comp for every point under epistemic index z
    void eval(std::span<const double> z, int comp, std::span<double> out);

private:
    const pde::Problem* prob_;
    EpinnArtifacts a_;
    std::span<const double> pts_;
    std::size_t n_;
    int out_dim_, H_, d_z_;
    ad::JetPass learn_val_, prior_val_;
    ad::Trace lt_, pt_;
    std::vector<double> base_out_;  // [n * out_dim]
    std::vector<double> features_;  // [n * H]
};

// Dropout value evaluator: one mask per stochastic sample, shared across all
// points of that sample.
class DropoutValueEvaluator {
public:
    DropoutValueEvaluator(const pde::Problem& p, const ad::NetworkParams& params, double rate,
                          std::span<const double> points, std::size_t n);

    std::size_t n() const { return n_; }
    int out_dim() const { return out_dim_; }
    void draw_mask(Rng& rng);
    void eval(int comp, std::span<double> out); // under the current mask

private:
    const pde::Problem* prob_;
    const ad::NetworkParams* params_;
    double rate_;
    std::span<const double> pts_;
    std::size_t n_;
    int out_dim_;
    ad::JetPass pass_;
    ad::Trace trace_;
    std::vector<std::uint8_t> mask_;
};

Ensemble predict_epinn(const pde::Problem& p, const EpinnArtifacts& a,
                       std::span<const double> points, std::size_t n, long M, std::uint64_t seed);

Ensemble predict_dropout(const pde::Problem& p, const ad::NetworkParams& params, double rate,
                         std::span<const double> points, std::size_t n, long M,
                         std::uint64_t seed);

// Consumes the stored chain (M = chain length); no noise injected.
Ensemble predict_bpinn(const pde::Problem& p, const bayes::Chain& chain,
                       const ad::Architecture& arch, std::span<const double> points,
                       std::size_t n);

} // namespace epinn::uq
