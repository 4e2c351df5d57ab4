#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "models.hpp"
#include "pde.hpp"
#include "rng.hpp"

namespace epinn::bayes {

// Negative log density (up to a constant) with gradient; positions are flat
// real vectors so toy targets and network posteriors share the sampler.
class Target {
public:
    virtual ~Target() = default;
    virtual std::size_t dim() const = 0;
    // returns U(pos); grad (same length) is overwritten
    virtual double potential(std::span<const double> pos, std::span<double> grad) = 0;
};

struct LikelihoodSpec {
    double sigma_u = 0.0;  // per-sensor noise scale; channel omitted when no sensors
    double sigma_f = 0.01; // PDE residual channel
    double sigma_b = 0.01; // boundary/initial channel
};

struct HmcConfig {
    double eps = 5e-5;
    int leapfrog = 50;
    long burn_in = 1000;
    long total = 11000;
    std::uint64_t seed = 0;
};

struct Chain {
    std::size_t dim = 0;
    std::vector<double> samples; // [n() * dim], post-burn-in positions
    double acceptance = 0.0;     // over all iterations
    double acceptance_burnin = 0.0;
    long rejected_nonfinite = 0;
    double median_abs_dH = 0.0;
    bool low_acceptance_warning = false;
    bool has_kappa = false;

    std::size_t n() const { return dim ? samples.size() / dim : 0; }
    std::span<const double> sample(std::size_t i) const {
        return {samples.data() + i * dim, dim};
    }
};

// Metropolis-adjusted HMC with identity mass matrix; momenta resampled from
// N(0, I) each iteration; non-finite trajectories are rejected and counted.
// The chain starts at the origin unless an explicit position is given.
Chain sample(Target& target, const HmcConfig& cfg);
Chain sample(Target& target, const HmcConfig& cfg, std::span<const double> init);

// One leapfrog trajectory (half-kick / drift / half-kick), in place. Returns
// false if the trajectory left the finite domain. grad must hold dU/dpos at
// entry and holds it at the final position on success; U_out likewise.
bool leapfrog(Target& t, std::vector<double>& pos, std::vector<double>& mom,
              std::vector<double>& grad, double& U, double eps, int steps);

// Gaussian-likelihood PINN posterior: U = sum over channels of
// (1/2) sum r^2 / sigma^2 plus (1/2)|pos|^2 from N(0,1) priors on every
// weight, bias, and latent. For inverse problems the position vector is
// [net params..., kappa].
class PinnPosterior final : public Target {
public:
    PinnPosterior(const pde::Problem& p, const pde::PointSet& ps, LikelihoodSpec spec,
                  ad::Architecture arch);

    std::size_t dim() const override { return n_pos_; }
    double potential(std::span<const double> pos, std::span<double> grad) override;

    const ad::Architecture& arch() const { return arch_; }
    bool has_kappa() const { return inverse_; }
    std::size_t net_params() const { return n_net_; }

    // Draws the initial position: Xavier net weights, kappa at 0.
    std::vector<double> initial_position(std::uint64_t seed) const;

private:
    const pde::Problem* prob_;
    const pde::PointSet* points_;
    LikelihoodSpec spec_;
    ad::Architecture arch_;
    bool inverse_;
    std::size_t n_net_, n_pos_;
    models::BaseModel model_;
    std::vector<double> sources_;
    ad::Tape tape_;
    Rng dummy_rng_{0};
};

} // namespace epinn::bayes
