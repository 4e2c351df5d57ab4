#include "hmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "errors.hpp"
#include "training.hpp"

namespace epinn::bayes {

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

bool leapfrog(Target& t, std::vector<double>& pos, std::vector<double>& mom,
              std::vector<double>& grad, double& U, double eps, int steps) {
    const std::size_t n = pos.size();
    for (int s = 0; s < steps; ++s) {
        for (std::size_t i = 0; i < n; ++i) mom[i] -= 0.5 * eps * grad[i];
        for (std::size_t i = 0; i < n; ++i) pos[i] += eps * mom[i];
        if (!all_finite(pos)) return false;
        U = t.potential(pos, grad);
        if (!std::isfinite(U) || !all_finite(grad)) return false;
        for (std::size_t i = 0; i < n; ++i) mom[i] -= 0.5 * eps * grad[i];
    }
    return all_finite(mom);
}

Chain sample(Target& target, const HmcConfig& cfg) {
    return sample(target, cfg, {});
}

Chain sample(Target& target, const HmcConfig& cfg, std::span<const double> init) {
    if (cfg.eps <= 0.0) throw ConfigError("hmc: step size must be > 0");
    if (cfg.leapfrog < 1) throw ConfigError("hmc: leapfrog steps must be >= 1");
    if (cfg.burn_in < 0 || cfg.burn_in >= cfg.total)
        throw ConfigError("hmc: burn-in must be < total samples");

    const std::size_t n = target.dim();
    if (!init.empty() && init.size() != n)
        throw UsageError("hmc: initial position length does not match target dimension");
    Rng rng(cfg.seed, Stream::hmc);

    std::vector<double> pos(n, 0.0);
    if (!init.empty()) pos.assign(init.begin(), init.end());
    std::vector<double> grad(n, 0.0);
    double U = target.potential(pos, grad);

    std::vector<double> prop_pos(n), prop_mom(n), prop_grad(n), mom(n);
    std::vector<double> abs_dh;

    Chain chain;
    chain.dim = n;
    chain.samples.reserve(static_cast<std::size_t>(cfg.total - cfg.burn_in) * n);

    long accepted = 0, accepted_burnin = 0;
    for (long it = 0; it < cfg.total; ++it) {
        for (auto& p : mom) p = rng.normal();
        double K0 = 0.0;
        for (double p : mom) K0 += 0.5 * p * p;
        const double H0 = U + K0;

        prop_pos = pos;
        prop_mom = mom;
        prop_grad = grad;
        double U1 = U;
        bool ok = leapfrog(target, prop_pos, prop_mom, prop_grad, U1, cfg.eps, cfg.leapfrog);

        bool accept = false;
        if (ok) {
            double K1 = 0.0;
            for (double p : prop_mom) K1 += 0.5 * p * p;
            const double H1 = U1 + K1;
            const double dH = H1 - H0;
            abs_dh.push_back(std::abs(dH));
            accept = rng.uniform() < std::exp(std::min(0.0, -dH));
        } else {
            ++chain.rejected_nonfinite;
            rng.uniform(); // keep the draw sequence aligned for determinism
        }

        if (accept) {
            pos.swap(prop_pos);
            grad.swap(prop_grad);
            U = U1;
            ++accepted;
            if (it < cfg.burn_in) ++accepted_burnin;
        }
        if (it >= cfg.burn_in)
            chain.samples.insert(chain.samples.end(), pos.begin(), pos.end());
    }

    chain.acceptance = static_cast<double>(accepted) / static_cast<double>(cfg.total);
    chain.acceptance_burnin =
        cfg.burn_in > 0 ? static_cast<double>(accepted_burnin) / static_cast<double>(cfg.burn_in)
                        : 1.0;
    chain.low_acceptance_warning = cfg.burn_in > 0 && chain.acceptance_burnin < 0.05;
    if (!abs_dh.empty()) {
        auto mid = abs_dh.begin() + abs_dh.size() / 2;
        std::nth_element(abs_dh.begin(), mid, abs_dh.end());
        chain.median_abs_dH = *mid;
    }
    return chain;
}

// ---------------------------------------------------------------------------
// PinnPosterior
// ---------------------------------------------------------------------------

PinnPosterior::PinnPosterior(const pde::Problem& p, const pde::PointSet& ps, LikelihoodSpec spec,
                             ad::Architecture arch)
    : prob_(&p),
      points_(&ps),
      spec_(spec),
      arch_(std::move(arch)),
      inverse_(p.inverse()),
      n_net_(ad::param_count(arch_)),
      n_pos_(n_net_ + (inverse_ ? 1 : 0)),
      model_(p, ad::NetworkParams(arch_), 0.0, /*net_kappa_field=*/false),
      sources_(train::source_cache(p, ps)) {
    if (spec_.sigma_f <= 0.0 || spec_.sigma_b <= 0.0)
        throw ConfigError("posterior: residual channel sigmas must be > 0");
    if (ps.n_sensors() > 0 && spec_.sigma_u <= 0.0)
        throw ConfigError("posterior: sigma_u must be > 0 when sensors are present");
}

std::vector<double> PinnPosterior::initial_position(std::uint64_t seed) const {
    Rng rng(seed, Stream::base_init);
    const ad::NetworkParams p = ad::NetworkParams::xavier(arch_, rng);
    std::vector<double> pos(n_pos_, 0.0);
    std::copy(p.flat().begin(), p.flat().end(), pos.begin());
    return pos;
}

double PinnPosterior::potential(std::span<const double> pos, std::span<double> grad) {
    if (pos.size() != n_pos_ || grad.size() != n_pos_)
        throw UsageError("posterior: position size mismatch");

    std::copy(pos.begin(), pos.begin() + n_net_, model_.trainable_params().begin());

    tape_.clear();
    model_.begin_epoch(dummy_rng_);

    const pde::PointSet& ps = *points_;
    const int dim = ps.dim;

    ad::Var kap{};
    if (inverse_) kap = tape_.leaf(pos[n_net_]);

    ad::Var u_like = tape_.constant(0.0);

    // PDE residual channel
    ad::Var ssq = tape_.constant(0.0);
    for (std::size_t i = 0; i < ps.n_colloc(); ++i) {
        const pde::FieldState<ad::Var> s =
            model_.colloc_forward(tape_, ps.colloc.data() + i * dim, nullptr);
        ssq = ssq + ad::square(prob_->residual(s, kap, sources_[i]));
    }
    u_like = u_like + ssq / (2.0 * spec_.sigma_f * spec_.sigma_f);

    // boundary + initial channel
    ad::Var bsq = tape_.constant(0.0);
    for (std::size_t i = 0; i < ps.n_boundary(); ++i) {
        const ad::Var u = model_.value_forward(tape_, ps.boundary_x.data() + i * dim);
        bsq = bsq + ad::square(u - ps.boundary_u[i]);
    }
    for (std::size_t i = 0; i < ps.n_initial(); ++i) {
        const ad::Var u = model_.value_forward(tape_, ps.initial_x.data() + i * dim);
        bsq = bsq + ad::square(u - ps.initial_u[i]);
    }
    u_like = u_like + bsq / (2.0 * spec_.sigma_b * spec_.sigma_b);

    // sensor channel (omitted when absent)
    if (ps.n_sensors() > 0) {
        ad::Var dsq = tape_.constant(0.0);
        for (std::size_t i = 0; i < ps.n_sensors(); ++i) {
            const ad::Var u = model_.value_forward(tape_, ps.sensor_x.data() + i * dim);
            dsq = dsq + ad::square(u - ps.sensor_u[i]);
        }
        u_like = u_like + dsq / (2.0 * spec_.sigma_u * spec_.sigma_u);
    }

    const double like_val = ad::val(u_like);
    tape_.backward(u_like);
    std::fill(grad.begin(), grad.end(), 0.0);
    model_.backward(tape_, grad.subspan(0, n_net_));
    if (inverse_) grad[n_net_] = tape_.adjoint(kap);

    // N(0,1) prior on every position entry
    double prior = 0.0;
    for (std::size_t i = 0; i < n_pos_; ++i) {
        prior += 0.5 * pos[i] * pos[i];
        grad[i] += pos[i];
    }
    return like_val + prior;
}

} // namespace epinn::bayes
