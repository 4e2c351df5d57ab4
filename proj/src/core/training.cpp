#include "training.hpp"

#include <chrono>
#include <cmath>

#include "errors.hpp"

namespace epinn::train {

std::vector<double> source_cache(const pde::Problem& p, const pde::PointSet& ps) {
    std::vector<double> f(ps.n_colloc());
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = p.manufacture_source(ps.colloc.data() + i * ps.dim);
    return f;
}

namespace {

// mean of squared (pred - target) over one value channel; invalid Var if empty
ad::Var value_channel_mse(models::TrainableModel& m, ad::Tape& tape, int dim,
                          const std::vector<double>& xs, const std::vector<double>& targets,
                          ad::Var acc) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const ad::Var u = m.value_forward(tape, xs.data() + i * dim);
        acc = acc + ad::square(u - targets[i]);
    }
    return acc;
}

} // namespace

ad::Var kappa_penalty(ad::Tape& tape, std::span<const ad::Var> kappa_vars) {
    if (kappa_vars.size() < 2)
        throw ConfigError("kappa penalty: needs at least 2 collocation points");
    const double n = static_cast<double>(kappa_vars.size());
    ad::Var sum = tape.constant(0.0);
    for (const ad::Var& k : kappa_vars) sum = sum + k;
    const ad::Var mean = sum / n;
    ad::Var var = tape.constant(0.0);
    for (const ad::Var& k : kappa_vars) var = var + ad::square(k - mean);
    return var / n;
}

ad::Var composite_loss(models::TrainableModel& m, const pde::PointSet& ps, const LossWeights& w,
                       std::span<const double> sources, ad::Tape& tape,
                       LossBreakdown* breakdown) {
    const pde::Problem& prob = m.problem();
    const int dim = ps.dim;
    const std::size_t nc = ps.n_colloc();
    if (sources.size() != nc) throw UsageError("composite_loss: source cache size mismatch");

    std::vector<ad::Var> kappas;
    if (m.has_kappa()) kappas.reserve(nc);

    ad::Var l_pde = tape.constant(0.0);
    for (std::size_t i = 0; i < nc; ++i) {
        ad::Var kap{};
        const pde::FieldState<ad::Var> s =
            m.colloc_forward(tape, ps.colloc.data() + i * dim, m.has_kappa() ? &kap : nullptr);
        const ad::Var r = prob.residual(s, kap, sources[i]);
        l_pde = l_pde + ad::square(r);
        if (m.has_kappa()) kappas.push_back(kap);
    }
    if (nc > 0) l_pde = l_pde / static_cast<double>(nc);

    ad::Var l_bc = tape.constant(0.0);
    const std::size_t n_bc = ps.n_boundary() + ps.n_initial();
    l_bc = value_channel_mse(m, tape, dim, ps.boundary_x, ps.boundary_u, l_bc);
    l_bc = value_channel_mse(m, tape, dim, ps.initial_x, ps.initial_u, l_bc);
    if (n_bc > 0) l_bc = l_bc / static_cast<double>(n_bc);

    ad::Var l_data = tape.constant(0.0);
    l_data = value_channel_mse(m, tape, dim, ps.sensor_x, ps.sensor_u, l_data);
    if (ps.n_sensors() > 0) l_data = l_data / static_cast<double>(ps.n_sensors());

    ad::Var total = w.w_data * l_data + w.w_pde * l_pde + w.w_bc * l_bc;
    ad::Var l_kappa = tape.constant(0.0);
    if (m.has_kappa()) {
        l_kappa = kappa_penalty(tape, kappas);
        total = total + w.w_kappa * l_kappa;
    }

    if (breakdown) {
        breakdown->data = ad::val(l_data);
        breakdown->pde = ad::val(l_pde);
        breakdown->bc = ad::val(l_bc);
        breakdown->kappa = ad::val(l_kappa);
        breakdown->total = ad::val(total);
    }
    return total;
}

Adam::Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw UsageError("adam: parameter/gradient size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
        const double g = grad[i];
        if (!std::isfinite(g))
            throw DivergedError("adam: non-finite gradient component", t_);
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

TrainResult train(models::TrainableModel& m, const pde::PointSet& ps, const LossWeights& w,
                  long epochs, Rng& rng, const TrainOptions& opt) {
    TrainResult res;
    res.epochs = epochs;
    if (epochs <= 0) return res;

    const std::vector<double> sources = source_cache(m.problem(), ps);
    const std::size_t n = m.trainable_params().size();
    std::vector<double> grad(n);
    Adam adam(n);
    ad::Tape tape;

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    for (long epoch = 0; epoch < epochs; ++epoch) {
        tape.clear();
        m.begin_epoch(rng);
        LossBreakdown bd;
        const ad::Var loss = composite_loss(m, ps, w, sources, tape, &bd);
        if (!std::isfinite(bd.total) || bd.total > opt.divergence_threshold)
            throw DivergedError("train: loss diverged", epoch);
        if (epoch % opt.log_every == 0 || epoch == epochs - 1) {
            const TrainLogRow row{epoch, bd.total, bd.data, bd.pde, bd.bc, bd.kappa, elapsed()};
            res.log.push_back(row);
            if (opt.log_sink) opt.log_sink->push_back(row);
        }
        tape.backward(loss);
        std::fill(grad.begin(), grad.end(), 0.0);
        m.backward(tape, grad);
        adam.step(m.trainable_params(), grad);
    }
    res.wall_seconds = elapsed();
    return res;
}

} // namespace epinn::train
