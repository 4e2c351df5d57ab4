#include "models.hpp"

#include <cstring>

#include "errors.hpp"

namespace epinn::models {

ChannelPlan ChannelPlan::for_problem(const pde::Problem& p) {
    ChannelPlan plan;
    plan.layout = ad::ChannelLayout::directions(p.want_second());
    plan.d1x = plan.layout.dirs[0].d1;
    plan.d2x = plan.layout.dirs[0].d2;
    if (p.dim() > 1) {
        if (p.time_dependent()) {
            plan.d1t = plan.layout.dirs[1].d1;
        } else {
            plan.d1y = plan.layout.dirs[1].d1;
            plan.d2y = plan.layout.dirs[1].d2;
        }
    }
    return plan;
}

void fill_coord_jets(const ChannelPlan& plan, int dim, const double* x, double* dst) {
    const int C = plan.layout.channels;
    for (int i = 0; i < dim; ++i) {
        double* d = dst + static_cast<std::size_t>(i) * C;
        for (int c = 0; c < C; ++c) d[c] = 0.0;
        d[0] = x[i];
        d[plan.layout.dirs[i].d1] = 1.0;
    }
}

namespace {

// Output-buffer positions (component-major, channel-minor) that become tape
// leaves, in the fixed order: u, du/dx, d2u/dx2, [axis-1 jets], [kappa].
std::vector<int> leaf_positions(const pde::Problem& p, const ChannelPlan& plan, bool with_kappa) {
    const int C = plan.layout.channels;
    std::vector<int> pos{0, plan.d1x, plan.d2x};
    if (p.dim() > 1) {
        if (p.time_dependent()) {
            pos.push_back(plan.d1t);
        } else {
            pos.push_back(plan.d1y);
            pos.push_back(plan.d2y);
        }
    }
    if (with_kappa) pos.push_back(1 * C);
    return pos;
}

pde::FieldState<ad::Var> state_from_leaves(ad::Tape& tape, std::int32_t first,
                                           const pde::Problem& p, bool with_kappa,
                                           ad::Var* kappa_out) {
    auto v = [&](int k) { return ad::Var{&tape, first + k}; };
    pde::FieldState<ad::Var> s;
    s.u = v(0);
    s.dx = v(1);
    s.dxx = v(2);
    int k = 3;
    if (p.dim() > 1) {
        if (p.time_dependent()) {
            s.dt = v(k++);
        } else {
            s.dy = v(k++);
            s.dyy = v(k++);
        }
    }
    if (with_kappa) {
        if (!kappa_out) throw UsageError("model: inverse problem requires a kappa output slot");
        *kappa_out = v(k++);
    }
    return s;
}

} // namespace

// ---------------------------------------------------------------------------
// BaseModel
// ---------------------------------------------------------------------------

ad::Architecture BaseModel::arch_for(const pde::Problem& p, const std::vector<int>& hidden) {
    ad::Architecture a;
    a.input_dim = p.dim();
    a.hidden = hidden;
    a.output_dim = p.inverse() ? 2 : 1;
    return a;
}

BaseModel::BaseModel(const pde::Problem& p, ad::NetworkParams params, double dropout_rate,
                     bool net_kappa_field)
    : prob_(&p),
      params_(std::move(params)),
      plan_(ChannelPlan::for_problem(p)),
      jet_pass_(params_.arch(), plan_.layout),
      value_pass_(params_.arch(), ad::ChannelLayout::values_only()),
      rate_(dropout_rate),
      net_kappa_(net_kappa_field && p.inverse()) {
    if (params_.arch().input_dim != p.dim())
        throw ConfigError("model: network input dim does not match problem");
    if (params_.arch().output_dim != (net_kappa_ ? 2 : 1))
        throw ConfigError("model: network output dim does not match problem");
    if (rate_ < 0.0 || rate_ >= 1.0)
        throw ConfigError("model: dropout rate must lie in [0, 1)");
    jet_leaf_pos_ = leaf_positions(p, plan_, net_kappa_);
}

void BaseModel::begin_epoch(Rng& rng) {
    epoch_rng_ = &rng;
    jet_used_ = val_used_ = 0;
    jet_records_.clear();
    val_records_.clear();
    // One mask per epoch, shared by every point in the batch: each step then
    // trains a single random subnetwork (the ensemble member the predictive
    // draws at inference). Independent masks per point drown the residual
    // gradient in mask noise and the optimizer never leaves its initial
    // near-linear regime.
    if (rate_ > 0.0) {
        epoch_masks_.resize(jet_pass_.total_hidden());
        for (auto& m : epoch_masks_) m = epoch_rng_->bernoulli(1.0 - rate_) ? 1 : 0;
    }
}

void BaseModel::draw_masks(ad::Trace& t) {
    if (rate_ == 0.0) {
        t.masks.clear();
        return;
    }
    if (!epoch_rng_) throw UsageError("model: begin_epoch must run before forward passes");
    t.masks = epoch_masks_;
    t.keep_scale = 1.0 / (1.0 - rate_);
}

pde::FieldState<ad::Var> BaseModel::colloc_forward(ad::Tape& tape, const double* x,
                                                   ad::Var* kappa_out) {
    if (jet_used_ == jet_traces_.size()) {
        jet_traces_.emplace_back();
        jet_pass_.prepare(jet_traces_.back());
    }
    ad::Trace& t = jet_traces_[jet_used_];
    fill_coord_jets(plan_, prob_->dim(), x, t.input());
    draw_masks(t);
    jet_pass_.forward(params_.flat(), t);

    const double* out = jet_pass_.outputs(t);
    const auto first = static_cast<std::int32_t>(tape.size());
    for (int pos : jet_leaf_pos_) tape.leaf(out[pos]);
    jet_records_.push_back({static_cast<int>(jet_used_), first});
    ++jet_used_;
    return state_from_leaves(tape, first, *prob_, net_kappa_, kappa_out);
}

ad::Var BaseModel::value_forward(ad::Tape& tape, const double* x) {
    if (val_used_ == val_traces_.size()) {
        val_traces_.emplace_back();
        value_pass_.prepare(val_traces_.back());
    }
    ad::Trace& t = val_traces_[val_used_];
    for (int i = 0; i < prob_->dim(); ++i) t.input()[i] = x[i];
    draw_masks(t);
    value_pass_.forward(params_.flat(), t);

    const auto first = static_cast<std::int32_t>(tape.size());
    const ad::Var u = tape.leaf(value_pass_.outputs(t)[0]);
    val_records_.push_back({static_cast<int>(val_used_), first});
    ++val_used_;
    return u;
}

void BaseModel::backward(const ad::Tape& tape, std::span<double> grad) {
    std::vector<double> adj(jet_pass_.output_len());
    for (const Record& r : jet_records_) {
        std::fill(adj.begin(), adj.end(), 0.0);
        for (std::size_t k = 0; k < jet_leaf_pos_.size(); ++k)
            adj[jet_leaf_pos_[k]] = tape.adjoint_at(r.first_leaf + static_cast<std::int32_t>(k));
        jet_pass_.backward(params_.flat(), jet_traces_[r.trace], adj, grad);
    }
    std::vector<double> vadj(value_pass_.output_len());
    for (const Record& r : val_records_) {
        std::fill(vadj.begin(), vadj.end(), 0.0);
        vadj[0] = tape.adjoint_at(r.first_leaf);
        value_pass_.backward(params_.flat(), val_traces_[r.trace], vadj, grad);
    }
}

// ---------------------------------------------------------------------------
// EpinetModel
// ---------------------------------------------------------------------------

ad::Architecture epinet_arch(const pde::Problem& p, const ad::Architecture& base,
                             const std::vector<int>& hidden, int d_z) {
    ad::Architecture a;
    a.input_dim = p.dim() + base.hidden.back() + d_z;
    a.hidden = hidden;
    // Each epistemic net emits d_z values per output channel; the correction
    // is their dot product with the index z. A single scalar head collapses
    // the correction scale to a few thousandths of the field amplitude and
    // the resulting bands cannot cover, whatever the training budget.
    a.output_dim = base.output_dim * d_z;
    return a;
}

EpinetModel::EpinetModel(const pde::Problem& p, ad::NetworkParams base, const EpinetConfig& cfg,
                         std::uint64_t seed)
    : prob_(&p),
      cfg_(cfg),
      base_(std::move(base)),
      learnable_(),
      prior_(),
      plan_(ChannelPlan::for_problem(p)),
      base_jet_(base_.arch(), plan_.layout),
      base_val_(base_.arch(), ad::ChannelLayout::values_only()),
      learn_jet_(epinet_arch(p, base_.arch(), cfg.hidden, cfg.d_z), plan_.layout),
      learn_val_(learn_jet_.arch(), ad::ChannelLayout::values_only()),
      prior_jet_(epinet_arch(p, base_.arch(), cfg.prior_hidden, cfg.d_z), plan_.layout),
      prior_val_(prior_jet_.arch(), ad::ChannelLayout::values_only()) {
    if (cfg_.d_z < 1) throw ConfigError("epinet: d_z must be >= 1");
    if (cfg_.alpha < 0.0) throw ConfigError("epinet: alpha must be >= 0");
    Rng learn_rng(seed, Stream::epinet_init);
    learnable_ = ad::NetworkParams::xavier_zero_head(learn_jet_.arch(), learn_rng);
    Rng prior_rng(seed, Stream::prior_init);
    prior_ = ad::NetworkParams::xavier(prior_jet_.arch(), prior_rng);
    z_.assign(cfg_.d_z, 0.0);
    jet_leaf_pos_ = leaf_positions(p, plan_, p.inverse());
    base_jet_.prepare(base_scratch_);
}

void EpinetModel::set_z(std::span<const double> z) {
    if (static_cast<int>(z.size()) != cfg_.d_z)
        throw UsageError("epinet: epistemic index length mismatch");
    z_.assign(z.begin(), z.end());
}

void EpinetModel::begin_epoch(Rng& rng) {
    for (auto& zi : z_) zi = rng.normal();
    jet_used_ = val_used_ = 0;
    jet_records_.clear();
    val_records_.clear();
}

const EpinetModel::BaseCache& EpinetModel::base_jet_cache(const double* x, std::size_t idx) {
    const int C = plan_.layout.channels;
    const int H = base_jet_.last_hidden_width();
    if (idx < jet_cache_.size()) {
        const BaseCache& c = jet_cache_[idx];
        if (std::memcmp(c.point.data(), x, sizeof(double) * prob_->dim()) != 0)
            throw UsageError("epinet: collocation order changed between epochs");
        return c;
    }
    if (idx != jet_cache_.size())
        throw UsageError("epinet: collocation cache accessed out of order");
    BaseCache c;
    c.point.assign(x, x + prob_->dim());
    fill_coord_jets(plan_, prob_->dim(), x, base_scratch_.input());
    base_jet_.forward(base_.flat(), base_scratch_);
    const double* out = base_jet_.outputs(base_scratch_);
    c.out.assign(out, out + base_jet_.output_len());
    const double* feat = base_jet_.last_hidden(base_scratch_);
    c.features.assign(feat, feat + static_cast<std::size_t>(H) * C);
    jet_cache_.push_back(std::move(c));
    return jet_cache_.back();
}

const EpinetModel::BaseCache& EpinetModel::base_value_cache(const double* x, std::size_t idx) {
    const int H = base_val_.last_hidden_width();
    if (idx < val_cache_.size()) {
        const BaseCache& c = val_cache_[idx];
        if (std::memcmp(c.point.data(), x, sizeof(double) * prob_->dim()) != 0)
            throw UsageError("epinet: point order changed between epochs");
        return c;
    }
    if (idx != val_cache_.size())
        throw UsageError("epinet: point cache accessed out of order");
    BaseCache c;
    c.point.assign(x, x + prob_->dim());
    ad::Trace t;
    base_val_.prepare(t);
    for (int i = 0; i < prob_->dim(); ++i) t.input()[i] = x[i];
    base_val_.forward(base_.flat(), t);
    const double* out = base_val_.outputs(t);
    c.out.assign(out, out + base_val_.output_len());
    const double* feat = base_val_.last_hidden(t);
    c.features.assign(feat, feat + H);
    val_cache_.push_back(std::move(c));
    return val_cache_.back();
}

void EpinetModel::build_ext_input(const BaseCache& cache, const double* x, int C,
                                  double* dst) const {
    const int dim = prob_->dim();
    if (C == 1) {
        for (int i = 0; i < dim; ++i) dst[i] = x[i];
    } else {
        fill_coord_jets(plan_, dim, x, dst);
    }
    std::memcpy(dst + static_cast<std::size_t>(dim) * C, cache.features.data(),
                cache.features.size() * sizeof(double));
    double* zdst = dst + (static_cast<std::size_t>(dim) + cache.features.size() / C) * C;
    for (int k = 0; k < cfg_.d_z; ++k) {
        double* d = zdst + static_cast<std::size_t>(k) * C;
        for (int c = 0; c < C; ++c) d[c] = 0.0;
        d[0] = z_[k];
    }
}

pde::FieldState<ad::Var> EpinetModel::colloc_forward(ad::Tape& tape, const double* x,
                                                     ad::Var* kappa_out) {
    const BaseCache& cache = base_jet_cache(x, jet_used_);
    const int C = plan_.layout.channels;

    if (jet_used_ == learn_jet_traces_.size()) {
        learn_jet_traces_.emplace_back();
        learn_jet_.prepare(learn_jet_traces_.back());
    }
    ad::Trace& lt = learn_jet_traces_[jet_used_];
    build_ext_input(cache, x, C, lt.input());
    learn_jet_.forward(learnable_.flat(), lt);

    if (prior_scratch_.buf.empty()) prior_jet_.prepare(prior_scratch_);
    std::memcpy(prior_scratch_.input(), lt.input(), prior_jet_.input_len() * sizeof(double));
    prior_jet_.forward(prior_.flat(), prior_scratch_);

    const double* lo = learn_jet_.outputs(lt);
    const double* po = prior_jet_.outputs(prior_scratch_);
    const auto first = static_cast<std::int32_t>(tape.size());
    for (int pos : jet_leaf_pos_) {
        const int c = pos / C, j = pos % C;
        double le = 0.0, pe = 0.0;
        for (int k = 0; k < cfg_.d_z; ++k) {
            const std::size_t np = static_cast<std::size_t>(c * cfg_.d_z + k) * C + j;
            le += lo[np] * z_[k];
            pe += po[np] * z_[k];
        }
        tape.leaf(cache.out[pos] + le + cfg_.alpha * pe);
    }
    jet_records_.push_back({static_cast<int>(jet_used_), first});
    ++jet_used_;
    return state_from_leaves(tape, first, *prob_, prob_->inverse(), kappa_out);
}

ad::Var EpinetModel::value_forward(ad::Tape& tape, const double* x) {
    const BaseCache& cache = base_value_cache(x, val_used_);

    if (val_used_ == learn_val_traces_.size()) {
        learn_val_traces_.emplace_back();
        learn_val_.prepare(learn_val_traces_.back());
    }
    ad::Trace& lt = learn_val_traces_[val_used_];
    build_ext_input(cache, x, 1, lt.input());
    learn_val_.forward(learnable_.flat(), lt);

    if (prior_val_scratch_.buf.empty()) prior_val_.prepare(prior_val_scratch_);
    std::memcpy(prior_val_scratch_.input(), lt.input(), prior_val_.input_len() * sizeof(double));
    prior_val_.forward(prior_.flat(), prior_val_scratch_);

    const double* lo = learn_val_.outputs(lt);
    const double* po = prior_val_.outputs(prior_val_scratch_);
    double le = 0.0, pe = 0.0;
    for (int k = 0; k < cfg_.d_z; ++k) {
        le += lo[k] * z_[k];
        pe += po[k] * z_[k];
    }
    const double u = cache.out[0] + le + cfg_.alpha * pe;
    const auto first = static_cast<std::int32_t>(tape.size());
    tape.leaf(u);
    val_records_.push_back({static_cast<int>(val_used_), first});
    ++val_used_;
    return ad::Var{&tape, first};
}

void EpinetModel::backward(const ad::Tape& tape, std::span<double> grad) {
    const int C = plan_.layout.channels;
    std::vector<double> adj(learn_jet_.output_len());
    for (const Record& r : jet_records_) {
        std::fill(adj.begin(), adj.end(), 0.0);
        for (std::size_t i = 0; i < jet_leaf_pos_.size(); ++i) {
            const double a = tape.adjoint_at(r.first_leaf + static_cast<std::int32_t>(i));
            const int pos = jet_leaf_pos_[i], c = pos / C, j = pos % C;
            for (int k = 0; k < cfg_.d_z; ++k)
                adj[static_cast<std::size_t>(c * cfg_.d_z + k) * C + j] = a * z_[k];
        }
        learn_jet_.backward(learnable_.flat(), learn_jet_traces_[r.trace], adj, grad);
    }
    std::vector<double> vadj(learn_val_.output_len());
    for (const Record& r : val_records_) {
        std::fill(vadj.begin(), vadj.end(), 0.0);
        const double a = tape.adjoint_at(r.first_leaf);
        for (int k = 0; k < cfg_.d_z; ++k) vadj[k] = a * z_[k];
        learn_val_.backward(learnable_.flat(), learn_val_traces_[r.trace], vadj, grad);
    }
}

} // namespace epinn::models
