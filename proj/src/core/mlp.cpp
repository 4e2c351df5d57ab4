#include "mlp.hpp"

#include <cmath>
#include <cstring>

namespace epinn::ad {

std::vector<int> Architecture::widths() const {
    std::vector<int> w;
    w.reserve(hidden.size() + 2);
    w.push_back(input_dim);
    for (int h : hidden) w.push_back(h);
    w.push_back(output_dim);
    return w;
}

void Architecture::validate() const {
    if (input_dim < 1 || output_dim < 1)
        throw ConfigError("architecture: input and output dims must be >= 1");
    for (int h : hidden)
        if (h < 1) throw ConfigError("architecture: hidden widths must be >= 1");
}

std::vector<LayerPlan> layer_plans(const Architecture& arch) {
    arch.validate();
    const auto w = arch.widths();
    std::vector<LayerPlan> plans;
    plans.reserve(w.size() - 1);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        LayerPlan p;
        p.in = w[l];
        p.out = w[l + 1];
        p.w_off = off;
        off += static_cast<std::size_t>(p.in) * p.out;
        p.b_off = off;
        off += p.out;
        plans.push_back(p);
    }
    return plans;
}

std::size_t param_count(const Architecture& arch) {
    const auto plans = layer_plans(arch);
    const auto& last = plans.back();
    return last.b_off + last.out;
}

NetworkParams::NetworkParams(Architecture arch)
    : arch_(std::move(arch)), plans_(layer_plans(arch_)) {
    const auto& last = plans_.back();
    flat_.assign(last.b_off + last.out, 0.0);
}

NetworkParams NetworkParams::xavier(const Architecture& arch, Rng& rng) {
    NetworkParams p(arch);
    for (const auto& lp : p.plans_) {
        const double bound = std::sqrt(6.0 / (lp.in + lp.out));
        for (std::size_t k = 0; k < static_cast<std::size_t>(lp.in) * lp.out; ++k)
            p.flat_[lp.w_off + k] = rng.uniform(-bound, bound);
        // Biases share the layer bound. Zero biases would leave every tanh
        // unit inflecting at the origin, which stalls residual-only training.
        for (int j = 0; j < lp.out; ++j) p.flat_[lp.b_off + j] = rng.uniform(-bound, bound);
    }
    return p;
}

NetworkParams NetworkParams::xavier_zero_head(const Architecture& arch, Rng& rng) {
    NetworkParams p = xavier(arch, rng);
    const auto& last = p.plans_.back();
    for (std::size_t k = 0; k < static_cast<std::size_t>(last.in) * last.out; ++k)
        p.flat_[last.w_off + k] = 0.0;
    for (int j = 0; j < last.out; ++j) p.flat_[last.b_off + j] = 0.0;
    return p;
}

std::span<double> NetworkParams::weights(int layer) {
    const auto& lp = plans_.at(layer);
    return {flat_.data() + lp.w_off, static_cast<std::size_t>(lp.in) * lp.out};
}
std::span<double> NetworkParams::biases(int layer) {
    const auto& lp = plans_.at(layer);
    return {flat_.data() + lp.b_off, static_cast<std::size_t>(lp.out)};
}
std::span<const double> NetworkParams::weights(int layer) const {
    const auto& lp = plans_.at(layer);
    return {flat_.data() + lp.w_off, static_cast<std::size_t>(lp.in) * lp.out};
}
std::span<const double> NetworkParams::biases(int layer) const {
    const auto& lp = plans_.at(layer);
    return {flat_.data() + lp.b_off, static_cast<std::size_t>(lp.out)};
}

ChannelLayout ChannelLayout::values_only() { return ChannelLayout{1, {}}; }

ChannelLayout ChannelLayout::directions(const std::vector<bool>& want_second) {
    ChannelLayout lay;
    lay.channels = 1;
    for (bool s : want_second) {
        DirectionChannels dc;
        dc.d1 = lay.channels++;
        dc.d2 = s ? lay.channels++ : -1;
        lay.dirs.push_back(dc);
    }
    return lay;
}

JetPass::JetPass(Architecture arch, ChannelLayout layout)
    : arch_(std::move(arch)), layout_(std::move(layout)), plans_(layer_plans(arch_)) {
    if (layout_.channels < 1 || layout_.channels > 8)
        throw ConfigError("jet pass: unsupported channel count");
    params_len_ = param_count(arch_);
    for (int h : arch_.hidden) total_hidden_ += h;
}

void JetPass::prepare(Trace& t) const {
    const int C = layout_.channels;
    t.act_off.clear();
    t.pre_off.clear();
    std::size_t off = 0;
    t.act_off.push_back(off); // input jets
    off += static_cast<std::size_t>(arch_.input_dim) * C;
    const int L = static_cast<int>(plans_.size());
    t.pre_off.resize(L);
    for (int l = 0; l < L; ++l) {
        t.pre_off[l] = off;
        off += static_cast<std::size_t>(plans_[l].out) * C;
        if (l + 1 < L) {
            t.act_off.push_back(off); // post-activation feeding layer l+1
            off += static_cast<std::size_t>(plans_[l].out) * C;
        }
    }
    t.buf.assign(off, 0.0);
}

namespace {

struct TanhDerivs {
    double t, s1, s2, s3;
};

inline TanhDerivs tanh_derivs(double y) {
    const double t = std::tanh(y);
    const double s1 = 1.0 - t * t;
    const double s2 = -2.0 * t * s1;
    const double s3 = s1 * (6.0 * t * t - 2.0);
    return {t, s1, s2, s3};
}

} // namespace

template <int C>
void JetPass::forward_impl(std::span<const double> params, Trace& t) const {
    const int L = static_cast<int>(plans_.size());
    const bool dropout = !t.masks.empty();
    std::size_t mask_base = 0;
    for (int l = 0; l < L; ++l) {
        const auto& lp = plans_[l];
        const double* in = t.buf.data() + t.act_off[l];
        double* pre = t.buf.data() + t.pre_off[l];
        const double* W = params.data() + lp.w_off;
        const double* b = params.data() + lp.b_off;
        for (int j = 0; j < lp.out; ++j) {
            double acc[C];
            for (int c = 0; c < C; ++c) acc[c] = 0.0;
            const double* wrow = W + static_cast<std::size_t>(j) * lp.in;
            for (int i = 0; i < lp.in; ++i) {
                const double w = wrow[i];
                const double* aj = in + static_cast<std::size_t>(i) * C;
                for (int c = 0; c < C; ++c) acc[c] += w * aj[c];
            }
            acc[0] += b[j];
            double* pj = pre + static_cast<std::size_t>(j) * C;
            for (int c = 0; c < C; ++c) pj[c] = acc[c];
        }
        if (l + 1 == L) break; // linear output layer
        double* post = t.buf.data() + t.act_off[l + 1];
        for (int j = 0; j < lp.out; ++j) {
            const double* pj = pre + static_cast<std::size_t>(j) * C;
            double* aj = post + static_cast<std::size_t>(j) * C;
            const auto d = tanh_derivs(pj[0]);
            aj[0] = d.t;
            for (const auto& dc : layout_.dirs) {
                const double g = pj[dc.d1];
                aj[dc.d1] = d.s1 * g;
                if (dc.d2 >= 0) aj[dc.d2] = d.s2 * g * g + d.s1 * pj[dc.d2];
            }
            if (dropout) {
                const double m = t.masks[mask_base + j] ? t.keep_scale : 0.0;
                for (int c = 0; c < C; ++c) aj[c] *= m;
            }
        }
        if (dropout) mask_base += lp.out;
    }
}

void JetPass::forward(std::span<const double> params, Trace& t) const {
    if (params.size() != params_len_)
        throw UsageError("jet pass: parameter vector size mismatch");
    if (!t.masks.empty() && t.masks.size() != total_hidden_)
        throw UsageError("jet pass: dropout mask size mismatch");
    switch (layout_.channels) {
        case 1: forward_impl<1>(params, t); break;
        case 2: forward_impl<2>(params, t); break;
        case 3: forward_impl<3>(params, t); break;
        case 4: forward_impl<4>(params, t); break;
        case 5: forward_impl<5>(params, t); break;
        case 6: forward_impl<6>(params, t); break;
        case 7: forward_impl<7>(params, t); break;
        case 8: forward_impl<8>(params, t); break;
        default: throw UsageError("jet pass: unsupported channel count");
    }
}

template <int C>
void JetPass::backward_impl(std::span<const double> params, const Trace& t,
                            std::span<const double> out_adjoint, std::span<double> grad) const {
    const int L = static_cast<int>(plans_.size());
    const bool dropout = !t.masks.empty();

    // adjoint of the current layer's pre-activation block
    std::vector<double> adj_pre(out_adjoint.begin(), out_adjoint.end());
    std::vector<double> adj_act;

    std::size_t mask_base = total_hidden_;
    for (int l = L - 1; l >= 0; --l) {
        const auto& lp = plans_[l];
        const double* act = t.buf.data() + t.act_off[l];
        const double* W = params.data() + lp.w_off;
        double* gW = grad.data() + lp.w_off;
        double* gb = grad.data() + lp.b_off;

        // parameter gradients
        for (int j = 0; j < lp.out; ++j) {
            const double* adj_j = adj_pre.data() + static_cast<std::size_t>(j) * C;
            gb[j] += adj_j[0];
            double* gw_row = gW + static_cast<std::size_t>(j) * lp.in;
            for (int i = 0; i < lp.in; ++i) {
                const double* ai = act + static_cast<std::size_t>(i) * C;
                double s = 0.0;
                for (int c = 0; c < C; ++c) s += adj_j[c] * ai[c];
                gw_row[i] += s;
            }
        }
        if (l == 0) break; // input jets are constants here

        // adjoint of the activations entering this layer
        adj_act.assign(static_cast<std::size_t>(lp.in) * C, 0.0);
        for (int j = 0; j < lp.out; ++j) {
            const double* adj_j = adj_pre.data() + static_cast<std::size_t>(j) * C;
            const double* wrow = W + static_cast<std::size_t>(j) * lp.in;
            for (int i = 0; i < lp.in; ++i) {
                const double w = wrow[i];
                double* ai = adj_act.data() + static_cast<std::size_t>(i) * C;
                for (int c = 0; c < C; ++c) ai[c] += w * adj_j[c];
            }
        }

        // through dropout mask, then through tanh jets to layer l-1 pre-activations
        const auto& prev = plans_[l - 1];
        mask_base -= prev.out;
        const double* pre_prev = t.buf.data() + t.pre_off[l - 1];
        adj_pre.assign(static_cast<std::size_t>(prev.out) * C, 0.0);
        for (int j = 0; j < prev.out; ++j) {
            double* adj_a = adj_act.data() + static_cast<std::size_t>(j) * C;
            if (dropout) {
                const double m = t.masks[mask_base + j] ? t.keep_scale : 0.0;
                for (int c = 0; c < C; ++c) adj_a[c] *= m;
            }
            const double* pj = pre_prev + static_cast<std::size_t>(j) * C;
            double* out_j = adj_pre.data() + static_cast<std::size_t>(j) * C;
            const auto d = tanh_derivs(pj[0]);
            double adj_v = adj_a[0] * d.s1;
            for (const auto& dc : layout_.dirs) {
                const double g = pj[dc.d1];
                adj_v += adj_a[dc.d1] * d.s2 * g;
                double adj_g = adj_a[dc.d1] * d.s1;
                if (dc.d2 >= 0) {
                    const double h = pj[dc.d2];
                    adj_v += adj_a[dc.d2] * (d.s3 * g * g + d.s2 * h);
                    adj_g += adj_a[dc.d2] * 2.0 * d.s2 * g;
                    out_j[dc.d2] = adj_a[dc.d2] * d.s1;
                }
                out_j[dc.d1] = adj_g;
            }
            out_j[0] = adj_v;
        }
    }
}

void JetPass::backward(std::span<const double> params, const Trace& t,
                       std::span<const double> out_adjoint, std::span<double> grad) const {
    if (params.size() != params_len_ || grad.size() != params_len_)
        throw UsageError("jet pass: parameter/gradient size mismatch");
    if (out_adjoint.size() != output_len())
        throw UsageError("jet pass: output adjoint size mismatch");
    switch (layout_.channels) {
        case 1: backward_impl<1>(params, t, out_adjoint, grad); break;
        case 2: backward_impl<2>(params, t, out_adjoint, grad); break;
        case 3: backward_impl<3>(params, t, out_adjoint, grad); break;
        case 4: backward_impl<4>(params, t, out_adjoint, grad); break;
        case 5: backward_impl<5>(params, t, out_adjoint, grad); break;
        case 6: backward_impl<6>(params, t, out_adjoint, grad); break;
        case 7: backward_impl<7>(params, t, out_adjoint, grad); break;
        case 8: backward_impl<8>(params, t, out_adjoint, grad); break;
        default: throw UsageError("jet pass: unsupported channel count");
    }
}

std::vector<OutputJet> forward_jets(const NetworkParams& params, std::span<const double> x) {
    const int dim = params.arch().input_dim;
    if (static_cast<int>(x.size()) != dim)
        throw UsageError("forward_jets: input size does not match architecture");
    const ChannelLayout layout = ChannelLayout::directions(std::vector<bool>(dim, true));
    const int C = layout.channels;
    JetPass pass(params.arch(), layout);
    Trace t;
    pass.prepare(t);
    for (int i = 0; i < dim; ++i) {
        double* d = t.input() + static_cast<std::size_t>(i) * C;
        for (int c = 0; c < C; ++c) d[c] = 0.0;
        d[0] = x[i];
        d[layout.dirs[i].d1] = 1.0;
    }
    pass.forward(params.flat(), t);
    const double* out = pass.outputs(t);
    std::vector<OutputJet> jets(static_cast<std::size_t>(params.arch().output_dim) * dim);
    for (int o = 0; o < params.arch().output_dim; ++o)
        for (int a = 0; a < dim; ++a) {
            OutputJet& j = jets[static_cast<std::size_t>(o) * dim + a];
            j.value = out[o * C];
            j.d1 = out[o * C + layout.dirs[a].d1];
            j.d2 = out[o * C + layout.dirs[a].d2];
        }
    return jets;
}

std::vector<double> forward_values(const NetworkParams& params, std::span<const double> x) {
    if (static_cast<int>(x.size()) != params.arch().input_dim)
        throw UsageError("forward: input size does not match architecture");
    JetPass pass(params.arch(), ChannelLayout::values_only());
    Trace t;
    pass.prepare(t);
    std::memcpy(t.input(), x.data(), x.size() * sizeof(double));
    pass.forward(params.flat(), t);
    const double* out = pass.outputs(t);
    return std::vector<double>(out, out + params.arch().output_dim);
}

} // namespace epinn::ad
