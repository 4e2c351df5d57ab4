#include "predict.hpp"

#include <cmath>
#include <cstring>

#include "errors.hpp"

namespace epinn::uq {

void EnsembleAccumulator::add(std::span<const double> sample) {
    if (sample.size() != n_) throw UsageError("ensemble: sample length mismatch");
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < n_; ++i) {
        const double d = sample[i] - mean_[i];
        mean_[i] += d * inv;
        m2_[i] += d * (sample[i] - mean_[i]);
    }
}

Ensemble EnsembleAccumulator::finish() const {
    if (count_ < 2) throw UsageError("ensemble: needs at least 2 samples");
    Ensemble e;
    e.n = n_;
    e.M = count_;
    e.mu = mean_;
    e.var.resize(n_);
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < n_; ++i) e.var[i] = m2_[i] * inv;
    return e;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("normal_quantile: p must lie in (0,1)");
    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley step against the exact CDF
    constexpr double sqrt2 = 1.4142135623730951;
    constexpr double sqrt2pi = 2.5066282746310002;
    const double e = 0.5 * std::erfc(-x / sqrt2) - p;
    const double u = e * sqrt2pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double sharpness(const Ensemble& e) {
    double s = 0.0;
    for (double v : e.var) s += std::sqrt(v);
    return e.n ? 4.0 * s / static_cast<double>(e.n) : 0.0;
}

double coverage(const Ensemble& e, std::span<const double> exact, double gamma) {
    if (exact.size() != e.n) throw UsageError("coverage: exact values length mismatch");
    if (e.n == 0) return 0.0;
    const double q = normal_quantile(0.5 * (1.0 + gamma));
    std::size_t inside = 0;
    for (std::size_t i = 0; i < e.n; ++i)
        if (std::abs(exact[i] - e.mu[i]) <= q * std::sqrt(e.var[i])) ++inside;
    return static_cast<double>(inside) / static_cast<double>(e.n);
}

double rmse(const Ensemble& e, std::span<const double> exact) {
    if (exact.size() != e.n) throw UsageError("rmse: exact values length mismatch");
    if (e.n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < e.n; ++i) {
        const double d = e.mu[i] - exact[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(e.n));
}

// ---------------------------------------------------------------------------

EpinnValueEvaluator::EpinnValueEvaluator(const pde::Problem& p, const EpinnArtifacts& a,
                                         std::span<const double> points, std::size_t n)
    : prob_(&p),
      a_(a),
      pts_(points),
      n_(n),
      out_dim_(a.base->arch().output_dim),
      H_(a.base->arch().hidden.back()),
      d_z_(a.d_z),
      learn_val_(a.learnable->arch(), ad::ChannelLayout::values_only()),
      prior_val_(a.prior->arch(), ad::ChannelLayout::values_only()) {
    learn_val_.prepare(lt_);
    prior_val_.prepare(pt_);
    base_out_.resize(n_ * out_dim_);
    features_.resize(n_ * H_);

    ad::JetPass base_val(a.base->arch(), ad::ChannelLayout::values_only());
    ad::Trace bt;
    base_val.prepare(bt);
    const int dim = p.dim();
    for (std::size_t i = 0; i < n_; ++i) {
        for (int d = 0; d < dim; ++d) bt.input()[d] = pts_[i * dim + d];
        base_val.forward(a.base->flat(), bt);
        std::memcpy(base_out_.data() + i * out_dim_, base_val.outputs(bt),
                    sizeof(double) * out_dim_);
        std::memcpy(features_.data() + i * H_, base_val.last_hidden(bt), sizeof(double) * H_);
    }
}

void EpinnValueEvaluator::eval(std::span<const double> z, int comp, std::span<double> out) {
    if (static_cast<int>(z.size()) != d_z_)
        throw UsageError("epinet eval: epistemic index length mismatch");
    if (out.size() != n_) throw UsageError("epinet eval: output length mismatch");
    const int dim = prob_->dim();
    for (std::size_t i = 0; i < n_; ++i) {
        double* in = lt_.input();
        for (int d = 0; d < dim; ++d) in[d] = pts_[i * dim + d];
        std::memcpy(in + dim, features_.data() + i * H_, sizeof(double) * H_);
        std::memcpy(in + dim + H_, z.data(), sizeof(double) * d_z_);
        learn_val_.forward(a_.learnable->flat(), lt_);
        std::memcpy(pt_.input(), in, sizeof(double) * prior_val_.input_len());
        prior_val_.forward(a_.prior->flat(), pt_);
        const double* lo = learn_val_.outputs(lt_);
        const double* po = prior_val_.outputs(pt_);
        double le = 0.0, pe = 0.0;
        for (int k = 0; k < d_z_; ++k) {
            le += lo[comp * d_z_ + k] * z[k];
            pe += po[comp * d_z_ + k] * z[k];
        }
        out[i] = base_out_[i * out_dim_ + comp] + le + a_.alpha * pe;
    }
}

DropoutValueEvaluator::DropoutValueEvaluator(const pde::Problem& p,
                                             const ad::NetworkParams& params, double rate,
                                             std::span<const double> points, std::size_t n)
    : prob_(&p),
      params_(&params),
      rate_(rate),
      pts_(points),
      n_(n),
      out_dim_(params.arch().output_dim),
      pass_(params.arch(), ad::ChannelLayout::values_only()) {
    if (rate_ < 0.0 || rate_ >= 1.0) throw ConfigError("dropout eval: rate must lie in [0, 1)");
    pass_.prepare(trace_);
    mask_.resize(pass_.total_hidden());
}

void DropoutValueEvaluator::draw_mask(Rng& rng) {
    for (auto& m : mask_) m = rng.bernoulli(1.0 - rate_) ? 1 : 0;
}

void DropoutValueEvaluator::eval(int comp, std::span<double> out) {
    if (out.size() != n_) throw UsageError("dropout eval: output length mismatch");
    const int dim = prob_->dim();
    if (rate_ > 0.0) {
        trace_.masks = mask_;
        trace_.keep_scale = 1.0 / (1.0 - rate_);
    } else {
        trace_.masks.clear();
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (int d = 0; d < dim; ++d) trace_.input()[d] = pts_[i * dim + d];
        pass_.forward(params_->flat(), trace_);
        out[i] = pass_.outputs(trace_)[comp];
    }
}

Ensemble predict_epinn(const pde::Problem& p, const EpinnArtifacts& a,
                       std::span<const double> points, std::size_t n, long M,
                       std::uint64_t seed) {
    if (M < 2) throw UsageError("mc_predict: M must be >= 2");
    EpinnValueEvaluator ev(p, a, points, n);
    EnsembleAccumulator acc(n);
    Rng rng(seed, Stream::mc_predict);
    std::vector<double> z(a.d_z), pred(n);
    for (long m = 0; m < M; ++m) {
        for (auto& zi : z) zi = rng.normal();
        ev.eval(z, 0, pred);
        acc.add(pred);
    }
    return acc.finish();
}

Ensemble predict_dropout(const pde::Problem& p, const ad::NetworkParams& params, double rate,
                         std::span<const double> points, std::size_t n, long M,
                         std::uint64_t seed) {
    if (M < 2) throw UsageError("mc_predict: M must be >= 2");
    DropoutValueEvaluator ev(p, params, rate, points, n);
    EnsembleAccumulator acc(n);
    Rng rng(seed, Stream::mc_predict);
    std::vector<double> pred(n);
    for (long m = 0; m < M; ++m) {
        ev.draw_mask(rng);
        ev.eval(0, pred);
        acc.add(pred);
    }
    return acc.finish();
}

Ensemble predict_bpinn(const pde::Problem& p, const bayes::Chain& chain,
                       const ad::Architecture& arch, std::span<const double> points,
                       std::size_t n) {
    if (chain.n() == 0) throw UsageError("mc_predict: empty chain");
    const std::size_t n_net = ad::param_count(arch);
    if (chain.dim < n_net) throw UsageError("mc_predict: chain dim smaller than network");

    ad::JetPass pass(arch, ad::ChannelLayout::values_only());
    ad::Trace t;
    pass.prepare(t);
    EnsembleAccumulator acc(n);
    std::vector<double> pred(n);
    const int dim = p.dim();
    for (std::size_t s = 0; s < chain.n(); ++s) {
        const std::span<const double> theta = chain.sample(s).subspan(0, n_net);
        for (std::size_t i = 0; i < n; ++i) {
            for (int d = 0; d < dim; ++d) t.input()[d] = points[i * dim + d];
            pass.forward(theta, t);
            pred[i] = pass.outputs(t)[0];
        }
        acc.add(pred);
    }
    return acc.finish();
}

} // namespace epinn::uq
