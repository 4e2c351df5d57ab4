#include "kappa.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace epinn::inverse {

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

std::vector<double> kappa_draws_epinn(const pde::Problem& p, const uq::EpinnArtifacts& a,
                                      std::span<const double> colloc, std::size_t n, long M,
                                      std::uint64_t seed) {
    if (a.base->arch().output_dim < 2)
        throw UsageError("kappa draws: model has no latent-field output channel");
    uq::EpinnValueEvaluator ev(p, a, colloc, n);
    Rng rng(seed, Stream::mc_predict);
    std::vector<double> z(a.d_z), field(n), draws;
    draws.reserve(M);
    for (long m = 0; m < M; ++m) {
        for (auto& zi : z) zi = rng.normal();
        ev.eval(z, 1, field);
        draws.push_back(mean_of(field));
    }
    return draws;
}

std::vector<double> kappa_draws_dropout(const pde::Problem& p, const ad::NetworkParams& params,
                                        double rate, std::span<const double> colloc,
                                        std::size_t n, long M, std::uint64_t seed) {
    if (params.arch().output_dim < 2)
        throw UsageError("kappa draws: model has no latent-field output channel");
    uq::DropoutValueEvaluator ev(p, params, rate, colloc, n);
    Rng rng(seed, Stream::mc_predict);
    std::vector<double> field(n), draws;
    draws.reserve(M);
    for (long m = 0; m < M; ++m) {
        ev.draw_mask(rng);
        ev.eval(1, field);
        draws.push_back(mean_of(field));
    }
    return draws;
}

std::vector<double> kappa_draws_bpinn(const bayes::Chain& chain, const ad::Architecture& arch) {
    const std::size_t n_net = ad::param_count(arch);
    if (chain.dim != n_net + 1)
        throw UsageError("kappa draws: chain has no latent entry");
    std::vector<double> draws;
    draws.reserve(chain.n());
    for (std::size_t s = 0; s < chain.n(); ++s) draws.push_back(chain.sample(s)[n_net]);
    return draws;
}

KappaSummary kappa_summarize(std::vector<double> draws) {
    if (draws.size() < 2) throw UsageError("kappa summary: needs at least 2 draws");
    KappaSummary ks;
    ks.mean = mean_of(draws);
    double ss = 0.0;
    for (double d : draws) {
        const double r = d - ks.mean;
        ss += r * r;
    }
    ks.std = std::sqrt(ss / static_cast<double>(draws.size() - 1));
    ks.draws = std::move(draws);
    return ks;
}

Histogram histogram(std::span<const double> draws, int bins) {
    if (draws.empty()) throw UsageError("histogram: no draws");
    if (bins < 1) throw UsageError("histogram: bins must be >= 1");
    const auto [mn_it, mx_it] = std::minmax_element(draws.begin(), draws.end());
    const double mn = *mn_it, mx = *mx_it;
    Histogram h;
    h.bin_left.resize(bins);
    h.bin_right.resize(bins);
    h.count.assign(bins, 0);
    const double width = (mx - mn) / bins;
    for (int b = 0; b < bins; ++b) {
        h.bin_left[b] = mn + b * width;
        h.bin_right[b] = (b + 1 == bins) ? mx : mn + (b + 1) * width;
    }
    for (double d : draws) {
        int b = width > 0.0 ? static_cast<int>((d - mn) / width) : 0;
        b = std::clamp(b, 0, bins - 1);
        ++h.count[b];
    }
    return h;
}

} // namespace epinn::inverse
