#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmc.hpp"
#include "mlp.hpp"
#include "pde.hpp"
#include "predict.hpp"

namespace epinn::inverse {

struct KappaSummary {
    double mean = 0.0;
    double std = 0.0; // sample (1/(M-1)) standard deviation
    std::vector<double> draws;
};

struct Histogram {
    std::vector<double> bin_left, bin_right;
    std::vector<long> count;
};

// One draw = spatiotemporal average of the latent field over the collocation
// set for one stochastic element (one z / one mask), or the latent entry of
// one posterior sample.
std::vector<double> kappa_draws_epinn(const pde::Problem& p, const uq::EpinnArtifacts& a,
                                      std::span<const double> colloc, std::size_t n, long M,
                                      std::uint64_t seed);

std::vector<double> kappa_draws_dropout(const pde::Problem& p, const ad::NetworkParams& params,
                                        double rate, std::span<const double> colloc,
                                        std::size_t n, long M, std::uint64_t seed);

std::vector<double> kappa_draws_bpinn(const bayes::Chain& chain, const ad::Architecture& arch);

KappaSummary kappa_summarize(std::vector<double> draws);

Histogram histogram(std::span<const double> draws, int bins = 50);

} // namespace epinn::inverse
