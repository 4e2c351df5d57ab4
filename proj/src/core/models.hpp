#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mlp.hpp"
#include "pde.hpp"
#include "rng.hpp"
#include "tape.hpp"

namespace epinn::models {

// Maps a problem's axes onto jet-pass channels. Channel 0 is the value;
// x always carries (d1, d2); the second axis carries (d1, d2) for a spatial
// axis or d1 only for time.
struct ChannelPlan {
    ad::ChannelLayout layout;
    int d1x = -1, d2x = -1;
    int d1y = -1, d2y = -1;
    int d1t = -1;

    static ChannelPlan for_problem(const pde::Problem& p);
};

// Writes the input jet block for raw coordinates into dst ([dim * C]).
void fill_coord_jets(const ChannelPlan& plan, int dim, const double* x, double* dst);

// Common interface the loss assembler drives. A model appends one pass record
// per forward call and replays them in backward(); an epoch is one
// begin_epoch / forwards / backward cycle over fixed point sets in a fixed
// order.
class TrainableModel {
public:
    virtual ~TrainableModel() = default;

    virtual const pde::Problem& problem() const = 0;
    virtual bool has_kappa() const = 0;

    virtual std::span<double> trainable_params() = 0;
    virtual std::span<const double> trainable_params() const = 0;

    // Draws the epoch's stochastic element (epistemic index z, or the epoch's
    // dropout mask) from the given rng. Resets pass records.
    virtual void begin_epoch(Rng& rng) = 0;

    // Jet evaluation at a collocation point; kappa_out receives the raw
    // latent-field value for inverse problems (untouched otherwise).
    virtual pde::FieldState<ad::Var> colloc_forward(ad::Tape& tape, const double* x,
                                                    ad::Var* kappa_out) = 0;

    // Value-only evaluation (sensor/boundary/initial channels).
    virtual ad::Var value_forward(ad::Tape& tape, const double* x) = 0;

    // Accumulates dL/d(trainable params) from tape adjoints into grad.
    virtual void backward(const ad::Tape& tape, std::span<double> grad) = 0;
};

// Plain PINN over one MLP; rate > 0 enables inverted dropout on every hidden
// layer (fresh mask per epoch, shared across the epoch's forward passes).
class BaseModel final : public TrainableModel {
public:
    // net_kappa_field: inverse problems emit the latent field as a second
    // output channel. Pass false when the latent lives elsewhere (the
    // posterior sampler carries a single global latent instead).
    BaseModel(const pde::Problem& p, ad::NetworkParams params, double dropout_rate = 0.0,
              bool net_kappa_field = true);

    const pde::Problem& problem() const override { return *prob_; }
    bool has_kappa() const override { return net_kappa_; }
    std::span<double> trainable_params() override { return params_.flat(); }
    std::span<const double> trainable_params() const override { return params_.flat(); }
    const ad::NetworkParams& net() const { return params_; }
    ad::NetworkParams& net() { return params_; }
    double dropout_rate() const { return rate_; }

    void begin_epoch(Rng& rng) override;
    pde::FieldState<ad::Var> colloc_forward(ad::Tape& tape, const double* x,
                                            ad::Var* kappa_out) override;
    ad::Var value_forward(ad::Tape& tape, const double* x) override;
    void backward(const ad::Tape& tape, std::span<double> grad) override;

    // Architecture helper: input = problem dim, output = 1 (+1 for inverse).
    static ad::Architecture arch_for(const pde::Problem& p,
                                     const std::vector<int>& hidden = {32, 32, 32});

private:
    struct Record {
        int trace = 0;
        std::int32_t first_leaf = 0;
    };
    void draw_masks(ad::Trace& t);

    const pde::Problem* prob_;
    ad::NetworkParams params_;
    ChannelPlan plan_;
    ad::JetPass jet_pass_;
    ad::JetPass value_pass_;
    double rate_;
    bool net_kappa_;
    Rng* epoch_rng_ = nullptr;
    std::vector<std::uint8_t> epoch_masks_; // one subnetwork per epoch

    std::vector<ad::Trace> jet_traces_, val_traces_;
    std::vector<Record> jet_records_, val_records_;
    std::size_t jet_used_ = 0, val_used_ = 0;
    std::vector<int> jet_leaf_pos_; // output-buffer positions that become leaves
};

struct EpinetConfig {
    std::vector<int> hidden{32, 32, 32}; // learnable net
    std::vector<int> prior_hidden{5, 5};
    double alpha = 0.05;
    int d_z = 8;
};

// Additive correction head: u(x, z) = u_base(x) + e_learn(xt, z) + alpha *
// e_prior(xt, z) with xt = [x, last-hidden activations of the frozen base].
// Each epistemic net emits d_z values per output channel and the correction
// is their dot product with z, so the correction scale rides on the net's
// weight magnitudes rather than on a single squashed scalar.
// The base is never written to; parameter adjoints stop at the feature path
// while spatial jets flow through it.
class EpinetModel final : public TrainableModel {
public:
    EpinetModel(const pde::Problem& p, ad::NetworkParams base, const EpinetConfig& cfg,
                std::uint64_t seed);

    const pde::Problem& problem() const override { return *prob_; }
    bool has_kappa() const override { return prob_->inverse(); }
    std::span<double> trainable_params() override { return learnable_.flat(); }
    std::span<const double> trainable_params() const override { return learnable_.flat(); }

    const ad::NetworkParams& base() const { return base_; }
    const ad::NetworkParams& learnable() const { return learnable_; }
    ad::NetworkParams& learnable() { return learnable_; }
    const ad::NetworkParams& prior() const { return prior_; }
    const EpinetConfig& config() const { return cfg_; }

    void begin_epoch(Rng& rng) override;
    pde::FieldState<ad::Var> colloc_forward(ad::Tape& tape, const double* x,
                                            ad::Var* kappa_out) override;
    ad::Var value_forward(ad::Tape& tape, const double* x) override;
    void backward(const ad::Tape& tape, std::span<double> grad) override;

    const std::vector<double>& current_z() const { return z_; }
    void set_z(std::span<const double> z);

private:
    struct Record {
        int trace = 0;
        std::int32_t first_leaf = 0;
    };
    struct BaseCache {
        std::vector<double> point;    // coords, for order validation
        std::vector<double> out;      // [out_dim * C]
        std::vector<double> features; // [H * C]
    };

    const BaseCache& base_jet_cache(const double* x, std::size_t idx);
    const BaseCache& base_value_cache(const double* x, std::size_t idx);
    void build_ext_input(const BaseCache& cache, const double* x, int C, double* dst) const;

    const pde::Problem* prob_;
    EpinetConfig cfg_;
    ad::NetworkParams base_, learnable_, prior_;
    ChannelPlan plan_;
    ad::JetPass base_jet_, base_val_;
    ad::JetPass learn_jet_, learn_val_;
    ad::JetPass prior_jet_, prior_val_;

    std::vector<double> z_;
    std::vector<ad::Trace> learn_jet_traces_, learn_val_traces_;
    ad::Trace base_scratch_, prior_scratch_, prior_val_scratch_;
    std::vector<BaseCache> jet_cache_, val_cache_;
    std::vector<Record> jet_records_, val_records_;
    std::size_t jet_used_ = 0, val_used_ = 0;
    std::vector<int> jet_leaf_pos_;
};

// Learnable-epinet architecture for a problem/base combination.
ad::Architecture epinet_arch(const pde::Problem& p, const ad::Architecture& base,
                             const std::vector<int>& hidden, int d_z);

} // namespace epinn::models
