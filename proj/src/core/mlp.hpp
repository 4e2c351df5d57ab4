#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace epinn::ad {

// Fixed fully connected architecture. Hidden activations are tanh (smooth,
// twice differentiable — required for second-order jets); the output layer is
// linear.
struct Architecture {
    int input_dim = 1;
    std::vector<int> hidden{32, 32, 32};
    int output_dim = 1;

    std::vector<int> widths() const;
    int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
    void validate() const;
    bool operator==(const Architecture&) const = default;
};

// Per-layer offsets into the flat parameter vector: weights (out x in,
// row-major) followed by biases (out).
struct LayerPlan {
    int in = 0;
    int out = 0;
    std::size_t w_off = 0;
    std::size_t b_off = 0;
};

std::vector<LayerPlan> layer_plans(const Architecture& arch);
std::size_t param_count(const Architecture& arch);

// Flat, indexable parameter vector plus its architecture descriptor.
class NetworkParams {
public:
    NetworkParams() = default;
    explicit NetworkParams(Architecture arch);

    static NetworkParams xavier(const Architecture& arch, Rng& rng);
    // Xavier everywhere except the final layer, which starts at zero.
    static NetworkParams xavier_zero_head(const Architecture& arch, Rng& rng);

    const Architecture& arch() const { return arch_; }
    std::size_t size() const { return flat_.size(); }
    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }

    std::span<double> weights(int layer);
    std::span<double> biases(int layer);
    std::span<const double> weights(int layer) const;
    std::span<const double> biases(int layer) const;
    const std::vector<LayerPlan>& plans() const { return plans_; }

private:
    Architecture arch_;
    std::vector<LayerPlan> plans_;
    std::vector<double> flat_;
};

// ---------------------------------------------------------------------------
// Multi-channel jet propagation.
//
// A pass carries `channels` scalars per neuron: channel 0 is the value and
// the remaining channels are directional first/second derivatives as declared
// by ChannelLayout. One pass can carry several directions at once (e.g. value,
// du/dx, d2u/dx2, du/dt for a space-time operator), which keeps operator
// evaluation to a single forward/backward sweep per point.
// ---------------------------------------------------------------------------

struct DirectionChannels {
    int d1 = -1; // channel index of the first derivative
    int d2 = -1; // channel index of the second derivative, -1 when not carried
};

struct ChannelLayout {
    int channels = 1;
    std::vector<DirectionChannels> dirs;

    // Builds the layout [value, (d1,d2?) per direction].
    static ChannelLayout values_only();
    static ChannelLayout directions(const std::vector<bool>& want_second);
};

// Recorded forward pass: input jets, every pre-activation jet block and every
// post-activation (post-mask) jet block, replayable in reverse.
struct Trace {
    std::vector<double> buf;
    std::vector<std::uint8_t> masks; // concatenated hidden-neuron keep flags, empty = no dropout
    double keep_scale = 1.0;

    // filled by JetPass::prepare
    std::vector<std::size_t> act_off; // act_off[l]: activations entering layer l (act_off[0] = input)
    std::vector<std::size_t> pre_off; // pre_off[l]: pre-activation of layer l

    double* input() { return buf.data(); }
    const double* output(int channels_times_out_offset = 0) const;
};

class JetPass {
public:
    JetPass(Architecture arch, ChannelLayout layout);

    const Architecture& arch() const { return arch_; }
    const ChannelLayout& layout() const { return layout_; }
    int channels() const { return layout_.channels; }
    std::size_t input_len() const { return static_cast<std::size_t>(arch_.input_dim) * layout_.channels; }
    std::size_t output_len() const { return static_cast<std::size_t>(arch_.output_dim) * layout_.channels; }

    // Sizes the trace buffers; call once per reused Trace.
    void prepare(Trace& t) const;

    // Forward sweep. t.input() must hold input jets; masks (if any) must be
    // sized to the total hidden width with keep_scale set.
    void forward(std::span<const double> params, Trace& t) const;

    // Accumulates dL/dparams into grad given adjoints of the output jets.
    // grad must have param_count length; contributions are added.
    void backward(std::span<const double> params, const Trace& t,
                  std::span<const double> out_adjoint, std::span<double> grad) const;

    // Pointers into a prepared+forwarded trace.
    const double* outputs(const Trace& t) const { return t.buf.data() + t.pre_off.back(); }
    const double* last_hidden(const Trace& t) const { return t.buf.data() + t.act_off.back(); }
    int last_hidden_width() const { return plans_.back().in; }

    std::size_t total_hidden() const { return total_hidden_; }
    std::size_t params_len() const { return params_len_; }

private:
    template <int C> void forward_impl(std::span<const double> params, Trace& t) const;
    template <int C>
    void backward_impl(std::span<const double> params, const Trace& t,
                       std::span<const double> out_adjoint, std::span<double> grad) const;

    Architecture arch_;
    ChannelLayout layout_;
    std::vector<LayerPlan> plans_;
    std::size_t trace_len_ = 0;
    std::size_t total_hidden_ = 0;
    std::size_t params_len_ = 0;
};

// Convenience single-shot evaluation (allocates its own trace).
std::vector<double> forward_values(const NetworkParams& params, std::span<const double> x);

struct OutputJet {
    double value = 0.0, d1 = 0.0, d2 = 0.0;
};

// (value, d1, d2) of every output component along every input axis, from one
// fused pass: result[comp * input_dim + axis].
std::vector<OutputJet> forward_jets(const NetworkParams& params, std::span<const double> x);

} // namespace epinn::ad
