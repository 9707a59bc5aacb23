#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dualclass {

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Single-layer LSTM with a linear scalar head.
///
/// Gate matrices are hidden x (hidden + input) and act on the concatenation
/// [h_prev, x]. Gradients are returned in the same shape.
struct LstmParams {
    std::size_t hidden = 0;
    std::size_t input = 0;
    Matrix w_forget;
    Matrix w_input;
    Matrix w_output;
    Matrix w_cell;
    std::vector<double> b_forget;
    std::vector<double> b_input;
    std::vector<double> b_output;
    std::vector<double> b_cell;
    std::vector<double> head_w;
    double head_b = 0.0;

    static LstmParams zeros(std::size_t hidden, std::size_t input);
    /// Uniform(+-1/sqrt(hidden + input)) weights, forget bias +1, other biases 0.
    static LstmParams initialize(std::size_t hidden, std::size_t input, std::uint64_t seed);

    /// Every parameter group in a fixed order; head_b is the last, length-1 group.
    std::vector<std::span<double>> groups();
    std::vector<std::span<const double>> groups() const;

    std::size_t parameter_count() const;
    bool all_finite() const;
    bool operator==(const LstmParams&) const;
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;

    static LstmState zeros(std::size_t hidden) { return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)}; }
};

/// Activations retained by one cell step for the backward pass.
struct GateCache {
    std::vector<double> concat;  // [h_prev, x]
    std::vector<double> forget;
    std::vector<double> input;
    std::vector<double> output;
    std::vector<double> candidate;
    std::vector<double> c_prev;
    std::vector<double> c;
    std::vector<double> tanh_c;
};

struct CellResult {
    LstmState state;
    GateCache cache;
};

/// One step of the gate equations; throws if any activation leaves its range
/// (this also catches NaN).
CellResult lstm_cell_forward(const LstmParams& p, std::span<const double> x, const LstmState& state);

/// L input vectors (oldest first) and a scaled target.
struct FeatureSample {
    std::vector<std::vector<double>> inputs;
    double target = 0.0;
    std::size_t target_index = 0;
};

struct SequenceCache {
    std::vector<GateCache> steps;
    std::vector<double> h_last;
};

struct ForwardResult {
    double prediction = 0.0;
    SequenceCache cache;
};

/// Runs the cell chain from a zero state; prediction = head_w . h_L + head_b.
ForwardResult forward_sequence(const LstmParams& p, std::span<const std::vector<double>> inputs);
inline ForwardResult forward_sequence(const LstmParams& p, const FeatureSample& sample) {
    return forward_sequence(p, sample.inputs);
}

/// Reverse-mode gradients of a loss whose derivative with respect to the
/// prediction is `loss_grad`, through the head and every unrolled step.
LstmParams backward(const LstmParams& p, const FeatureSample& sample, const SequenceCache& cache, double loss_grad);

struct TrainConfig {
    std::size_t epochs = 200;
    double learning_rate = 1e-2;
    std::uint64_t seed = 0;
    std::size_t hidden_size = 16;
    std::size_t batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 1.0;

    void validate() const;
};

struct TrainResult {
    LstmParams params;
    /// Per-epoch mean squared error of the forward passes made while training.
    std::vector<double> loss_trace;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adam on mean squared error with global-norm clipping. Initialization and
/// per-epoch sample order derive from cfg.seed only.
TrainResult train(std::span<const FeatureSample> samples, const TrainConfig& cfg);

}  // namespace dualclass
