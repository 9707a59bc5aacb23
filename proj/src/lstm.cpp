#include "dualclass/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dualclass/random.hpp"

namespace dualclass {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// out[r] = W[r, :] . v + b[r]
void affine(const Matrix& w, std::span<const double> v, const std::vector<double>& b, std::vector<double>& out) {
    out.resize(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double* row = w.data.data() + r * w.cols;
        double acc = b[r];
        for (std::size_t c = 0; c < w.cols; ++c) {
            acc += row[c] * v[c];
        }
        out[r] = acc;
    }
}

void check_range(const std::vector<double>& v, double lo, double hi, const char* name) {
    for (double x : v) {
        if (!(x >= lo && x <= hi)) {
            throw std::runtime_error(std::string("lstm: ") + name + " activation out of range");
        }
    }
}

// grad_w += z (outer) concat; grad_b += z; dconcat += W^T z
void accumulate_gate(const Matrix& w, const std::vector<double>& z, const std::vector<double>& concat, Matrix& grad_w,
                     std::vector<double>& grad_b, std::vector<double>& dconcat) {
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double zr = z[r];
        grad_b[r] += zr;
        double* g = grad_w.data.data() + r * w.cols;
        const double* row = w.data.data() + r * w.cols;
        for (std::size_t c = 0; c < w.cols; ++c) {
            g[c] += zr * concat[c];
            dconcat[c] += row[c] * zr;
        }
    }
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
    if (hidden == 0 || input == 0) {
        throw std::invalid_argument("LstmParams: hidden and input sizes must be positive");
    }
    LstmParams p;
    p.hidden = hidden;
    p.input = input;
    const std::size_t width = hidden + input;
    p.w_forget = p.w_input = p.w_output = p.w_cell = Matrix(hidden, width);
    p.b_forget = p.b_input = p.b_output = p.b_cell = std::vector<double>(hidden, 0.0);
    p.head_w.assign(hidden, 0.0);
    p.head_b = 0.0;
    return p;
}

LstmParams LstmParams::initialize(std::size_t hidden, std::size_t input, std::uint64_t seed) {
    LstmParams p = zeros(hidden, input);
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden + input));
    for (Matrix* w : {&p.w_forget, &p.w_input, &p.w_output, &p.w_cell}) {
        for (double& v : w->data) {
            v = rng.uniform(-bound, bound);
        }
    }
    const double head_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& v : p.head_w) {
        v = rng.uniform(-head_bound, head_bound);
    }
    std::fill(p.b_forget.begin(), p.b_forget.end(), 1.0);
    return p;
}

std::vector<std::span<double>> LstmParams::groups() {
    return {w_forget.data, w_input.data, w_output.data, w_cell.data, b_forget, b_input,
            b_output,      b_cell,       head_w,        std::span<double>(&head_b, 1)};
}

std::vector<std::span<const double>> LstmParams::groups() const {
    return {w_forget.data, w_input.data, w_output.data, w_cell.data, b_forget, b_input,
            b_output,      b_cell,       head_w,        std::span<const double>(&head_b, 1)};
}

std::size_t LstmParams::parameter_count() const {
    std::size_t total = 0;
    for (const auto& g : groups()) {
        total += g.size();
    }
    return total;
}

bool LstmParams::all_finite() const {
    for (const auto& g : groups()) {
        for (double v : g) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
    }
    return true;
}

bool LstmParams::operator==(const LstmParams& other) const {
    if (hidden != other.hidden || input != other.input) {
        return false;
    }
    const auto a = groups();
    const auto b = other.groups();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::equal(a[i].begin(), a[i].end(), b[i].begin(), b[i].end())) {
            return false;
        }
    }
    return true;
}

CellResult lstm_cell_forward(const LstmParams& p, std::span<const double> x, const LstmState& state) {
    if (x.size() != p.input || state.h.size() != p.hidden || state.c.size() != p.hidden) {
        throw std::invalid_argument("lstm_cell_forward: shape mismatch");
    }
    const std::size_t hidden = p.hidden;
    CellResult out;
    GateCache& g = out.cache;
    g.concat.reserve(hidden + p.input);
    g.concat.assign(state.h.begin(), state.h.end());
    g.concat.insert(g.concat.end(), x.begin(), x.end());

    affine(p.w_forget, g.concat, p.b_forget, g.forget);
    affine(p.w_input, g.concat, p.b_input, g.input);
    affine(p.w_output, g.concat, p.b_output, g.output);
    affine(p.w_cell, g.concat, p.b_cell, g.candidate);
    for (std::size_t r = 0; r < hidden; ++r) {
        g.forget[r] = sigmoid(g.forget[r]);
        g.input[r] = sigmoid(g.input[r]);
        g.output[r] = sigmoid(g.output[r]);
        g.candidate[r] = std::tanh(g.candidate[r]);
    }
    g.c_prev = state.c;
    g.c.resize(hidden);
    g.tanh_c.resize(hidden);
    out.state.h.resize(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
        g.c[r] = g.input[r] * g.candidate[r] + g.forget[r] * g.c_prev[r];
        g.tanh_c[r] = std::tanh(g.c[r]);
        out.state.h[r] = g.output[r] * g.tanh_c[r];
    }
    out.state.c = g.c;

    check_range(g.forget, 0.0, 1.0, "forget gate");
    check_range(g.input, 0.0, 1.0, "input gate");
    check_range(g.output, 0.0, 1.0, "output gate");
    check_range(g.candidate, -1.0, 1.0, "candidate");
    check_range(out.state.h, -1.0, 1.0, "hidden state");
    return out;
}

ForwardResult forward_sequence(const LstmParams& p, std::span<const std::vector<double>> inputs) {
    ForwardResult out;
    out.cache.steps.reserve(inputs.size());
    LstmState state = LstmState::zeros(p.hidden);
    for (const auto& x : inputs) {
        CellResult step = lstm_cell_forward(p, x, state);
        state = std::move(step.state);
        out.cache.steps.push_back(std::move(step.cache));
    }
    out.prediction = p.head_b;
    for (std::size_t r = 0; r < p.hidden; ++r) {
        out.prediction += p.head_w[r] * state.h[r];
    }
    out.cache.h_last = std::move(state.h);
    return out;
}

LstmParams backward(const LstmParams& p, const FeatureSample& sample, const SequenceCache& cache, double loss_grad) {
    const std::size_t hidden = p.hidden;
    if (cache.steps.size() != sample.inputs.size() || cache.h_last.size() != hidden) {
        throw std::invalid_argument("backward: cache does not match sample");
    }
    for (const auto& step : cache.steps) {
        if (step.concat.size() != hidden + p.input || step.forget.size() != hidden) {
            throw std::invalid_argument("backward: cache does not match parameters");
        }
    }
    LstmParams grad = LstmParams::zeros(hidden, p.input);
    grad.head_b = loss_grad;
    std::vector<double> dh(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
        grad.head_w[r] = loss_grad * cache.h_last[r];
        dh[r] = loss_grad * p.head_w[r];
    }
    std::vector<double> dc_next(hidden, 0.0);
    std::vector<double> zf(hidden), zi(hidden), zo(hidden), zg(hidden);
    std::vector<double> dconcat(hidden + p.input);

    for (std::size_t step = cache.steps.size(); step-- > 0;) {
        const GateCache& g = cache.steps[step];
        for (std::size_t r = 0; r < hidden; ++r) {
            const double d_out = dh[r] * g.tanh_c[r];
            const double dc = dc_next[r] + dh[r] * g.output[r] * (1.0 - g.tanh_c[r] * g.tanh_c[r]);
            const double d_forget = dc * g.c_prev[r];
            const double d_input = dc * g.candidate[r];
            const double d_cand = dc * g.input[r];
            dc_next[r] = dc * g.forget[r];
            zf[r] = d_forget * g.forget[r] * (1.0 - g.forget[r]);
            zi[r] = d_input * g.input[r] * (1.0 - g.input[r]);
            zo[r] = d_out * g.output[r] * (1.0 - g.output[r]);
            zg[r] = d_cand * (1.0 - g.candidate[r] * g.candidate[r]);
        }
        std::fill(dconcat.begin(), dconcat.end(), 0.0);
        accumulate_gate(p.w_forget, zf, g.concat, grad.w_forget, grad.b_forget, dconcat);
        accumulate_gate(p.w_input, zi, g.concat, grad.w_input, grad.b_input, dconcat);
        accumulate_gate(p.w_output, zo, g.concat, grad.w_output, grad.b_output, dconcat);
        accumulate_gate(p.w_cell, zg, g.concat, grad.w_cell, grad.b_cell, dconcat);
        std::copy(dconcat.begin(), dconcat.begin() + static_cast<long>(hidden), dh.begin());
    }
    return grad;
}

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    }
    if (hidden_size < 1 || batch_size < 1) {
        throw std::invalid_argument("TrainConfig: hidden_size and batch_size must be >= 1");
    }
    if (!(clip_norm > 0.0)) {
        throw std::invalid_argument("TrainConfig: clip_norm must be positive");
    }
}

TrainResult train(std::span<const FeatureSample> samples, const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) {
        throw std::invalid_argument("train: no samples");
    }
    const std::size_t input = samples.front().inputs.empty() ? 0 : samples.front().inputs.front().size();
    for (const auto& s : samples) {
        for (const auto& x : s.inputs) {
            if (x.size() != input) {
                throw std::invalid_argument("train: inconsistent input width");
            }
        }
    }
    TrainResult result{LstmParams::initialize(cfg.hidden_size, input, derive_seed(cfg.seed, "init")), {}};
    LstmParams& params = result.params;
    LstmParams first_moment = LstmParams::zeros(cfg.hidden_size, input);
    LstmParams second_moment = first_moment;
    Rng order_rng(derive_seed(cfg.seed, "order"));

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t step = 0;
    result.loss_trace.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            LstmParams batch_grad = LstmParams::zeros(cfg.hidden_size, input);
            for (std::size_t k = start; k < end; ++k) {
                const FeatureSample& sample = samples[order[k]];
                ForwardResult fwd;
                try {
                    fwd = forward_sequence(params, sample);
                } catch (const std::runtime_error& e) {
                    throw TrainingDiverged(std::string("train: diverged at epoch ") + std::to_string(epoch) + ": " +
                                           e.what());
                }
                const double err = fwd.prediction - sample.target;
                epoch_loss += err * err;
                const LstmParams g = backward(params, sample, fwd.cache, 2.0 * err * inv_batch);
                auto dst = batch_grad.groups();
                const auto src = g.groups();
                for (std::size_t i = 0; i < dst.size(); ++i) {
                    for (std::size_t j = 0; j < dst[i].size(); ++j) {
                        dst[i][j] += src[i][j];
                    }
                }
            }
            if (!std::isfinite(epoch_loss)) {
                throw TrainingDiverged("train: loss diverged (non-finite)");
            }

            auto grads = batch_grad.groups();
            double norm2 = 0.0;
            for (const auto& g : grads) {
                for (double v : g) {
                    norm2 += v * v;
                }
            }
            const double norm = std::sqrt(norm2);
            const double clip = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;

            ++step;
            const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto values = params.groups();
            auto m = first_moment.groups();
            auto v = second_moment.groups();
            for (std::size_t i = 0; i < values.size(); ++i) {
                for (std::size_t j = 0; j < values[i].size(); ++j) {
                    const double g = grads[i][j] * clip;
                    m[i][j] = cfg.beta1 * m[i][j] + (1.0 - cfg.beta1) * g;
                    v[i][j] = cfg.beta2 * v[i][j] + (1.0 - cfg.beta2) * g * g;
                    const double m_hat = m[i][j] / correction1;
                    const double v_hat = v[i][j] / correction2;
                    values[i][j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
                }
            }
        }
        const double mse = epoch_loss / static_cast<double>(samples.size());
        if (!std::isfinite(mse) || !params.all_finite()) {
            throw TrainingDiverged("train: loss diverged (non-finite)");
        }
        result.loss_trace.push_back(mse);
    }
    return result;
}

}  // namespace dualclass
