#include "dualclass/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "dualclass/parallel.hpp"
#include "dualclass/random.hpp"

namespace dualclass {

namespace {

void require_finite(std::span<const double> x, const char* what) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw std::domain_error(std::string(what) + ": non-finite input");
        }
    }
}

void require_same_grid(const Scaleogram& a, const Scaleogram& b, const char* what) {
    if (!(a.grid == b.grid) || !a.values.same_shape(b.values) || a.dt != b.dt) {
        throw std::invalid_argument(std::string(what) + ": scaleogram grids differ");
    }
}

}  // namespace

double MorletSpec::fourier_factor() const {
    return 4.0 * std::numbers::pi / (omega0 + std::sqrt(2.0 + omega0 * omega0));
}

void MorletSpec::validate() const {
    if (!(omega0 >= 5.0) || !std::isfinite(omega0)) {
        throw std::domain_error("MorletSpec: omega0 must be >= 5");
    }
}

std::complex<double> morlet_mother(double t, const MorletSpec& spec) {
    const double amplitude = spec.unit_energy ? std::pow(std::numbers::pi, -0.25) : 1.0;
    const double envelope = amplitude * std::exp(-0.5 * t * t);
    return {envelope * std::cos(spec.omega0 * t), envelope * std::sin(spec.omega0 * t)};
}

ScaleGrid::ScaleGrid(double s0, double dj, std::size_t num_scales, double omega0)
    : s0_(s0), dj_(dj), omega0_(omega0) {
    if (!(s0 > 0.0) || !(dj > 0.0) || num_scales == 0) {
        throw std::invalid_argument("ScaleGrid: need s0 > 0, dj > 0, num_scales >= 1");
    }
    const MorletSpec morlet{omega0, true};
    morlet.validate();
    const double factor = morlet.fourier_factor();
    scales_.reserve(num_scales);
    periods_.reserve(num_scales);
    for (std::size_t j = 0; j < num_scales; ++j) {
        const double s = s0 * std::exp2(static_cast<double>(j) * dj);
        scales_.push_back(s);
        periods_.push_back(s * factor);
    }
}

ScaleGrid ScaleGrid::for_length(std::size_t n, double dt, double omega0) {
    const double s0 = 2.0 * dt;
    const double dj = 1.0 / 12.0;
    const double target = std::min(static_cast<double>(n) / 3.0, 512.0) * dt;
    const double smallest = s0 * MorletSpec{omega0, true}.fourier_factor();
    std::size_t count = 1;
    if (target > smallest) {
        count = static_cast<std::size_t>(std::ceil(std::log2(target / smallest) / dj - 1e-9)) + 1;
    }
    return ScaleGrid(s0, dj, count, omega0);
}

bool ScaleGrid::operator==(const ScaleGrid& other) const {
    return s0_ == other.s0_ && dj_ == other.dj_ && omega0_ == other.omega0_ && scales_.size() == other.scales_.size();
}

void MonteCarloSpec::validate() const {
    if (iterations < 1) {
        throw std::invalid_argument("MonteCarloSpec: iterations must be >= 1");
    }
    if (!(significance_level > 0.0 && significance_level < 1.0)) {
        throw std::invalid_argument("MonteCarloSpec: level must lie in (0, 1)");
    }
}

struct CoherenceEngine::Smoothed {
    ComplexGrid cross;
    ComplexGrid power;  // real: a, imag: b
};

CoherenceEngine::CoherenceEngine(std::size_t n, ScaleGrid grid, MorletSpec morlet, SmoothingSpec smoothing, double dt)
    : n_(n),
      padded_(next_power_of_two(2 * n)),
      grid_(std::move(grid)),
      morlet_(morlet),
      smoothing_(smoothing),
      dt_(dt) {
    if (n < 4) {
        throw std::length_error("CoherenceEngine: series length must be >= 4");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("CoherenceEngine: dt must be positive");
    }
    if (!(smoothing.time_factor > 0.0) || !(smoothing.scale_window >= 0.0)) {
        throw std::invalid_argument("CoherenceEngine: invalid smoothing spec");
    }
    morlet_.validate();
    if (morlet_.omega0 != grid_.omega0()) {
        throw std::invalid_argument("CoherenceEngine: Morlet omega0 differs from scale grid");
    }
    fft_ = std::make_unique<Fft>(padded_);

    const auto lag_slot = [this](long m) {
        return static_cast<std::size_t>(m >= 0 ? m : static_cast<long>(padded_) + m);
    };
    const long reach = static_cast<long>(n_) - 1;

    for (const double s : grid_.scales()) {
        // q[m] = sqrt(dt/s) psi(m dt / s); W = x (*) q is the correlation
        // sum_t x(t) conj(psi((t - tau) dt / s)) because conj(psi(u)) = psi(-u).
        FftBuffer wavelet(padded_);
        const double norm = std::sqrt(dt_ / s);
        for (long m = -reach; m <= reach; ++m) {
            wavelet[lag_slot(m)] = norm * morlet_mother(static_cast<double>(m) * dt_ / s, morlet_);
        }
        fft_->forward(wavelet);
        wavelet_spectra_.push_back(std::move(wavelet));

        FftBuffer gaussian(padded_);
        const double sigma = smoothing_.time_factor * s / dt_;
        std::vector<double> weights(static_cast<std::size_t>(2 * reach + 1));
        for (long m = -reach; m <= reach; ++m) {
            const double z = static_cast<double>(m) / sigma;
            const double w = std::exp(-0.5 * z * z);
            weights[static_cast<std::size_t>(m + reach)] = w;
            gaussian[lag_slot(m)] = w;
        }
        fft_->forward(gaussian);
        gaussian_spectra_.push_back(std::move(gaussian));

        // mass[t] = sum_{u in [0, n)} g(t - u) = sum_{m = t-n+1}^{t} g(m)
        std::vector<double> prefix(weights.size() + 1, 0.0);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            prefix[i + 1] = prefix[i] + weights[i];
        }
        std::vector<double> mass(n_);
        for (std::size_t t = 0; t < n_; ++t) {
            // index of lag m in weights is m + reach
            mass[t] = prefix[t + static_cast<std::size_t>(reach) + 1] - prefix[t];
        }
        gaussian_mass_.push_back(std::move(mass));
    }

    const double half = smoothing_.scale_window / (2.0 * grid_.dj());
    const double whole = std::floor(half + 1e-12);
    const double frac = half - whole;
    const auto core = static_cast<std::size_t>(whole);
    scale_taps_.assign(core + 1, 1.0);
    if (frac > 1e-12) {
        scale_taps_.push_back(frac);
    }
}

CoherenceEngine::~CoherenceEngine() = default;

Scaleogram CoherenceEngine::transform(std::span<const double> x) const {
    if (x.size() != n_) {
        throw std::length_error("cwt: series length differs from engine length");
    }
    require_finite(x, "cwt");
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(n_);

    FftBuffer spectrum(padded_);
    for (std::size_t t = 0; t < n_; ++t) {
        spectrum[t] = x[t] - mean;
    }
    fft_->forward(spectrum);

    Scaleogram out{ComplexGrid(grid_.size(), n_), grid_, dt_};
    FftBuffer work(padded_);
    const double inv = 1.0 / static_cast<double>(padded_);
    for (std::size_t j = 0; j < grid_.size(); ++j) {
        const FftBuffer& kernel = wavelet_spectra_[j];
        for (std::size_t k = 0; k < padded_; ++k) {
            work[k] = spectrum[k] * kernel[k];
        }
        fft_->inverse(work);
        auto row = out.values.row(j);
        for (std::size_t t = 0; t < n_; ++t) {
            row[t] = work[t] * inv;
        }
    }
    return out;
}

void CoherenceEngine::smooth_time_row(std::size_t scale, FftBuffer& buffer) const {
    fft_->forward(buffer);
    const FftBuffer& kernel = gaussian_spectra_[scale];
    for (std::size_t k = 0; k < padded_; ++k) {
        buffer[k] *= kernel[k];
    }
    fft_->inverse(buffer);
    const auto& mass = gaussian_mass_[scale];
    const double inv = 1.0 / static_cast<double>(padded_);
    for (std::size_t t = 0; t < n_; ++t) {
        buffer[t] *= inv / mass[t];
    }
}

void CoherenceEngine::smooth_scale(ComplexGrid& grid) const {
    const std::size_t rows = grid.rows();
    const auto reach = static_cast<long>(scale_taps_.size()) - 1;
    if (reach == 0) {
        return;
    }
    ComplexGrid out(rows, grid.cols());
    for (std::size_t j = 0; j < rows; ++j) {
        auto dst = out.row(j);
        double total = 0.0;
        for (long k = -reach; k <= reach; ++k) {
            const long src = static_cast<long>(j) + k;
            if (src < 0 || src >= static_cast<long>(rows)) {
                continue;
            }
            const double w = scale_taps_[static_cast<std::size_t>(std::abs(k))];
            total += w;
            const auto in = grid.row(static_cast<std::size_t>(src));
            for (std::size_t t = 0; t < dst.size(); ++t) {
                dst[t] += w * in[t];
            }
        }
        for (auto& v : dst) {
            v /= total;
        }
    }
    grid = std::move(out);
}

ComplexGrid CoherenceEngine::smooth(const ComplexGrid& values) const {
    if (values.rows() != grid_.size() || values.cols() != n_) {
        throw std::invalid_argument("smooth: grid shape differs from engine");
    }
    ComplexGrid out(values.rows(), values.cols());
    FftBuffer buffer(padded_);
    for (std::size_t j = 0; j < values.rows(); ++j) {
        const auto in = values.row(j);
        std::fill(buffer.span().begin(), buffer.span().end(), std::complex<double>{});
        std::copy(in.begin(), in.end(), buffer.data());
        smooth_time_row(j, buffer);
        std::copy(buffer.data(), buffer.data() + n_, out.row(j).begin());
    }
    smooth_scale(out);
    return out;
}

RealGrid CoherenceEngine::smooth(const RealGrid& values) const {
    ComplexGrid packed(values.rows(), values.cols());
    std::copy(values.values().begin(), values.values().end(), packed.values().begin());
    const ComplexGrid smoothed = smooth(packed);
    RealGrid out(values.rows(), values.cols());
    for (std::size_t i = 0; i < out.values().size(); ++i) {
        out.values()[i] = smoothed.values()[i].real();
    }
    return out;
}

CoherenceEngine::Smoothed CoherenceEngine::smoothed_spectra(const Scaleogram& a, const Scaleogram& b) const {
    Smoothed s{ComplexGrid(grid_.size(), n_), ComplexGrid(grid_.size(), n_)};
    FftBuffer cross(padded_);
    FftBuffer power(padded_);
    for (std::size_t j = 0; j < grid_.size(); ++j) {
        const double inv_scale = 1.0 / grid_.scales()[j];
        const auto wa = a.values.row(j);
        const auto wb = b.values.row(j);
        std::fill(cross.span().begin(), cross.span().end(), std::complex<double>{});
        std::fill(power.span().begin(), power.span().end(), std::complex<double>{});
        for (std::size_t t = 0; t < n_; ++t) {
            cross[t] = wa[t] * std::conj(wb[t]) * inv_scale;
            power[t] = {std::norm(wa[t]) * inv_scale, std::norm(wb[t]) * inv_scale};
        }
        smooth_time_row(j, cross);
        smooth_time_row(j, power);
        std::copy(cross.data(), cross.data() + n_, s.cross.row(j).begin());
        std::copy(power.data(), power.data() + n_, s.power.row(j).begin());
    }
    smooth_scale(s.cross);
    smooth_scale(s.power);
    return s;
}

namespace {

void fill_rho2(const ComplexGrid& cross, const ComplexGrid& power, RealGrid& rho2, MaskGrid* degenerate) {
    const auto c = cross.values();
    const auto p = power.values();
    auto r = rho2.values();
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double denom = p[i].real() * p[i].imag();
        if (!(denom > 0.0) || !std::isfinite(denom)) {
            r[i] = 0.0;
            if (degenerate != nullptr) {
                degenerate->values()[i] = 1;
            }
            continue;
        }
        r[i] = std::clamp(std::norm(c[i]) / denom, 0.0, 1.0);
    }
}

}  // namespace

RealGrid CoherenceEngine::rho2(std::span<const double> a, std::span<const double> b) const {
    const Smoothed s = smoothed_spectra(transform(a), transform(b));
    RealGrid out(grid_.size(), n_);
    fill_rho2(s.cross, s.power, out, nullptr);
    return out;
}

CoherenceField CoherenceEngine::coherence(const Scaleogram& a, const Scaleogram& b) const {
    require_same_grid(a, b, "coherence");
    if (!(a.grid == grid_) || a.n() != n_ || a.dt != dt_) {
        throw std::invalid_argument("coherence: scaleogram does not match engine");
    }
    const Smoothed s = smoothed_spectra(a, b);
    CoherenceField field;
    field.rho2 = RealGrid(grid_.size(), n_);
    field.degenerate = MaskGrid(grid_.size(), n_);
    field.significant = MaskGrid(grid_.size(), n_);
    fill_rho2(s.cross, s.power, field.rho2, &field.degenerate);
    PhaseField phase = phase_field(s.cross);
    field.phase = std::move(phase.angle);
    field.phase_indeterminate = std::move(phase.indeterminate);
    field.grid = grid_;
    field.coi = cone_of_influence();
    field.dt = dt_;
    return field;
}

std::vector<double> CoherenceEngine::cone_of_influence() const { return dualclass::cone_of_influence(n_, grid_, dt_); }

Scaleogram cwt(std::span<const double> x, const ScaleGrid& grid, const MorletSpec& spec, double dt) {
    if (x.size() < 4) {
        throw std::length_error("cwt: series length must be >= 4");
    }
    return CoherenceEngine(x.size(), grid, spec, {}, dt).transform(x);
}

Scaleogram cross_wavelet(const Scaleogram& a, const Scaleogram& b) {
    require_same_grid(a, b, "cross_wavelet");
    Scaleogram out{ComplexGrid(a.values.rows(), a.values.cols()), a.grid, a.dt};
    const auto x = a.values.values();
    const auto y = b.values.values();
    auto z = out.values.values();
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = x[i] * std::conj(y[i]);
    }
    return out;
}

ComplexGrid smooth(const ComplexGrid& values, const ScaleGrid& grid, const SmoothingSpec& spec, double dt) {
    return CoherenceEngine(values.cols(), grid, MorletSpec{grid.omega0(), true}, spec, dt).smooth(values);
}

RealGrid smooth(const RealGrid& values, const ScaleGrid& grid, const SmoothingSpec& spec, double dt) {
    return CoherenceEngine(values.cols(), grid, MorletSpec{grid.omega0(), true}, spec, dt).smooth(values);
}

CoherenceField coherence(const Scaleogram& a, const Scaleogram& b, const SmoothingSpec& spec) {
    require_same_grid(a, b, "coherence");
    return CoherenceEngine(a.n(), a.grid, MorletSpec{a.grid.omega0(), true}, spec, a.dt).coherence(a, b);
}

PhaseField phase_field(const ComplexGrid& cross_smoothed) {
    PhaseField out{RealGrid(cross_smoothed.rows(), cross_smoothed.cols()),
                   MaskGrid(cross_smoothed.rows(), cross_smoothed.cols())};
    const auto in = cross_smoothed.values();
    auto angle = out.angle.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!std::isfinite(in[i].real()) || !std::isfinite(in[i].imag())) {
            throw std::domain_error("phase_field: non-finite cell");
        }
        if (in[i] == std::complex<double>{}) {
            angle[i] = 0.0;
            out.indeterminate.values()[i] = 1;
            continue;
        }
        const double theta = std::atan2(in[i].imag(), in[i].real());
        angle[i] = theta <= -std::numbers::pi ? std::numbers::pi : theta;
    }
    return out;
}

AR1Params fit_ar1(std::span<const double> x) {
    if (x.size() < 3) {
        throw std::length_error("fit_ar1: need at least three observations");
    }
    require_finite(x, "fit_ar1");
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= n;
    double c0 = 0.0;
    double c1 = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = x[t] - mean;
        c0 += d * d;
        if (t + 1 < x.size()) {
            c1 += d * (x[t + 1] - mean);
        }
    }
    const double scale = std::max(std::abs(mean), 1.0);
    if (!(c0 / n > 1e-24 * scale * scale)) {
        throw std::domain_error("fit_ar1: degenerate (zero) variance");
    }
    const double phi = std::clamp(c1 / c0, -0.999, 0.999);
    double residual = 0.0;
    for (std::size_t t = 0; t + 1 < x.size(); ++t) {
        const double e = (x[t + 1] - mean) - phi * (x[t] - mean);
        residual += e * e;
    }
    return {phi, std::sqrt(residual / (n - 1.0)), mean};
}

std::vector<double> simulate_ar1(const AR1Params& p, std::size_t n, Rng& rng) {
    if (!(std::abs(p.phi) < 1.0)) {
        throw std::domain_error("simulate_ar1: |phi| must be < 1");
    }
    std::vector<double> out(n);
    if (n == 0) {
        return out;
    }
    double deviation = p.sigma / std::sqrt(1.0 - p.phi * p.phi) * rng.normal();
    out[0] = p.mean + deviation;
    for (std::size_t t = 1; t < n; ++t) {
        deviation = p.phi * deviation + p.sigma * rng.normal();
        out[t] = p.mean + deviation;
    }
    return out;
}

SignificanceResult significance(const CoherenceEngine& engine, const RealGrid& observed, std::span<const double> a,
                                std::span<const double> b, const MonteCarloSpec& mc) {
    mc.validate();
    if (a.size() != b.size()) {
        throw std::invalid_argument("significance: series lengths differ");
    }
    const std::size_t n = engine.length();
    const std::size_t rows = engine.grid().size();
    if (a.size() != n || observed.rows() != rows || observed.cols() != n) {
        throw std::invalid_argument("significance: inputs do not match engine");
    }
    SignificanceResult result{MaskGrid(rows, n), RealGrid(rows, n), fit_ar1(a), fit_ar1(b)};

    // Keep only the largest `keep` surrogate values per cell: enough to
    // read the (1 - level) quantile at position (M - 1)(1 - level).
    const std::size_t m = mc.iterations;
    const double position = static_cast<double>(m - 1) * (1.0 - mc.significance_level);
    const auto lower = static_cast<std::size_t>(std::floor(position));
    const double frac = position - static_cast<double>(lower);
    const std::size_t keep = m - lower;
    const std::size_t cells = rows * n;
    std::vector<double> top(cells * keep);
    std::size_t filled = 0;

    const unsigned threads = resolve_threads(mc.threads);
    const std::size_t batch = std::max<std::size_t>(1, threads);
    std::vector<RealGrid> draws(batch);
    for (std::size_t start = 0; start < m; start += batch) {
        const std::size_t count = std::min(batch, m - start);
        parallel_for(count, threads, [&](std::size_t i) {
            Rng rng(derive_seed(mc.seed, "surrogate", start + i));
            const auto sa = simulate_ar1(result.null_a, n, rng);
            const auto sb = simulate_ar1(result.null_b, n, rng);
            draws[i] = engine.rho2(sa, sb);
        });
        for (std::size_t i = 0; i < count; ++i) {
            const auto values = draws[i].values();
            for (std::size_t c = 0; c < cells; ++c) {
                double* slot = top.data() + c * keep;
                if (filled < keep) {
                    slot[filled] = values[c];
                    if (filled + 1 == keep) {
                        std::make_heap(slot, slot + keep, std::greater<>{});
                    }
                } else if (values[c] > slot[0]) {
                    std::pop_heap(slot, slot + keep, std::greater<>{});
                    slot[keep - 1] = values[c];
                    std::push_heap(slot, slot + keep, std::greater<>{});
                }
            }
            ++filled;
        }
    }

    const auto obs = observed.values();
    for (std::size_t c = 0; c < cells; ++c) {
        double* slot = top.data() + c * keep;
        std::sort(slot, slot + keep);
        const double hi = keep > 1 ? slot[1] : slot[0];
        const double threshold = slot[0] + frac * (hi - slot[0]);
        result.threshold.values()[c] = threshold;
        result.significant.values()[c] = obs[c] > threshold ? 1 : 0;
    }
    return result;
}

SignificanceResult significance(std::span<const double> a, std::span<const double> b, const ScaleGrid& grid,
                                const SmoothingSpec& sspec, const MonteCarloSpec& mc, const MorletSpec& morlet,
                                double dt) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("significance: series lengths differ");
    }
    const CoherenceEngine engine(a.size(), grid, morlet, sspec, dt);
    const RealGrid observed = engine.rho2(a, b);
    return significance(engine, observed, a, b, mc);
}

std::vector<double> cone_of_influence(std::size_t n, const ScaleGrid& grid, double dt) {
    if (n < 2) {
        throw std::length_error("cone_of_influence: need n >= 2");
    }
    const double factor = MorletSpec{grid.omega0(), true}.fourier_factor() / std::numbers::sqrt2;
    std::vector<double> coi(n);
    for (std::size_t t = 0; t < n; ++t) {
        coi[t] = factor * static_cast<double>(std::min(t, n - 1 - t)) * dt;
    }
    return coi;
}

}  // namespace dualclass
