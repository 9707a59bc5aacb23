#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dualclass/fft.hpp"
#include "dualclass/grid.hpp"

namespace dualclass {

/// Morlet mother wavelet pi^(-1/4) exp(i w0 t) exp(-t^2/2).
struct MorletSpec {
    double omega0 = 6.0;
    bool unit_energy = true;

    /// Fourier period per unit scale: 4 pi / (w0 + sqrt(2 + w0^2)).
    double fourier_factor() const;
    void validate() const;
};

std::complex<double> morlet_mother(double t, const MorletSpec& spec = {});

/// Dyadic scale grid s0 * 2^(j * dj), j = 0 .. num_scales - 1 (scales in days).
class ScaleGrid {
public:
    ScaleGrid() = default;
    ScaleGrid(double s0, double dj, std::size_t num_scales, double omega0 = 6.0);

    /// s0 = 2 dt, dj = 1/12, and enough scales that the largest Fourier
    /// period reaches min(n / 3, 512) sampling intervals.
    static ScaleGrid for_length(std::size_t n, double dt = 1.0, double omega0 = 6.0);

    double s0() const { return s0_; }
    double dj() const { return dj_; }
    double omega0() const { return omega0_; }
    std::size_t size() const { return scales_.size(); }
    const std::vector<double>& scales() const { return scales_; }
    const std::vector<double>& periods() const { return periods_; }

    bool operator==(const ScaleGrid& other) const;

private:
    double s0_ = 0.0;
    double dj_ = 0.0;
    double omega0_ = 6.0;
    std::vector<double> scales_;
    std::vector<double> periods_;
};

/// Complex wavelet coefficients over (scale, time).
struct Scaleogram {
    ComplexGrid values;
    ScaleGrid grid;
    double dt = 1.0;

    std::size_t n() const { return values.cols(); }
};

/// Time smoothing: Gaussian with standard deviation time_factor * scale.
/// Scale smoothing: boxcar spanning scale_window octaves.
struct SmoothingSpec {
    double time_factor = 1.0;
    double scale_window = 0.6;
};

struct CoherenceField {
    RealGrid rho2;
    RealGrid phase;
    MaskGrid significant;
    /// Cells with a zero smoothed denominator (rho2 forced to 0).
    MaskGrid degenerate;
    /// Cells whose smoothed cross spectrum vanished (phase forced to 0).
    MaskGrid phase_indeterminate;
    ScaleGrid grid;
    /// Largest trustworthy Fourier period at each time index.
    std::vector<double> coi;
    double dt = 1.0;

    bool inside_coi(std::size_t scale, std::size_t time) const { return grid.periods()[scale] <= coi[time]; }
};

struct PhaseField {
    RealGrid angle;
    MaskGrid indeterminate;
};

struct MonteCarloSpec {
    std::size_t iterations = 1000;
    double significance_level = 0.05;
    std::uint64_t seed = 0;
    /// Worker threads for surrogate batches; 0 = hardware concurrency.
    unsigned threads = 0;

    void validate() const;
};

struct AR1Params {
    double phi = 0.0;
    double sigma = 1.0;
    double mean = 0.0;
};

class Rng;

/// Precomputed transform and smoothing kernels for one (length, grid) pair.
///
/// The transform is a linear correlation evaluated by FFT on a buffer padded
/// to a power of two at least 2n, so it equals the direct sum over the sample
/// at every time index. Smoothing is normalized convolution: each output is
/// divided by the kernel mass that falls inside the sample. Instances are
/// immutable after construction and safe to share between threads.
class CoherenceEngine {
public:
    CoherenceEngine(std::size_t n, ScaleGrid grid, MorletSpec morlet = {}, SmoothingSpec smoothing = {},
                    double dt = 1.0);
    ~CoherenceEngine();
    CoherenceEngine(const CoherenceEngine&) = delete;
    CoherenceEngine& operator=(const CoherenceEngine&) = delete;

    std::size_t length() const { return n_; }
    const ScaleGrid& grid() const { return grid_; }
    double dt() const { return dt_; }

    /// Mean is removed before transforming.
    Scaleogram transform(std::span<const double> x) const;

    ComplexGrid smooth(const ComplexGrid& grid) const;
    RealGrid smooth(const RealGrid& grid) const;

    CoherenceField coherence(const Scaleogram& a, const Scaleogram& b) const;
    /// Squared coherence only; the Monte-Carlo inner loop.
    RealGrid rho2(std::span<const double> a, std::span<const double> b) const;

    std::vector<double> cone_of_influence() const;

private:
    struct Smoothed;
    Smoothed smoothed_spectra(const Scaleogram& a, const Scaleogram& b) const;
    void smooth_time_row(std::size_t scale, FftBuffer& buffer) const;
    void smooth_scale(ComplexGrid& grid) const;

    std::size_t n_;
    std::size_t padded_;
    ScaleGrid grid_;
    MorletSpec morlet_;
    SmoothingSpec smoothing_;
    double dt_;
    std::unique_ptr<Fft> fft_;
    std::vector<FftBuffer> wavelet_spectra_;
    std::vector<FftBuffer> gaussian_spectra_;
    std::vector<std::vector<double>> gaussian_mass_;
    std::vector<double> scale_taps_;
};

Scaleogram cwt(std::span<const double> x, const ScaleGrid& grid, const MorletSpec& spec = {}, double dt = 1.0);

/// Entrywise a * conj(b).
Scaleogram cross_wavelet(const Scaleogram& a, const Scaleogram& b);

ComplexGrid smooth(const ComplexGrid& values, const ScaleGrid& grid, const SmoothingSpec& spec = {},
                   double dt = 1.0);
RealGrid smooth(const RealGrid& values, const ScaleGrid& grid, const SmoothingSpec& spec = {}, double dt = 1.0);

CoherenceField coherence(const Scaleogram& a, const Scaleogram& b, const SmoothingSpec& spec = {});

/// atan2(imag, real) in (-pi, pi]; zero cells get 0 and are flagged.
PhaseField phase_field(const ComplexGrid& cross_smoothed);

AR1Params fit_ar1(std::span<const double> x);
std::vector<double> simulate_ar1(const AR1Params& params, std::size_t n, Rng& rng);

struct SignificanceResult {
    MaskGrid significant;
    /// Per-cell (1 - level) quantile of surrogate rho2.
    RealGrid threshold;
    AR1Params null_a;
    AR1Params null_b;
};

/// Per-cell Monte-Carlo test of rho2 against independent AR(1) surrogate
/// pairs fitted to a and b. Surrogate i draws from derive_seed(seed, i), so
/// the result does not depend on thread count.
SignificanceResult significance(std::span<const double> a, std::span<const double> b, const ScaleGrid& grid,
                                const SmoothingSpec& sspec, const MonteCarloSpec& mc, const MorletSpec& morlet = {},
                                double dt = 1.0);
/// Same test against a precomputed observed rho2 and engine.
SignificanceResult significance(const CoherenceEngine& engine, const RealGrid& observed, std::span<const double> a,
                                std::span<const double> b, const MonteCarloSpec& mc);

/// Largest trustworthy Fourier period per time index:
/// fourier_factor / sqrt(2) * min(t, n - 1 - t) * dt.
std::vector<double> cone_of_influence(std::size_t n, const ScaleGrid& grid, double dt = 1.0);

}  // namespace dualclass
