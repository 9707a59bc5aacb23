#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace dualclass {

/// SIMD-aligned complex buffer owned by the FFT backend allocator.
class FftBuffer {
public:
    explicit FftBuffer(std::size_t size);
    FftBuffer(FftBuffer&&) noexcept = default;
    FftBuffer& operator=(FftBuffer&&) noexcept = default;

    std::span<std::complex<double>> span() { return {data_.get(), size_}; }
    std::span<const std::complex<double>> span() const { return {data_.get(), size_}; }
    std::complex<double>* data() { return data_.get(); }
    std::size_t size() const { return size_; }
    std::complex<double>& operator[](std::size_t i) { return data_[i]; }
    const std::complex<double>& operator[](std::size_t i) const { return data_[i]; }

private:
    struct Free {
        void operator()(std::complex<double>* p) const;
    };
    std::unique_ptr<std::complex<double>[], Free> data_;
    std::size_t size_;
};

/// In-place complex FFT of fixed length. Execution is safe to share across
/// threads; every buffer passed in must come from FftBuffer.
class Fft {
public:
    explicit Fft(std::size_t size);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return size_; }

    /// Unnormalized forward transform (exponent sign -1).
    void forward(FftBuffer& buffer) const;
    /// Unnormalized inverse transform (exponent sign +1); divide by size() to invert.
    void inverse(FftBuffer& buffer) const;

private:
    std::size_t size_;
    void* forward_plan_ = nullptr;
    void* inverse_plan_ = nullptr;
};

std::size_t next_power_of_two(std::size_t n);

}  // namespace dualclass
