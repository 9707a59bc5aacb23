#include "dualclass/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>
#include <stdexcept>

namespace dualclass {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void FftBuffer::Free::operator()(std::complex<double>* p) const { fftw_free(p); }

FftBuffer::FftBuffer(std::size_t size) : size_(size) {
    auto* raw = static_cast<std::complex<double>*>(fftw_malloc(sizeof(std::complex<double>) * (size ? size : 1)));
    if (raw == nullptr) {
        throw std::bad_alloc();
    }
    data_.reset(raw);
    for (std::size_t i = 0; i < size; ++i) {
        raw[i] = {0.0, 0.0};
    }
}

Fft::Fft(std::size_t size) : size_(size) {
    if (size == 0) {
        throw std::invalid_argument("Fft: zero length");
    }
    FftBuffer scratch(size);
    std::lock_guard lock(planner_mutex());
    const int n = static_cast<int>(size);
    forward_plan_ = fftw_plan_dft_1d(n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_dft_1d(n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
        throw std::runtime_error("Fft: planner failed");
    }
}

Fft::~Fft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Fft::forward(FftBuffer& buffer) const {
    if (buffer.size() != size_) {
        throw std::invalid_argument("Fft::forward: buffer length mismatch");
    }
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(buffer.data()), as_fftw(buffer.data()));
}

void Fft::inverse(FftBuffer& buffer) const {
    if (buffer.size() != size_) {
        throw std::invalid_argument("Fft::inverse: buffer length mismatch");
    }
    fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), as_fftw(buffer.data()), as_fftw(buffer.data()));
}

std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

}  // namespace dualclass
