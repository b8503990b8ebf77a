#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "error.hpp"

namespace cuspscope {

using cplx = std::complex<double>;

namespace detail {

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int dim, std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_tuple(dim, n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::size_t total = dim == 1 ? n : n * n;
        fftw_complex* buf = fftw_alloc_complex(total);
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = dim == 1
            ? fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, flags)
            : fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, sign, flags);
        fftw_free(buf);
        require(p != nullptr, ErrorKind::io, "FFTW failed to create a plan");
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& kv : plans_) fftw_destroy_plan(kv.second);
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans_;
};

} // namespace detail

// Unnormalized in-place DFT: forward uses e^{-i k x}.
inline void fft_forward(cplx* data, int dim, std::size_t n) {
    auto p = detail::PlanCache::instance().get(dim, n, FFTW_FORWARD);
    auto* z = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(p, z, z);
}

// Inverse DFT including the 1/N^dim factor.
inline void fft_inverse(cplx* data, int dim, std::size_t n) {
    auto p = detail::PlanCache::instance().get(dim, n, FFTW_BACKWARD);
    auto* z = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(p, z, z);
    std::size_t total = dim == 1 ? n : n * n;
    double s = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < total; ++i) data[i] *= s;
}

inline void fft_forward(std::vector<cplx>& v, int dim, std::size_t n) { fft_forward(v.data(), dim, n); }
inline void fft_inverse(std::vector<cplx>& v, int dim, std::size_t n) { fft_inverse(v.data(), dim, n); }

} // namespace cuspscope
