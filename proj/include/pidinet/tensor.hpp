#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pidinet/error.hpp"

namespace pidinet {

// Storage scalar. Single precision by default; reductions always accumulate
// in double. Define PIDINET_DOUBLE_PRECISION for all-double storage (tight
// oracle tests).
#ifdef PIDINET_DOUBLE_PRECISION
using real = double;
#else
using real = float;
#endif

// Dense 4-D array in NCHW row-major order. grad is either empty or
// data-sized; ops never touch it implicitly.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<real> data;
    std::vector<real> grad;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, real fill = real(0))
        : n(n_), c(c_), h(h_), w(w_) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0)
            throw DimensionError("negative tensor dimension");
        data.assign(std::size_t(size()), fill);
    }

    std::int64_t size() const { return std::int64_t(n) * c * h * w; }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }

    std::int64_t index(int i, int j, int y, int x) const {
        return ((std::int64_t(i) * c + j) * h + y) * w + x;
    }

    real& at(int i, int j, int y, int x) { return data[std::size_t(index(i, j, y, x))]; }
    real at(int i, int j, int y, int x) const { return data[std::size_t(index(i, j, y, x))]; }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), real(0));
    }
    void zero_grad() {
        if (!grad.empty()) grad.assign(grad.size(), real(0));
    }

    bool all_finite() const {
        for (real v : data)
            if (!std::isfinite(double(v))) return false;
        return true;
    }
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.n, t.c, t.h, t.w); }

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
}

}  // namespace pidinet
