#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "anrl/error.hpp"
#include "anrl/rng.hpp"

namespace anrl {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape");
        n *= d;
    }
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

// Dense row-major f32 tensor. The reference numeric domain: every quantized
// path in the library is judged against computations on these.
struct Tensor {
    Shape shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)), data(shape_numel(shape), 0.0f) {}
    Tensor(Shape s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != shape_numel(shape))
            throw ShapeError("tensor data size does not match shape " + shape_str(shape));
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t dim(size_t i) const { return shape.at(i); }
    size_t rank() const { return shape.size(); }

    float& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    // NCHW accessors for the conv paths.
    float& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
        return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    float at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    float& at2(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }
    float at2(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * shape[1] + c)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(float v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Tensor reshaped(Shape s) const {
        if (shape_numel(s) != numel())
            throw ShapeError("reshape " + shape_str(shape) + " -> " + shape_str(s) +
                             " changes element count");
        return Tensor(std::move(s), data);
    }

    float min() const {
        float m = data.empty() ? 0.0f : data[0];
        for (float v : data) m = std::min(m, v);
        return m;
    }
    float max() const {
        float m = data.empty() ? 0.0f : data[0];
        for (float v : data) m = std::max(m, v);
        return m;
    }
    float abs_max() const {
        float m = 0.0f;
        for (float v : data) m = std::max(m, std::fabs(v));
        return m;
    }

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }

    static Tensor full(Shape s, float v) {
        Tensor t(std::move(s));
        t.fill(v);
        return t;
    }

    static Tensor uniform(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
        Tensor t(std::move(s));
        for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
        return t;
    }

    static Tensor normal(Shape s, Rng& rng, double stddev = 1.0) {
        Tensor t(std::move(s));
        for (auto& v : t.data) v = static_cast<float>(rng.normal() * stddev);
        return t;
    }

    // He-normal init for a layer with the given fan-in.
    static Tensor he_normal(Shape s, Rng& rng, int64_t fan_in) {
        return normal(std::move(s), rng, std::sqrt(2.0 / static_cast<double>(fan_in)));
    }

    // Uniform init with variance 1/fan_in; bounded support keeps per-tensor
    // weight ranges tight, which matters under low-bit quantization.
    static Tensor fanin_uniform(Shape s, Rng& rng, int64_t fan_in) {
        double a = std::sqrt(3.0 / static_cast<double>(fan_in));
        return uniform(std::move(s), rng, -a, a);
    }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape) +
                         " vs " + shape_str(b.shape));
}

}  // namespace anrl
