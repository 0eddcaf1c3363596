#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "anrl/error.hpp"
#include "anrl/tensor.hpp"

// Affine per-tensor quantization: parameter computation, packed integer
// tensors, int4 nibble packing, and the error metrics (SQNR, RMS error)
// used throughout the quality reports.

namespace anrl {

inline bool valid_bits(int bits) { return bits == 4 || bits == 8 || bits == 16; }

// Symmetric grids drop the most-negative code so the range is mirror-even
// (e.g. int8 uses [-127, 127]); asymmetric grids are unsigned [0, 2^b - 1].
inline int32_t qmin(int bits, bool symmetric) {
    return symmetric ? -((1 << (bits - 1)) - 1) : 0;
}
inline int32_t qmax(int bits, bool symmetric) {
    return symmetric ? ((1 << (bits - 1)) - 1) : ((1 << bits) - 1);
}

struct QuantParams {
    double scale = 1.0;
    int32_t zero_point = 0;
    int bits = 8;
    bool symmetric = true;

    bool valid() const {
        return scale > 0.0 && valid_bits(bits) && (!symmetric || zero_point == 0) &&
               zero_point >= qmin(bits, symmetric) && zero_point <= qmax(bits, symmetric);
    }
};

// Deterministic round-half-to-even, independent of the FP environment.
inline double round_half_even(double x) {
    double f = std::floor(x);
    double d = x - f;
    if (d > 0.5) return f + 1.0;
    if (d < 0.5) return f;
    return (std::fmod(f, 2.0) == 0.0) ? f : f + 1.0;
}

// Derive per-tensor affine parameters from a calibrated [min_val, max_val].
// Degenerate all-zero ranges map to scale 1 / zp 0 so dead channels cannot
// poison the scheme; a constant nonzero range is widened to include zero.
inline QuantParams compute_quant_params(double min_val, double max_val, int bits,
                                        bool symmetric) {
    if (!valid_bits(bits)) throw RangeError("bits must be one of {4,8,16}");
    if (min_val > max_val)
        throw RangeError("invalid calibration range: min " + std::to_string(min_val) +
                         " > max " + std::to_string(max_val));
    QuantParams p;
    p.bits = bits;
    p.symmetric = symmetric;
    if (symmetric) {
        double amax = std::max(std::fabs(min_val), std::fabs(max_val));
        if (amax == 0.0) {
            p.scale = 1.0;
            p.zero_point = 0;
            return p;
        }
        p.scale = amax / static_cast<double>(qmax(bits, true));
        p.zero_point = 0;
        return p;
    }
    if (min_val == max_val) {
        if (min_val == 0.0) {
            p.scale = 1.0;
            p.zero_point = 0;
            return p;
        }
        min_val = std::min(0.0, min_val);
        max_val = std::max(0.0, max_val);
    }
    double levels = static_cast<double>((1 << bits) - 1);
    p.scale = (max_val - min_val) / levels;
    double zp = round_half_even(-min_val / p.scale);
    zp = std::min(std::max(zp, static_cast<double>(qmin(bits, false))),
                  static_cast<double>(qmax(bits, false)));
    p.zero_point = static_cast<int32_t>(zp);
    return p;
}

// ---------------------------------------------------------------------------
// QTensor: integer payload stored at its true bit width.
//   16-bit: two bytes little-endian; 8-bit: one byte; 4-bit: two values per
//   byte, even index in the low nibble. Symmetric tensors store two's
//   complement, asymmetric tensors store unsigned codes.
// ---------------------------------------------------------------------------
struct QTensor {
    Shape shape;
    std::vector<uint8_t> qdata;
    QuantParams params;

    QTensor() = default;
    QTensor(Shape s, QuantParams p) : shape(std::move(s)), params(p) {
        qdata.assign(static_cast<size_t>(payload_bytes(shape_numel(shape), p.bits)), 0);
    }

    int64_t numel() const { return shape_numel(shape); }
    int64_t byte_size() const { return static_cast<int64_t>(qdata.size()); }

    static int64_t payload_bytes(int64_t count, int bits) {
        switch (bits) {
            case 4: return (count + 1) / 2;
            case 8: return count;
            case 16: return count * 2;
            default: throw RangeError("bits must be one of {4,8,16}");
        }
    }

    int32_t get(int64_t i) const {
        switch (params.bits) {
            case 4: {
                uint8_t byte = qdata[static_cast<size_t>(i / 2)];
                uint8_t nib = (i % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
                return params.symmetric ? ((nib ^ 8) - 8) : nib;
            }
            case 8: {
                uint8_t b = qdata[static_cast<size_t>(i)];
                return params.symmetric ? static_cast<int8_t>(b) : b;
            }
            default: {
                uint16_t v = static_cast<uint16_t>(qdata[static_cast<size_t>(2 * i)]) |
                             (static_cast<uint16_t>(qdata[static_cast<size_t>(2 * i + 1)]) << 8);
                return params.symmetric ? static_cast<int16_t>(v) : v;
            }
        }
    }

    void set(int64_t i, int32_t v) {
        switch (params.bits) {
            case 4: {
                uint8_t nib = static_cast<uint8_t>(v & 0x0F);
                uint8_t& byte = qdata[static_cast<size_t>(i / 2)];
                if (i % 2 == 0)
                    byte = static_cast<uint8_t>((byte & 0xF0) | nib);
                else
                    byte = static_cast<uint8_t>((byte & 0x0F) | (nib << 4));
                break;
            }
            case 8:
                qdata[static_cast<size_t>(i)] = static_cast<uint8_t>(v & 0xFF);
                break;
            default:
                qdata[static_cast<size_t>(2 * i)] = static_cast<uint8_t>(v & 0xFF);
                qdata[static_cast<size_t>(2 * i + 1)] = static_cast<uint8_t>((v >> 8) & 0xFF);
                break;
        }
    }
};

inline QTensor quantize(const Tensor& t, const QuantParams& p) {
    if (!p.valid()) throw RangeError("invalid QuantParams");
    QTensor q(t.shape, p);
    const int32_t lo = qmin(p.bits, p.symmetric);
    const int32_t hi = qmax(p.bits, p.symmetric);
    for (int64_t i = 0; i < t.numel(); ++i) {
        double r = round_half_even(static_cast<double>(t[i]) / p.scale) + p.zero_point;
        r = std::min(std::max(r, static_cast<double>(lo)), static_cast<double>(hi));
        q.set(i, static_cast<int32_t>(r));
    }
    return q;
}

inline Tensor dequantize(const QTensor& q) {
    Tensor t(q.shape);
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>((q.get(i) - q.params.zero_point) * q.params.scale);
    return t;
}

// Quantize-then-dequantize in the float graph. Idempotent: grid points map
// to themselves.
inline Tensor fake_quant(const Tensor& t, const QuantParams& p) {
    if (!p.valid()) throw RangeError("invalid QuantParams");
    Tensor out(t.shape);
    const int32_t lo = qmin(p.bits, p.symmetric);
    const int32_t hi = qmax(p.bits, p.symmetric);
    for (int64_t i = 0; i < t.numel(); ++i) {
        double r = round_half_even(static_cast<double>(t[i]) / p.scale) + p.zero_point;
        r = std::min(std::max(r, static_cast<double>(lo)), static_cast<double>(hi));
        out[i] = static_cast<float>((r - p.zero_point) * p.scale);
    }
    return out;
}

inline void fake_quant_inplace(Tensor& t, const QuantParams& p) {
    const int32_t lo = qmin(p.bits, p.symmetric);
    const int32_t hi = qmax(p.bits, p.symmetric);
    for (auto& v : t.data) {
        double r = round_half_even(static_cast<double>(v) / p.scale) + p.zero_point;
        r = std::min(std::max(r, static_cast<double>(lo)), static_cast<double>(hi));
        v = static_cast<float>((r - p.zero_point) * p.scale);
    }
}

// ---------------------------------------------------------------------------
// INT4 nibble packing. Signed values in [-8, 7], two's complement nibbles,
// even index in the low nibble; odd counts zero-pad the final high nibble.
// ---------------------------------------------------------------------------
inline std::vector<uint8_t> pack_int4(const std::vector<int32_t>& values) {
    std::vector<uint8_t> out((values.size() + 1) / 2, 0);
    for (size_t i = 0; i < values.size(); ++i) {
        int32_t v = values[i];
        if (v < -8 || v > 7)
            throw RangeError("int4 value " + std::to_string(v) + " outside [-8, 7]");
        uint8_t nib = static_cast<uint8_t>(v & 0x0F);
        if (i % 2 == 0)
            out[i / 2] = nib;
        else
            out[i / 2] = static_cast<uint8_t>(out[i / 2] | (nib << 4));
    }
    return out;
}

inline std::vector<int32_t> unpack_int4(const std::vector<uint8_t>& bytes, size_t count) {
    if (bytes.size() != (count + 1) / 2)
        throw RangeError("int4 byte count does not match element count");
    std::vector<int32_t> out(count);
    for (size_t i = 0; i < count; ++i) {
        uint8_t nib = (i % 2 == 0) ? (bytes[i / 2] & 0x0F) : (bytes[i / 2] >> 4);
        out[i] = (static_cast<int32_t>(nib) ^ 8) - 8;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Error metrics.
// ---------------------------------------------------------------------------
struct ErrorReport {
    double sqnr_db = std::numeric_limits<double>::infinity();
    double rms_error_percent = 0.0;
    double max_abs_error = 0.0;
};

// 10*log10(signal power / noise power); +inf when the noise power is exactly 0.
inline double sqnr_db(const Tensor& ref, const Tensor& test) {
    require_same_shape(ref, test, "sqnr_db");
    double sig = 0.0, noise = 0.0;
    for (int64_t i = 0; i < ref.numel(); ++i) {
        double r = ref[i];
        double e = r - static_cast<double>(test[i]);
        sig += r * r;
        noise += e * e;
    }
    if (sig == 0.0) throw RangeError("sqnr_db: reference signal is all-zero");
    if (noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(sig / noise);
}

inline double rms_error_percent(const Tensor& ref, const Tensor& test) {
    require_same_shape(ref, test, "rms_error_percent");
    double sig = 0.0, noise = 0.0;
    for (int64_t i = 0; i < ref.numel(); ++i) {
        double r = ref[i];
        double e = r - static_cast<double>(test[i]);
        sig += r * r;
        noise += e * e;
    }
    if (sig == 0.0) throw RangeError("rms_error_percent: reference signal is all-zero");
    return 100.0 * std::sqrt(noise / sig);
}

inline ErrorReport error_report(const Tensor& ref, const Tensor& test) {
    ErrorReport r;
    r.sqnr_db = sqnr_db(ref, test);
    r.rms_error_percent = rms_error_percent(ref, test);
    double m = 0.0;
    for (int64_t i = 0; i < ref.numel(); ++i)
        m = std::max(m, std::fabs(static_cast<double>(ref[i]) - static_cast<double>(test[i])));
    r.max_abs_error = m;
    return r;
}

}  // namespace anrl
