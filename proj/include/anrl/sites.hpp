#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "anrl/quant.hpp"
#include "anrl/rng.hpp"
#include "anrl/tensor.hpp"

// Activation-site plumbing. Model forwards call tap->site(id, tensor) at every
// quantization site: the input of each matmul/conv and the output of each norm
// and activation function. A tap may record statistics (calibration) or rewrite
// the tensor in place (simulated quantization, outlier injection).

namespace anrl {

struct SiteTap {
    virtual ~SiteTap() = default;
    virtual void site(std::string_view id, Tensor& t) = 0;
};

// ---------------------------------------------------------------------------
// Histogram sketch over |v| with fixed log2-spaced bin edges. Edges are
// data-independent, so merging two sketches is an elementwise add — the merge
// is associative and commutative by construction.
// ---------------------------------------------------------------------------
class AbsHistSketch {
public:
    static constexpr int kMinExp = -40;   // |v| below 2^-40 lands in bin 0
    static constexpr int kMaxExp = 40;
    static constexpr int kPerOctave = 16;
    static constexpr int kBins = (kMaxExp - kMinExp) * kPerOctave;

    void add(double v) {
        double a = std::fabs(v);
        if (a == 0.0) {
            ++zero_count_;
            return;
        }
        double pos = (std::log2(a) - kMinExp) * kPerOctave;
        int idx = static_cast<int>(std::floor(pos));
        idx = std::min(std::max(idx, 0), kBins - 1);
        ++bins_[static_cast<size_t>(idx)];
    }

    void merge(const AbsHistSketch& o) {
        zero_count_ += o.zero_count_;
        for (size_t i = 0; i < bins_.size(); ++i) bins_[i] += o.bins_[i];
    }

    uint64_t total() const {
        uint64_t t = zero_count_;
        for (uint64_t b : bins_) t += b;
        return t;
    }

    // Upper edge of the bin containing the p-th percentile of |v|.
    // Conservative: the true percentile is <= the returned value.
    double percentile_abs(double p, double exact_max) const {
        if (p >= 100.0) return exact_max;
        uint64_t n = total();
        if (n == 0) return 0.0;
        double target = p / 100.0 * static_cast<double>(n);
        double cum = static_cast<double>(zero_count_);
        if (cum >= target) return 0.0;
        for (int i = 0; i < kBins; ++i) {
            cum += static_cast<double>(bins_[static_cast<size_t>(i)]);
            if (cum >= target) {
                double edge = std::exp2(static_cast<double>(i + 1) / kPerOctave + kMinExp);
                return std::min(edge, exact_max);
            }
        }
        return exact_max;
    }

    const std::vector<uint64_t>& bins() const { return bins_; }
    uint64_t zero_count() const { return zero_count_; }
    void set_raw(std::vector<uint64_t> bins, uint64_t zeros) {
        if (bins.size() != static_cast<size_t>(kBins)) bins.resize(static_cast<size_t>(kBins), 0);
        bins_ = std::move(bins);
        zero_count_ = zeros;
    }

private:
    std::vector<uint64_t> bins_ = std::vector<uint64_t>(static_cast<size_t>(kBins), 0);
    uint64_t zero_count_ = 0;
};

// Per-site running statistics.
struct RangeStat {
    double min_val = 0.0;
    double max_val = 0.0;
    uint64_t count = 0;
    AbsHistSketch sketch;

    void observe(const Tensor& t) {
        for (float v : t.data) {
            double d = v;
            if (count == 0) {
                min_val = max_val = d;
            } else {
                min_val = std::min(min_val, d);
                max_val = std::max(max_val, d);
            }
            ++count;
            sketch.add(d);
        }
    }

    void merge(const RangeStat& o) {
        if (o.count == 0) return;
        if (count == 0) {
            min_val = o.min_val;
            max_val = o.max_val;
        } else {
            min_val = std::min(min_val, o.min_val);
            max_val = std::max(max_val, o.max_val);
        }
        count += o.count;
        sketch.merge(o.sketch);
    }

    double abs_max() const { return std::max(std::fabs(min_val), std::fabs(max_val)); }
    double percentile_abs(double p) const { return sketch.percentile_abs(p, abs_max()); }
};

// Calibration range collection method.
struct RangeMethod {
    enum Kind { MinMax, Percentile } kind = MinMax;
    double p = 100.0;

    static RangeMethod minmax() { return {MinMax, 100.0}; }
    static RangeMethod percentile(double p) { return {Percentile, p}; }
};

// Map from site id to observed range statistics. Merge of two books is
// per-site RangeStat::merge, so sharded calibration combines exactly.
struct RangeBook {
    std::map<std::string, RangeStat> sites;

    void merge(const RangeBook& o) {
        for (const auto& [id, stat] : o.sites) sites[id].merge(stat);
    }

    bool has(const std::string& id) const { return sites.count(id) != 0; }

    const RangeStat& at(const std::string& id) const {
        auto it = sites.find(id);
        if (it == sites.end()) throw RangeError("RangeBook: no range recorded for site " + id);
        return it->second;
    }

    // Effective calibration range under the given method. Percentile clipping
    // never widens: the clipped range is contained in [min, max], and p=100
    // reproduces minmax exactly.
    std::pair<double, double> range(const std::string& id, const RangeMethod& m) const {
        const RangeStat& s = at(id);
        if (m.kind == RangeMethod::MinMax) return {s.min_val, s.max_val};
        double a = s.percentile_abs(m.p);
        return {std::max(s.min_val, -a), std::min(s.max_val, a)};
    }
};

// ---------------------------------------------------------------------------
// Taps.
// ---------------------------------------------------------------------------

// Records per-site ranges; used for calibration and the range probes.
struct RecordTap final : SiteTap {
    RangeBook book;
    void site(std::string_view id, Tensor& t) override {
        book.sites[std::string(id)].observe(t);
    }
};

// Rewrites every known site through fake quantization with frozen parameters.
// Unknown sites are an error by default: a quantized model must resolve every
// declared site.
struct QuantTap final : SiteTap {
    std::map<std::string, QuantParams> params;
    bool strict = true;

    void site(std::string_view id, Tensor& t) override {
        auto it = params.find(std::string(id));
        if (it == params.end()) {
            if (strict) throw RangeError("QuantTap: no activation params for site " + std::string(id));
            return;
        }
        fake_quant_inplace(t, it->second);
    }
};

// Fans one site event out to several taps in order.
struct ChainTap final : SiteTap {
    std::vector<SiteTap*> taps;
    void site(std::string_view id, Tensor& t) override {
        for (SiteTap* tap : taps)
            if (tap) tap->site(id, t);
    }
};

// Adds heavy-tailed (student-t) perturbations at a deterministic subset of
// sites; the draw stream depends only on (site id, stream seed), so the float
// reference and quantized runs of the same input see identical outliers.
struct OutlierInjectTap final : SiteTap {
    double site_fraction = 0.25;    // fraction of sites perturbed
    double element_fraction = 0.01; // fraction of elements within a hit site
    double amplitude = 3.0;         // noise scale in units of the tensor RMS
    int dof = 2;
    uint64_t stream_seed = 0;
    SiteTap* next = nullptr;

    void site(std::string_view id, Tensor& t) override {
        uint64_t h = fnv1a64(id);
        if (static_cast<double>(h % 10000) < site_fraction * 10000.0) {
            Rng rng(h ^ stream_seed);
            double ms = 0.0;
            for (float v : t.data) ms += static_cast<double>(v) * v;
            double rms = std::sqrt(ms / std::max<int64_t>(t.numel(), 1));
            if (rms == 0.0) rms = 1.0;
            for (auto& v : t.data)
                if (rng.uniform() < element_fraction)
                    v = static_cast<float>(v + amplitude * rms * rng.student_t(dof));
        }
        if (next) next->site(id, t);
    }
};

inline void tap_site(SiteTap* tap, std::string_view id, Tensor& t) {
    if (tap) tap->site(id, t);
}

}  // namespace anrl
