#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

// Byte-traffic and MAC accounting. Counters track semantic data movement
// (cache reads, state updates, weight fetches) rather than hardware
// transactions; instrumented totals must match the closed-form formulas
// exactly, integer for integer.

namespace anrl {

struct OpCounters {
    int64_t bytes_read = 0;
    int64_t bytes_written = 0;
    int64_t macs = 0;

    OpCounters& operator+=(const OpCounters& o) {
        bytes_read += o.bytes_read;
        bytes_written += o.bytes_written;
        macs += o.macs;
        return *this;
    }
};

// Element sizes (in bytes) under a precision plan. INT4 weights occupy half a
// byte; byte totals for whole tensors are computed on packed sizes, never
// fractional per-element values.
struct ElemSizes {
    int weight_bits = 8;
    int act_bytes = 2;   // A16 default
    int kv_bytes = 2;    // KV entries stored at activation precision
    int state_bytes = 2; // rolling conv state, same precision as activations

    int64_t weight_tensor_bytes(int64_t numel) const {
        return (numel * weight_bits + 7) / 8;
    }
};

class TrafficLedger {
public:
    // Keyed by (layer id, op id); layer "-" groups whole-phase entries.
    void add(const std::string& layer, const std::string& op, const OpCounters& c) {
        if (c.bytes_read < 0 || c.bytes_written < 0 || c.macs < 0)
            return;  // counters are monotone; negative deltas are dropped
        counters_[{layer, op}] += c;
        total_ += c;
    }

    void add_read(const std::string& layer, const std::string& op, int64_t bytes) {
        add(layer, op, {bytes, 0, 0});
    }
    void add_write(const std::string& layer, const std::string& op, int64_t bytes) {
        add(layer, op, {0, bytes, 0});
    }
    void add_macs(const std::string& layer, const std::string& op, int64_t macs) {
        add(layer, op, {0, 0, macs});
    }

    const OpCounters& total() const { return total_; }

    OpCounters layer_total(const std::string& layer) const {
        OpCounters t;
        for (const auto& [key, c] : counters_)
            if (key.first == layer) t += c;
        return t;
    }

    OpCounters op_total(const std::string& op) const {
        OpCounters t;
        for (const auto& [key, c] : counters_)
            if (key.second == op) t += c;
        return t;
    }

    const std::map<std::pair<std::string, std::string>, OpCounters>& entries() const {
        return counters_;
    }

    void merge(const TrafficLedger& o) {
        for (const auto& [key, c] : o.counters_) {
            counters_[key] += c;
            total_ += c;
        }
    }

private:
    std::map<std::pair<std::string, std::string>, OpCounters> counters_;
    OpCounters total_;
};

// Roofline inputs: peak integer MAC throughput, DRAM bandwidth, and the
// on-chip buffer that decides whether inter-op activations spill.
struct HardwareProfile {
    double peak_macs_per_s = 8.0e12;
    double dram_bytes_per_s = 32.0e9;
    int64_t onchip_buffer_bytes = 4ll * 1024 * 1024;
};

// Latency lower bound for one phase: max(compute time, memory time).
inline double roofline_seconds(const OpCounters& c, const HardwareProfile& hw) {
    double compute = static_cast<double>(c.macs) / hw.peak_macs_per_s;
    double memory = static_cast<double>(c.bytes_read + c.bytes_written) / hw.dram_bytes_per_s;
    return std::max(compute, memory);
}

}  // namespace anrl
