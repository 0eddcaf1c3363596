// Quantization core: parameter derivation, round trips, packing, and the
// SQNR / RMS error metrics with their algebraic identities.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "anrl/quant.hpp"
#include "anrl/rng.hpp"
#include "anrl/tensor.hpp"

using namespace anrl;

TEST_CASE("compute_quant_params basic formulas") {
    auto p = compute_quant_params(0.0, 1.0, 8, false);
    REQUIRE(p.scale == Catch::Approx(1.0 / 255.0).epsilon(1e-12));
    REQUIRE(p.zero_point == 0);

    p = compute_quant_params(-1.0, 1.0, 8, true);
    REQUIRE(p.scale == Catch::Approx(1.0 / 127.0).epsilon(1e-12));
    REQUIRE(p.zero_point == 0);

    // degenerate all-zero range
    p = compute_quant_params(0.0, 0.0, 8, true);
    REQUIRE(p.scale == 1.0);
    REQUIRE(p.zero_point == 0);
    p = compute_quant_params(0.0, 0.0, 8, false);
    REQUIRE(p.scale == 1.0);
    REQUIRE(p.zero_point == 0);

    REQUIRE_THROWS_AS(compute_quant_params(1.0, -1.0, 8, true), RangeError);
    REQUIRE_THROWS_AS(compute_quant_params(0.0, 1.0, 5, true), RangeError);

    // asymmetric range with a nonzero offset
    p = compute_quant_params(-0.5, 0.5, 8, false);
    REQUIRE(p.scale == Catch::Approx(1.0 / 255.0).epsilon(1e-12));
    REQUIRE(p.zero_point == 128);  // -(-0.5)/scale = 127.5, ties to even
}

TEST_CASE("symmetric grids exclude the most negative code") {
    REQUIRE(qmin(8, true) == -127);
    REQUIRE(qmax(8, true) == 127);
    REQUIRE(qmin(4, true) == -7);
    REQUIRE(qmax(4, true) == 7);
    REQUIRE(qmin(16, true) == -32767);
    REQUIRE(qmax(16, true) == 32767);
    REQUIRE(qmin(8, false) == 0);
    REQUIRE(qmax(8, false) == 255);
    REQUIRE(qmax(16, false) == 65535);
}

TEST_CASE("round_half_even ties") {
    REQUIRE(round_half_even(0.5) == 0.0);
    REQUIRE(round_half_even(1.5) == 2.0);
    REQUIRE(round_half_even(2.5) == 2.0);
    REQUIRE(round_half_even(-0.5) == 0.0);
    REQUIRE(round_half_even(-1.5) == -2.0);
    REQUIRE(round_half_even(127.5) == 128.0);
    REQUIRE(round_half_even(0.3) == 0.0);
    REQUIRE(round_half_even(-0.3) == 0.0);
}

TEST_CASE("quantize examples") {
    QuantParams unit{1.0, 0, 8, true};
    Tensor t({3}, {0.0f, 1.0f, -2.0f});
    QTensor q = quantize(t, unit);
    REQUIRE(q.get(0) == 0);
    REQUIRE(q.get(1) == 1);
    REQUIRE(q.get(2) == -2);

    // 127.5 rounds half-to-even to 128
    QuantParams asym = compute_quant_params(0.0, 1.0, 8, false);
    Tensor t2({3}, {0.0f, 0.5f, 1.0f});
    QTensor q2 = quantize(t2, asym);
    REQUIRE(q2.get(0) == 0);
    REQUIRE(q2.get(1) == 128);
    REQUIRE(q2.get(2) == 255);

    // saturation
    QuantParams sym = compute_quant_params(-1.0, 1.0, 8, true);
    QTensor q3 = quantize(Tensor({1}, {10.0f}), sym);
    REQUIRE(q3.get(0) == 127);
}

TEST_CASE("dequantize examples") {
    QTensor q({3}, QuantParams{1.0, 0, 8, true});
    q.set(0, 0);
    q.set(1, 1);
    q.set(2, -2);
    Tensor t = dequantize(q);
    REQUIRE(t[0] == 0.0f);
    REQUIRE(t[1] == 1.0f);
    REQUIRE(t[2] == -2.0f);

    QTensor q2({1}, QuantParams{1.0 / 255.0, 0, 8, false});
    q2.set(0, 255);
    REQUIRE(dequantize(q2)[0] == Catch::Approx(1.0).epsilon(1e-6));

    QTensor q3({1}, QuantParams{0.5, 10, 8, false});
    q3.set(0, 0);
    REQUIRE(dequantize(q3)[0] == Catch::Approx(-5.0));
}

TEST_CASE("fake_quant examples and idempotence") {
    QuantParams unit{1.0, 0, 8, true};
    REQUIRE(fake_quant(Tensor({1}, {0.3f}), unit)[0] == 0.0f);

    QuantParams half{0.5, 0, 8, true};
    REQUIRE(fake_quant(Tensor({1}, {0.26f}), half)[0] == 0.5f);

    // grid fixpoint
    Tensor grid({5}, {-1.0f, -0.5f, 0.0f, 0.5f, 1.0f});
    Tensor fq = fake_quant(grid, half);
    for (int i = 0; i < 5; ++i) REQUIRE(fq[i] == grid[i]);

    // idempotence, bitwise, over random tensors and params
    Rng rng(11);
    for (int it = 0; it < 10000; ++it) {
        int bits = (it % 3 == 0) ? 4 : (it % 3 == 1) ? 8 : 16;
        bool sym = (it % 2) == 0;
        double lo = rng.uniform(-10.0, 0.0);
        double hi = rng.uniform(0.0, 10.0);
        QuantParams p = compute_quant_params(lo, hi, bits, sym);
        Tensor t({8});
        for (auto& v : t.data) v = static_cast<float>(rng.uniform(-12.0, 12.0));
        Tensor once = fake_quant(t, p);
        Tensor twice = fake_quant(once, p);
        for (int64_t i = 0; i < once.numel(); ++i) REQUIRE(once[i] == twice[i]);
    }
}

TEST_CASE("quantize is monotone and always saturates in range") {
    Rng rng(23);
    for (int it = 0; it < 200; ++it) {
        int bits = (it % 3 == 0) ? 4 : (it % 3 == 1) ? 8 : 16;
        bool sym = (it % 2) == 0;
        QuantParams p = compute_quant_params(rng.uniform(-8.0, -0.1), rng.uniform(0.1, 8.0), bits, sym);

        // monotone non-decreasing in the input
        float prev_x = -20.0f;
        int32_t prev_q = quantize(Tensor({1}, {prev_x}), p).get(0);
        for (int s = 0; s < 80; ++s) {
            float x = prev_x + static_cast<float>(rng.uniform(0.0, 1.0));
            int32_t qv = quantize(Tensor({1}, {x}), p).get(0);
            REQUIRE(qv >= prev_q);
            prev_x = x;
            prev_q = qv;
        }
    }

    // saturation over a large random sweep
    Rng rng2(29);
    for (int it = 0; it < 100; ++it) {
        int bits = (it % 3 == 0) ? 4 : (it % 3 == 1) ? 8 : 16;
        bool sym = (it % 2) == 0;
        QuantParams p = compute_quant_params(rng2.uniform(-5.0, 0.0), rng2.uniform(0.0, 5.0), bits, sym);
        Tensor t({1000});
        for (auto& v : t.data) v = static_cast<float>(rng2.uniform(-50.0, 50.0));
        QTensor q = quantize(t, p);
        for (int64_t i = 0; i < q.numel(); ++i) {
            REQUIRE(q.get(i) >= qmin(bits, sym));
            REQUIRE(q.get(i) <= qmax(bits, sym));
        }
    }
}

TEST_CASE("int4 pack/unpack") {
    REQUIRE(pack_int4({}).empty());

    auto bytes = pack_int4({1, -1});
    REQUIRE(bytes.size() == 1);
    REQUIRE((bytes[0] & 0x0F) == 0x1);
    REQUIRE((bytes[0] >> 4) == 0xF);

    REQUIRE_THROWS_AS(pack_int4({8}), RangeError);
    REQUIRE_THROWS_AS(pack_int4({-9}), RangeError);

    // odd count pads the final high nibble with zero
    auto odd = pack_int4({-8, 7, 3});
    REQUIRE(odd.size() == 2);
    REQUIRE((odd[1] >> 4) == 0x0);
    auto back = unpack_int4(odd, 3);
    REQUIRE(back == std::vector<int32_t>({-8, 7, 3}));

    // exhaustive bijection over all signed nibble pairs
    for (int a = -8; a <= 7; ++a)
        for (int b = -8; b <= 7; ++b) {
            auto rt = unpack_int4(pack_int4({a, b}), 2);
            REQUIRE(rt[0] == a);
            REQUIRE(rt[1] == b);
        }

    // exhaustive over all valid nibble sequences of length <= 4, randomized beyond
    for (int len = 0; len <= 4; ++len) {
        std::vector<int32_t> v(static_cast<size_t>(len), -8);
        while (true) {
            REQUIRE(unpack_int4(pack_int4(v), v.size()) == v);
            int i = 0;
            for (; i < len; ++i) {
                if (v[static_cast<size_t>(i)] < 7) {
                    v[static_cast<size_t>(i)] += 1;
                    break;
                }
                v[static_cast<size_t>(i)] = -8;
            }
            if (i == len) break;
        }
    }
    Rng rng(31);
    for (int it = 0; it < 200; ++it) {
        std::vector<int32_t> v(1 + rng.below(64));
        for (auto& x : v) x = static_cast<int32_t>(rng.below(16)) - 8;
        REQUIRE(unpack_int4(pack_int4(v), v.size()) == v);
    }
}

TEST_CASE("QTensor packed storage round-trips at every width") {
    Rng rng(37);
    for (int bits : {4, 8, 16}) {
        for (bool sym : {true, false}) {
            QuantParams p{0.25, sym ? 0 : (bits == 4 ? 7 : 10), bits, sym};
            QTensor q({7}, p);
            std::vector<int32_t> vals(7);
            for (auto& v : vals)
                v = qmin(bits, sym) +
                    static_cast<int32_t>(rng.below(static_cast<uint64_t>(qmax(bits, sym) - qmin(bits, sym) + 1)));
            for (int i = 0; i < 7; ++i) q.set(i, vals[static_cast<size_t>(i)]);
            for (int i = 0; i < 7; ++i) REQUIRE(q.get(i) == vals[static_cast<size_t>(i)]);
        }
    }
    // 4-bit payload is genuinely nibble-packed
    QTensor q({4}, QuantParams{1.0, 0, 4, true});
    REQUIRE(q.byte_size() == 2);
    QTensor q16({4}, QuantParams{1.0, 0, 16, true});
    REQUIRE(q16.byte_size() == 8);
}

TEST_CASE("sqnr_db examples") {
    Tensor ones({4}, {1.0f, 1.0f, 1.0f, 1.0f});
    REQUIRE(std::isinf(sqnr_db(ones, ones)));

    Tensor test({4}, {1.1f, 0.9f, 1.1f, 0.9f});
    REQUIRE(sqnr_db(ones, test) == Catch::Approx(20.0).margin(1e-4));

    REQUIRE_THROWS_AS(sqnr_db(Tensor({2}), Tensor({2})), RangeError);       // all-zero ref
    REQUIRE_THROWS_AS(sqnr_db(ones, Tensor({3})), ShapeError);
}

TEST_CASE("rms_error_percent examples and identity with sqnr") {
    Tensor ones({4}, {1.0f, 1.0f, 1.0f, 1.0f});
    REQUIRE(rms_error_percent(ones, ones) == 0.0);

    Tensor test({4}, {1.1f, 0.9f, 1.1f, 0.9f});
    REQUIRE(rms_error_percent(ones, test) == Catch::Approx(10.0).margin(1e-4));

    // rms% == 100 * 10^(-sqnr/20) on any valid pair
    Rng rng(41);
    for (int it = 0; it < 300; ++it) {
        Tensor ref({32});
        Tensor t({32});
        for (int i = 0; i < 32; ++i) {
            ref[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
            t[i] = ref[i] + static_cast<float>(rng.uniform(-0.1, 0.1));
        }
        double s = sqnr_db(ref, t);
        double r = rms_error_percent(ref, t);
        double pred = 100.0 * std::pow(10.0, -s / 20.0);
        REQUIRE(r == Catch::Approx(pred).epsilon(1e-6));
    }
}

TEST_CASE("uniform full-scale SQNR tracks the 6.02 dB per bit law") {
    // Monte-Carlo oracle: quantization of uniform full-scale input at b bits
    // lands within +-1.5 dB of 6.02*b. 16-bit relies on double accumulation.
    Rng rng(53);
    const int64_t n = 1000000;
    Tensor t({n});
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (int bits : {4, 8, 16}) {
        QuantParams p = compute_quant_params(-1.0, 1.0, bits, true);
        Tensor fq = fake_quant(t, p);
        double s = sqnr_db(t, fq);
        REQUIRE(s == Catch::Approx(6.02 * bits).margin(1.5));
    }
}

TEST_CASE("error_report invariant: zero rms iff infinite sqnr") {
    Tensor a({3}, {1.0f, 2.0f, 3.0f});
    ErrorReport r = error_report(a, a);
    REQUIRE(std::isinf(r.sqnr_db));
    REQUIRE(r.rms_error_percent == 0.0);
    REQUIRE(r.max_abs_error == 0.0);

    Tensor b({3}, {1.0f, 2.0f, 3.5f});
    r = error_report(a, b);
    REQUIRE(!std::isinf(r.sqnr_db));
    REQUIRE(r.rms_error_percent > 0.0);
    REQUIRE(r.max_abs_error == Catch::Approx(0.5));
}
