#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "codedfl/quantizer.hpp"
#include "codedfl/random.hpp"

using namespace codedfl;
using quant::QuantizerSpec;

namespace {

QuantizerSpec unit_range(unsigned bits) {
    QuantizerSpec spec;
    spec.bits = bits;
    spec.lower = {0.0};
    spec.upper = {1.0};
    return spec;
}

}  // namespace

TEST(Quantize, ValueOnKnobIsDeterministic) {
    const auto spec = QuantizerSpec::symmetric(3, 1.0, 4);
    Rng rng(1);
    // Knobs of a 4-bit grid on [-1, 1] sit at -1 + 2i/15.
    const std::vector<double> x{-1.0, -1.0 + 2.0 * 7 / 15, 1.0};
    for (int i = 0; i < 1000; ++i) {
        const auto q = quant::quantize(x, spec, rng);
        EXPECT_EQ(q.indices, (std::vector<std::uint32_t>{0, 7, 15}));
    }
}

TEST(Quantize, OneBitProbabilities) {
    const auto spec = unit_range(1);
    Rng rng = Rng::stream(2, StreamKind::monte_carlo);
    constexpr int kDraws = 100000;
    int ones = 0;
    const std::vector<double> x{0.3};
    for (int i = 0; i < kDraws; ++i) {
        const auto q = quant::quantize(x, spec, rng);
        ASSERT_LE(q.indices[0], 1u);
        ones += static_cast<int>(q.indices[0]);
    }
    const double sd = std::sqrt(0.3 * 0.7 / kDraws);
    EXPECT_NEAR(static_cast<double>(ones) / kDraws, 0.3, 4 * sd);
}

TEST(Quantize, ClipsOutOfRange) {
    const auto spec = QuantizerSpec::symmetric(2, 0.5, 8);
    Rng rng(3);
    const std::vector<double> x{7.0, -9.0};
    const auto q = quant::quantize(x, spec, rng);
    EXPECT_EQ(q.indices, (std::vector<std::uint32_t>{255, 0}));
    EXPECT_EQ(quant::dequantize(q, spec), (std::vector<double>{0.5, -0.5}));
}

TEST(Quantize, NeighbouringKnobsOnly) {
    const auto spec = QuantizerSpec::symmetric(1, 2.0, 3);
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
        const double x = -2.0 + 4.0 * rng.uniform();
        const auto q = quant::quantize(std::vector<double>{x}, spec, rng);
        const double v = quant::dequantize(q, spec)[0];
        EXPECT_LE(std::abs(v - x), spec.kappa(0) * (1 + 1e-12));
    }
}

TEST(Quantize, OneDrawPerCoordinate) {
    const auto spec = QuantizerSpec::symmetric(5, 1.0, 8);
    Rng a(5);
    Rng b(5);
    quant::quantize(std::vector<double>(5, 0.1), spec, a);
    for (int i = 0; i < 5; ++i) {
        b.uniform();
    }
    EXPECT_EQ(a.next(), b.next());
}

TEST(Quantize, UnbiasedForRandomInputs) {
    const auto spec = QuantizerSpec::symmetric(1, 1.0, 4);
    Rng pick = Rng::stream(6, StreamKind::monte_carlo, {0});
    constexpr int kDraws = 100000;
    for (int input = 0; input < 100; ++input) {
        const double x = -1.2 + 2.4 * pick.uniform();
        const double clipped = std::clamp(x, -1.0, 1.0);
        Rng rng = Rng::stream(6, StreamKind::monte_carlo, {1, static_cast<std::uint64_t>(input)});
        double sum = 0.0;
        double sum2 = 0.0;
        for (int i = 0; i < kDraws; ++i) {
            const double v = quant::dequantize(quant::quantize(std::vector<double>{x}, spec, rng), spec)[0];
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / kDraws;
        const double var = std::max(0.0, sum2 / kDraws - mean * mean);
        const double se = std::sqrt(var / kDraws);
        EXPECT_LE(std::abs(mean - clipped), 4 * se + 1e-12) << "x = " << x;
    }
}

TEST(Quantize, DimensionMismatch) {
    const auto spec = QuantizerSpec::symmetric(3, 1.0, 8);
    Rng rng(7);
    EXPECT_THROW(quant::quantize(std::vector<double>(2), spec, rng), std::invalid_argument);
    EXPECT_THROW(quant::dequantize(quant::QuantizedUpdate{{1, 2}}, spec), std::invalid_argument);
}

TEST(QuantizerSpec, Validation) {
    EXPECT_THROW(QuantizerSpec::symmetric(2, 1.0, 0), std::invalid_argument);
    EXPECT_THROW(QuantizerSpec::symmetric(2, 1.0, 33), std::invalid_argument);
    EXPECT_THROW(QuantizerSpec::symmetric(2, -1.0, 8), std::invalid_argument);
    EXPECT_THROW(QuantizerSpec::symmetric(2, std::nan(""), 8), std::invalid_argument);
    QuantizerSpec ragged;
    ragged.lower = {0.0, 0.0};
    ragged.upper = {1.0};
    EXPECT_THROW(ragged.validate(), std::invalid_argument);
    EXPECT_NO_THROW(QuantizerSpec::symmetric(2, 1.0, 32).validate());
    EXPECT_EQ(QuantizerSpec::symmetric(1, 1.0, 8).levels(), 256u);
    EXPECT_DOUBLE_EQ(QuantizerSpec::symmetric(1, 1.0, 8).kappa(0), 2.0 / 255.0);
}

TEST(VarianceBound, FourCoordinatesEightBits) {
    const auto spec = QuantizerSpec::symmetric(4, 1.0, 8);
    EXPECT_NEAR(quant::variance_bound(spec), 4.0 / (255.0 * 255.0), 1e-18);
    EXPECT_NEAR(quant::variance_bound(spec), 6.151e-5, 1e-8);
}

TEST(VarianceBound, ZeroWidthIsZero) {
    const auto spec = QuantizerSpec::symmetric(6, 0.0, 8);
    EXPECT_EQ(quant::variance_bound(spec), 0.0);
    Rng rng(8);
    const auto q = quant::quantize(std::vector<double>{0.3, -0.2, 0, 0, 0, 1}, spec, rng);
    EXPECT_EQ(quant::dequantize(q, spec), std::vector<double>(6, 0.0));
}

TEST(VarianceBound, EmpiricalErrorWithinBound) {
    const auto spec = QuantizerSpec::symmetric(4, 1.0, 3);
    const double j2 = quant::variance_bound(spec);
    Rng rng = Rng::stream(9, StreamKind::monte_carlo);
    for (int input = 0; input < 10; ++input) {
        std::vector<double> x(4);
        for (auto& v : x) {
            v = -1.0 + 2.0 * rng.uniform();
        }
        // The worst case puts every coordinate halfway between knobs.
        if (input == 0) {
            for (auto& v : x) {
                v = -1.0 + 0.5 * spec.kappa(0);
            }
        }
        double sq = 0.0;
        constexpr int kDraws = 100000;
        for (int i = 0; i < kDraws; ++i) {
            const auto v = quant::dequantize(quant::quantize(x, spec, rng), spec);
            for (std::size_t j = 0; j < 4; ++j) {
                sq += (v[j] - x[j]) * (v[j] - x[j]);
            }
        }
        // Input 0 attains the bound exactly; summing 4e5 equal terms costs up to ~n*eps in rounding.
        EXPECT_LE(sq / kDraws, j2 * (1 + 1e-9)) << "input " << input;
    }
}

TEST(Codec, ExampleValues) {
    const auto field = gf::GaloisField::default_field();
    const auto one = QuantizerSpec::symmetric(1, 1.0, 8);
    const auto msg = quant::to_message(quant::QuantizedUpdate{{173}}, one, field);
    EXPECT_EQ(msg.symbols, (std::vector<gf::Symbol>{gf::Symbol(173)}));

    const auto two = QuantizerSpec::symmetric(2, 1.0, 16);
    const auto wide = quant::to_message(quant::QuantizedUpdate{{0x1234, 0x00FF}}, two, field);
    EXPECT_EQ(wide.symbols, (std::vector<gf::Symbol>{gf::Symbol(0x34), gf::Symbol(0x12), gf::Symbol(0xFF),
                                                     gf::Symbol(0x00)}));

    const auto zeros = quant::to_message(quant::QuantizedUpdate{{0, 0}}, two, field);
    EXPECT_EQ(zeros.symbols, std::vector<gf::Symbol>(4));
}

TEST(Codec, DigitsPerCoordinate) {
    const auto gf256 = gf::GaloisField::default_field();
    EXPECT_EQ(quant::digits_per_coordinate(1, gf256), 1u);
    EXPECT_EQ(quant::digits_per_coordinate(8, gf256), 1u);
    EXPECT_EQ(quant::digits_per_coordinate(9, gf256), 2u);
    EXPECT_EQ(quant::digits_per_coordinate(32, gf256), 4u);
    const auto gf101 = gf::GaloisField::prime(101);
    EXPECT_EQ(quant::digits_per_coordinate(8, gf101), 2u);  // 101 < 256 <= 10201
    EXPECT_EQ(quant::digits_per_coordinate(13, gf101), 2u);
    EXPECT_EQ(quant::digits_per_coordinate(14, gf101), 3u);
}

TEST(Codec, ExhaustiveRoundTrip) {
    const std::vector<gf::GaloisField> fields{gf::GaloisField::default_field(), gf::GaloisField::binary(4, 0x13),
                                              gf::GaloisField::prime(101), gf::GaloisField::prime(3)};
    for (const auto& field : fields) {
        for (unsigned bits = 1; bits <= 8; ++bits) {
            for (std::size_t d = 1; d <= 4; ++d) {
                const auto spec = QuantizerSpec::symmetric(d, 1.0, bits);
                const std::uint32_t levels = 1U << bits;
                for (std::uint32_t i = 0; i < levels; ++i) {
                    quant::QuantizedUpdate q;
                    for (std::size_t j = 0; j < d; ++j) {
                        q.indices.push_back((i + static_cast<std::uint32_t>(j) * 37U) % levels);
                    }
                    const auto msg = quant::to_message(q, spec, field);
                    ASSERT_EQ(msg.symbols.size(), d * quant::digits_per_coordinate(bits, field));
                    for (auto s : msg.symbols) {
                        ASSERT_TRUE(field.contains(s));
                    }
                    ASSERT_EQ(quant::from_message(msg, spec, field), q);
                }
            }
        }
    }
}

TEST(Codec, ThirtyTwoBitExtremes) {
    const auto field = gf::GaloisField::prime(65521);
    const auto spec = QuantizerSpec::symmetric(3, 1.0, 32);
    const quant::QuantizedUpdate q{{0, 0xFFFFFFFFu, 0x80000001u}};
    EXPECT_EQ(quant::from_message(quant::to_message(q, spec, field), spec, field), q);
}

TEST(Codec, Errors) {
    const auto field = gf::GaloisField::prime(101);
    const auto spec = QuantizerSpec::symmetric(2, 1.0, 8);
    EXPECT_THROW(quant::to_message(quant::QuantizedUpdate{{256, 0}}, spec, field), std::invalid_argument);
    auto msg = quant::to_message(quant::QuantizedUpdate{{255, 3}}, spec, field);
    auto shorter = msg;
    shorter.symbols.pop_back();
    EXPECT_THROW(quant::from_message(shorter, spec, field), std::invalid_argument);
    // 100 + 100 * 101 >= 256: not an index.
    auto past = msg;
    past.symbols[0] = gf::Symbol(100);
    past.symbols[1] = gf::Symbol(100);
    EXPECT_THROW(quant::from_message(past, spec, field), std::invalid_argument);
    auto foreign = msg;
    foreign.symbols[2] = gf::Symbol(101);
    EXPECT_THROW(quant::from_message(foreign, spec, field), std::invalid_argument);
}

TEST(Codec, QuantizeThenDecodeRecoversValues) {
    const auto field = gf::GaloisField::default_field();
    const auto spec = QuantizerSpec::symmetric(100, 0.25, 8);
    Rng rng(10);
    std::vector<double> x(100);
    for (auto& v : x) {
        v = -0.3 + 0.6 * rng.uniform();
    }
    const auto q = quant::quantize(x, spec, rng);
    const auto back = quant::from_message(quant::to_message(q, spec, field), spec, field);
    EXPECT_EQ(quant::dequantize(back, spec), quant::dequantize(q, spec));
}
