// Finite-difference oracles for every differentiable op. The checks run in
// double-width arithmetic with central differences at eps 1e-4; the oracle
// is the finite difference itself.

#include <catch2/catch_amalgamated.hpp>

#include "mmsense/gradcheck.hpp"

using namespace mmsense;

namespace {

constexpr double kEps = 1e-4;
constexpr double kTol = 1e-3;

TensorD random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo = -1.0,
                      double hi = 1.0) {
    Rng rng(seed);
    TensorD t(std::move(shape));
    for (auto& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

// Keeps entries away from the ReLU kink so finite differences stay clean.
TensorD random_away_from_zero(std::vector<std::size_t> shape, std::uint64_t seed,
                              double margin = 0.1) {
    Rng rng(seed);
    TensorD t(std::move(shape));
    for (auto& v : t.values) {
        const double mag = rng.uniform(margin, 1.0);
        v = rng.next_double() < 0.5 ? -mag : mag;
    }
    return t;
}

}  // namespace

TEST_CASE("conv1d gradients match finite differences") {
    // The spec's reference case: 4x8 input against 3x4x3 weights.
    const TensorD x = random_tensor({4, 8}, 101);
    const TensorD w = random_tensor({3, 4, 3}, 102);
    const TensorD b = random_tensor({3}, 103);
    REQUIRE(grad_check_conv1d(x, w, b, ConvSpec{4, 3, 3, 1, 1}, kEps) < kTol);

    // Strided and padded variants.
    REQUIRE(grad_check_conv1d(random_tensor({2, 12}, 104), random_tensor({5, 2, 7}, 105),
                              random_tensor({5}, 106), ConvSpec{2, 5, 7, 2, 3}, kEps) < kTol);
    REQUIRE(grad_check_conv1d(random_tensor({1, 6}, 107), random_tensor({2, 1, 1}, 108),
                              random_tensor({2}, 109), ConvSpec{1, 2, 1, 1, 0}, kEps) < kTol);
}

TEST_CASE("linear gradients match finite differences") {
    const TensorD x = random_tensor({64}, 201);
    const TensorD w = random_tensor({10, 64}, 202);
    const TensorD b = random_tensor({10}, 203);
    REQUIRE(grad_check_linear(x, w, b, kEps) < kTol);
}

TEST_CASE("relu gradient away from the kink") {
    const TensorD x = random_away_from_zero({4, 16}, 301);
    REQUIRE(grad_check_relu(x, kEps) < 1e-6);
}

TEST_CASE("pooling gradients match finite differences") {
    const TensorD x = random_tensor({3, 20}, 401);
    REQUIRE(grad_check_maxpool1d(x, 3, 2, 1, kEps) < kTol);
    REQUIRE(grad_check_maxpool1d(x, 2, 2, 0, kEps) < kTol);
    REQUIRE(grad_check_avgpool1d(x, 3, 2, 1, kEps) < kTol);
    REQUIRE(grad_check_avgpool1d(x, 5, 1, 2, kEps) < kTol);
}

TEST_CASE("concat gradients match finite differences") {
    const std::vector<TensorD> parts{random_tensor({2, 6}, 501), random_tensor({3, 6}, 502),
                                     random_tensor({1, 6}, 503)};
    REQUIRE(grad_check_concat(parts, kEps) < kTol);
}

TEST_CASE("softmax cross entropy gradient matches finite differences") {
    const TensorD logits = random_tensor({10}, 601, -3.0, 3.0);
    for (int label : {0, 4, 9}) {
        REQUIRE(grad_check_softmax_ce(logits, label, kEps) < kTol);
    }
}

TEST_CASE("randomized shapes up to 8x64") {
    Rng rng(777);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t c_in = 1 + rng.uniform_u64(8);
        const std::size_t c_out = 1 + rng.uniform_u64(6);
        const std::size_t t = 8 + rng.uniform_u64(57);  // up to 64
        const int k = 1 + 2 * static_cast<int>(rng.uniform_u64(3));
        const int s = 1 + static_cast<int>(rng.uniform_u64(2));
        const int p = k / 2;

        const TensorD x = random_tensor({c_in, t}, 700 + trial);
        const TensorD w = random_tensor({c_out, c_in, static_cast<std::size_t>(k)}, 800 + trial);
        const TensorD b = random_tensor({c_out}, 900 + trial);
        const ConvSpec spec{static_cast<int>(c_in), static_cast<int>(c_out), k, s, p};
        REQUIRE(grad_check_conv1d(x, w, b, spec, kEps) < kTol);
    }
}
