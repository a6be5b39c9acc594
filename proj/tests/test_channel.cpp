// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <complex>
#include <numbers>

#include <Eigen/SVD>

#include "sdmimo/channel.hpp"
#include "sdmimo/rng.hpp"

using namespace sdmimo;
using cd = std::complex<double>;

namespace {
const ArrayGeometry kBs{128, 0.125, 1.0};
const ArrayGeometry kMs{8, 0.125, 1.0};
} // namespace

TEST_CASE("steering vector at broadside is all ones") {
    const auto a = steering_vector(0.0, kBs);
    CHECK(a.size() == 128);
    CHECK((a - Eigen::VectorXcd::Ones(128)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("steering vector phase progression at endfire") {
    const ArrayGeometry two{2, 0.125, 1.0};
    const auto a = steering_vector(90.0, two);
    CHECK(a(0) == cd(1.0, 0.0));
    const cd expected = std::polar(1.0, std::numbers::pi / 4.0);
    CHECK(std::abs(a(1) - expected) <= 1e-15);
}

TEST_CASE("steering vector has unit-modulus entries and norm sqrt(N)") {
    rng::Stream stream(5);
    for (int i = 0; i < 20; ++i) {
        const double angle = stream.uniform(-89.0, 89.0);
        const auto a = steering_vector(angle, kBs);
        CHECK(a.squaredNorm() == doctest::Approx(128.0).epsilon(1e-12));
        CHECK(std::abs(a(0) - cd(1.0, 0.0)) == 0.0);
    }
}

TEST_CASE("steering vector conjugate symmetry in the angle") {
    rng::Stream stream(6);
    for (int i = 0; i < 10; ++i) {
        const double angle = stream.uniform(-85.0, 85.0);
        const auto plus = steering_vector(angle, kMs);
        const auto minus = steering_vector(-angle, kMs);
        CHECK((minus - plus.conjugate()).cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("broadside unit-gain channel is the all-ones matrix") {
    const auto scenario = make_los_channel(0.0, 0.0, cd(1.0, 0.0), kBs, kMs);
    CHECK((scenario.channel - Eigen::MatrixXcd::Ones(128, 8)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("channel Frobenius norm matches |alpha| sqrt(Nr Nt)") {
    const cd alpha = std::polar(1.0, std::numbers::pi / 3.0);
    const auto scenario = make_los_channel(17.0, -42.0, alpha, kBs, kMs);
    CHECK(scenario.channel.norm() == doctest::Approx(std::sqrt(128.0 * 8.0)).epsilon(1e-12));
}

TEST_CASE("channel entries match the elementwise formula") {
    const ArrayGeometry bs{4, 0.125, 1.0};
    const ArrayGeometry ms{2, 0.125, 1.0};
    const cd alpha(0.0, 0.5);
    const auto scenario = make_los_channel(10.0, -20.0, alpha, bs, ms);
    const double to_rad = std::numbers::pi / 180.0;
    for (Eigen::Index m = 0; m < 4; ++m) {
        for (Eigen::Index n = 0; n < 2; ++n) {
            const double phase = 2.0 * std::numbers::pi * 0.125 *
                                 (static_cast<double>(m) * std::sin(10.0 * to_rad) -
                                  static_cast<double>(n) * std::sin(-20.0 * to_rad));
            const cd expected = alpha * std::polar(1.0, phase);
            CHECK(std::abs(scenario.channel(m, n) - expected) <= 1e-14);
        }
    }
}

TEST_CASE("generated channels are rank 1") {
    rng::Stream stream(8);
    for (int i = 0; i < 5; ++i) {
        const auto scenario = make_los_channel(stream.uniform(-85.0, 85.0),
                                               stream.uniform(-85.0, 85.0),
                                               std::polar(1.0, stream.uniform(0.0, 6.28)),
                                               kBs, kMs);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(scenario.channel);
        const auto& sv = svd.singularValues();
        CHECK(sv(1) <= 1e-10 * sv(0));
    }
}

TEST_CASE("noiseless synthesis is the exact linear model") {
    const ArrayGeometry bs{2, 0.125, 1.0};
    const ArrayGeometry ms{2, 0.125, 1.0};
    ChannelScenario scenario = make_los_channel(0.0, 0.0, cd(1.0, 0.0), bs, ms);

    Eigen::MatrixXcd s(2, 2);
    s << cd(1, 1), cd(1, 1), cd(1, 1), cd(-1, -1);
    const auto record = synthesize_received(scenario, s, 8.0, 0, true);

    Eigen::MatrixXcd expected(2, 2);
    const double root2 = std::numbers::sqrt2;
    expected << root2 * cd(2, 2), cd(0, 0), root2 * cd(2, 2), cd(0, 0);
    CHECK((record.received - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(record.noise.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("synthesis is reproducible from the seed") {
    const auto scenario = make_los_channel(5.0, -3.0, cd(1.0, 0.0), kBs, kMs);
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Constant(8, 8, cd(1.0, 1.0));
    const auto first = synthesize_received(scenario, s, 1.0, 77);
    const auto second = synthesize_received(scenario, s, 1.0, 77);
    CHECK(first.noise == second.noise);
    CHECK(first.received == second.received);

    const auto other = synthesize_received(scenario, s, 1.0, 78);
    CHECK(first.noise != other.noise);
}

TEST_CASE("synthesis validates dimensions and pilot alphabet") {
    const auto scenario = make_los_channel(0.0, 0.0, cd(1.0, 0.0), kBs, kMs);
    CHECK_THROWS_AS(synthesize_received(scenario, Eigen::MatrixXcd::Ones(7, 8), 1.0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        synthesize_received(scenario, Eigen::MatrixXcd::Constant(8, 8, cd(0.5, 1.0)), 1.0, 0),
        std::invalid_argument);
}

TEST_CASE("receiving zero input produces the alternating column pattern") {
    TransmissionRecord record;
    record.received = Eigen::MatrixXcd::Zero(4, 3);
    receive_sigma_delta(record, SigmaDeltaConfig{4, 1.0});
    for (Eigen::Index c = 0; c < 3; ++c) {
        CHECK(record.quantized(0, c) == cd(1, 1));
        CHECK(record.quantized(1, c) == cd(-1, -1));
        CHECK(record.quantized(2, c) == cd(1, 1));
        CHECK(record.quantized(3, c) == cd(-1, -1));
    }
}

TEST_CASE("single-channel receiver degenerates to the plain quantizer") {
    TransmissionRecord record;
    record.received = Eigen::MatrixXcd::Random(1, 5);
    receive_sigma_delta(record, SigmaDeltaConfig{1, 2.0});
    for (Eigen::Index c = 0; c < 5; ++c)
        CHECK(record.quantized(0, c) == quantize_1bit(record.received(0, c), 2.0));
}

TEST_CASE("quantized output stays on the alphabet and columns are independent") {
    rng::Stream stream(13);
    TransmissionRecord record;
    record.received = stream.complex_gaussian_matrix(16, 6);
    receive_sigma_delta(record, SigmaDeltaConfig{16, 1.5});
    for (Eigen::Index c = 0; c < 6; ++c)
        for (Eigen::Index r = 0; r < 16; ++r) {
            CHECK(std::abs(record.quantized(r, c).real()) == 1.5);
            CHECK(std::abs(record.quantized(r, c).imag()) == 1.5);
        }

    // Permuting the input columns permutes the output identically.
    TransmissionRecord permuted;
    permuted.received = record.received;
    permuted.received.col(0).swap(permuted.received.col(3));
    receive_sigma_delta(permuted, SigmaDeltaConfig{16, 1.5});
    CHECK(permuted.quantized.col(0) == record.quantized.col(3));
    CHECK(permuted.quantized.col(3) == record.quantized.col(0));
    CHECK(permuted.quantized.col(1) == record.quantized.col(1));
}
