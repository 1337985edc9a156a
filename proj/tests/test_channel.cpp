#include <cmath>
#include <cstdio>
#include <string>

#include "doctest.h"
#include "noma/channel.hpp"
#include "noma/errors.hpp"
#include "noma/trace.hpp"

using namespace noma;

namespace {

double mean_sin2(int M, int bits, QuantizerMode mode, int draws, std::uint64_t seed = 5)
{
    double sum = 0;
    for (int t = 0; t < draws; ++t)
    {
        RandomStream rng(seed, t);
        CVector h = draw_complex_normal(rng, M);
        sum += rvq_quantize(h, bits, rng, mode).sin2;
    }
    return sum / draws;
}

}  // namespace

TEST_SUITE("channel")
{
TEST_CASE("realization invariants")
{
    Eigen::MatrixXi bits(3, 2);
    bits << 8, 4, 6, 0, 10, 3;
    for (QuantizerMode mode : {QuantizerMode::rvq, QuantizerMode::cell,
                               QuantizerMode::constant, QuantizerMode::codebook,
                               QuantizerMode::perfect})
    {
        for (int t = 0; t < 50; ++t)
        {
            RandomStream rng(11, t);
            ChannelRealization r = draw_realization(rng, 6, bits, mode);
            for (int i = 0; i < 6; ++i)
            {
                CVector cdi = r.h[i] / r.h[i].norm();
                CVector rebuilt = std::sqrt(r.cos2[i]) * r.h_hat[i]
                                  + std::sqrt(r.sin2[i]) * r.e_tilde[i];
                CHECK((rebuilt - cdi).norm() < 1e-12);
                CHECK(std::fabs(r.h_hat[i].norm() - 1) < 1e-12);
                CHECK(std::fabs(r.e_tilde[i].norm() - 1) < 1e-12);
                CHECK(std::abs(r.h_hat[i].dot(r.e_tilde[i])) < 1e-12);
                CHECK(std::fabs(r.cos2[i] + r.sin2[i] - 1) < 1e-15);
                CHECK(r.sin2[i] >= 0);
            }
            // zero forcing on the quantized directions
            for (int n = 0; n < 3; ++n)
            {
                CHECK(std::fabs(r.w[n].norm() - 1) < 1e-12);
                for (int i = 0; i < 6; ++i)
                    if (i % 3 != n)
                        CHECK(std::abs((r.h_hat[i].transpose() * r.w[n]).value()) < 1e-12);
            }
        }
    }
}

TEST_CASE("channel moments")
{
    const int draws = 40000;
    double power = 0;
    std::complex<double> mean = 0;
    for (int t = 0; t < draws; ++t)
    {
        RandomStream rng(3, t);
        CVector h = draw_complex_normal(rng, 4);
        power += h.squaredNorm();
        mean += h(0);
    }
    CHECK(power / draws == doctest::Approx(4).epsilon(0.02));
    CHECK(std::abs(mean / double(draws)) < 0.02);
}

TEST_CASE("quantization angle statistics")
{
    // zero bits: h_hat is isotropic, so cos^2 has mean 1/M
    CHECK(1 - mean_sin2(6, 0, QuantizerMode::rvq, 40000) == doctest::Approx(1.0 / 6).epsilon(0.03));
    CHECK(1 - mean_sin2(6, 0, QuantizerMode::codebook, 20000) == doctest::Approx(1.0 / 6).epsilon(0.04));
    // M = 2: E sin^2 = 2^B Beta(2^B, 2) = 1 / (2^B + 1)
    CHECK(mean_sin2(2, 10, QuantizerMode::rvq, 100000)
          == doctest::Approx(0.00097560975609756).epsilon(0.02));
    // the explicit codebook search follows the same law
    CHECK(mean_sin2(4, 6, QuantizerMode::codebook, 8000)
          == doctest::Approx(mean_sin2(4, 6, QuantizerMode::rvq, 40000)).epsilon(0.04));
    double prev = 1;
    for (int b = 0; b <= 16; b += 2)
    {
        double m = mean_sin2(4, b, QuantizerMode::rvq, 5000);
        CHECK(m < prev);
        prev = m;
    }
    CHECK(mean_sin2(4, 9, QuantizerMode::constant, 10) == doctest::Approx(std::exp2(-3.0)));
    CHECK(mean_sin2(4, 9, QuantizerMode::perfect, 10) == 0);
}

TEST_CASE("single cluster beamformer is isotropic")
{
    Eigen::MatrixXi bits = Eigen::MatrixXi::Constant(1, 2, 4);
    const int draws = 40000;
    double sum = 0;
    for (int t = 0; t < draws; ++t)
    {
        RandomStream rng(8, t);
        ChannelRealization r = draw_realization(rng, 4, bits, QuantizerMode::rvq);
        sum += std::norm((r.h_hat[0].transpose() * r.w[0]).value());
    }
    CHECK(sum / draws == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("errors")
{
    RandomStream rng(1, 1);
    CVector h = draw_complex_normal(rng, 4);
    CHECK_THROWS_AS(rvq_quantize(h, 31, rng, QuantizerMode::codebook), DomainError);
    CHECK_THROWS_AS(rvq_quantize(h, -1, rng), DomainError);
    CHECK_THROWS_AS(parse_quantizer_mode("fancy"), ConfigError);
    std::vector<CVector> hh(6, h);
    CHECK_THROWS_AS(zf_beamformers(hh, 4, 3, 2, rng), NumericalDegeneracy);
}

TEST_CASE("trace round trip")
{
    Eigen::MatrixXi bits = Eigen::MatrixXi::Constant(3, 2, 7);
    std::vector<ChannelRealization> rs;
    for (int t = 0; t < 4; ++t)
    {
        RandomStream rng(2, t);
        rs.push_back(draw_realization(rng, 6, bits, QuantizerMode::rvq));
    }
    std::string path = "noma_trace_test.bin";
    write_trace(path, rs);
    std::vector<ChannelRealization> back = read_trace(path);
    std::remove(path.c_str());
    REQUIRE(back.size() == rs.size());
    for (size_t t = 0; t < rs.size(); ++t)
    {
        CHECK(back[t].clusters == 3);
        for (int i = 0; i < 6; ++i)
        {
            CHECK((back[t].h[i] - rs[t].h[i]).norm() < 1e-5 * rs[t].h[i].norm());
            CHECK(back[t].sin2[i] == doctest::Approx(rs[t].sin2[i]).epsilon(1e-6));
        }
        CHECK((back[t].w[2] - rs[t].w[2]).norm() < 1e-6);
    }
    CHECK_THROWS(read_trace("does_not_exist.bin"));
}
}
