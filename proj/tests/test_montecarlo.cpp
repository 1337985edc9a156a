#include <cmath>

#include "doctest.h"
#include "noma/alloc.hpp"
#include "noma/analysis.hpp"
#include "noma/errors.hpp"
#include "noma/experiment.hpp"
#include "noma/montecarlo.hpp"

using namespace noma;

namespace {

ClusteredScenario d1(double dbm, int bits = 42)
{
    RunConfig rc = figure_config("fig2");
    rc.system.power_mw = dbm_to_mw(dbm);
    rc.system.feedback_bits = bits;
    return cluster_users(rc.system);
}

SimOptions options(long trials, QuantizerMode mode = QuantizerMode::rvq)
{
    SimOptions o;
    o.trials = trials;
    o.seed = 99;
    o.mode = mode;
    return o;
}

ClusteredScenario single_user(double snr)
{
    SystemConfig c;
    c.antennas = 4;
    c.clusters = 1;
    c.users_per_cluster = 1;
    c.power_mw = snr;
    c.distances_m = Eigen::MatrixXd::Constant(1, 1, 1);
    c.noise_mw = Eigen::MatrixXd::Constant(1, 1, 1);
    return cluster_users(c);
}

}  // namespace

TEST_SUITE("montecarlo")
{
TEST_CASE("results do not depend on the thread count")
{
    ClusteredScenario s = d1(30);
    JointResult j = joint_optimize(s);
    SimOptions a = options(5000);
    a.threads = 1;
    SimOptions b = a;
    b.threads = 3;
    SimResult ra = simulate(j.scenario, j.power.per_user, j.bits.bits, a);
    SimResult rb = simulate(j.scenario, j.power.per_user, j.bits.bits, b);
    CHECK(ra.esr == rb.esr);
    CHECK(ra.esr_se == rb.esr_se);
    CHECK(ra.per_user_rate == rb.per_user_rate);
    CHECK(ra.esr == doctest::Approx(ra.per_user_rate.sum()).epsilon(1e-14));
    CHECK(ra.config_hash == config_digest(j.scenario.config));
}

TEST_CASE("input validation")
{
    ClusteredScenario s = d1(30);
    PowerAllocation p = equal_power(s);
    Eigen::MatrixXi bits = equal_bits(s).bits;
    CHECK_THROWS_AS(simulate(s, p.per_user, bits, options(99)), ConfigError);
    CHECK_THROWS_AS(simulate(s, p.per_user, Eigen::MatrixXi::Zero(2, 2), options(200)),
                    ConfigError);
    Eigen::MatrixXi neg = bits;
    neg(0, 0) = -1;
    CHECK_THROWS_AS(simulate(s, p.per_user, neg, options(200)), ConfigError);
}

TEST_CASE("SINRs are nonnegative")
{
    ClusteredScenario s = d1(30);
    PowerAllocation p = equal_power(s);
    Eigen::MatrixXi bits = equal_bits(s).bits;
    for (int t = 0; t < 200; ++t)
    {
        RandomStream rng(4, t);
        ChannelRealization r = draw_realization(rng, 6, bits, QuantizerMode::rvq);
        CHECK(sinr(s, r, p.per_user).minCoeff() >= 0);
    }
}

TEST_CASE("single user with perfect CSI matches the ideal rate")
{
    ClusteredScenario s = single_user(4.0);
    SimResult r = simulate(s, Eigen::MatrixXd::Constant(1, 1, 4.0), Eigen::MatrixXi::Zero(1, 1),
                           options(1000000, QuantizerMode::perfect));
    LinkCoefficients c{4.0, 0, 0, 1};
    double ideal = rate_ideal(c, 4, 1).value;
    CHECK(std::fabs(r.esr - ideal) < 3 * r.esr_se);
}

TEST_CASE("zero feedback saturates at high power")
{
    ClusteredScenario lo = d1(90, 0), hi = d1(93, 0);
    Eigen::MatrixXi bits = Eigen::MatrixXi::Zero(3, 2);
    SimOptions o = options(20000);
    o.keep_per_trial = true;
    SimResult a = simulate(lo, equal_power(lo).per_user, bits, o);
    SimResult b = simulate(hi, equal_power(hi).per_user, bits, o);
    CHECK(std::fabs(b.esr - a.esr) < 3 * std::max(a.esr_se, b.esr_se));
}

TEST_CASE("alternative CSI model")
{
    // fine quantization: both models approach perfect CSI
    ClusteredScenario s = d1(30, 1200);
    PowerAllocation p = equal_power(s);
    Eigen::MatrixXi fine = Eigen::MatrixXi::Constant(3, 2, 200);
    SimOptions o = options(20000);
    SimResult alt = simulate_alt_csi_model(s, p.per_user, fine, o);
    SimResult perfect = simulate(s, p.per_user, fine, options(20000, QuantizerMode::perfect));
    CHECK(std::fabs(alt.esr - perfect.esr) < 3 * std::hypot(alt.esr_se, perfect.esr_se));

    // no feedback: random and fixed error magnitudes give different rates
    Eigen::MatrixXi none = Eigen::MatrixXi::Zero(3, 2);
    o.keep_per_trial = true;
    SimResult a0 = simulate_alt_csi_model(s, p.per_user, none, o);
    SimResult r0 = simulate(s, p.per_user, none, o);
    CHECK(std::fabs(a0.esr - r0.esr) > 3 * paired_se(a0, r0));
}

TEST_CASE("standard error shrinks as one over root n")
{
    ClusteredScenario s = d1(30);
    PowerAllocation p = equal_power(s);
    Eigen::MatrixXi bits = equal_bits(s).bits;
    SimResult a = simulate(s, p.per_user, bits, options(4000));
    SimResult b = simulate(s, p.per_user, bits, options(16000));
    CHECK(b.esr_se / a.esr_se == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::fabs(a.esr - b.esr) < 3 * a.esr_se);
}

TEST_CASE("bounds bracket the simulated rates")
{
    ClusteredScenario s = d1(30);
    JointResult j = joint_optimize(s);
    SimResult r = simulate(j.scenario, j.power.per_user, j.bits.bits, options(40000));
    const int M = 6;
    for (int n = 0; n < 3; ++n)
        for (int k = 0; k < 2; ++k)
        {
            LinkCoefficients c = link_coefficients(j.scenario, j.power.per_user,
                                                   j.bits.bits.cast<double>(), n, k);
            double sim = r.per_user_rate(n, k);
            double se3 = 3 * r.per_user_se(n, k);
            double ideal = rate_ideal(c, M, k + 1).value;
            CHECK(rate_lb1(c, M, k + 1).value <= sim + se3);
            CHECK(sim <= ideal + se3);
            CHECK(ideal - sim <= rate_loss_ub(c, M).value + se3);
        }
}

TEST_CASE("near users can decode far users' messages")
{
    ClusteredScenario s = d1(30);
    JointResult j = joint_optimize(s);
    std::vector<SicEntry> e = sic_decodability(j.scenario, j.power.per_user, j.bits.bits,
                                               options(10000));
    REQUIRE(e.size() == 3);
    for (const SicEntry& x : e)
        CHECK(x.decoder_rate >= x.target_rate - 3 * x.diff_se);
}

TEST_CASE("orthogonal baseline")
{
    ClusteredScenario s = d1(30);
    SimResult oma = simulate_oma(s, equal_bits(s).bits, options(5000));
    CHECK(oma.esr > 0);
    CHECK(std::isfinite(oma.esr_se));
    CHECK(oma.per_user_rate.minCoeff() > 0);
}

TEST_CASE("clustering experiment reports the identity first")
{
    ClusteredScenario s = d1(30, 72);
    std::vector<ClusteringOutcome> out
        = clustering_experiment(s, {{2, 1, 0}, {0, 1, 2}}, options(2000));
    REQUIRE(out.size() == 2);
    CHECK(out[0].perm == std::vector<int>{0, 1, 2});
    CHECK(out[0].loss == 0);
    CHECK(out[1].perm == std::vector<int>{2, 1, 0});
}
}
