#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "noma/alloc.hpp"
#include "noma/analysis.hpp"
#include "noma/errors.hpp"
#include "noma/experiment.hpp"

using namespace noma;

namespace {

ClusteredScenario d1(double dbm, int bits = 42)
{
    RunConfig rc = figure_config("fig2");
    rc.system.power_mw = dbm_to_mw(dbm);
    rc.system.feedback_bits = bits;
    return cluster_users(rc.system);
}

ClusteredScenario random_scenario(std::mt19937_64& gen, int M, int N, int K, int bits)
{
    std::uniform_real_distribution<double> dist(10, 60);
    SystemConfig c;
    c.antennas = M;
    c.clusters = N;
    c.users_per_cluster = K;
    c.feedback_bits = bits;
    c.power_mw = dbm_to_mw(std::uniform_real_distribution<double>(20, 50)(gen));
    c.distances_m.resize(N, K);
    for (int i = 0; i < N * K; ++i)
        c.distances_m(i % N, i / N) = dist(gen);
    c.noise_mw = Eigen::MatrixXd::Constant(N, K, dbm_to_mw(-50));
    return cluster_users(c);
}

// Nonnegative relaxed optimum by bisection on the common level of
// x_i = g 2^{-B_i/(M-1)} S3_i / (1 + S2_i).
Eigen::MatrixXd kkt_oracle(const ClusteredScenario& s, const Eigen::MatrixXd& power)
{
    const int N = s.clusters(), K = s.users_per_cluster(), M = s.config.antennas;
    Eigen::MatrixXd h(N, K);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
        {
            LinkCoefficients c = link_coefficients(s, power, Eigen::MatrixXd::Zero(N, K), n, k);
            h(n, k) = quantization_gain(M) * c.S3 / (1 + c.S2);
        }
    auto bits_at = [&](double log_t) {
        return ((M - 1) * (h.array().log2() - log_t)).max(0.0).matrix().eval();
    };
    double lo = -200, hi = 200;
    for (int it = 0; it < 300; ++it)
    {
        double mid = 0.5 * (lo + hi);
        if (bits_at(mid).sum() > s.config.feedback_bits)
            lo = mid;
        else
            hi = mid;
    }
    return bits_at(0.5 * (lo + hi));
}

}  // namespace

TEST_SUITE("alloc")
{
TEST_CASE("knapsack matches brute force")
{
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 300; ++trial)
    {
        int n = 1 + trial % 10;
        int count = int(gen() % (n + 1));
        std::vector<double> g(n);
        for (double& x : g)
            x = trial % 3 == 0 ? std::round(u(gen) * 4) / 4 : u(gen);  // ties too
        KnapsackResult r = knapsack_unit(g, count);
        double best = -1;
        for (unsigned mask = 0; mask < (1u << n); ++mask)
        {
            if (__builtin_popcount(mask) != count)
                continue;
            double sum = 0;
            for (int i = 0; i < n; ++i)
                if (mask >> i & 1)
                    sum += g[i];
            best = std::max(best, sum);
        }
        CHECK(r.value == best);
        double chosen_sum = 0;
        int chosen = 0;
        for (int i = 0; i < n; ++i)
            if (r.chosen[i])
            {
                chosen_sum += g[i];
                ++chosen;
            }
        CHECK(chosen == count);
        CHECK(chosen_sum == doctest::Approx(best).epsilon(1e-15));
    }
    // ties go to the lower index
    KnapsackResult t = knapsack_unit({1, 1, 1, 1}, 2);
    CHECK(t.chosen == std::vector<bool>{true, true, false, false});
    CHECK_THROWS_AS(knapsack_unit({1, 2}, 3), DomainError);
}

TEST_CASE("closed-form bits")
{
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 30; ++trial)
    {
        ClusteredScenario s = random_scenario(gen, 7, 3, 2, 40 + trial);
        PowerAllocation p = equal_power(s);
        Eigen::MatrixXd b = bits_closed_form(s, p.per_user);
        CHECK(std::fabs(b.sum() - s.config.feedback_bits) <= 1e-9);
        // stationarity: the effective interference level is common to all users
        Eigen::MatrixXd x(3, 2);
        for (int n = 0; n < 3; ++n)
            for (int k = 0; k < 2; ++k)
            {
                LinkCoefficients c = link_coefficients(s, p.per_user, b, n, k);
                x(n, k) = c.delta * c.S3 / (1 + c.S2);
            }
        CHECK(x.maxCoeff() / x.minCoeff() == doctest::Approx(1).epsilon(1e-10));
    }

    // identical clusters get identical rows
    RunConfig rc = figure_config("fig2");
    rc.system.distances_m << 20, 30, 20, 30, 20, 30;
    ClusteredScenario sym = cluster_users(rc.system);
    Eigen::MatrixXd b = bits_closed_form(sym, equal_power(sym).per_user);
    for (int n = 1; n < 3; ++n)
        CHECK((b.row(n) - b.row(0)).norm() < 1e-12);

    // one user per cluster and equal gains: B / NK each
    SystemConfig one = rc.system;
    one.users_per_cluster = 1;
    one.distances_m = Eigen::MatrixXd::Constant(3, 1, 30);
    one.noise_mw = Eigen::MatrixXd::Constant(3, 1, 1e-5);
    ClusteredScenario flat = cluster_users(one);
    Eigen::MatrixXd bf = bits_closed_form(flat, equal_power(flat).per_user);
    for (int n = 0; n < 3; ++n)
        CHECK(bf(n, 0) == doctest::Approx(14).epsilon(1e-14));
}

TEST_CASE("nonnegative recurrence matches the KKT solution")
{
    std::mt19937_64 gen(9);
    int pinned_cases = 0;
    for (int trial = 0; trial < 60; ++trial)
    {
        int N = 2 + trial % 3, K = 2 + trial % 2;
        int M = (N - 1) * K + 2;
        ClusteredScenario s = random_scenario(gen, M, N, K, 4 + trial % 20);
        PowerAllocation p = equal_power(s);
        RecurrenceResult r = bits_nonneg_recurrence(s, p.per_user);
        Eigen::MatrixXd oracle = kkt_oracle(s, p.per_user);
        CHECK((r.relaxed - oracle).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(r.relaxed.minCoeff() >= 0);
        CHECK(std::fabs(r.relaxed.sum() - s.config.feedback_bits) <= 1e-9);
        pinned_cases += r.rounds > 1;
    }
    CHECK(pinned_cases > 5);
}

TEST_CASE("integer allocation")
{
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 40; ++trial)
    {
        ClusteredScenario s = random_scenario(gen, 6, 3, 2, 10 + 3 * trial);
        PowerAllocation p = equal_power(s);
        BitAllocation a = allocate_bits(s, p.per_user);
        CHECK(a.bits.sum() == s.config.feedback_bits);
        CHECK(a.total_used == s.config.feedback_bits);
        CHECK(a.bits.minCoeff() >= 0);
        // rounding never moves a user by a whole bit
        CHECK((a.bits.cast<double>() - a.relaxed).cwiseAbs().maxCoeff() < 1 + 1e-9);

        BitAllocation ref = reference_bits(s, p.per_user);
        CHECK(ref.bits.sum() == s.config.feedback_bits);
        CHECK(ref.bits.minCoeff() >= 0);

        // our relaxed bits never lose to the reference ones on the product objective
        Eigen::MatrixXd ours = bits_nonneg_recurrence(s, p.per_user).relaxed;
        CHECK(relaxed_objective(s, p.per_user, ours)
              <= relaxed_objective(s, p.per_user, ref.relaxed) + 1e-12);
    }

    ClusteredScenario s = d1(30, 43);
    BitAllocation e = equal_bits(s);
    CHECK(e.bits.sum() == 43);
    CHECK(e.bits(0, 0) == 8);
    CHECK(e.bits(2, 1) == 7);
}

TEST_CASE("single cluster")
{
    SystemConfig c = figure_config("fig2").system;
    c.clusters = 1;
    c.distances_m.resize(1, 2);
    c.distances_m << 25, 35;
    c.noise_mw = Eigen::MatrixXd::Constant(1, 2, 1e-5);
    ClusteredScenario s = cluster_users(c);
    PowerSolution ps = power_fixed_point(s);
    CHECK(ps.power.phi(0) == 1);
    BitAllocation a = allocate_bits(s, ps.power.per_user);
    CHECK(a.bits.sum() == 0);
    CHECK(!a.notices.empty());
}

TEST_CASE("power fixed point")
{
    for (double dbm : {20.0, 30.0, 40.0, 60.0})
    {
        ClusteredScenario s = d1(dbm);
        PowerSolution ps = power_fixed_point(s);
        const Eigen::VectorXd& phi = ps.power.phi;
        double C = ps.power.C_star;
        CHECK(std::fabs(C - power_rhs(ps.scenario, C)) <= 1e-9 * C);
        CHECK(phi.sum() == doctest::Approx(1).epsilon(1e-12));
        for (int n = 1; n < phi.size(); ++n)
            CHECK(phi(n) <= phi(n - 1));
        CHECK((phi - power_fractions(ps.scenario, C)).norm() == 0);
    }

    // identical clusters: exactly equal power
    RunConfig rc = figure_config("fig2");
    rc.system.distances_m << 20, 30, 20, 30, 20, 30;
    PowerSolution sym = power_fixed_point(cluster_users(rc.system));
    for (int n = 0; n < 3; ++n)
        CHECK(sym.power.phi(n) == 1.0 / 3);

    // high power drifts toward equal power
    double prev = 1;
    for (double dbm : {30.0, 40.0, 50.0, 60.0, 70.0})
    {
        PowerSolution ps = power_fixed_point(d1(dbm));
        double gap = (ps.power.phi.array() - 1.0 / 3).abs().maxCoeff();
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("power solution is optimal for the frozen interference term")
{
    for (double dbm : {25.0, 35.0})
    {
        ClusteredScenario s = d1(dbm);
        PowerSolution ps = power_fixed_point(s);
        REQUIRE(ps.scenario.clusters() == 3);
        const int M = 6, K = 2;
        const double P = s.config.power_mw;
        const double geo = std::exp(s.cnr.array().log().mean());
        const double den = double(M) / (M - 1)
                           + quantization_gain(M) * std::exp2(-42.0 / (6 * (M - 1))) * geo
                                 * ps.power.C_star;
        auto frozen = [&](const Eigen::VectorXd& phi) {
            double t = 0;
            for (int n = 0; n < 3; ++n)
                t += std::log2(1 + s.cnr(n, 0) * phi(n) * P / K / den);
            return t;
        };
        // concave in phi for fixed C: no simplex step may improve it
        double f0 = frozen(ps.power.phi);
        double worst = -1;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j)
                {
                    Eigen::VectorXd phi = ps.power.phi;
                    phi(i) += 1e-4;
                    phi(j) -= 1e-4;
                    worst = std::max(worst, frozen(phi) - f0);
                }
        CHECK(worst < 0);

        // unfrozen, the head-user sum is only approximately stationary
        double full0 = 0;
        for (int n = 0; n < 3; ++n)
            full0 += rate_lb2_tilde_substituted(ps.power.phi, s, n, 0);
        Eigen::VectorXd phi = ps.power.phi;
        phi(0) += 1e-3;
        phi(2) -= 1e-3;
        double full1 = 0;
        for (int n = 0; n < 3; ++n)
            full1 += rate_lb2_tilde_substituted(phi, s, n, 0);
        CHECK(std::fabs(full1 - full0) < 1e-3);
    }
}

TEST_CASE("cluster reduction")
{
    ClusteredScenario s = d1(0);
    PowerSolution ps = power_fixed_point(s);
    CHECK(ps.scenario.clusters() < 3);
    CHECK(!ps.notices.empty());
    PowerOptions strict;
    strict.allow_cluster_reduction = false;
    CHECK_THROWS_AS(power_fixed_point(s, strict), Infeasible);

    JointResult j = joint_optimize(d1(10));
    CHECK(j.scenario.clusters() == 2);
    CHECK(j.bits.bits.sum() == 42);
}

TEST_CASE("high-power asymptotics")
{
    for (int B : {42, 60, 77})
    {
        ClusteredScenario s = d1(40, B);
        AsymptoticBits a = bits_asymptotic(s, s.config.power_mw);
        CHECK(a.hat.sum() == doctest::Approx(B).epsilon(1e-12));
        for (int n = 1; n < 3; ++n)
            CHECK(a.hat(n) <= a.hat(n - 1));
    }
    // at equal power the growth form is the closed form itself
    ClusteredScenario s = d1(50, 200);
    AsymptoticBits a = bits_asymptotic(s, s.config.power_mw);
    Eigen::MatrixXd b = bits_closed_form(s, equal_power(s).per_user);
    CHECK((a.tilde - b).cwiseAbs().maxCoeff() < 0.05);
}
}
