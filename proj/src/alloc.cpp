#include "noma/alloc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "noma/analysis.hpp"
#include "noma/errors.hpp"

namespace noma {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

MatrixXb all_active(const ClusteredScenario& s)
{
    return MatrixXb::Constant(s.clusters(), s.users_per_cluster(), true);
}

// S2 and S3 of user (n, k) under the given per-user powers.
std::pair<double, double> interference_terms(const ClusteredScenario& s,
                                             const Eigen::MatrixXd& power,
                                             int n, int k)
{
    const double rho = s.cnr(n, k);
    const double s2 = rho * power.row(n).head(k).sum();
    const double s3 = rho * (power.sum() - power.row(n).sum());
    return {s2, s3};
}

double loss_term(double s2, double s3, double g, double bits, int M)
{
    return std::log2(1 + s2 + g * std::exp2(-bits / (M - 1)) * s3);
}

// Integer floor that ignores round-off just below an integer.
int snapped_floor(double x)
{
    double r = std::round(x);
    if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x)))
        return static_cast<int>(r);
    return static_cast<int>(std::floor(x));
}

// Shared rounding: floors of `relaxed` plus `remaining` unit increments
// chosen by the DP on the given per-user gains.
BitAllocation round_with_gains(
    const ClusteredScenario& s, const Eigen::MatrixXd& relaxed,
    const std::function<double(int, int, int)>& gain)
{
    const int N = s.clusters();
    const int K = s.users_per_cluster();
    const int B = s.config.feedback_bits;

    BitAllocation out;
    out.relaxed = relaxed;
    out.bits = Eigen::MatrixXi::Zero(N, K);
    int used = 0;
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
        {
            out.bits(n, k) = std::max(0, snapped_floor(relaxed(n, k)));
            used += out.bits(n, k);
        }
    int remaining = B - used;
    assert(remaining >= 0);
    if (remaining > N * K)
    {
        // Only reachable for degenerate relaxed inputs; spread evenly first.
        int each = remaining / (N * K);
        out.bits.array() += each;
        remaining -= each * N * K;
    }

    std::vector<double> gains(N * K);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
            gains[n + N * k] = gain(n, k, out.bits(n, k));
    KnapsackResult pick = knapsack_unit(gains, remaining);
    for (int i = 0; i < N * K; ++i)
        if (pick.chosen[i])
            out.bits(i % N, i / N) += 1;
    out.total_used = out.bits.sum();
    return out;
}

}  // namespace

PowerAllocation power_from_fractions(const ClusteredScenario& scenario,
                                     const Eigen::VectorXd& phi)
{
    const int K = scenario.users_per_cluster();
    PowerAllocation out;
    out.phi = phi;
    out.per_user.resize(scenario.clusters(), K);
    for (int n = 0; n < scenario.clusters(); ++n)
        out.per_user.row(n).setConstant(phi(n) * scenario.config.power_mw / K);
    out.n_active_clusters = scenario.clusters();
    return out;
}

PowerAllocation equal_power(const ClusteredScenario& scenario)
{
    const int N = scenario.clusters();
    return power_from_fractions(scenario, Eigen::VectorXd::Constant(N, 1.0 / N));
}

//---------------------------------------------------------------------------//
// Bits
//---------------------------------------------------------------------------//

Eigen::MatrixXd bits_closed_form(const ClusteredScenario& scenario,
                                 const Eigen::MatrixXd& power_mw,
                                 const MatrixXb& active_in)
{
    const int N = scenario.clusters();
    const int K = scenario.users_per_cluster();
    const int M = scenario.config.antennas;
    const double B = scenario.config.feedback_bits;
    MatrixXb active = active_in.size() ? active_in : all_active(scenario);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N, K);
    if (N == 1)
        return out;

    Eigen::MatrixXd level(N, K);
    double sum_level = 0;
    int count = 0;
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
        {
            auto [s2, s3] = interference_terms(scenario, power_mw, n, k);
            if (!(s3 > 0))
                throw DomainError("bits_closed_form: user without inter-cluster interference");
            level(n, k) = (M - 1) * (std::log2(s3) - std::log1p(s2) / std::log(2.0));
            if (active(n, k))
            {
                sum_level += level(n, k);
                ++count;
            }
        }
    if (count == 0)
        return out;
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
            if (active(n, k))
                out(n, k) = B / count + level(n, k) - sum_level / count;
    return out;
}

RecurrenceResult bits_nonneg_recurrence(const ClusteredScenario& scenario,
                                        const Eigen::MatrixXd& power_mw)
{
    RecurrenceResult r;
    r.active = all_active(scenario);
    for (;;)
    {
        r.relaxed = bits_closed_form(scenario, power_mw, r.active);
        ++r.rounds;
        bool changed = false;
        for (Eigen::Index i = 0; i < r.relaxed.size(); ++i)
        {
            if (r.active(i) && r.relaxed(i) < 0)
            {
                r.active(i) = false;
                changed = true;
            }
        }
        if (!changed)
            break;
    }
    return r;
}

KnapsackResult knapsack_unit(const std::vector<double>& gains, int count)
{
    const int n = static_cast<int>(gains.size());
    if (count < 0 || count > n)
        throw DomainError("knapsack_unit: count out of range");

    // D(i, j): best total of exactly j items among the first i
    std::vector<double> D((n + 1) * (count + 1), neg_inf);
    auto at = [&](int i, int j) -> double& { return D[i * (count + 1) + j]; };
    at(0, 0) = 0;
    for (int i = 1; i <= n; ++i)
    {
        for (int j = 0; j <= std::min(i, count); ++j)
        {
            double skip = at(i - 1, j);
            double take = j > 0 ? at(i - 1, j - 1) + gains[i - 1] : neg_inf;
            at(i, j) = std::max(skip, take);
        }
    }

    KnapsackResult out;
    out.value = at(n, count);
    out.chosen.assign(n, false);
    for (int i = n, j = count; i > 0; --i)
    {
        // Taking an item only when strictly better keeps earlier items on ties.
        if (j > 0 && at(i - 1, j - 1) + gains[i - 1] > at(i - 1, j))
        {
            out.chosen[i - 1] = true;
            --j;
        }
    }
    return out;
}

double bit_gain(const ClusteredScenario& scenario,
                const Eigen::MatrixXd& power_mw, int n, int k, int bits)
{
    const int M = scenario.config.antennas;
    const double g = quantization_gain(M);
    auto [s2, s3] = interference_terms(scenario, power_mw, n, k);
    return loss_term(s2, s3, g, bits, M) - loss_term(s2, s3, g, bits + 1, M);
}

BitAllocation bits_knapsack_dp(const ClusteredScenario& scenario,
                               const Eigen::MatrixXd& power_mw,
                               const Eigen::MatrixXd& relaxed)
{
    return round_with_gains(scenario, relaxed, [&](int n, int k, int b) {
        return bit_gain(scenario, power_mw, n, k, b);
    });
}

BitAllocation allocate_bits(const ClusteredScenario& scenario,
                            const Eigen::MatrixXd& power_mw)
{
    const int N = scenario.clusters();
    const int K = scenario.users_per_cluster();
    if (N == 1)
    {
        BitAllocation out;
        out.bits = Eigen::MatrixXi::Zero(N, K);
        out.relaxed = Eigen::MatrixXd::Zero(N, K);
        out.notices.push_back(
            "single cluster: no inter-cluster interference, feedback bits unused");
        return out;
    }
    RecurrenceResult rec = bits_nonneg_recurrence(scenario, power_mw);
    BitAllocation out = bits_knapsack_dp(scenario, power_mw, rec.relaxed);
    if (rec.rounds > 1)
    {
        std::ostringstream os;
        os << (rec.active.size() - rec.active.count())
           << " user(s) pinned at 0 bits after " << rec.rounds << " rounds";
        out.notices.push_back(os.str());
    }
    return out;
}

BitAllocation equal_bits(const ClusteredScenario& scenario)
{
    const int N = scenario.clusters();
    const int K = scenario.users_per_cluster();
    const int B = scenario.config.feedback_bits;
    BitAllocation out;
    out.bits = Eigen::MatrixXi::Constant(N, K, B / (N * K));
    for (int i = 0; i < B % (N * K); ++i)
        out.bits(i % N, i / N) += 1;
    out.relaxed = Eigen::MatrixXd::Constant(N, K, double(B) / (N * K));
    out.total_used = out.bits.sum();
    return out;
}

BitAllocation reference_bits(const ClusteredScenario& scenario,
                             const Eigen::MatrixXd& power_mw)
{
    const int N = scenario.clusters();
    const int K = scenario.users_per_cluster();
    const int M = scenario.config.antennas;
    const double B = scenario.config.feedback_bits;
    if (N == 1)
        return equal_bits(scenario);

    Eigen::MatrixXd s3(N, K);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
            s3(n, k) = interference_terms(scenario, power_mw, n, k).second;

    // min sum S3 2^{-B/(M-1)}: B_i = level + (M-1) log2 S3_i, clipped at 0.
    MatrixXb active = all_active(scenario);
    Eigen::MatrixXd relaxed(N, K);
    for (;;)
    {
        double sum_log = 0;
        int count = 0;
        for (Eigen::Index i = 0; i < s3.size(); ++i)
            if (active(i))
            {
                sum_log += std::log2(s3(i));
                ++count;
            }
        bool changed = false;
        for (Eigen::Index i = 0; i < s3.size(); ++i)
        {
            relaxed(i) = active(i)
                             ? B / count + (M - 1) * (std::log2(s3(i)) - sum_log / count)
                             : 0.0;
            if (active(i) && relaxed(i) < 0)
            {
                active(i) = false;
                changed = true;
            }
        }
        if (!changed)
            break;
    }
    return round_with_gains(scenario, relaxed, [&](int n, int k, int b) {
        return s3(n, k)
               * (std::exp2(-double(b) / (M - 1)) - std::exp2(-double(b + 1) / (M - 1)));
    });
}

double relaxed_objective(const ClusteredScenario& scenario,
                         const Eigen::MatrixXd& power_mw,
                         const Eigen::MatrixXd& bits)
{
    const int M = scenario.config.antennas;
    const double g = quantization_gain(M);
    double total = 0;
    for (int n = 0; n < scenario.clusters(); ++n)
        for (int k = 0; k < scenario.users_per_cluster(); ++k)
        {
            auto [s2, s3] = interference_terms(scenario, power_mw, n, k);
            total += loss_term(s2, s3, g, bits(n, k), M);
        }
    return total;
}

//---------------------------------------------------------------------------//
// Power
//---------------------------------------------------------------------------//

namespace {

struct PowerModel
{
    int N, K, M;
    double P;
    double kappa;      // g beta G / P
    Eigen::VectorXd spread;  // sum_{i != n} (1/rho_n1 - 1/rho_i1)
    const Eigen::MatrixXd* cnr;

    explicit PowerModel(const ClusteredScenario& s)
        : N(s.clusters()), K(s.users_per_cluster()), M(s.config.antennas),
          P(s.config.power_mw), cnr(&s.cnr)
    {
        const double NK = double(N) * K;
        const double beta = std::exp2(-s.config.feedback_bits / (NK * (M - 1)));
        const double geo = std::exp(s.cnr.array().log().sum() / NK);
        kappa = quantization_gain(M) * beta * geo / P;
        Eigen::VectorXd inv = s.cnr.col(0).cwiseInverse();
        spread = N * inv.array() - inv.sum();
    }

    double base() const { return double(M) / ((M - 1) * P); }

    Eigen::VectorXd phi(double C) const
    {
        return (1.0 / N - (double(K) / N) * (base() + kappa * C) * spread.array())
            .matrix();
    }

    double log_rhs(double C) const
    {
        Eigen::VectorXd f = phi(C);
        const double NK = double(N) * K;
        double acc = std::log(P) / K;
        for (int p = 0; p < N; ++p)
        {
            acc += std::log1p(-f(p)) / N;
            for (int q = 1; q < K; ++q)
                acc -= std::log(1 / P + (*cnr)(p, q) * q * f(p) / K) / NK;
        }
        return acc;
    }

    double objective(double C) const
    {
        Eigen::VectorXd f = phi(C);
        const double denom = double(M) / (M - 1) + kappa * P * C;
        double total = 0;
        for (int n = 0; n < N; ++n)
            total += std::log2(1 + (*cnr)(n, 0) * f(n) * P / K / denom);
        return total;
    }

    //! Largest C keeping every fraction positive; +inf when unbounded.
    double upper_limit() const
    {
        double hi = std::numeric_limits<double>::infinity();
        for (int n = 0; n < N; ++n)
            if (spread(n) > 0)
                hi = std::min(hi, (1.0 / (K * spread(n)) - base()) / kappa);
        return hi;
    }
};

struct SolveOutcome
{
    bool feasible{false};
    double C{0};
    Eigen::VectorXd phi;
    std::vector<double> roots;
};

bool fractions_valid(const Eigen::VectorXd& phi)
{
    return (phi.array() > 0).all() && (phi.array() <= 1).all();
}

SolveOutcome solve_power(const ClusteredScenario& s, const PowerOptions& opts)
{
    PowerModel model(s);
    SolveOutcome out;
    if (model.N == 1)
    {
        out.feasible = true;
        out.phi = Eigen::VectorXd::Ones(1);
        out.C = 0;
        out.roots = {0};
        return out;
    }

    // Fractions do not depend on C: the equation is an explicit evaluation.
    bool constant = model.kappa == 0 || (model.spread.array().abs() <= 0).all();
    if (constant)
    {
        Eigen::VectorXd phi = model.phi(0);
        if (model.spread.isZero(0))
            phi.setConstant(1.0 / model.N);
        if (!fractions_valid(phi))
            return out;
        out.feasible = true;
        out.phi = phi;
        out.C = std::exp(model.log_rhs(0));
        out.roots = {out.C};
        return out;
    }

    const double hi = model.upper_limit();
    if (!(hi > 0))
        return out;
    // F(C) = log C - log RHS(C): -inf at 0+, finite at the upper limit.
    auto F = [&](double C) { return std::log(C) - model.log_rhs(C); };
    const double top = std::isfinite(hi) ? hi * (1 - 1e-12) : 0;

    std::vector<double> candidates;

    // Damped iteration from the water-filling start.
    {
        double C = std::exp(model.log_rhs(0));
        for (int it = 0; it < opts.max_iterations; ++it)
        {
            if (std::isfinite(hi) && C >= top)
                break;
            double next = (1 - opts.damping) * C
                          + opts.damping * std::exp(model.log_rhs(C));
            if (std::isfinite(hi) && next >= top)
                next = 0.5 * (C + top);
            if (std::fabs(next - C) <= 1e-13 * C)
            {
                C = next;
                if (std::fabs(F(C)) <= 1e-10)
                    candidates.push_back(C);
                break;
            }
            C = next;
        }
    }

    // Sign changes of F on a log grid, each refined by bracketing.
    {
        double upper = std::isfinite(hi) ? top : 0;
        if (!std::isfinite(hi))
        {
            upper = std::exp(model.log_rhs(0));
            while (F(upper) < 0)
                upper *= 4;
        }
        double lower = std::min(upper, std::exp(model.log_rhs(0))) * 1e-3;
        while (F(lower) >= 0 && lower > 1e-300)
            lower *= 1e-3;
        const int G = std::max(2, opts.grid_points);
        const double step = std::log(upper / lower) / (G - 1);
        double c0 = lower, f0 = F(lower);
        for (int i = 1; i < G; ++i)
        {
            double c1 = i == G - 1 ? upper : lower * std::exp(step * i);
            double f1 = F(c1);
            if (f0 == 0)
                candidates.push_back(c0);
            else if ((f0 < 0) != (f1 < 0) && f1 != 0)
            {
                std::uintmax_t iters = 200;
                auto tol = boost::math::tools::eps_tolerance<double>(50);
                auto [a, b] = boost::math::tools::toms748_solve(F, c0, c1, f0, f1,
                                                                tol, iters);
                candidates.push_back(0.5 * (a + b));
            }
            c0 = c1;
            f0 = f1;
        }
        if (f0 == 0)
            candidates.push_back(c0);
    }

    std::sort(candidates.begin(), candidates.end());
    double best = neg_inf;
    for (double C : candidates)
    {
        if (!out.roots.empty() && std::fabs(C - out.roots.back()) <= 1e-9 * C)
            continue;
        Eigen::VectorXd phi = model.phi(C);
        if (!fractions_valid(phi))
            continue;
        if (std::fabs(C - std::exp(model.log_rhs(C))) > 1e-9 * C)
            continue;
        out.roots.push_back(C);
        double obj = model.objective(C);
        if (obj > best)
        {
            best = obj;
            out.feasible = true;
            out.C = C;
            out.phi = phi;
        }
    }
    return out;
}

}  // namespace

Eigen::VectorXd power_fractions(const ClusteredScenario& scenario, double C)
{
    return PowerModel(scenario).phi(C);
}

double power_rhs(const ClusteredScenario& scenario, double C)
{
    return std::exp(PowerModel(scenario).log_rhs(C));
}

double power_objective(const ClusteredScenario& scenario, double C)
{
    return PowerModel(scenario).objective(C);
}

PowerSolution power_fixed_point(const ClusteredScenario& scenario,
                                const PowerOptions& opts)
{
    PowerSolution sol{scenario, {}, {}, {}};
    for (;;)
    {
        SolveOutcome r = solve_power(sol.scenario, opts);
        if (r.feasible)
        {
            sol.power = power_from_fractions(sol.scenario, r.phi);
            sol.power.C_star = r.C;
            sol.roots = r.roots;
            return sol;
        }
        const int N = sol.scenario.clusters();
        std::ostringstream os;
        os << "power cannot support " << N << " clusters";
        if (!opts.allow_cluster_reduction)
            throw Infeasible(os.str() + " and cluster reduction is disabled");
        // N = 1 is always feasible, so N >= 2 here.
        os << "; reduced to " << N - 1;
        sol.notices.push_back(os.str());
        sol.scenario = drop_clusters(sol.scenario, N - 1);
    }
}

JointResult joint_optimize(const ClusteredScenario& scenario,
                           const PowerOptions& opts)
{
    PowerSolution ps = power_fixed_point(scenario, opts);
    JointResult out{ps.scenario, ps.power, {}, ps.notices};
    out.bits = allocate_bits(out.scenario, out.power.per_user);
    out.notices.insert(out.notices.end(), out.bits.notices.begin(),
                       out.bits.notices.end());
    return out;
}

//---------------------------------------------------------------------------//
// Asymptotics
//---------------------------------------------------------------------------//

AsymptoticBits bits_asymptotic(const ClusteredScenario& scenario, double power_mw)
{
    const int N = scenario.clusters();
    const int K = scenario.users_per_cluster();
    const double m1 = scenario.config.antennas - 1;
    const double B = scenario.config.feedback_bits;
    const double NK = double(N) * K;

    double sum_head = 0;
    for (int i = 0; i < N; ++i)
        sum_head += std::log2(scenario.cnr(i, 0));
    double sum_l = 0;
    for (int l = 1; l < K; ++l)
        sum_l += std::log2(double(l));
    const double lp = std::log2(power_mw / NK);

    AsymptoticBits out;
    out.tilde.resize(N, K);
    out.hat.resize(N);
    for (int n = 0; n < N; ++n)
    {
        const double own = std::log2(scenario.cnr(n, 0));
        out.tilde(n, 0) = B / NK + m1 * (1 - 1.0 / K) * lp + m1 * own
                          - m1 / NK * sum_head + m1 / K * sum_l;
        for (int k = 1; k < K; ++k)
            out.tilde(n, k) = B / NK - m1 / K * lp - m1 / NK * sum_head
                              + m1 / K * sum_l - m1 * std::log2(double(k));
        out.hat(n) = B / N + m1 * own - m1 / N * sum_head;
    }
    return out;
}

}  // namespace noma
