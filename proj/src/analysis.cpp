#include "noma/analysis.hpp"

#include <cmath>

#include "noma/errors.hpp"
#include "noma/specfun.hpp"

namespace noma {

namespace sf = specfun;

namespace {

struct ThetaValue
{
    double value;
    bool fallback;
};

// Theta(a, b) with the a = 0 and b = 0 limits and the quadrature route when
// the closed form loses digits.
ThetaValue theta_robust(double a, double b, int M)
{
    if (a == 0)
        return {sf::theta_limit_a0(b, M), false};
    if (b == 0)
        return {sf::theta_limit_b0(a), false};
    try
    {
        return {sf::theta(a, b, M).value, false};
    }
    catch (const sf::PrecisionLoss&)
    {
        return {sf::theta_quadrature(a, b, M).value, true};
    }
}

// log2(e) e^{1/s} E_1(1/s), zero at s = 0.
double log_exp_mean(double s)
{
    if (s <= 0)
        return 0;
    return sf::log2e * sf::exp_int_en_scaled(1, 1 / s);
}

void check_coefficients(const LinkCoefficients& c)
{
    if (!(c.S1 >= 0) || !(c.S2 >= 0) || !(c.S3 >= 0) || c.S2 > c.S1
        || !(c.delta > 0) || c.delta > 1)
        throw DomainError("link coefficients out of range");
}

}  // namespace

double quantization_gain(int antennas)
{
    return std::tgamma((2.0 * antennas - 1) / (antennas - 1));
}

double mean_sin2_approx(int antennas, double bits)
{
    return std::tgamma(double(antennas) / (antennas - 1))
           * std::exp2(-bits / (antennas - 1));
}

LinkCoefficients link_coefficients(const ClusteredScenario& scenario,
                                   const Eigen::MatrixXd& power_mw,
                                   const Eigen::MatrixXd& bits,
                                   int n,
                                   int k)
{
    const int N = scenario.clusters();
    const int M = scenario.config.antennas;
    if (power_mw.rows() != N || power_mw.cols() != scenario.users_per_cluster()
        || bits.rows() != N || bits.cols() != scenario.users_per_cluster())
        throw DomainError("link_coefficients: dimension mismatch");

    const double rho = scenario.cnr(n, k);
    LinkCoefficients c;
    c.S2 = rho * power_mw.row(n).head(k).sum();
    c.S1 = c.S2 + rho * power_mw(n, k);
    c.S3 = rho * (power_mw.sum() - power_mw.row(n).sum());
    c.delta = std::exp2(-bits(n, k) / (M - 1));
    return c;
}

RateBound rate_lb1(const LinkCoefficients& c, int antennas, int k)
{
    check_coefficients(c);
    RateBound r{0, BoundKind::lb1, numerics::none};
    if (c.S1 == 0)
        return r;

    const double b = c.S3 * c.delta / (antennas - 1);
    ThetaValue first = theta_robust(c.S1, b, antennas);
    ThetaValue second{0, false};
    if (k == 1)
        second.value = sf::theta_limit_a0(b, antennas);
    else
        second = theta_robust(c.S2, b, antennas);

    r.value = first.value - second.value;
    if (first.fallback || second.fallback)
        r.numerics_flags |= numerics::quadrature_fallback;
    if (r.value < 0)
        r.numerics_flags |= numerics::negative_value;
    return r;
}

RateBound rate_loss_ub(const LinkCoefficients& c, int antennas)
{
    check_coefficients(c);
    const double g = quantization_gain(antennas);
    double value = std::log2(1 + c.S2 + g * c.delta * c.S3)
                   - log_exp_mean(c.S2);
    return {value, BoundKind::ub_loss, numerics::none};
}

RateBound rate_ideal(const LinkCoefficients& c, int /*antennas*/, int k)
{
    check_coefficients(c);
    double value = log_exp_mean(c.S1);
    if (k > 1)
        value -= log_exp_mean(c.S2);
    return {value, BoundKind::ideal, numerics::none};
}

RateBound rate_lb2_tilde(const Eigen::VectorXd& phi,
                         const ClusteredScenario& scenario,
                         const Eigen::MatrixXd& bits,
                         int n,
                         int k)
{
    const int M = scenario.config.antennas;
    const int K = scenario.users_per_cluster();
    const double P = scenario.config.power_mw;
    if (phi.size() != scenario.clusters() || (phi.array() < 0).any())
        throw DomainError("rate_lb2_tilde: invalid cluster fractions");
    RateBound r{0, BoundKind::lb2, numerics::none};
    if (phi(n) == 0)
        return r;

    const double rho = scenario.cnr(n, k);
    const double Pn = phi(n) * P;
    const double s2 = rho * k * Pn / K;
    const double s3 = rho * (phi.sum() - phi(n)) * P;
    const double delta = std::exp2(-bits(n, k) / (M - 1));
    const double denom = double(M) / (M - 1) + s2
                         + quantization_gain(M) * delta * s3;
    r.value = std::log2(1 + rho * Pn / K / denom);
    return r;
}

double lb2_constant_floor()
{
    return -sf::log2e * sf::euler_gamma;
}

double rate_lb2_tilde_substituted(const Eigen::VectorXd& phi,
                                  const ClusteredScenario& scenario,
                                  int n,
                                  int k)
{
    const int M = scenario.config.antennas;
    const int N = scenario.clusters();
    const int K = scenario.users_per_cluster();
    const double P = scenario.config.power_mw;
    const double B = scenario.config.feedback_bits;
    const double NK = double(N) * K;

    double log_geo = 0;
    double log_prod = 0;
    for (int p = 0; p < N; ++p)
    {
        log_prod += std::log(1 - phi(p)) / N;
        for (int q = 0; q < K; ++q)
        {
            const double rho = scenario.cnr(p, q);
            log_geo += std::log(rho) / NK;
            log_prod -= std::log(1 / P + rho * q * phi(p) / K) / NK;
        }
    }

    const double rho = scenario.cnr(n, k);
    const double s2 = rho * k * phi(n) * P / K;
    const double D = double(M) / (M - 1) + s2
                     + quantization_gain(M) * std::exp2(-B / (NK * (M - 1)))
                           * std::exp(log_geo + log_prod) * (1 + s2);
    return std::log2(1 + rho * phi(n) * P / (K * D));
}

}  // namespace noma
