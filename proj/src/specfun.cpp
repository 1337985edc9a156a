#include "noma/specfun.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "noma/compensated_sum.hpp"
#include "noma/quadrature.hpp"

namespace noma::specfun {
namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();
constexpr double pi = 3.14159265358979323846264338327950288;
// Positive root of Ei as a double plus its rounding residual
constexpr double ei_root = 0.3725074107813666;
constexpr double ei_root_lo = 1.3140183414386028e-17;
constexpr double log_max_double = 709.782712893383996843;

double factorial(int n)
{
    double f = 1;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0;
    double c = 1;
    for (int i = 1; i <= k; ++i)
        c = c * (n - k + i) / i;
    return std::round(c);
}

double sign_pow(int k)
{
    return (k % 2 == 0) ? 1.0 : -1.0;
}

//! e^z E_1(z), z > 0.
double e1_scaled(double z)
{
    if (z <= 1)
    {
        // E1 = -gamma - ln z - sum (-z)^k / (k k!)
        double term = 1;
        double sum = 0;
        for (int k = 1; k < 200; ++k)
        {
            term *= -z / k;
            double add = term / k;
            sum += add;
            if (std::fabs(add) < eps * std::fabs(sum))
                break;
        }
        return std::exp(z) * (-euler_gamma - std::log(z) - sum);
    }
    // Modified Lentz on the continued fraction for e^z E_1(z)
    constexpr double tiny = 1e-300;
    double b = z + 1;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i)
    {
        double an = -static_cast<double>(i) * i;
        b += 2;
        d = 1 / (an * d + b);
        c = b + an / c;
        double del = c * d;
        h *= del;
        if (std::fabs(del - 1) < eps)
            break;
    }
    return h;
}

//! Ei(x) for x > 0 without scaling, valid for x <= 40.
double ei_positive_series(double x)
{
    if (std::fabs(x - ei_root) < 0.1)
    {
        // Ei(x) = ln(x/x0) + sum_k (x^k - x0^k) / (k k!)
        // with (x^k - x0^k) = (x - x0) D_k, D_k = x D_{k-1} + x0^{k-1}
        double dx = (x - ei_root) - ei_root_lo;
        double dk = 1;
        double x0pow = 1;
        double kfact = 1;
        double sum = 0;
        for (int k = 1; k < 100; ++k)
        {
            if (k > 1)
            {
                x0pow *= ei_root;
                dk = x * dk + x0pow;
            }
            kfact *= k;
            double add = dk / (k * kfact);
            sum += add;
            if (add < eps * sum)
                break;
        }
        return std::log1p(dx / ei_root) + dx * sum;
    }
    double term = 1;
    double sum = 0;
    for (int k = 1; k < 500; ++k)
    {
        term *= x / k;
        double add = term / k;
        sum += add;
        if (add < eps * sum)
            break;
    }
    return euler_gamma + std::log(x) + sum;
}

//! e^{-x} Ei(x) by the asymptotic series, x > 40.
double ei_positive_asymptotic_scaled(double x)
{
    double term = 1;
    double sum = 1;
    for (int k = 1; k < 100; ++k)
    {
        double next = term * k / x;
        if (next > term)
            break;
        term = next;
        sum += term;
        if (term < eps * sum)
            break;
    }
    return sum / x;
}

//! e^x E_q(x), q >= 2, x > 0.
double en_scaled_impl(int q, double x)
{
    if (x > 1)
    {
        constexpr double tiny = 1e-300;
        double b = x + q;
        double c = 1 / tiny;
        double d = 1 / b;
        double h = d;
        for (int i = 1; i < 10000; ++i)
        {
            double an = -static_cast<double>(i) * (q - 1 + i);
            b += 2;
            d = 1 / (an * d + b);
            c = b + an / c;
            double del = c * d;
            h *= del;
            if (std::fabs(del - 1) < eps)
                break;
        }
        return h;
    }
    double ans = 1.0 / (q - 1);
    double fact = 1;
    for (int i = 1; i < 500; ++i)
    {
        fact *= -x / i;
        double del;
        if (i != q - 1)
        {
            del = -fact / (i - q + 1);
        }
        else
        {
            double psi = -euler_gamma;
            for (int ii = 1; ii <= q - 1; ++ii)
                psi += 1.0 / ii;
            del = fact * (-std::log(x) + psi);
        }
        ans += del;
        if (std::fabs(del) < std::fabs(ans) * eps)
            break;
    }
    return std::exp(x) * ans;
}

//---------------------------------------------------------------------------//
// Poisson tail P(Pois(x) >= 2m+1) = regularized lower gamma P(2m+1, x)
//---------------------------------------------------------------------------//

class OddPoissonTail
{
  public:
    explicit OddPoissonTail(double x) : x_(x), logx_(std::log(x)) {}

    //! Tail at the next odd order 2m+1 (m = 0, 1, ...).
    double next()
    {
        int a = 2 * m_ + 1;
        // Keep the running CDF up to l = 2m.
        while (l_ <= a - 1)
        {
            cdf_ += pmf(l_);
            ++l_;
        }
        ++m_;
        if (a <= x_)
            return std::fmax(0.0, 1.0 - cdf_);
        // Direct tail sum: pmf(a) (1 + x/(a+1) + x^2/((a+1)(a+2)) + ...)
        double lead = pmf(a);
        if (lead == 0)
            return 0;
        double term = 1;
        double sum = 1;
        for (int l = a + 1; l < a + 10000; ++l)
        {
            term *= x_ / l;
            sum += term;
            if (term < eps * sum)
                break;
        }
        return lead * sum;
    }

  private:
    double pmf(int l) const
    {
        return std::exp(-x_ + l * logx_ - std::lgamma(l + 1.0));
    }

    double x_;
    double logx_;
    int m_{0};
    int l_{0};
    double cdf_{0};
};

/*!
 * sum_m 2 [P(2m+1,u) - P(2m+1,v)] / (2m+1)^2, v possibly infinite.
 *
 * For infinite v this is the tail series minus pi^2/4.
 */
SpecFunResult poisson_double_series(double u, double v, const SeriesOptions& opts)
{
    bool infinite = std::isinf(v);
    double xmax = infinite ? u : v;
    OddPoissonTail tu(u);
    OddPoissonTail tv(infinite ? 1.0 : v);
    CompensatedSum sum;
    double tail_bound = 0;
    bool converged = false;
    for (int m = 0; m < opts.max_blocks; ++m)
    {
        double odd = 2.0 * m + 1;
        double pu = tu.next();
        double pv = infinite ? 0.0 : tv.next();
        double block = 2 * (pu - pv) / (odd * odd);
        sum.add(block);
        if (odd > xmax + 1)
        {
            // Tail ratio of successive blocks is at most x^2/((2m+2)(2m+3))
            double r = xmax * xmax / ((odd + 1) * (odd + 2));
            if (r < 1)
            {
                tail_bound = std::fabs(block) * r / (1 - r);
                double target = std::fmin(opts.abs_tol,
                                          opts.rel_tol * std::fabs(sum.value()));
                if (tail_bound <= target || tail_bound == 0)
                {
                    converged = true;
                    break;
                }
            }
        }
    }
    if (!converged)
    {
        // Crude remaining bound: |P_u - P_v| <= 1 per block
        double odd = 2.0 * opts.max_blocks + 1;
        tail_bound = std::fmax(tail_bound, 1.0 / odd);
    }
    SpecFunResult res;
    res.value = sum.value();
    res.est_abs_error = sum.error_bound(8) + tail_bound;
    if (infinite)
    {
        res.value -= pi * pi / 4;
        res.est_abs_error += 2 * eps;
    }
    return res;
}

}  // namespace

//---------------------------------------------------------------------------//
// Exponential integrals
//---------------------------------------------------------------------------//

double exp_int_ei_neg_scaled(double x)
{
    if (!(x > 0) || std::isinf(x))
        throw DomainError("exp_int_ei_neg_scaled: x must be finite and > 0");
    return -e1_scaled(x);
}

double exp_int_ei_pos_scaled(double x)
{
    if (!(x > 0) || std::isinf(x))
        throw DomainError("exp_int_ei_pos_scaled: x must be finite and > 0");
    if (x > 40)
        return ei_positive_asymptotic_scaled(x);
    return std::exp(-x) * ei_positive_series(x);
}

double exp_int_ei(double x)
{
    if (x == 0 || std::isnan(x) || std::isinf(x))
        throw DomainError("exp_int_ei: x must be finite and nonzero");
    if (x < 0)
        return -std::exp(x) * e1_scaled(-x);
    if (x <= 40)
        return ei_positive_series(x);
    double scaled = ei_positive_asymptotic_scaled(x);
    if (x + std::log(scaled) >= log_max_double)
        throw OverflowError("exp_int_ei: result overflows double");
    return std::exp(x) * scaled;
}

double exp_int_en_scaled(int q, double x)
{
    if (q < 1)
        throw DomainError("exp_int_en: order q must be >= 1");
    if (!(x > 0) || std::isinf(x))
        throw DomainError("exp_int_en: x must be finite and > 0");
    if (q == 1)
        return e1_scaled(x);
    return en_scaled_impl(q, x);
}

double exp_int_en(int q, double x)
{
    return std::exp(-x) * exp_int_en_scaled(q, x);
}

//---------------------------------------------------------------------------//
// 2F1(s, p; p+1; z), z <= 0
//---------------------------------------------------------------------------//

namespace {

//! Pfaff form: (1-z)^{-s} sum_k (s)_k / (p+1)_k w^k, w = z/(z-1) in [0, 1/2].
double hyp2f1_pfaff(double s, double p, double z)
{
    double w = z / (z - 1);
    double term = 1;
    double sum = 1;
    for (int k = 0; k < 2000; ++k)
    {
        term *= (s + k) / (p + 1 + k) * w;
        sum += term;
        if (std::fabs(term) < eps * std::fabs(sum) && k > std::fabs(s))
            break;
        if (term == 0)
            break;
    }
    return std::pow(1 - z, -s) * sum;
}

}  // namespace

double gauss_2f1_neg(double s, double p, double z)
{
    if (z > 0 || std::isnan(z))
        throw DomainError("gauss_2f1_neg: z must be <= 0");
    if (!(p > 0))
        throw DomainError("gauss_2f1_neg: p must be > 0");
    if (z == 0)
        return 1;
    if (z >= -1)
        return hyp2f1_pfaff(s, p, z);

    // p int_0^1 t^{p-1} (1 + x t)^{-s} dt split at t0 = 1/x; the first
    // piece rescales to 2F1(.; -1), the second is smooth in log t.
    double x = -z;
    double t0 = 1 / x;
    double head = std::pow(t0, p) * hyp2f1_pfaff(s, p, -1.0);
    auto integrand = [s, p, x](double y) {
        return p * std::exp(p * y - s * std::log1p(x * std::exp(y)));
    };
    quad::Options opts;
    opts.abs_tol = 0;
    opts.rel_tol = 1e-14;
    auto rest = quad::gauss_kronrod(integrand, std::log(t0), 0.0, opts);
    return head + rest.value;
}

//---------------------------------------------------------------------------//
// Psi
//---------------------------------------------------------------------------//

PsiKernel::PsiKernel(double u, double v, const SeriesOptions& opts)
    : u_(u), v_(v), infinite_(std::isinf(v))
{
    if (!(u > 0) || std::isinf(u))
        throw DomainError("psi_integral: u must be finite and > 0");
    if (!(v >= u))
        throw DomainError("psi_integral: v must be >= u");
    au_ = exp_int_ei_neg_scaled(u);
    bu_ = exp_int_ei_pos_scaled(u);
    if (!infinite_)
    {
        av_ = exp_int_ei_neg_scaled(v);
        bv_ = exp_int_ei_pos_scaled(v);
    }
    if (v > u)
        series_ = poisson_double_series(u, v, opts);
}

SpecFunResult PsiKernel::operator()(int n) const
{
    if (infinite_ && n > -2)
        throw DomainError("psi_integral: v = infinity requires n <= -2");
    if (u_ == v_)
        return {};

    const double u = u_;
    const double v = v_;
    CompensatedSum sum;
    double extra_err = 0;

    if (n > 0)
    {
        double nfact = factorial(n);
        for (int k = 0; k <= n; ++k)
        {
            double c = sign_pow(k) * nfact / factorial(n - k);
            sum.add(c * std::pow(v, n - k) * av_);
            sum.add(-c * std::pow(u, n - k) * au_);
        }
        for (int k = 0; k < n; ++k)
        {
            double c = sign_pow(k) * nfact / ((n - k) * factorial(n - k));
            sum.add(-c * std::pow(v, n - k));
            sum.add(c * std::pow(u, n - k));
        }
        sum.add(-sign_pow(n) * nfact * std::log(v / u));
    }
    else if (n == 0)
    {
        sum.add(av_);
        sum.add(-au_);
        sum.add(-std::log(v / u));
    }
    else
    {
        const int m = -n;
        const double fact = factorial(m - 1);
        for (int k = 1; k <= m - 1; ++k)
        {
            double c = factorial(m - k - 1) / fact;
            sum.add(c * std::pow(u, n + k) * au_);
            if (!infinite_)
                sum.add(-c * std::pow(v, n + k) * av_);
        }
        sum.add(-au_ * bu_ / fact);
        if (!infinite_)
            sum.add(av_ * bv_ / fact);
        for (int k = 1; k <= m - 1; ++k)
        {
            double c = factorial(m - k - 1) / (fact * (n + k));
            sum.add(-c * std::pow(u, n + k));
            if (!infinite_)
                sum.add(c * std::pow(v, n + k));
        }
        double eiu = au_ * std::exp(-u);
        sum.add(eiu * eiu / (2 * fact));
        if (!infinite_)
        {
            double eiv = av_ * std::exp(-v);
            sum.add(-eiv * eiv / (2 * fact));
        }
        sum.add(series_.value / fact);
        extra_err = series_.est_abs_error / fact;
    }

    SpecFunResult res;
    res.value = sum.value();
    res.est_abs_error = sum.error_bound(16) + extra_err;
    if (!std::isfinite(res.value) || !std::isfinite(res.est_abs_error))
        res.est_abs_error = infinity;
    return res;
}

SpecFunResult psi_integral(int n, double u, double v, const SeriesOptions& opts)
{
    if (std::isinf(v) && n > -2)
        throw DomainError("psi_integral: v = infinity requires n <= -2");
    if (u == v && u > 0 && std::isfinite(u))
        return {};
    PsiKernel kernel(u, v, opts);
    return kernel(n);
}

//---------------------------------------------------------------------------//
// Theta
//---------------------------------------------------------------------------//

double expected_log2_gamma(double s, int m)
{
    if (s < 0)
        throw DomainError("expected_log2_gamma: s must be >= 0");
    if (s == 0)
        return 0;
    double x = 1 / s;
    CompensatedSum sum;
    for (int q = 1; q <= m; ++q)
        sum.add(exp_int_en_scaled(q, x));
    return log2e * sum.value();
}

double theta_limit_b0(double a)
{
    return expected_log2_gamma(a, 1);
}

double theta_limit_a0(double b, int M)
{
    return expected_log2_gamma(b, M - 1);
}

SpecFunResult theta(double a, double b, int M, double max_rel_error)
{
    if (M < 2)
        throw DomainError("theta: M must be >= 2");
    if (!(a > 0) || !(b > 0) || std::isinf(a) || std::isinf(b))
        throw DomainError("theta: a and b must be finite and > 0");

    CompensatedSum total;
    double err = 0;
    auto add = [&](double coef, const SpecFunResult& r) {
        total.add(coef * r.value);
        err += std::fabs(coef) * r.est_abs_error;
    };

    // I1 term
    {
        PsiKernel psi_inf(1 / a, infinity);
        double pre = sign_pow(M) * (M - 1) * std::pow(b, -(M - 1));
        for (int t = 0; t <= M - 2; ++t)
        {
            double c = binomial(M - 2, t) * sign_pow(t) * std::pow(a, -t - 1);
            add(pre * c, psi_inf(-M - 1 - t));
        }
    }

    // I2 terms
    {
        PsiKernel psi_ab(1 / (a + b), 1 / b);
        for (int p = 1; p <= M - 1; ++p)
        {
            for (int q = 1; q <= M - p; ++q)
            {
                double pre = sign_pow(p + q + 1) * (M - 1)
                             / (factorial(q - 1) * std::pow(b, p));
                for (int r = 0; r <= M - 2; ++r)
                {
                    for (int t = 0; t <= p - 1 + r; ++t)
                    {
                        double c = binomial(M - 2, r) * binomial(p - 1 + r, t)
                                   * sign_pow(p - 1 - t)
                                   * std::pow(b, p - 1 + r - t)
                                   * std::pow(a, -r - 1);
                        add(pre * c, psi_ab(q - 4 - t));
                    }
                }
            }
        }
    }

    // I3 terms
    for (int p = 1; p <= M - 1; ++p)
    {
        for (int q = 2; q <= M - p; ++q)
        {
            for (int s = 0; s <= q - 2; ++s)
            {
                double pre = sign_pow(p + s - 1) * factorial(q - s - 2) * (M - 1)
                             / (factorial(q - 1) * std::pow(b, p));
                for (int t = 0; t <= M - 2; ++t)
                {
                    double f = gauss_2f1_neg(s - 1, p + t, -a / b);
                    double c = binomial(M - 2, t) * sign_pow(t)
                               * std::pow(a, p - 1) * std::pow(b, 1 - s)
                               / (p + t);
                    // 2F1 is accurate to ~1e-13 relative
                    add(pre * c, {f, 1e-13 * std::fabs(f)});
                }
            }
        }
    }

    SpecFunResult res;
    res.value = log2e * total.value();
    res.est_abs_error = log2e * (err + total.error_bound(16));
    if (!std::isfinite(res.value) || !std::isfinite(res.est_abs_error))
    {
        res.est_abs_error = infinity;
        throw PrecisionLoss("theta: closed form overflowed", res);
    }
    if (res.est_abs_error > max_rel_error * std::fabs(res.value))
        throw PrecisionLoss("theta: closed form lost precision", res);
    return res;
}

SpecFunResult theta_quadrature(double a, double b, int M)
{
    if (M < 2)
        throw DomainError("theta_quadrature: M must be >= 2");
    if (a < 0 || b < 0 || std::isinf(a) || std::isinf(b))
        throw DomainError("theta_quadrature: a and b must be finite and >= 0");
    if (a == 0)
        return {theta_limit_a0(b, M), 0};
    if (b == 0)
        return {theta_limit_b0(a), 0};

    // Theta = E[g(aZ + bV)], g(t) = E log2(1 + t G), G ~ Gamma(M),
    // Z ~ Beta(1, M-1), V ~ Beta(M-1, 1)
    const double m1 = M - 1;
    auto g = [M](double t) { return expected_log2_gamma(t, M); };
    quad::Options inner_opts;
    inner_opts.abs_tol = 1e-15;
    inner_opts.rel_tol = 1e-11;
    double inner_err = 0;
    auto inner = [&](double v) {
        double wv = m1 * std::pow(v, M - 2);
        if (wv == 0)
            return 0.0;
        auto fz = [&](double z) {
            return m1 * std::pow(1 - z, M - 2) * g(a * z + b * v);
        };
        auto r = quad::gauss_kronrod(fz, 0.0, 1.0, inner_opts);
        inner_err = std::fmax(inner_err, r.abs_error);
        return wv * r.value;
    };
    quad::Options outer_opts;
    outer_opts.abs_tol = 1e-14;
    outer_opts.rel_tol = 1e-10;
    auto outer = quad::gauss_kronrod(inner, 0.0, 1.0, outer_opts);
    return {outer.value, outer.abs_error + m1 * inner_err};
}

}  // namespace noma::specfun
