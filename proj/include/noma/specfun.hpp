#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include "noma/errors.hpp"

/*!
 * \file specfun.hpp
 * Exponential integrals, the 2F1 shape used by the rate bounds, the Psi
 * integral family and the Theta expectation.
 *
 * Functions that multiply exp(large) by E(small) come in "scaled" form so
 * that no intermediate overflows.
 */
namespace noma::specfun {

inline constexpr double infinity = std::numeric_limits<double>::infinity();
inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;
inline constexpr double log2e = 1.44269504088896340735992468100189214;

struct SpecFunResult
{
    double value{0};
    double est_abs_error{0};
};

//! Closed-form Theta whose error estimate exceeded the allowed cancellation.
class PrecisionLoss : public std::runtime_error
{
  public:
    PrecisionLoss(const std::string& what, SpecFunResult partial)
        : std::runtime_error(what), partial_(partial)
    {
    }
    const SpecFunResult& partial() const { return partial_; }

  private:
    SpecFunResult partial_;
};

struct SeriesOptions
{
    double abs_tol{1e-12};
    double rel_tol{1e-14};
    int max_blocks{500};
};

//---------------------------------------------------------------------------//
// Exponential integrals
//---------------------------------------------------------------------------//

//! Ei(x); principal value for x > 0.
double exp_int_ei(double x);

//! e^{x} Ei(-x) for x > 0 (negative, in (-1/x, -1/(x+1)]).
double exp_int_ei_neg_scaled(double x);

//! e^{-x} Ei(x) for x > 0.
double exp_int_ei_pos_scaled(double x);

//! E_q(x) for q >= 1, x > 0.
double exp_int_en(int q, double x);

//! e^{x} E_q(x) for q >= 1, x > 0.
double exp_int_en_scaled(int q, double x);

//---------------------------------------------------------------------------//
// Hypergeometric
//---------------------------------------------------------------------------//

//! 2F1(s, p; p+1; z) for p > 0, z <= 0.
double gauss_2f1_neg(double s, double p, double z);

//---------------------------------------------------------------------------//
// Psi(n,u,v) = int_u^v x^n e^x Ei(-x) dx
//---------------------------------------------------------------------------//

/*!
 * Shared state for Psi over fixed (u, v) and varying n.
 *
 * The exponential integrals and the Poisson double series depend only on
 * (u, v), so Theta evaluates them once and sweeps n.
 */
class PsiKernel
{
  public:
    //! v may be +infinity.
    PsiKernel(double u, double v, const SeriesOptions& opts = {});

    //! Psi(n, u, v); for infinite v requires n <= -2.
    SpecFunResult operator()(int n) const;

    double u() const { return u_; }
    double v() const { return v_; }

  private:
    double u_, v_;
    bool infinite_;
    // e^x Ei(-x), e^{-x} Ei(x) at u and v
    double au_, bu_, av_{0}, bv_{0};
    // sum_m 2 [P(2m+1,u) - P(2m+1,v)] / (2m+1)^2
    SpecFunResult series_;
};

SpecFunResult psi_integral(int n, double u, double v,
                           const SeriesOptions& opts = {});

//---------------------------------------------------------------------------//
// Theta(a,b) = E_Z[ E_{X,Y} log2(1 + aZ X + (aZ + b) Y) ]
//---------------------------------------------------------------------------//

//! Closed form; throws PrecisionLoss when cancellation exceeds max_rel_error.
SpecFunResult theta(double a, double b, int M, double max_rel_error = 1e-6);

//! Independent 2-D quadrature route for the same expectation; a, b >= 0.
SpecFunResult theta_quadrature(double a, double b, int M);

//! Theta(a, 0) = log2(e) e^{1/a} E_1(1/a).
double theta_limit_b0(double a);

//! Theta(0, b) = log2(e) e^{1/b} sum_{q=1}^{M-1} E_q(1/b).
double theta_limit_a0(double b, int M);

//! E[log2(1 + s X)] for X ~ Gamma(m, 1), i.e. log2(e) e^{1/s} sum E_q(1/s).
double expected_log2_gamma(double s, int m);

}  // namespace noma::specfun
