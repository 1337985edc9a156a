#pragma once

#include <Eigen/Dense>

#include "noma/system.hpp"

namespace noma {

//! SNR-like quantities of one user; delta = 2^{-B/(M-1)}.
struct LinkCoefficients
{
    double S1{0};
    double S2{0};
    double S3{0};
    double delta{1};
};

enum class BoundKind
{
    lb1,
    lb2,
    ub_loss,
    ideal,
};

namespace numerics {
inline constexpr unsigned none = 0;
//! Closed form lost digits; value came from the quadrature route.
inline constexpr unsigned quadrature_fallback = 1u << 0;
//! Result is negative through cancellation (left unclamped).
inline constexpr unsigned negative_value = 1u << 1;
}  // namespace numerics

struct RateBound
{
    double value{0};
    BoundKind kind{BoundKind::lb1};
    unsigned numerics_flags{numerics::none};
};

//! Gamma((2M-1)/(M-1)).
double quantization_gain(int antennas);

//! E[sin^2 theta] approximation Gamma(M/(M-1)) 2^{-B/(M-1)}.
double mean_sin2_approx(int antennas, double bits);

/*!
 * Coefficients of user (n, k) (0-based) for per-user powers (N x K, mW)
 * and per-user bits (may be fractional).
 */
LinkCoefficients link_coefficients(const ClusteredScenario& scenario,
                                   const Eigen::MatrixXd& power_mw,
                                   const Eigen::MatrixXd& bits,
                                   int n,
                                   int k);

//! Theorem 1 lower bound; k is the 1-based position in the cluster.
RateBound rate_lb1(const LinkCoefficients& c, int antennas, int k);

//! Upper bound on the rate lost to quantization.
RateBound rate_loss_ub(const LinkCoefficients& c, int antennas);

//! Perfect-CSI ergodic rate; k is 1-based.
RateBound rate_ideal(const LinkCoefficients& c, int antennas, int k);

/*!
 * Bit-dependent part of the second lower bound under equal intra-cluster
 * power P_n = phi_n P. n, k are 0-based; bits may be fractional.
 */
RateBound rate_lb2_tilde(const Eigen::VectorXd& phi,
                         const ClusteredScenario& scenario,
                         const Eigen::MatrixXd& bits,
                         int n,
                         int k);

//! Lower limit of the bits-independent LB2 term, -log2(e) * Euler gamma.
double lb2_constant_floor();

/*!
 * Closed form of the LB2 term after substituting the relaxed bit solution
 * (uses the D_{n,k} product form). n, k are 0-based.
 */
double rate_lb2_tilde_substituted(const Eigen::VectorXd& phi,
                                  const ClusteredScenario& scenario,
                                  int n,
                                  int k);

}  // namespace noma
