#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noma/system.hpp"

namespace noma {

using MatrixXb = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct BitAllocation
{
    //! Integer bits per user, N x K
    Eigen::MatrixXi bits;
    //! Pre-rounding real bits, N x K
    Eigen::MatrixXd relaxed;
    int total_used{0};
    std::vector<std::string> notices;
};

struct PowerAllocation
{
    Eigen::VectorXd phi;
    //! phi_n P / K for every user, N x K (mW)
    Eigen::MatrixXd per_user;
    double C_star{0};
    int n_active_clusters{0};
};

//! phi -> per-user powers with equal split inside each cluster.
PowerAllocation power_from_fractions(const ClusteredScenario& scenario,
                                     const Eigen::VectorXd& phi);

PowerAllocation equal_power(const ClusteredScenario& scenario);

//---------------------------------------------------------------------------//
// Feedback bits
//---------------------------------------------------------------------------//

/*!
 * Relaxed optimum of the product objective over the active users (all users
 * when active is empty); inactive users get 0. Sums to B over the active set.
 * With a single cluster there is no inter-cluster interference and the
 * result is all zeros.
 */
Eigen::MatrixXd bits_closed_form(const ClusteredScenario& scenario,
                                 const Eigen::MatrixXd& power_mw,
                                 const MatrixXb& active = {});

struct RecurrenceResult
{
    Eigen::MatrixXd relaxed;
    MatrixXb active;
    int rounds{0};
};

//! Re-solve with negative users pinned at 0 until all remaining are >= 0.
RecurrenceResult bits_nonneg_recurrence(const ClusteredScenario& scenario,
                                        const Eigen::MatrixXd& power_mw);

struct KnapsackResult
{
    std::vector<bool> chosen;
    double value{0};
};

/*!
 * Pick exactly `count` unit-weight items maximizing the summed gain.
 * Ties go to the lower index.
 */
KnapsackResult knapsack_unit(const std::vector<double>& gains, int count);

//! Algorithm-1 rounding of relaxed bits with loss-bound gains.
BitAllocation bits_knapsack_dp(const ClusteredScenario& scenario,
                               const Eigen::MatrixXd& power_mw,
                               const Eigen::MatrixXd& relaxed);

//! Closed form, recurrence and DP rounding in sequence.
BitAllocation allocate_bits(const ClusteredScenario& scenario,
                            const Eigen::MatrixXd& power_mw);

//! floor(B / NK) each, remainder to the lowest flat indices.
BitAllocation equal_bits(const ClusteredScenario& scenario);

/*!
 * Reference allocator minimizing sum S3 2^{-B/(M-1)} (nonnegative relaxed
 * solution, then DP rounding on that objective).
 */
BitAllocation reference_bits(const ClusteredScenario& scenario,
                             const Eigen::MatrixXd& power_mw);

//! sum_{n,k} log2(1 + S2 + g 2^{-B/(M-1)} S3) for real-valued bits.
double relaxed_objective(const ClusteredScenario& scenario,
                         const Eigen::MatrixXd& power_mw,
                         const Eigen::MatrixXd& bits);

//! Per-user loss bound gain of one extra bit on top of `bits`.
double bit_gain(const ClusteredScenario& scenario,
                const Eigen::MatrixXd& power_mw, int n, int k, int bits);

//---------------------------------------------------------------------------//
// Power
//---------------------------------------------------------------------------//

struct PowerOptions
{
    double damping{0.5};
    int max_iterations{200};
    int grid_points{64};
    bool allow_cluster_reduction{true};
};

//! Cluster fractions as a function of the scalar C.
Eigen::VectorXd power_fractions(const ClusteredScenario& scenario, double C);

//! Right-hand side of the scalar fixed-point equation C = RHS(C).
double power_rhs(const ClusteredScenario& scenario, double C);

//! Sum over clusters of the head-user LB2 term at the root C.
double power_objective(const ClusteredScenario& scenario, double C);

struct PowerSolution
{
    ClusteredScenario scenario;
    PowerAllocation power;
    std::vector<double> roots;
    std::vector<std::string> notices;
};

/*!
 * Fixed-point power allocation. When no root gives nonnegative fractions the
 * weakest cluster is dropped (users re-clustered) and the solve repeats;
 * Infeasible is thrown when reduction is disabled.
 */
PowerSolution power_fixed_point(const ClusteredScenario& scenario,
                                const PowerOptions& opts = {});

struct JointResult
{
    ClusteredScenario scenario;
    PowerAllocation power;
    BitAllocation bits;
    std::vector<std::string> notices;
};

JointResult joint_optimize(const ClusteredScenario& scenario,
                           const PowerOptions& opts = {});

//---------------------------------------------------------------------------//
// High-power asymptotics
//---------------------------------------------------------------------------//

struct AsymptoticBits
{
    //! Growth-regime approximation, N x K
    Eigen::MatrixXd tilde;
    //! Saturation cap of the head users, N
    Eigen::VectorXd hat;
};

AsymptoticBits bits_asymptotic(const ClusteredScenario& scenario, double power_mw);

}  // namespace noma
