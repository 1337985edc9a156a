#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noma/alloc.hpp"
#include "noma/channel.hpp"
#include "noma/system.hpp"

namespace noma {

struct SimOptions
{
    long trials{200000};
    std::uint64_t seed{1};
    QuantizerMode mode{QuantizerMode::rvq};
    //! 0 selects NOMA_THREADS or the hardware concurrency
    int threads{0};
    //! Keep the per-trial sum rate (for paired comparisons)
    bool keep_per_trial{false};
};

struct SimResult
{
    Eigen::MatrixXd per_user_rate;
    Eigen::MatrixXd per_user_se;
    double esr{0};
    double esr_se{0};
    long trials{0};
    std::uint64_t seed{0};
    std::uint64_t config_hash{0};
    std::vector<double> per_trial_esr;
};

//! Thread count from NOMA_THREADS, else hardware concurrency (at least 1).
int default_thread_count();

//! Per-user SINRs of one realization under the given powers (N x K, mW).
Eigen::MatrixXd sinr(const ClusteredScenario& scenario,
                     const ChannelRealization& realization,
                     const Eigen::MatrixXd& power_mw);

/*!
 * Ergodic rates under perfect SIC. Trial t draws from stream t of the seed,
 * so results do not depend on the thread count and runs that differ only
 * in power or bits see the same fading (common random numbers).
 */
SimResult simulate(const ClusteredScenario& scenario,
                   const Eigen::MatrixXd& power_mw,
                   const Eigen::MatrixXi& bits,
                   const SimOptions& opts);

//! simulate with sin^2 fixed at 2^{-B/(M-1)} for every realization.
SimResult simulate_alt_csi_model(const ClusteredScenario& scenario,
                                 const Eigen::MatrixXd& power_mw,
                                 const Eigen::MatrixXi& bits,
                                 SimOptions opts);

/*!
 * Orthogonal baseline: K equal time slots, slot k serves column k of all
 * clusters with zero forcing over their own CDIs and power P / N each.
 * Rates include the 1/K time share.
 */
SimResult simulate_oma(const ClusteredScenario& scenario,
                       const Eigen::MatrixXi& bits,
                       const SimOptions& opts);

//! SE of the mean per-trial difference of two runs kept with keep_per_trial.
double paired_se(const SimResult& a, const SimResult& b);

/*!
 * Decoding check of SIC: for each cluster and pair k < j, the mean rate at
 * which user k decodes user j's message against user j's own rate.
 */
struct SicEntry
{
    int cluster;
    int decoder;  // 0-based position k
    int target;   // 0-based position j > k
    double decoder_rate;
    double target_rate;
    double diff_se;
};

std::vector<SicEntry> sic_decodability(const ClusteredScenario& scenario,
                                       const Eigen::MatrixXd& power_mw,
                                       const Eigen::MatrixXi& bits,
                                       const SimOptions& opts);

struct ClusteringOutcome
{
    std::vector<int> perm;  // 0-based
    double esr{0};
    double esr_se{0};
    //! ESR(identity) - ESR(perm) and its paired standard error
    double loss{0};
    double loss_se{0};
    int active_clusters{0};
};

/*!
 * Jointly optimize and simulate each column-2 permutation of the base
 * clustering. The identity permutation is always evaluated first.
 */
std::vector<ClusteringOutcome> clustering_experiment(
    const ClusteredScenario& base,
    const std::vector<std::vector<int>>& perms,
    const SimOptions& opts,
    const PowerOptions& power_opts = {});

}  // namespace noma
