#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace noma {

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

//! Large-scale channel-to-noise ratio d^{-alpha} / sigma^2.
double channel_to_noise(double distance_m, double noise_mw, double alpha);

/*!
 * Scenario parameters. Per-user matrices are N x K (row = cluster, column =
 * position within the cluster); the flat user index is i = n + N k.
 */
struct SystemConfig
{
    int antennas{6};
    int clusters{3};
    int users_per_cluster{2};
    int feedback_bits{0};
    double power_mw{1};
    double pathloss_exponent{4};
    Eigen::MatrixXd distances_m;
    Eigen::MatrixXd noise_mw;
    long mc_trials{200000};
    std::uint64_t rng_seed{1};

    int user_count() const { return clusters * users_per_cluster; }

    //! Throws ConfigError on any violated invariant.
    void validate() const;
};

//! Throws ConfigError unless M > (N-1) K.
void check_zf_feasible(int antennas, int clusters, int users_per_cluster);

struct RawUser
{
    double distance_m;
    double noise_mw;
};

//! Users of a config in flat index order (column-major over N x K).
std::vector<RawUser> users_from_config(const SystemConfig& config);

struct ClusteredScenario
{
    SystemConfig config;
    //! Sorted d^{-alpha} / sigma^2, N x K
    Eigen::MatrixXd cnr;
    //! Flat index of each user in the raw list handed to cluster_users
    Eigen::MatrixXi user_ids;

    int clusters() const { return static_cast<int>(cnr.rows()); }
    int users_per_cluster() const { return static_cast<int>(cnr.cols()); }
};

/*!
 * Assign N K users to clusters so that each column is nonincreasing down
 * the clusters and each row is nonincreasing along the cluster.
 *
 * Users are sorted by d^{-alpha}/sigma^2 (ties by index) and filled
 * column-major, so cluster heads are the N strongest users.
 */
ClusteredScenario cluster_users(const std::vector<RawUser>& users,
                                int clusters,
                                int users_per_cluster,
                                const SystemConfig& base);

//! Cluster the users listed in a config's matrices.
ClusteredScenario cluster_users(const SystemConfig& config);

//! Both ordering constraints hold for the given N x K matrix.
bool satisfies_cluster_order(const Eigen::MatrixXd& cnr);

/*!
 * Permute column k (1-based, k >= 2) across clusters: new row n takes the
 * user from row perm[n] (0-based). Ordering is deliberately not enforced.
 */
ClusteredScenario exchange_clustering(const ClusteredScenario& base,
                                      const std::vector<int>& perm,
                                      int column);

//! Reduced scenario without the given clusters, re-clustered by cnr.
ClusteredScenario drop_clusters(const ClusteredScenario& scenario,
                                int new_cluster_count);

}  // namespace noma
