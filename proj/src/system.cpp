#include "noma/system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "noma/errors.hpp"

namespace noma {

double dbm_to_mw(double dbm)
{
    return std::pow(10.0, dbm / 10.0);
}

double mw_to_dbm(double mw)
{
    return 10.0 * std::log10(mw);
}

double channel_to_noise(double distance_m, double noise_mw, double alpha)
{
    return std::pow(distance_m, -alpha) / noise_mw;
}

void check_zf_feasible(int antennas, int clusters, int users_per_cluster)
{
    if (antennas <= (clusters - 1) * users_per_cluster)
    {
        std::ostringstream os;
        os << "zero-forcing needs M > (N-1)K, got M=" << antennas
           << ", N=" << clusters << ", K=" << users_per_cluster;
        throw ConfigError(os.str());
    }
}

void SystemConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (clusters < 1)
        fail("clusters must be >= 1");
    if (users_per_cluster < 2)
        fail("users_per_cluster must be >= 2");
    if (antennas < 2)
        fail("antennas must be >= 2");
    if (feedback_bits < 0)
        fail("feedback_bits must be >= 0");
    if (!(power_mw > 0) || !std::isfinite(power_mw))
        fail("power must be positive and finite");
    if (!(pathloss_exponent > 0) || !std::isfinite(pathloss_exponent))
        fail("pathloss_exponent must be positive");
    if (distances_m.rows() != clusters || distances_m.cols() != users_per_cluster)
        fail("distances must be an N x K matrix");
    if (noise_mw.rows() != clusters || noise_mw.cols() != users_per_cluster)
        fail("noise must be an N x K matrix");
    if (!(distances_m.array() > 0).all() || !distances_m.allFinite())
        fail("all distances must be positive");
    if (!(noise_mw.array() > 0).all() || !noise_mw.allFinite())
        fail("all noise variances must be positive");
    if (mc_trials < 100)
        fail("mc_trials must be >= 100");
    check_zf_feasible(antennas, clusters, users_per_cluster);
}

std::vector<RawUser> users_from_config(const SystemConfig& config)
{
    std::vector<RawUser> users;
    const auto& d = config.distances_m;
    for (Eigen::Index k = 0; k < d.cols(); ++k)
        for (Eigen::Index n = 0; n < d.rows(); ++n)
            users.push_back({d(n, k), config.noise_mw(n, k)});
    return users;
}

ClusteredScenario cluster_users(const std::vector<RawUser>& users,
                                int clusters,
                                int users_per_cluster,
                                const SystemConfig& base)
{
    const int total = clusters * users_per_cluster;
    if (static_cast<int>(users.size()) != total)
    {
        std::ostringstream os;
        os << "cluster_users: expected " << total << " users, got "
           << users.size();
        throw ConfigError(os.str());
    }

    std::vector<double> cnr(total);
    for (int i = 0; i < total; ++i)
        cnr[i] = channel_to_noise(users[i].distance_m, users[i].noise_mw,
                                  base.pathloss_exponent);
    std::vector<int> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return cnr[a] > cnr[b]; });

    ClusteredScenario out;
    out.config = base;
    out.config.clusters = clusters;
    out.config.users_per_cluster = users_per_cluster;
    out.config.distances_m.resize(clusters, users_per_cluster);
    out.config.noise_mw.resize(clusters, users_per_cluster);
    out.cnr.resize(clusters, users_per_cluster);
    out.user_ids.resize(clusters, users_per_cluster);
    for (int pos = 0; pos < total; ++pos)
    {
        int n = pos % clusters;
        int k = pos / clusters;
        int src = order[pos];
        out.cnr(n, k) = cnr[src];
        out.user_ids(n, k) = src;
        out.config.distances_m(n, k) = users[src].distance_m;
        out.config.noise_mw(n, k) = users[src].noise_mw;
    }
    return out;
}

ClusteredScenario cluster_users(const SystemConfig& config)
{
    return cluster_users(users_from_config(config), config.clusters,
                         config.users_per_cluster, config);
}

bool satisfies_cluster_order(const Eigen::MatrixXd& cnr)
{
    for (Eigen::Index n = 0; n < cnr.rows(); ++n)
    {
        for (Eigen::Index k = 0; k < cnr.cols(); ++k)
        {
            if (n > 0 && cnr(n, k) > cnr(n - 1, k))
                return false;
            if (k > 0 && cnr(n, k) > cnr(n, k - 1))
                return false;
        }
    }
    return true;
}

ClusteredScenario exchange_clustering(const ClusteredScenario& base,
                                      const std::vector<int>& perm,
                                      int column)
{
    const int N = base.clusters();
    if (column < 2 || column > base.users_per_cluster())
        throw ConfigError("exchange_clustering: column must be in [2, K]");
    std::vector<int> check(perm);
    std::sort(check.begin(), check.end());
    bool valid = static_cast<int>(perm.size()) == N;
    for (int i = 0; valid && i < N; ++i)
        valid = check[i] == i;
    if (!valid)
        throw ConfigError("exchange_clustering: perm must permute 0..N-1");

    ClusteredScenario out = base;
    const int k = column - 1;
    for (int n = 0; n < N; ++n)
    {
        out.cnr(n, k) = base.cnr(perm[n], k);
        out.user_ids(n, k) = base.user_ids(perm[n], k);
        out.config.distances_m(n, k) = base.config.distances_m(perm[n], k);
        out.config.noise_mw(n, k) = base.config.noise_mw(perm[n], k);
    }
    return out;
}

ClusteredScenario drop_clusters(const ClusteredScenario& scenario,
                                int new_cluster_count)
{
    const int K = scenario.users_per_cluster();
    if (new_cluster_count < 1 || new_cluster_count > scenario.clusters())
        throw ConfigError("drop_clusters: invalid cluster count");
    std::vector<RawUser> kept;
    std::vector<int> ids;
    for (int k = 0; k < K; ++k)
    {
        for (int n = 0; n < new_cluster_count; ++n)
        {
            kept.push_back({scenario.config.distances_m(n, k),
                            scenario.config.noise_mw(n, k)});
            ids.push_back(scenario.user_ids(n, k));
        }
    }
    ClusteredScenario out
        = cluster_users(kept, new_cluster_count, K, scenario.config);
    for (int n = 0; n < new_cluster_count; ++n)
        for (int k = 0; k < K; ++k)
            out.user_ids(n, k) = ids[out.user_ids(n, k)];
    return out;
}

}  // namespace noma
