#include "noma/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <thread>

#include "noma/config_io.hpp"
#include "noma/errors.hpp"

namespace noma {

namespace {

constexpr long chunk_size = 1024;

// Running mean and centred second moment of D quantities.
struct Moments
{
    long count{0};
    std::vector<double> mean;
    std::vector<double> m2;

    explicit Moments(std::size_t dims = 0) : mean(dims, 0), m2(dims, 0) {}

    void add(const std::vector<double>& x)
    {
        ++count;
        for (std::size_t d = 0; d < x.size(); ++d)
        {
            double delta = x[d] - mean[d];
            mean[d] += delta / count;
            m2[d] += delta * (x[d] - mean[d]);
        }
    }

    void merge(const Moments& o)
    {
        if (o.count == 0)
            return;
        const double total = double(count) + o.count;
        for (std::size_t d = 0; d < mean.size(); ++d)
        {
            double delta = o.mean[d] - mean[d];
            mean[d] += delta * o.count / total;
            m2[d] += o.m2[d] + delta * delta * double(count) * o.count / total;
        }
        count += o.count;
    }

    double se(std::size_t d) const
    {
        if (count < 2)
            return 0;
        return std::sqrt(m2[d] / (count - 1) / count);
    }
};

// kernel(trial, out) fills `dims` values for one trial.
using Kernel = std::function<void(long, std::vector<double>&)>;

Moments run_trials(long trials, int threads, std::size_t dims,
                   const Kernel& kernel, std::vector<double>* per_trial,
                   std::size_t per_trial_dim)
{
    const long chunks = (trials + chunk_size - 1) / chunk_size;
    std::vector<Moments> partial(chunks, Moments(dims));
    if (per_trial)
        per_trial->assign(trials, 0);

    std::atomic<long> next{0};
    auto worker = [&]() {
        std::vector<double> x(dims);
        for (long c; (c = next.fetch_add(1)) < chunks;)
        {
            const long end = std::min(trials, (c + 1) * chunk_size);
            for (long t = c * chunk_size; t < end; ++t)
            {
                kernel(t, x);
                partial[c].add(x);
                if (per_trial)
                    (*per_trial)[t] = x[per_trial_dim];
            }
        }
    };

    threads = std::max(1, std::min<int>(threads, chunks));
    if (threads == 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    // Fixed merge order keeps results bit-identical for any thread count.
    Moments total(dims);
    for (const auto& p : partial)
        total.merge(p);
    return total;
}

void check_trials(long trials)
{
    if (trials < 100)
        throw ConfigError("Monte Carlo needs at least 100 trials");
}

int resolve_threads(int requested)
{
    return requested > 0 ? requested : default_thread_count();
}

void check_shapes(const ClusteredScenario& s, const Eigen::MatrixXd& power,
                  const Eigen::MatrixXi& bits)
{
    const int N = s.clusters();
    const int K = s.users_per_cluster();
    if (power.rows() != N || power.cols() != K || bits.rows() != N
        || bits.cols() != K)
        throw ConfigError("power and bits must be clusters x users_per_cluster");
    if ((bits.array() < 0).any())
        throw ConfigError("bits must be nonnegative");
    if ((power.array() < 0).any())
        throw ConfigError("powers must be nonnegative");
}

// Inter-cluster interference factor |h|^2 sin^2 sum_{m != n} |e w_m|^2 P_m.
double leakage(const ChannelRealization& r, int i, int n,
               const Eigen::VectorXd& cluster_power)
{
    double acc = 0;
    for (int m = 0; m < r.clusters; ++m)
    {
        if (m == n)
            continue;
        acc += std::norm((r.e_tilde[i].transpose() * r.w[m]).value())
               * cluster_power(m);
    }
    return r.h[i].squaredNorm() * r.sin2[i] * acc;
}

SimResult finish(const ClusteredScenario& s, const SimOptions& opts,
                 const Moments& m, std::vector<double>&& per_trial)
{
    const int N = s.clusters();
    const int K = s.users_per_cluster();
    SimResult out;
    out.per_user_rate.resize(N, K);
    out.per_user_se.resize(N, K);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
        {
            out.per_user_rate(n, k) = m.mean[n + N * k];
            out.per_user_se(n, k) = m.se(n + N * k);
        }
    out.esr = m.mean[N * K];
    out.esr_se = m.se(N * K);
    out.trials = opts.trials;
    out.seed = opts.seed;
    out.config_hash = config_digest(s.config);
    out.per_trial_esr = std::move(per_trial);
    return out;
}

}  // namespace

int default_thread_count()
{
    if (const char* env = std::getenv("NOMA_THREADS"))
    {
        int v = std::atoi(env);
        if (v > 0)
            return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Eigen::MatrixXd sinr(const ClusteredScenario& s, const ChannelRealization& r,
                     const Eigen::MatrixXd& power)
{
    const int N = s.clusters();
    const int K = s.users_per_cluster();
    Eigen::VectorXd cluster_power = power.rowwise().sum();
    Eigen::MatrixXd out(N, K);
    for (int n = 0; n < N; ++n)
    {
        for (int k = 0; k < K; ++k)
        {
            const int i = r.index(n, k);
            const double rho = s.cnr(n, k);
            const double gain = std::norm((r.h[i].transpose() * r.w[n]).value());
            const double intra = power.row(n).head(k).sum();
            out(n, k) = rho * gain * power(n, k)
                        / (rho * gain * intra + rho * leakage(r, i, n, cluster_power) + 1);
        }
    }
    return out;
}

SimResult simulate(const ClusteredScenario& s, const Eigen::MatrixXd& power,
                   const Eigen::MatrixXi& bits, const SimOptions& opts)
{
    check_trials(opts.trials);
    check_shapes(s, power, bits);
    const int N = s.clusters();
    const int K = s.users_per_cluster();
    const int M = s.config.antennas;
    check_zf_feasible(M, N, K);

    Kernel kernel = [&](long t, std::vector<double>& x) {
        RandomStream rng(opts.seed, static_cast<std::uint64_t>(t));
        ChannelRealization r = draw_realization(rng, M, bits, opts.mode);
        Eigen::MatrixXd g = sinr(s, r, power);
        double total = 0;
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n)
            {
                double rate = std::log2(1 + g(n, k));
                x[n + N * k] = rate;
                total += rate;
            }
        x[N * K] = total;
    };
    std::vector<double> per_trial;
    Moments m = run_trials(opts.trials, resolve_threads(opts.threads), N * K + 1,
                           kernel, opts.keep_per_trial ? &per_trial : nullptr,
                           N * K);
    return finish(s, opts, m, std::move(per_trial));
}

SimResult simulate_alt_csi_model(const ClusteredScenario& s,
                                 const Eigen::MatrixXd& power,
                                 const Eigen::MatrixXi& bits, SimOptions opts)
{
    opts.mode = QuantizerMode::constant;
    return simulate(s, power, bits, opts);
}

SimResult simulate_oma(const ClusteredScenario& s, const Eigen::MatrixXi& bits,
                       const SimOptions& opts)
{
    check_trials(opts.trials);
    const int N = s.clusters();
    const int K = s.users_per_cluster();
    const int M = s.config.antennas;
    check_shapes(s, Eigen::MatrixXd::Zero(N, K), bits);
    check_zf_feasible(M, N, 1);
    const double p_user = s.config.power_mw / N;
    const Eigen::VectorXd slot_power = Eigen::VectorXd::Constant(N, p_user);

    Kernel kernel = [&](long t, std::vector<double>& x) {
        RandomStream rng(opts.seed, static_cast<std::uint64_t>(t));
        ChannelRealization r = draw_realization(rng, M, bits, opts.mode);
        double total = 0;
        for (int k = 0; k < K; ++k)
        {
            std::vector<CVector> cdi(N);
            for (int n = 0; n < N; ++n)
                cdi[n] = r.h_hat[r.index(n, k)];
            ChannelRealization slot = r;
            slot.w = zf_beamformers(cdi, M, N, 1, rng);
            for (int n = 0; n < N; ++n)
            {
                const int i = r.index(n, k);
                const double rho = s.cnr(n, k);
                const double gain
                    = std::norm((r.h[i].transpose() * slot.w[n]).value());
                const double g = rho * gain * p_user
                                 / (rho * leakage(slot, i, n, slot_power) + 1);
                double rate = std::log2(1 + g) / K;
                x[n + N * k] = rate;
                total += rate;
            }
        }
        x[N * K] = total;
    };
    std::vector<double> per_trial;
    Moments m = run_trials(opts.trials, resolve_threads(opts.threads), N * K + 1,
                           kernel, opts.keep_per_trial ? &per_trial : nullptr,
                           N * K);
    return finish(s, opts, m, std::move(per_trial));
}

double paired_se(const SimResult& a, const SimResult& b)
{
    if (a.per_trial_esr.size() != b.per_trial_esr.size() || a.per_trial_esr.empty())
        throw DomainError("paired_se: both runs need per-trial values of equal length");
    Moments m(1);
    std::vector<double> x(1);
    for (std::size_t t = 0; t < a.per_trial_esr.size(); ++t)
    {
        x[0] = a.per_trial_esr[t] - b.per_trial_esr[t];
        m.add(x);
    }
    return m.se(0);
}

std::vector<SicEntry> sic_decodability(const ClusteredScenario& s,
                                       const Eigen::MatrixXd& power,
                                       const Eigen::MatrixXi& bits,
                                       const SimOptions& opts)
{
    check_trials(opts.trials);
    check_shapes(s, power, bits);
    const int N = s.clusters();
    const int K = s.users_per_cluster();
    const int M = s.config.antennas;

    std::vector<SicEntry> entries;
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
            for (int j = k + 1; j < K; ++j)
                entries.push_back({n, k, j, 0, 0, 0});
    const std::size_t E = entries.size();
    if (E == 0)
        return entries;

    Kernel kernel = [&](long t, std::vector<double>& x) {
        RandomStream rng(opts.seed, static_cast<std::uint64_t>(t));
        ChannelRealization r = draw_realization(rng, M, bits, opts.mode);
        Eigen::MatrixXd own = sinr(s, r, power);
        Eigen::VectorXd cluster_power = power.rowwise().sum();
        for (std::size_t e = 0; e < E; ++e)
        {
            const auto& en = entries[e];
            const int i = r.index(en.cluster, en.decoder);
            const double rho = s.cnr(en.cluster, en.decoder);
            const double gain
                = std::norm((r.h[i].transpose() * r.w[en.cluster]).value());
            // Messages of positions >= target are still present at this stage.
            const double before = power.row(en.cluster).head(en.target).sum();
            const double g = rho * gain * power(en.cluster, en.target)
                             / (rho * gain * before
                                + rho * leakage(r, i, en.cluster, cluster_power) + 1);
            const double dec = std::log2(1 + g);
            const double tgt = std::log2(1 + own(en.cluster, en.target));
            x[3 * e] = dec;
            x[3 * e + 1] = tgt;
            x[3 * e + 2] = dec - tgt;
        }
    };
    Moments m = run_trials(opts.trials, resolve_threads(opts.threads), 3 * E,
                           kernel, nullptr, 0);
    for (std::size_t e = 0; e < E; ++e)
    {
        entries[e].decoder_rate = m.mean[3 * e];
        entries[e].target_rate = m.mean[3 * e + 1];
        entries[e].diff_se = m.se(3 * e + 2);
    }
    return entries;
}

std::vector<ClusteringOutcome> clustering_experiment(
    const ClusteredScenario& base, const std::vector<std::vector<int>>& perms,
    const SimOptions& opts_in, const PowerOptions& power_opts)
{
    SimOptions opts = opts_in;
    opts.keep_per_trial = true;
    std::vector<int> identity(base.clusters());
    for (int n = 0; n < base.clusters(); ++n)
        identity[n] = n;

    std::vector<std::vector<int>> all{identity};
    for (const auto& p : perms)
        if (p != identity)
            all.push_back(p);

    std::vector<ClusteringOutcome> out;
    std::vector<SimResult> runs;
    for (const auto& p : all)
    {
        ClusteredScenario s = exchange_clustering(base, p, 2);
        JointResult j = joint_optimize(s, power_opts);
        SimResult r = simulate(j.scenario, j.power.per_user, j.bits.bits, opts);
        ClusteringOutcome o;
        o.perm = p;
        o.esr = r.esr;
        o.esr_se = r.esr_se;
        o.active_clusters = j.scenario.clusters();
        runs.push_back(std::move(r));
        out.push_back(o);
    }
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        out[i].loss = out[0].esr - out[i].esr;
        out[i].loss_se = i == 0 ? 0 : paired_se(runs[0], runs[i]);
    }
    return out;
}

}  // namespace noma
