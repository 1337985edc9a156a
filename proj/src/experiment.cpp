#include "noma/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "noma/analysis.hpp"
#include "noma/errors.hpp"

#ifndef NOMA_GIT_DESCRIBE
#define NOMA_GIT_DESCRIBE "unknown"
#endif

namespace noma {

namespace {

const char* const scheme_names[] = {"joint",          "bits-equal-power",
                                    "equal-both",     "reference-bits",
                                    "alt-csi",        "oma"};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void set_power_dbm(RunConfig& rc, double dbm)
{
    rc.system.power_mw = dbm_to_mw(dbm);
}

std::vector<std::vector<int>> all_permutations(int n)
{
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> out;
    do
        out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

std::string perm_label(const std::vector<int>& perm)
{
    std::string s = "perm";
    for (int p : perm)
        s += "_" + std::to_string(p + 1);
    return s;
}

}  // namespace

Scheme parse_scheme(const std::string& name)
{
    for (int i = 0; i < 6; ++i)
        if (name == scheme_names[i])
            return static_cast<Scheme>(i);
    throw ConfigError("unknown scheme '" + name
                      + "' (joint, bits-equal-power, equal-both, reference-bits, alt-csi, oma)");
}

std::string to_string(Scheme scheme)
{
    return scheme_names[static_cast<int>(scheme)];
}

LowerBoundSummary lb1_rates(const ClusteredScenario& s,
                            const Eigen::MatrixXd& power,
                            const Eigen::MatrixXi& bits)
{
    const int M = s.config.antennas;
    LowerBoundSummary out;
    out.per_user.resize(s.clusters(), s.users_per_cluster());
    Eigen::MatrixXd b = bits.cast<double>();
    for (int n = 0; n < s.clusters(); ++n)
        for (int k = 0; k < s.users_per_cluster(); ++k)
        {
            RateBound r = rate_lb1(link_coefficients(s, power, b, n, k), M, k + 1);
            out.per_user(n, k) = r.value;
            out.sum += r.value;
            if (r.numerics_flags & numerics::quadrature_fallback)
                ++out.fallbacks;
        }
    return out;
}

SchemeOutcome evaluate_scheme(Scheme scheme, const ClusteredScenario& base,
                              const SimOptions& opts,
                              const PowerOptions& power_opts)
{
    SchemeOutcome o;
    o.scheme = scheme;
    o.scenario = base;
    switch (scheme)
    {
        case Scheme::joint:
        case Scheme::alt_csi:
        {
            JointResult j = joint_optimize(base, power_opts);
            o.scenario = j.scenario;
            o.power = j.power;
            o.bits = j.bits;
            o.notices = j.notices;
            break;
        }
        case Scheme::bits_equal_power:
            o.power = equal_power(base);
            o.bits = allocate_bits(base, o.power.per_user);
            o.notices = o.bits.notices;
            break;
        case Scheme::reference_bits:
            o.power = equal_power(base);
            o.bits = reference_bits(base, o.power.per_user);
            break;
        case Scheme::equal_both:
        case Scheme::oma:
            o.power = equal_power(base);
            o.bits = equal_bits(base);
            break;
    }

    if (scheme == Scheme::oma)
    {
        o.sim = simulate_oma(o.scenario, o.bits.bits, opts);
        o.lb1_esr = std::numeric_limits<double>::quiet_NaN();
        o.ub_loss_sum = std::numeric_limits<double>::quiet_NaN();
        return o;
    }
    o.sim = scheme == Scheme::alt_csi
                ? simulate_alt_csi_model(o.scenario, o.power.per_user, o.bits.bits, opts)
                : simulate(o.scenario, o.power.per_user, o.bits.bits, opts);

    LowerBoundSummary lb = lb1_rates(o.scenario, o.power.per_user, o.bits.bits);
    o.lb1_esr = lb.sum;
    o.lb1_fallbacks = lb.fallbacks;
    Eigen::MatrixXd b = o.bits.bits.cast<double>();
    for (int n = 0; n < o.scenario.clusters(); ++n)
        for (int k = 0; k < o.scenario.users_per_cluster(); ++k)
            o.ub_loss_sum += rate_loss_ub(
                link_coefficients(o.scenario, o.power.per_user, b, n, k),
                o.scenario.config.antennas).value;
    return o;
}

RunConfig figure_config(const std::string& id)
{
    RunConfig rc;
    SystemConfig& c = rc.system;
    c.antennas = 6;
    c.clusters = 3;
    c.users_per_cluster = 2;
    c.pathloss_exponent = 4;
    c.power_mw = dbm_to_mw(30);
    c.noise_mw = Eigen::MatrixXd::Constant(3, 2, dbm_to_mw(-50));
    c.distances_m.resize(3, 2);
    const bool d2 = id == "fig5" || id == "fig6";
    if (d2)
        c.distances_m << 10, 35, 12, 37, 14, 39;
    else
        c.distances_m << 25, 35, 27, 37, 29, 39;
    if (id == "fig1")
        c.feedback_bits = 72;
    else if (id == "fig4")
        c.feedback_bits = 60;
    else
        c.feedback_bits = 42;
    if (id != "custom" && id != "fig1" && id != "fig2" && id != "fig3"
        && id != "fig4" && id != "fig5" && id != "fig6")
        throw ConfigError("unknown figure '" + id + "' (fig1..fig6, custom)");
    return rc;
}

ExperimentSpec figure_spec(const std::string& id, const RunConfig& config)
{
    figure_config(id);  // validates the id
    ExperimentSpec spec;
    spec.figure_id = id;
    spec.values = parse_sweep("0:50:10");
    if (id == "fig1")
    {
        spec.schemes = {Scheme::joint};
        spec.perms = all_permutations(config.system.clusters);
    }
    else if (id == "fig2")
        spec.schemes = {Scheme::joint, Scheme::alt_csi};
    else if (id == "fig3")
        spec.schemes = {Scheme::bits_equal_power, Scheme::equal_both,
                        Scheme::reference_bits};
    else if (id == "fig4")
        spec.schemes = {Scheme::bits_equal_power, Scheme::reference_bits};
    else if (id == "fig5")
        spec.schemes = {Scheme::joint, Scheme::bits_equal_power, Scheme::equal_both};
    else if (id == "fig6")
    {
        spec.sweep = SweepParameter::bits;
        spec.values = parse_sweep("12:72:12");
        spec.schemes = {Scheme::joint, Scheme::bits_equal_power,
                        Scheme::equal_both, Scheme::oma};
    }
    else
    {
        spec.values = {mw_to_dbm(config.system.power_mw)};
        spec.schemes = {Scheme::joint};
    }
    return spec;
}

void run_experiment(const ExperimentSpec& spec, const RunConfig& config,
                    std::ostream& out)
{
    if (spec.values.empty())
        throw ConfigError("experiment sweep is empty");
    if (spec.schemes.empty())
        throw ConfigError("experiment has no schemes");

    const SystemConfig& c0 = config.system;
    c0.validate();
    const int N = c0.clusters;
    const int K = c0.users_per_cluster;
    const ClusteredScenario base0 = cluster_users(c0);

    SimOptions opts;
    opts.trials = c0.mc_trials;
    opts.seed = c0.rng_seed;
    opts.mode = config.simulation.quantizer;
    opts.threads = config.simulation.threads;
    opts.keep_per_trial = true;
    PowerOptions popts;
    popts.allow_cluster_reduction = config.simulation.cluster_reduction;

    const bool by_perm = !spec.perms.empty();
    out << "# noma experiment table v1\n"
        << "# figure=" << spec.figure_id << "\n"
        << "# config_digest=" << digest_hex(config_digest(c0)) << "\n"
        << "# seed=" << opts.seed << "\n"
        << "# trials=" << opts.trials << "\n"
        << "# quantizer=" << to_string(opts.mode) << "\n"
        << "# sweep=" << (spec.sweep == SweepParameter::bits ? "bits" : "power_dbm")
        << "\n"
        << "# git=" << git_describe() << "\n"
        << "# delta = esr - esr of the first row at the same sweep value\n";

    out << "value,scheme,active_clusters,esr,esr_se,delta,delta_se,lb1_esr,ub_loss_sum";
    for (int n = 0; n < N; ++n)
        out << ",phi_" << n + 1;
    for (const char* what : {"rate", "bits", "power_mw"})
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n)
                out << "," << what << "_" << n + 1 << "_" << k + 1;
    out << "\n";

    // Base position of every raw user id, for stable per-user columns.
    std::vector<int> position(N * K);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
            position[base0.user_ids(n, k)] = n + N * k;

    for (double value : spec.values)
    {
        RunConfig rc = config;
        if (spec.sweep == SweepParameter::bits)
            rc.system.feedback_bits = static_cast<int>(std::lround(value));
        else
            set_power_dbm(rc, value);
        rc.system.validate();
        ClusteredScenario base = cluster_users(rc.system);

        std::vector<std::pair<std::string, SchemeOutcome>> cells;
        if (by_perm)
        {
            for (const auto& perm : spec.perms)
                cells.emplace_back(
                    perm_label(perm),
                    evaluate_scheme(spec.schemes.front(),
                                    exchange_clustering(base, perm, 2), opts, popts));
        }
        else
        {
            for (Scheme s : spec.schemes)
                cells.emplace_back(to_string(s), evaluate_scheme(s, base, opts, popts));
        }

        const SimResult& ref = cells.front().second.sim;
        for (const auto& [label, o] : cells)
        {
            const ClusteredScenario& s = o.scenario;
            Eigen::VectorXd rate = Eigen::VectorXd::Zero(N * K);
            Eigen::VectorXd bits = Eigen::VectorXd::Zero(N * K);
            Eigen::VectorXd power = Eigen::VectorXd::Zero(N * K);
            for (int n = 0; n < s.clusters(); ++n)
                for (int k = 0; k < K; ++k)
                {
                    int pos = position[s.user_ids(n, k)];
                    rate(pos) = o.sim.per_user_rate(n, k);
                    bits(pos) = o.bits.bits(n, k);
                    power(pos) = o.power.per_user(n, k);
                }
            out << fmt(value) << "," << label << "," << s.clusters() << ","
                << fmt(o.sim.esr) << "," << fmt(o.sim.esr_se) << ","
                << fmt(o.sim.esr - ref.esr) << ","
                << fmt(&o.sim == &ref ? 0.0 : paired_se(o.sim, ref)) << ","
                << fmt(o.lb1_esr) << "," << fmt(o.ub_loss_sum);
            for (int n = 0; n < N; ++n)
                out << "," << fmt(n < o.power.phi.size() ? o.power.phi(n) : 0.0);
            for (const Eigen::VectorXd* v : {&rate, &bits, &power})
                for (int i = 0; i < N * K; ++i)
                    out << "," << fmt((*v)(i));
            out << "\n";
        }
    }
}

std::string git_describe()
{
    return NOMA_GIT_DESCRIBE;
}

std::vector<double> parse_sweep(const std::string& text)
{
    std::vector<double> out;
    auto number = [&](const std::string& s) {
        try
        {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size())
                throw std::invalid_argument(s);
            return v;
        }
        catch (const std::exception&)
        {
            throw ConfigError("invalid sweep value '" + s + "'");
        }
    };
    if (text.find(':') != std::string::npos)
    {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');)
            parts.push_back(p);
        if (parts.size() != 3)
            throw ConfigError("sweep range must be start:stop:step");
        double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
        if (!(step > 0) || b < a)
            throw ConfigError("sweep range needs step > 0 and stop >= start");
        const long count = std::lround(std::floor((b - a) / step + 1e-9)) + 1;
        for (long i = 0; i < count; ++i)
            out.push_back(a + i * step);
    }
    else
    {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');)
            out.push_back(number(p));
    }
    if (out.empty())
        throw ConfigError("sweep is empty");
    return out;
}

Eigen::MatrixXd parse_matrix(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::stringstream ss(text);
    for (std::string row; std::getline(ss, row, ';');)
    {
        std::vector<double> r;
        std::stringstream rs(row);
        for (std::string v; std::getline(rs, v, ',');)
        {
            try
            {
                r.push_back(std::stod(v));
            }
            catch (const std::exception&)
            {
                throw ConfigError("invalid matrix entry '" + v + "'");
            }
        }
        if (r.empty() || (!rows.empty() && r.size() != rows[0].size()))
            throw ConfigError("matrix rows must be nonempty and of equal length");
        rows.push_back(std::move(r));
    }
    if (rows.empty())
        throw ConfigError("matrix is empty");
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(r, c) = rows[r][c];
    return m;
}

}  // namespace noma
