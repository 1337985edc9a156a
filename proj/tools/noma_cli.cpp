// Command-line front end: clustering, allocators, simulation and figure
// sweeps. Exit codes: 0 ok, 1 I/O, 2 config, 3 numerical, 4 infeasible.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "noma/alloc.hpp"
#include "noma/analysis.hpp"
#include "noma/config_io.hpp"
#include "noma/errors.hpp"
#include "noma/experiment.hpp"
#include "noma/montecarlo.hpp"
#include "noma/quadrature.hpp"
#include "noma/specfun.hpp"
#include "noma/trace.hpp"

using namespace noma;

namespace {

struct CommonFlags
{
    std::string config_path;
    std::optional<int> antennas, clusters, users, bits;
    std::optional<double> power_dbm, alpha;
    std::string distances, noise_dbm;
    std::optional<long> trials;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string quantizer;
    bool no_reduction{false};

    void attach(CLI::App* app)
    {
        app->add_option("-c,--config", config_path, "YAML config file");
        app->add_option("--antennas", antennas, "BS antennas M");
        app->add_option("--clusters", clusters, "clusters N");
        app->add_option("--users-per-cluster", users, "users per cluster K");
        app->add_option("--bits", bits, "total feedback bits B");
        app->add_option("--power-dbm", power_dbm, "total transmit power (dBm)");
        app->add_option("--alpha", alpha, "path-loss exponent");
        app->add_option("--distances", distances, "N x K distances, e.g. 25,35;27,37;29,39");
        app->add_option("--noise-dbm", noise_dbm, "noise power (dBm), scalar or N x K");
        app->add_option("--trials", trials, "Monte Carlo trials");
        app->add_option("--seed", seed, "RNG seed");
        app->add_option("--threads", threads, "worker threads (0: NOMA_THREADS or all cores)");
        app->add_option("--quantizer", quantizer, "rvq, codebook, cell, constant, perfect");
        app->add_flag("--no-cluster-reduction", no_reduction,
                      "fail instead of dropping clusters when power is insufficient");
    }

    RunConfig resolve(const std::string& figure = "custom") const
    {
        RunConfig rc = config_path.empty() ? figure_config(figure)
                                           : load_config(config_path);
        SystemConfig& c = rc.system;
        if (antennas) c.antennas = *antennas;
        if (clusters) c.clusters = *clusters;
        if (users) c.users_per_cluster = *users;
        if (bits) c.feedback_bits = *bits;
        if (power_dbm) c.power_mw = dbm_to_mw(*power_dbm);
        if (alpha) c.pathloss_exponent = *alpha;
        if (!distances.empty()) c.distances_m = parse_matrix(distances);
        if (!noise_dbm.empty())
        {
            Eigen::MatrixXd m = parse_matrix(noise_dbm);
            if (m.size() == 1)
                m = Eigen::MatrixXd::Constant(c.clusters, c.users_per_cluster, m(0));
            c.noise_mw = m.unaryExpr([](double v) { return dbm_to_mw(v); });
        }
        else if (c.noise_mw.rows() != c.clusters || c.noise_mw.cols() != c.users_per_cluster)
        {
            if (c.noise_mw.size() > 0 && (c.noise_mw.array() == c.noise_mw(0)).all())
                c.noise_mw = Eigen::MatrixXd::Constant(c.clusters, c.users_per_cluster,
                                                       c.noise_mw(0));
        }
        if (trials) c.mc_trials = *trials;
        if (seed) c.rng_seed = *seed;
        if (threads) rc.simulation.threads = *threads;
        if (!quantizer.empty())
        {
            try
            {
                rc.simulation.quantizer = parse_quantizer_mode(quantizer);
            }
            catch (const DomainError& e)
            {
                throw ConfigError(e.what());
            }
        }
        if (no_reduction) rc.simulation.cluster_reduction = false;
        c.validate();
        return rc;
    }
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void header(std::ostream& out, const std::string& command, const RunConfig& rc)
{
    out << "# noma " << command << "\n"
        << "# config_digest=" << digest_hex(config_digest(rc.system)) << "\n"
        << "# git=" << git_describe() << "\n";
}

void notices(std::ostream& out, const std::vector<std::string>& list)
{
    for (const auto& n : list)
        out << "# notice: " << n << "\n";
}

SimOptions sim_options(const RunConfig& rc)
{
    SimOptions o;
    o.trials = rc.system.mc_trials;
    o.seed = rc.system.rng_seed;
    o.mode = rc.simulation.quantizer;
    o.threads = rc.simulation.threads;
    return o;
}

PowerOptions power_options(const RunConfig& rc)
{
    PowerOptions p;
    p.allow_cluster_reduction = rc.simulation.cluster_reduction;
    return p;
}

int cmd_cluster(const CommonFlags& f)
{
    RunConfig rc = f.resolve();
    ClusteredScenario s = cluster_users(rc.system);
    header(std::cout, "cluster", rc);
    std::cout << "cluster,position,user_id,distance_m,noise_dbm,cnr\n";
    for (int n = 0; n < s.clusters(); ++n)
        for (int k = 0; k < s.users_per_cluster(); ++k)
            std::cout << n + 1 << "," << k + 1 << "," << s.user_ids(n, k) << ","
                      << fmt(s.config.distances_m(n, k)) << ","
                      << fmt(mw_to_dbm(s.config.noise_mw(n, k))) << ","
                      << fmt(s.cnr(n, k)) << "\n";
    return 0;
}

void print_allocation(const ClusteredScenario& s, const PowerAllocation& p,
                      const BitAllocation* b)
{
    std::cout << "# active_clusters=" << s.clusters() << "\n"
              << "# C_star=" << fmt(p.C_star) << "\n";
    if (b)
        std::cout << "# total_bits=" << b->total_used << "\n";
    std::cout << "cluster,position,user_id,phi,power_mw";
    if (b)
        std::cout << ",relaxed_bits,bits";
    std::cout << "\n";
    for (int n = 0; n < s.clusters(); ++n)
        for (int k = 0; k < s.users_per_cluster(); ++k)
        {
            std::cout << n + 1 << "," << k + 1 << "," << s.user_ids(n, k) << ","
                      << fmt(p.phi(n)) << "," << fmt(p.per_user(n, k));
            if (b)
                std::cout << "," << fmt(b->relaxed(n, k)) << "," << b->bits(n, k);
            std::cout << "\n";
        }
}

int cmd_allocate_bits(const CommonFlags& f, const std::string& power_mode,
                      const std::string& method)
{
    RunConfig rc = f.resolve();
    ClusteredScenario s = cluster_users(rc.system);
    PowerAllocation p;
    std::vector<std::string> notes;
    if (power_mode == "joint")
    {
        PowerSolution ps = power_fixed_point(s, power_options(rc));
        s = ps.scenario;
        p = ps.power;
        notes = ps.notices;
    }
    else
        p = equal_power(s);
    BitAllocation b = method == "reference" ? reference_bits(s, p.per_user)
                      : method == "equal"   ? equal_bits(s)
                                            : allocate_bits(s, p.per_user);
    notes.insert(notes.end(), b.notices.begin(), b.notices.end());
    header(std::cout, "allocate-bits", rc);
    notices(std::cout, notes);
    print_allocation(s, p, &b);
    return 0;
}

int cmd_allocate_power(const CommonFlags& f)
{
    RunConfig rc = f.resolve();
    PowerSolution ps = power_fixed_point(cluster_users(rc.system), power_options(rc));
    header(std::cout, "allocate-power", rc);
    notices(std::cout, ps.notices);
    std::cout << "# roots=";
    for (std::size_t i = 0; i < ps.roots.size(); ++i)
        std::cout << (i ? ";" : "") << fmt(ps.roots[i]);
    std::cout << "\n";
    print_allocation(ps.scenario, ps.power, nullptr);
    return 0;
}

int cmd_joint(const CommonFlags& f)
{
    RunConfig rc = f.resolve();
    JointResult j = joint_optimize(cluster_users(rc.system), power_options(rc));
    header(std::cout, "joint", rc);
    notices(std::cout, j.notices);
    print_allocation(j.scenario, j.power, &j.bits);
    return 0;
}

int cmd_simulate(const CommonFlags& f, const std::string& scheme_name,
                 const std::string& trace_out, int trace_count)
{
    RunConfig rc = f.resolve();
    Scheme scheme = parse_scheme(scheme_name);
    SimOptions opts = sim_options(rc);
    SchemeOutcome o = evaluate_scheme(scheme, cluster_users(rc.system), opts,
                                      power_options(rc));
    const ClusteredScenario& s = o.scenario;
    const int M = s.config.antennas;

    header(std::cout, "simulate", rc);
    notices(std::cout, o.notices);
    std::cout << "# scheme=" << to_string(scheme) << "\n"
              << "# trials=" << o.sim.trials << "\n"
              << "# seed=" << o.sim.seed << "\n"
              << "# quantizer=" << to_string(opts.mode) << "\n"
              << "# esr=" << fmt(o.sim.esr) << "\n"
              << "# esr_se=" << fmt(o.sim.esr_se) << "\n"
              << "# lb1_esr=" << fmt(o.lb1_esr) << "\n";
    std::cout << "cluster,position,user_id,rate,se,lb1,ideal,ub_loss,bits,power_mw\n";
    Eigen::MatrixXd b = o.bits.bits.cast<double>();
    for (int n = 0; n < s.clusters(); ++n)
        for (int k = 0; k < s.users_per_cluster(); ++k)
        {
            double lb1 = NAN, ideal = NAN, ub = NAN;
            if (scheme != Scheme::oma)
            {
                LinkCoefficients c = link_coefficients(s, o.power.per_user, b, n, k);
                lb1 = rate_lb1(c, M, k + 1).value;
                ideal = rate_ideal(c, M, k + 1).value;
                ub = rate_loss_ub(c, M).value;
            }
            std::cout << n + 1 << "," << k + 1 << "," << s.user_ids(n, k) << ","
                      << fmt(o.sim.per_user_rate(n, k)) << ","
                      << fmt(o.sim.per_user_se(n, k)) << "," << fmt(lb1) << ","
                      << fmt(ideal) << "," << fmt(ub) << "," << o.bits.bits(n, k)
                      << "," << fmt(o.power.per_user(n, k)) << "\n";
        }

    if (!trace_out.empty())
    {
        std::vector<ChannelRealization> reals;
        QuantizerMode mode = scheme == Scheme::alt_csi ? QuantizerMode::constant : opts.mode;
        for (int t = 0; t < trace_count; ++t)
        {
            RandomStream rng(opts.seed, static_cast<std::uint64_t>(t));
            reals.push_back(draw_realization(rng, M, o.bits.bits, mode));
        }
        write_trace(trace_out, reals);
    }
    return 0;
}

int cmd_experiment(const CommonFlags& f, const std::string& figure,
                   const std::string& out_path, const std::string& sweep,
                   const std::string& schemes)
{
    RunConfig rc = f.resolve(figure);
    ExperimentSpec spec = figure_spec(figure, rc);
    spec.output_path = out_path;
    if (!sweep.empty())
        spec.values = parse_sweep(sweep);
    if (!schemes.empty())
    {
        spec.schemes.clear();
        std::stringstream ss(schemes);
        for (std::string s; std::getline(ss, s, ',');)
            spec.schemes.push_back(parse_scheme(s));
    }
    if (out_path.empty())
    {
        run_experiment(spec, rc, std::cout);
        return 0;
    }
    std::ostringstream buf;
    run_experiment(spec, rc, buf);
    std::ofstream out(out_path, std::ios::binary);
    if (!out || !(out << buf.str()))
        throw std::runtime_error("cannot write '" + out_path + "'");
    return 0;
}

// Self-check of the special functions against direct quadrature.
int cmd_validate_specfun()
{
    namespace sf = specfun;
    int failures = 0;
    std::cout << "# noma validate-specfun\n"
              << "# git=" << git_describe() << "\n"
              << "function,arg1,arg2,arg3,value,reference,rel_error,tolerance,ok\n";
    auto row = [&](const char* name, double a1, double a2, double a3, double v,
                   double ref, double tol, bool flagged = false) {
        double rel = std::fabs(v - ref) / std::max(std::fabs(ref), 1e-300);
        bool ok = rel <= tol;
        // a flagged value is never used downstream; rate bounds take the quadrature route
        failures += !ok && !flagged;
        std::cout << name << "," << fmt(a1) << "," << fmt(a2) << "," << fmt(a3) << ","
                  << fmt(v) << "," << fmt(ref) << "," << fmt(rel) << "," << fmt(tol)
                  << "," << (flagged ? "flagged" : ok ? "yes" : "no") << "\n";
    };
    quad::Options qo;
    qo.abs_tol = 0;
    qo.rel_tol = 1e-13;
    for (int q : {1, 2, 3, 5, 8})
        for (double x : {0.01, 0.5, 1.0, 5.0, 20.0})
        {
            // e^x E_q(x) = int_0^1 e^{x (1 - 1/s)} s^{q-2} ds with t = 1/s
            auto f = [&](double s) {
                return s <= 0 ? 0.0 : std::exp(x * (1 - 1 / s)) * std::pow(s, q - 2);
            };
            double ref = quad::gauss_kronrod(f, 0, 1, qo).value;
            row("en_scaled", q, x, 0, sf::exp_int_en_scaled(q, x), ref, 1e-10);
        }
    for (int M : {2, 4, 6})
        for (double a : {0.1, 1.0, 10.0})
            for (double b : {0.1, 1.0, 10.0})
            {
                double ref = sf::theta_quadrature(a, b, M).value;
                double v;
                bool flagged = false;
                try
                {
                    v = sf::theta(a, b, M).value;
                }
                catch (const sf::PrecisionLoss& e)
                {
                    v = e.partial().value;
                    flagged = true;
                }
                row("theta", a, b, M, v, ref, 1e-5, flagged);
            }
    std::cout << "# failures=" << failures << "\n";
    return failures ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-antenna NOMA downlink with limited feedback"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* cluster = app.add_subcommand("cluster", "cluster users by channel-to-noise ratio");
    flags.attach(cluster);

    std::string power_mode = "equal", method = "ours";
    auto* bits = app.add_subcommand("allocate-bits", "feedback bit allocation");
    flags.attach(bits);
    bits->add_option("--power", power_mode, "equal or joint")
        ->check(CLI::IsMember({"equal", "joint"}));
    bits->add_option("--method", method, "ours, equal or reference")
        ->check(CLI::IsMember({"ours", "equal", "reference"}));

    auto* power = app.add_subcommand("allocate-power", "cluster power fractions");
    flags.attach(power);

    auto* joint = app.add_subcommand("joint", "joint power and bit allocation");
    flags.attach(joint);

    std::string scheme = "joint", trace_out;
    int trace_count = 16;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo ergodic rates");
    flags.attach(sim);
    sim->add_option("--scheme", scheme,
                    "joint, bits-equal-power, equal-both, reference-bits, alt-csi, oma");
    sim->add_option("--trace-out", trace_out, "write the first realizations to a binary trace");
    sim->add_option("--trace-count", trace_count, "realizations in the trace");

    std::string figure = "custom", out_path, sweep, schemes;
    auto* exp = app.add_subcommand("experiment", "figure sweeps as tables");
    flags.attach(exp);
    exp->add_option("--figure", figure, "fig1..fig6 or custom");
    exp->add_option("-o,--out", out_path, "output file (default stdout)");
    exp->add_option("--sweep", sweep, "start:stop:step or v1,v2,... (dBm, or bits for fig6)");
    exp->add_option("--schemes", schemes, "comma-separated scheme list");

    auto* vs = app.add_subcommand("validate-specfun", "self-check special functions");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (cluster->parsed())
            return cmd_cluster(flags);
        if (bits->parsed())
            return cmd_allocate_bits(flags, power_mode, method);
        if (power->parsed())
            return cmd_allocate_power(flags);
        if (joint->parsed())
            return cmd_joint(flags);
        if (sim->parsed())
            return cmd_simulate(flags, scheme, trace_out, trace_count);
        if (exp->parsed())
            return cmd_experiment(flags, figure, out_path, sweep, schemes);
        if (vs->parsed())
            return cmd_validate_specfun();
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const NumericalDegeneracy& e)
    {
        std::cerr << "numerical degeneracy: " << e.what() << "\n";
        return 3;
    }
    catch (const Infeasible& e)
    {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 4;
    }
    catch (const DomainError& e)
    {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
