#include "noma/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "noma/errors.hpp"

namespace noma {

namespace {

int line_of(const YAML::Node& node)
{
    return node.Mark().line >= 0 ? node.Mark().line + 1 : -1;
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& msg)
{
    int line = line_of(node);
    std::ostringstream os;
    if (line > 0)
        os << "line " << line << ": ";
    os << msg;
    throw ConfigError(os.str(), line);
}

void check_keys(const YAML::Node& map, const std::string& section,
                const std::set<std::string>& allowed)
{
    if (!map.IsMap())
        fail(map, "section '" + section + "' must be a mapping");
    for (const auto& kv : map)
    {
        auto key = kv.first.as<std::string>();
        if (!allowed.count(key))
            fail(kv.first, "unknown key '" + key + "' in section '" + section + "'");
    }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& name)
{
    if (!node.IsScalar())
        fail(node, "'" + name + "' must be a scalar");
    try
    {
        return node.as<T>();
    }
    catch (const YAML::Exception&)
    {
        fail(node, "'" + name + "' has an invalid value '" + node.Scalar() + "'");
    }
}

template <class T>
T required(const YAML::Node& map, const std::string& key,
           const std::string& section)
{
    YAML::Node node = map[key];
    if (!node)
        fail(map, "missing key '" + key + "' in section '" + section + "'");
    return scalar<T>(node, key);
}

Eigen::MatrixXd matrix(const YAML::Node& node, const std::string& name)
{
    if (!node.IsSequence() || node.size() == 0)
        fail(node, "'" + name + "' must be a nonempty list of rows");
    const auto rows = node.size();
    std::size_t cols = 0;
    Eigen::MatrixXd out;
    for (std::size_t r = 0; r < rows; ++r)
    {
        const YAML::Node row = node[r];
        if (!row.IsSequence() || row.size() == 0)
            fail(row, "'" + name + "' rows must be nonempty lists");
        if (r == 0)
        {
            cols = row.size();
            out.resize(rows, cols);
        }
        else if (row.size() != cols)
            fail(row, "'" + name + "' rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c)
            out(r, c) = scalar<double>(row[c], name);
    }
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text)
{
    YAML::Node root;
    try
    {
        root = YAML::Load(text);
    }
    catch (const YAML::ParserException& e)
    {
        throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": "
                              + e.msg,
                          e.mark.line + 1);
    }
    if (!root.IsMap())
        throw ConfigError("config must be a mapping with sections system, users, simulation");
    check_keys(root, "<root>", {"system", "users", "simulation"});

    RunConfig rc;
    SystemConfig& cfg = rc.system;

    YAML::Node sys = root["system"];
    if (!sys)
        fail(root, "missing section 'system'");
    check_keys(sys, "system",
               {"antennas", "clusters", "users_per_cluster", "feedback_bits",
                "power_dbm", "pathloss_exponent"});
    cfg.antennas = required<int>(sys, "antennas", "system");
    cfg.clusters = required<int>(sys, "clusters", "system");
    cfg.users_per_cluster = required<int>(sys, "users_per_cluster", "system");
    cfg.feedback_bits = required<int>(sys, "feedback_bits", "system");
    cfg.power_mw = dbm_to_mw(required<double>(sys, "power_dbm", "system"));
    cfg.pathloss_exponent = required<double>(sys, "pathloss_exponent", "system");

    YAML::Node users = root["users"];
    if (!users)
        fail(root, "missing section 'users'");
    check_keys(users, "users", {"distances_m", "noise_dbm"});
    if (!users["distances_m"])
        fail(users, "missing key 'distances_m' in section 'users'");
    cfg.distances_m = matrix(users["distances_m"], "distances_m");
    if (cfg.distances_m.rows() != cfg.clusters
        || cfg.distances_m.cols() != cfg.users_per_cluster)
        fail(users["distances_m"], "distances_m must be clusters x users_per_cluster");
    YAML::Node noise = users["noise_dbm"];
    if (!noise)
        fail(users, "missing key 'noise_dbm' in section 'users'");
    if (noise.IsScalar())
    {
        cfg.noise_mw = Eigen::MatrixXd::Constant(
            cfg.clusters, cfg.users_per_cluster,
            dbm_to_mw(scalar<double>(noise, "noise_dbm")));
    }
    else
    {
        Eigen::MatrixXd dbm = matrix(noise, "noise_dbm");
        if (dbm.rows() != cfg.clusters || dbm.cols() != cfg.users_per_cluster)
            fail(noise, "noise_dbm must be a scalar or clusters x users_per_cluster");
        cfg.noise_mw = dbm.unaryExpr([](double v) { return dbm_to_mw(v); });
    }

    if (YAML::Node sim = root["simulation"])
    {
        check_keys(sim, "simulation",
                   {"trials", "seed", "quantizer", "threads", "cluster_reduction"});
        if (sim["trials"])
            cfg.mc_trials = scalar<long>(sim["trials"], "trials");
        if (sim["seed"])
            cfg.rng_seed = scalar<std::uint64_t>(sim["seed"], "seed");
        if (sim["quantizer"])
        {
            try
            {
                rc.simulation.quantizer = parse_quantizer_mode(
                    scalar<std::string>(sim["quantizer"], "quantizer"));
            }
            catch (const DomainError& e)
            {
                fail(sim["quantizer"], e.what());
            }
        }
        if (sim["threads"])
        {
            rc.simulation.threads = scalar<int>(sim["threads"], "threads");
            if (rc.simulation.threads < 0)
                fail(sim["threads"], "threads must be >= 0");
        }
        if (sim["cluster_reduction"])
            rc.simulation.cluster_reduction
                = scalar<bool>(sim["cluster_reduction"], "cluster_reduction");
    }

    try
    {
        cfg.validate();
    }
    catch (const ConfigError& e)
    {
        // Attach the line of the section that holds the offending value.
        int line = line_of(sys);
        throw ConfigError("line " + std::to_string(line) + ": " + e.what(), line);
    }
    return rc;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    try
    {
        return parse_config(os.str());
    }
    catch (const ConfigError& e)
    {
        throw ConfigError(path + ": " + e.what(), e.line());
    }
}

std::string canonical_text(const SystemConfig& c)
{
    std::string out;
    char buf[64];
    auto num = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += key;
        out += '=';
        out += buf;
        out += '\n';
    };
    auto mat = [&](const char* key, const Eigen::MatrixXd& m) {
        out += key;
        out += '=';
        for (Eigen::Index r = 0; r < m.rows(); ++r)
        {
            for (Eigen::Index k = 0; k < m.cols(); ++k)
            {
                std::snprintf(buf, sizeof buf, "%.17g", m(r, k));
                out += buf;
                out += k + 1 < m.cols() ? "," : "";
            }
            out += r + 1 < m.rows() ? ";" : "";
        }
        out += '\n';
    };
    num("antennas", c.antennas);
    num("clusters", c.clusters);
    num("users_per_cluster", c.users_per_cluster);
    num("feedback_bits", c.feedback_bits);
    num("power_mw", c.power_mw);
    num("pathloss_exponent", c.pathloss_exponent);
    mat("distances_m", c.distances_m);
    mat("noise_mw", c.noise_mw);
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes)
    {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t config_digest(const SystemConfig& config)
{
    return fnv1a64(canonical_text(config));
}

std::string digest_hex(std::uint64_t digest)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

}  // namespace noma
