#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "noma/alloc.hpp"
#include "noma/config_io.hpp"
#include "noma/montecarlo.hpp"

namespace noma {

enum class Scheme
{
    joint,             //!< joint power and bits
    bits_equal_power,  //!< our bits, equal power
    equal_both,        //!< equal power and equal bits
    reference_bits,    //!< interference-sum bit allocator, equal power
    alt_csi,           //!< joint allocation, constant-angle CSI model
    oma,               //!< orthogonal time sharing baseline
};

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

struct SchemeOutcome
{
    Scheme scheme{Scheme::joint};
    ClusteredScenario scenario;
    PowerAllocation power;
    BitAllocation bits;
    SimResult sim;
    //! Sum of per-user LB1 values (NaN for the orthogonal baseline)
    double lb1_esr{0};
    //! Sum of per-user loss upper bounds
    double ub_loss_sum{0};
    int lb1_fallbacks{0};
    std::vector<std::string> notices;
};

/*!
 * Allocate with the scheme's allocator and simulate it. Per-trial sum rates
 * are kept when opts.keep_per_trial is set.
 */
SchemeOutcome evaluate_scheme(Scheme scheme,
                              const ClusteredScenario& base,
                              const SimOptions& opts,
                              const PowerOptions& power_opts = {});

struct LowerBoundSummary
{
    Eigen::MatrixXd per_user;
    double sum{0};
    int fallbacks{0};
};

//! LB1 of every user for the given powers and integer bits.
LowerBoundSummary lb1_rates(const ClusteredScenario& scenario,
                            const Eigen::MatrixXd& power_mw,
                            const Eigen::MatrixXi& bits);

enum class SweepParameter
{
    power_dbm,
    bits,
};

struct ExperimentSpec
{
    //! fig1 .. fig6 or custom
    std::string figure_id{"custom"};
    SweepParameter sweep{SweepParameter::power_dbm};
    std::vector<double> values;
    std::vector<Scheme> schemes;
    //! fig1 only: column-2 permutations (0-based)
    std::vector<std::vector<int>> perms;
    std::string output_path;
};

//! Base configuration of a figure (M=6, N=3, K=2, -50 dBm noise, alpha=4).
RunConfig figure_config(const std::string& figure_id);

//! Sweep, schemes and permutations of a figure; custom gives one point.
ExperimentSpec figure_spec(const std::string& figure_id, const RunConfig& config);

/*!
 * Run every (sweep value, scheme) cell and write the table to `out`:
 * '#' metadata lines, one header row, then comma-separated rows in sweep
 * order.
 */
void run_experiment(const ExperimentSpec& spec, const RunConfig& config,
                    std::ostream& out);

//! Version string baked in at build time.
std::string git_describe();

//! "a:b:step" or "v1,v2,..." into a list of values.
std::vector<double> parse_sweep(const std::string& text);

//! Parse "25,35;27,37;29,39" into a matrix.
Eigen::MatrixXd parse_matrix(const std::string& text);

}  // namespace noma
