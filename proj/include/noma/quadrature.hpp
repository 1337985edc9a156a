#pragma once

#include <functional>

namespace noma::quad {

struct Result
{
    double value{0};
    double abs_error{0};
    int evaluations{0};
};

struct Options
{
    double abs_tol{1e-14};
    double rel_tol{1e-12};
    int max_intervals{2000};
};

//! Globally adaptive 7/15-point Gauss-Kronrod on a finite interval.
Result gauss_kronrod(const std::function<double(double)>& f,
                     double a,
                     double b,
                     const Options& opts = {});

}  // namespace noma::quad
