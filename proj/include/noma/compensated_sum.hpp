#pragma once

#include <cmath>
#include <limits>

namespace noma {

/*!
 * Neumaier-compensated accumulator.
 *
 * Besides the sum it tracks the sum of magnitudes, which bounds the
 * rounding error picked up by the terms themselves when each carries a
 * relative error of a few ulps.
 */
class CompensatedSum
{
  public:
    void add(double x)
    {
        double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        abs_ += std::fabs(x);
    }

    CompensatedSum& operator+=(double x)
    {
        this->add(x);
        return *this;
    }

    double value() const { return sum_ + comp_; }
    double abs_sum() const { return abs_; }

    //! Error bound assuming each term has relative error <= ulps * eps.
    double error_bound(double ulps = 4) const
    {
        return ulps * std::numeric_limits<double>::epsilon() * abs_;
    }

  private:
    double sum_{0};
    double comp_{0};
    double abs_{0};
};

}  // namespace noma
