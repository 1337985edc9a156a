#pragma once

#include <stdexcept>
#include <string>

namespace noma {

//! Invalid or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error
{
  public:
    explicit ConfigError(const std::string& what, int line = -1)
        : std::runtime_error(what), line_(line)
    {
    }

    //! 1-based line in the source file, or -1 when not file-backed.
    int line() const { return line_; }

  private:
    int line_;
};

//! Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

//! Result not representable in double precision.
class OverflowError : public std::overflow_error
{
  public:
    using std::overflow_error::overflow_error;
};

//! Rank deficiency or a singular system (exit code 3).
class NumericalDegeneracy : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! No feasible allocation left after reducing clusters (exit code 4).
class Infeasible : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace noma
