#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace mapda {

// Exact arithmetic used by metric predictors and baseline formulas. Core
// construction code sticks to checked 64-bit words; see subsets.hpp.
using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

struct ArithmeticOverflow : std::overflow_error {
  using std::overflow_error::overflow_error;
};

struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A named scheme constraint does not hold (e.g. "L >= C(lambda-t,r) - C(lambda-t-r,r)").
struct ConstraintError : std::runtime_error {
  explicit ConstraintError(std::string constraint)
      : std::runtime_error("constraint violated: " + constraint),
        constraint_(std::move(constraint)) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

// A structural guarantee of the construction failed; signals a bug, not bad input.
struct ConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

struct OracleLimit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArray : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string rat_str(const Rat& r) {
  if (boost::multiprecision::denominator(r) == 1) {
    return boost::multiprecision::numerator(r).str();
  }
  return boost::multiprecision::numerator(r).str() + "/" +
         boost::multiprecision::denominator(r).str();
}

}  // namespace mapda
