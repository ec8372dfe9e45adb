#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace repcount {

/// Arbitrary-precision nonnegative repair count.
using BigCount = boost::multiprecision::cpp_int;

/// Exact rational; relative frequencies live in [0,1].
using ExactRatio = boost::multiprecision::cpp_rational;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation does not hold (e.g. no LHS chain).
struct PreconditionError : Error {
  using Error::Error;
};

inline BigCount pow2(std::uint64_t exp) {
  BigCount r = 1;
  r <<= exp;
  return r;
}

inline BigCount ratio_numer(const ExactRatio& q) { return boost::multiprecision::numerator(q); }
inline BigCount ratio_denom(const ExactRatio& q) { return boost::multiprecision::denominator(q); }

/// Nearest integer, halves rounded up. Inputs are nonnegative.
inline BigCount round_nearest(const ExactRatio& q) {
  if (q < 0) throw Error("round_nearest: negative value");
  BigCount num = ratio_numer(q);
  BigCount den = ratio_denom(q);
  return (2 * num + den) / (2 * den);
}

/// Fixed-width decimal rendering of an exact ratio, for display only.
inline std::string decimal_approx(const ExactRatio& q, int digits = 15) {
  using Float = boost::multiprecision::cpp_bin_float_50;
  Float f = Float(ratio_numer(q)) / Float(ratio_denom(q));
  std::ostringstream os;
  os.precision(digits);
  os << f;
  return os.str();
}

/// Seedable random stream. Big integers below a bound are drawn by
/// rejection sampling on bit strings, so there is no modulo bias.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  BigCount bits(unsigned nbits) {
    BigCount r = 0;
    unsigned remaining = nbits;
    while (remaining >= 64) {
      r <<= 64;
      r |= BigCount(gen_());
      remaining -= 64;
    }
    if (remaining > 0) {
      r <<= remaining;
      r |= BigCount(gen_() >> (64 - remaining));
    }
    return r;
  }

  /// Uniform integer in [0, bound).
  BigCount below(const BigCount& bound) {
    if (bound <= 0) throw Error("Rng::below: bound must be positive");
    if (bound == 1) return 0;
    const unsigned nbits = static_cast<unsigned>(boost::multiprecision::msb(BigCount(bound - 1))) + 1;
    for (;;) {
      BigCount r = bits(nbits);
      if (r < bound) return r;
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace repcount
