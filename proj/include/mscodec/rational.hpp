#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace mscodec {

using Integer = boost::multiprecision::cpp_int;

// Exact rational in canonical form: gcd(num, den) = 1, den > 0. Canonical
// form is maintained by the backing type on every operation.
using Rational = boost::multiprecision::cpp_rational;

// Raised on malformed external input (files, CLI arguments, JSON fields).
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a structure fails a mathematical precondition (not a parse
// problem): bad metric, modulus violation, malformed encoded space.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an oracle returns answers at two precisions that cannot be
// approximations of one and the same value.
struct incoherent_oracle_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Rational rat(long num, long den = 1) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  return Rational(num, den);
}

// 2^e for any integer e, including negative exponents.
inline Rational pow2(long e) {
  Integer p = Integer(1) << static_cast<unsigned>(e < 0 ? -e : e);
  return e < 0 ? Rational(1, p) : Rational(p);
}

// Accepts "p" or "p/q" with optional leading '-' on p; q must be positive.
inline Rational parse_rational(const std::string& text) {
  auto is_digits = [](const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  };
  std::string num = text, den = "1";
  if (auto slash = text.find('/'); slash != std::string::npos) {
    num = text.substr(0, slash);
    den = text.substr(slash + 1);
  }
  bool neg = !num.empty() && num[0] == '-';
  if (neg) num = num.substr(1);
  if (!is_digits(num) || !is_digits(den))
    throw input_error("malformed rational: \"" + text + "\"");
  Integer p(num), q(den);
  if (q == 0) throw input_error("rational with zero denominator: \"" + text + "\"");
  Rational r(p, q);
  return neg ? Rational(-r) : r;
}

inline std::string format_rational(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

// Dyadic means the canonical denominator is a power of two.
inline bool is_dyadic(const Rational& r) {
  Integer d = denominator(r);
  return d > 0 && (d & (d - 1)) == 0;
}

// Nearest multiple of 2^-k, ties rounded up. Error is at most 2^-(k+1).
inline Rational round_to_dyadic(const Rational& v, unsigned k) {
  Rational scaled = v * pow2(static_cast<long>(k)) + Rational(1, 2);
  Integer fl = numerator(scaled) / denominator(scaled);
  // cpp_int division truncates toward zero; fix up for negatives.
  if (scaled < 0 && fl * denominator(scaled) != numerator(scaled)) fl -= 1;
  return Rational(fl) * pow2(-static_cast<long>(k));
}

inline Rational rat_abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline Rational rat_min(const Rational& a, const Rational& b) { return a < b ? a : b; }
inline Rational rat_max(const Rational& a, const Rational& b) { return a < b ? b : a; }

// max{a - b, 0}, the truncated subtraction written a -. b elsewhere.
inline Rational trunc_sub(const Rational& a, const Rational& b) {
  return a > b ? Rational(a - b) : Rational(0);
}

// Largest n >= 0 with 2^-n >= v, for 0 < v <= 1. Used when locating a value
// against the scale ladder {2^-n}.
inline unsigned floor_log2_inv(const Rational& v) {
  if (v <= 0 || v > 1) throw std::invalid_argument("floor_log2_inv domain");
  unsigned n = 0;
  Rational step(1);
  while (step / 2 >= v) {
    step /= 2;
    ++n;
  }
  return n;
}

}  // namespace mscodec
