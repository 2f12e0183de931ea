#pragma once

#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>

#include "ctxroute/errors.hpp"

namespace ctxroute {

// Exact non-negative rational on int64. Count arithmetic only: all ratios here
// come from tallies (numerator <= denominator <= a few million), so overflow
// is not a practical concern after reduction.
struct Ratio {
  long long num = 0;
  long long den = 1;

  static Ratio of(long long n, long long d) {
    if (d <= 0) throw DomainError("Ratio denominator must be positive");
    if (n < 0) throw DomainError("Ratio numerator must be non-negative");
    long long g = std::gcd(n, d);
    if (g == 0) g = 1;
    return Ratio{n / g, d / g};
  }

  Ratio operator*(const Ratio& o) const {
    long long g1 = std::gcd(num, o.den);
    long long g2 = std::gcd(o.num, den);
    long long g1n = g1 == 0 ? 1 : g1;
    long long g2n = g2 == 0 ? 1 : g2;
    return Ratio::of((num / g1n) * (o.num / g2n), (den / g2n) * (o.den / g1n));
  }

  bool operator==(const Ratio& o) const { return num == o.num && den == o.den; }
  bool operator!=(const Ratio& o) const { return !(*this == o); }
  bool operator<(const Ratio& o) const {
    return static_cast<__int128>(num) * o.den < static_cast<__int128>(o.num) * den;
  }
  bool operator<=(const Ratio& o) const { return *this < o || *this == o; }
  bool operator>(const Ratio& o) const { return o < *this; }
  bool operator>=(const Ratio& o) const { return o <= *this; }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  // Per-mille value rounded half-up, computed in integers. 35/122 -> 287.
  long long permille_rounded() const {
    return (2 * num * 1000 + den) / (2 * den);
  }

  // One-decimal percent string, the display convention for all reported
  // percentages: 35/122 -> "28.7".
  std::string percent_1dp() const {
    long long pm = permille_rounded();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%lld", pm / 10, pm % 10);
    return buf;
  }
};

}  // namespace ctxroute
