// Copyright 2026 The taxisense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>

namespace taxisense {

// Fixed-point money with four fractional digits. All auction arithmetic
// (savings, payments, budget comparisons) runs on integer ticks so that
// tie-breaking and budget checks never depend on floating-point noise.
class Money {
 public:
  static constexpr std::int64_t kTicksPerUnit = 10000;

  constexpr Money() = default;

  static constexpr Money from_ticks(std::int64_t ticks) {
    Money m;
    m.ticks_ = ticks;
    return m;
  }

  static constexpr Money units(std::int64_t whole) {
    return from_ticks(whole * kTicksPerUnit);
  }

  // Rounds half away from zero.
  static Money from_double(double value) {
    if (!std::isfinite(value)) {
      throw std::domain_error("Money::from_double: non-finite value");
    }
    const double scaled = value * static_cast<double>(kTicksPerUnit);
    if (std::fabs(scaled) > 9.0e18) {
      throw std::overflow_error("Money::from_double: value out of range");
    }
    return from_ticks(std::llround(scaled));
  }

  constexpr std::int64_t ticks() const { return ticks_; }

  double to_double() const {
    return static_cast<double>(ticks_) / static_cast<double>(kTicksPerUnit);
  }

  // Exact decimal rendering, e.g. "-12.0500".
  std::string to_string() const {
    const bool negative = ticks_ < 0;
    const std::uint64_t magnitude =
        negative ? static_cast<std::uint64_t>(-(ticks_ + 1)) + 1
                 : static_cast<std::uint64_t>(ticks_);
    const std::uint64_t whole = magnitude / kTicksPerUnit;
    std::string frac = std::to_string(magnitude % kTicksPerUnit);
    frac.insert(0, 4 - frac.size(), '0');
    return (negative ? "-" : "") + std::to_string(whole) + "." + frac;
  }

  constexpr auto operator<=>(const Money&) const = default;

  constexpr Money operator-() const { return from_ticks(-ticks_); }
  constexpr Money& operator+=(Money other) {
    ticks_ += other.ticks_;
    return *this;
  }
  constexpr Money& operator-=(Money other) {
    ticks_ -= other.ticks_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return a += b; }
  friend constexpr Money operator-(Money a, Money b) { return a -= b; }

  friend std::ostream& operator<<(std::ostream& os, Money m) {
    return os << m.to_string();
  }

 private:
  std::int64_t ticks_ = 0;
};

}  // namespace taxisense
