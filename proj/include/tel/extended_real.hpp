#pragma once

#include <compare>
#include <stdexcept>
#include <string>

namespace tel {

/// A real number or −∞. Only comparisons are defined on it; arithmetic has to
/// go through finite() explicitly, so a −∞ never leaks into a sum.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double finite) : value_(finite) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtendedReal neg_inf() {
    ExtendedReal r;
    r.neg_inf_ = true;
    return r;
  }

  [[nodiscard]] constexpr bool is_neg_inf() const noexcept { return neg_inf_; }
  [[nodiscard]] double finite() const {
    if (neg_inf_) throw std::logic_error("arithmetic on a -inf tree entropy");
    return value_;
  }

  friend constexpr std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.neg_inf_ || b.neg_inf_) {
      if (a.neg_inf_ && b.neg_inf_) return std::partial_ordering::equivalent;
      return a.neg_inf_ ? std::partial_ordering::less : std::partial_ordering::greater;
    }
    return a.value_ <=> b.value_;
  }
  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return (a <=> b) == std::partial_ordering::equivalent;
  }

  [[nodiscard]] std::string to_string() const;

 private:
  double value_ = 0.0;
  bool neg_inf_ = false;
};

}  // namespace tel
