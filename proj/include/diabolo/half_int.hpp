#pragma once

#include <compare>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace diabolo {

// Half-integer quantum number stored as twice its value, so spin labels
// like 5/2 stay exact.
class HalfInt {
  public:
    constexpr HalfInt() = default;

    static constexpr HalfInt from_twice(int twice) { return HalfInt(twice); }

    static HalfInt from_double(double v) {
        const double t = 2.0 * v;
        const long long r = static_cast<long long>(t < 0 ? t - 0.5 : t + 0.5);
        if (t != static_cast<double>(r))
            throw std::invalid_argument("value " + std::to_string(v) + " is not a half-integer");
        return HalfInt(static_cast<int>(r));
    }

    constexpr int twice() const { return twice_; }
    constexpr double value() const { return 0.5 * twice_; }
    constexpr bool is_integer() const { return twice_ % 2 == 0; }

    // "3", "-2", "0.5", "-2.5"
    std::string str() const {
        if (is_integer()) return std::to_string(twice_ / 2);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", value());
        return buf;
    }

    friend constexpr auto operator<=>(HalfInt a, HalfInt b) = default;

    constexpr HalfInt operator-() const { return HalfInt(-twice_); }
    friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return HalfInt(a.twice_ + b.twice_); }
    friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return HalfInt(a.twice_ - b.twice_); }

  private:
    constexpr explicit HalfInt(int twice) : twice_(twice) {}
    int twice_ = 0;
};

}  // namespace diabolo
