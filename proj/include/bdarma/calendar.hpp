#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace bdarma {

// A calendar month. Ordered and convertible to a month ordinal so month
// arithmetic is integer arithmetic.
struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    int ordinal() const { return year * 12 + (month - 1); }
    static YearMonth from_ordinal(int ordinal);

    YearMonth plus_months(int n) const { return from_ordinal(ordinal() + n); }
    int months_since(const YearMonth& other) const { return ordinal() - other.ordinal(); }

    // Accepts "YYYY-MM" or "YYYY-MM-DD" (day ignored). Throws ParseError.
    static YearMonth parse(std::string_view text);
    std::string to_string() const;

    auto operator<=>(const YearMonth&) const = default;
};

}  // namespace bdarma
