#include "bdarma/calendar.hpp"

#include "bdarma/errors.hpp"

#include <charconv>
#include <cstdio>

namespace bdarma {

YearMonth YearMonth::from_ordinal(int ordinal) {
    int year = ordinal / 12;
    int month0 = ordinal % 12;
    if (month0 < 0) {
        month0 += 12;
        year -= 1;
    }
    return {year, month0 + 1};
}

YearMonth YearMonth::parse(std::string_view text) {
    auto fail = [&]() -> YearMonth {
        throw ParseError("invalid month '" + std::string(text) + "' (expected YYYY-MM)");
    };
    if (text.size() != 7 && text.size() != 10) return fail();
    if (text[4] != '-') return fail();
    if (text.size() == 10 && text[7] != '-') return fail();
    int year = 0, month = 0;
    auto [p1, e1] = std::from_chars(text.data(), text.data() + 4, year);
    if (e1 != std::errc{} || p1 != text.data() + 4) return fail();
    auto [p2, e2] = std::from_chars(text.data() + 5, text.data() + 7, month);
    if (e2 != std::errc{} || p2 != text.data() + 7) return fail();
    if (month < 1 || month > 12) return fail();
    return {year, month};
}

std::string YearMonth::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

}  // namespace bdarma
