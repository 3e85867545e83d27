#include "memaudit/time.hpp"

#include "memaudit/error.hpp"

#include <array>
#include <charconv>

#include <fmt/format.h>

namespace memaudit {

using namespace std::chrono;

namespace {

constexpr std::array<std::string_view, 7> kWeekdays = {"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int& out)
{
    if (pos + count > text.size())
        return false;
    for (std::size_t i = pos; i < pos + count; ++i)
        if (text[i] < '0' || text[i] > '9')
            return false;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + count, out);
    return ec == std::errc{} && ptr == text.data() + pos + count;
}

std::optional<UtcTime> compose(int y, int mo, int d, int h, int mi, int s)
{
    if (mo < 1 || mo > 12 || d < 1 || h > 23 || mi > 59 || s > 59)
        return std::nullopt;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok())
        return std::nullopt;
    return UtcTime{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s};
}

struct Civil {
    year_month_day ymd;
    hh_mm_ss<seconds> tod;
    weekday wd;
};

Civil split(UtcTime t)
{
    auto dp = floor<days>(t);
    return Civil{year_month_day{dp}, hh_mm_ss<seconds>{t - dp}, weekday{dp}};
}

}  // namespace

UtcTime parse_rfc1123(std::string_view text)
{
    // "Tue, 20 Jun 2000 18:02:59 GMT" is exactly 29 bytes.
    auto fail = [&] { return Error(Errc::BadDatetime, "not an RFC 1123 datetime: \"" + std::string(text) + "\""); };
    if (text.size() != 29 || text.substr(3, 2) != ", " || text[7] != ' ' || text[11] != ' ' || text[16] != ' '
        || text[19] != ':' || text[22] != ':' || text.substr(25) != " GMT")
        throw fail();

    std::size_t wd = 0;
    while (wd < kWeekdays.size() && kWeekdays[wd] != text.substr(0, 3))
        ++wd;
    std::size_t mon = 0;
    while (mon < kMonths.size() && kMonths[mon] != text.substr(8, 3))
        ++mon;
    if (wd == kWeekdays.size() || mon == kMonths.size())
        throw fail();

    int d = 0, y = 0, h = 0, mi = 0, s = 0;
    if (!read_digits(text, 5, 2, d) || !read_digits(text, 12, 4, y) || !read_digits(text, 17, 2, h)
        || !read_digits(text, 20, 2, mi) || !read_digits(text, 23, 2, s))
        throw fail();

    auto t = compose(y, static_cast<int>(mon) + 1, d, h, mi, s);
    if (!t || weekday{floor<days>(*t)}.c_encoding() != wd)
        throw fail();
    return *t;
}

std::string format_rfc1123(UtcTime t)
{
    auto c = split(t);
    return fmt::format("{}, {:02d} {} {:04d} {:02d}:{:02d}:{:02d} GMT", kWeekdays[c.wd.c_encoding()],
                       static_cast<unsigned>(c.ymd.day()), kMonths[static_cast<unsigned>(c.ymd.month()) - 1],
                       static_cast<int>(c.ymd.year()), c.tod.hours().count(), c.tod.minutes().count(),
                       c.tod.seconds().count());
}

std::optional<UtcTime> parse_timestamp14(std::string_view text)
{
    if (text.size() != 14)
        return std::nullopt;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!read_digits(text, 0, 4, y) || !read_digits(text, 4, 2, mo) || !read_digits(text, 6, 2, d)
        || !read_digits(text, 8, 2, h) || !read_digits(text, 10, 2, mi) || !read_digits(text, 12, 2, s))
        return std::nullopt;
    return compose(y, mo, d, h, mi, s);
}

std::string format_timestamp14(UtcTime t)
{
    auto c = split(t);
    return fmt::format("{:04d}{:02d}{:02d}{:02d}{:02d}{:02d}", static_cast<int>(c.ymd.year()),
                       static_cast<unsigned>(c.ymd.month()), static_cast<unsigned>(c.ymd.day()),
                       c.tod.hours().count(), c.tod.minutes().count(), c.tod.seconds().count());
}

std::string format_iso8601(UtcTime t)
{
    auto c = split(t);
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(c.ymd.year()),
                       static_cast<unsigned>(c.ymd.month()), static_cast<unsigned>(c.ymd.day()),
                       c.tod.hours().count(), c.tod.minutes().count(), c.tod.seconds().count());
}

UtcTime parse_iso8601(std::string_view text)
{
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    bool shape = text.size() == 20 && text[4] == '-' && text[7] == '-' && text[10] == 'T' && text[13] == ':'
                 && text[16] == ':' && text[19] == 'Z';
    if (shape && read_digits(text, 0, 4, y) && read_digits(text, 5, 2, mo) && read_digits(text, 8, 2, d)
        && read_digits(text, 11, 2, h) && read_digits(text, 14, 2, mi) && read_digits(text, 17, 2, s)) {
        if (auto t = compose(y, mo, d, h, mi, s))
            return *t;
    }
    throw Error(Errc::InvalidArgument, "not an ISO 8601 UTC instant: \"" + std::string(text) + "\"");
}

int year_of(UtcTime t)
{
    return static_cast<int>(year_month_day{floor<days>(t)}.year());
}

UtcTime add_months(UtcTime t, int months)
{
    auto dp = floor<days>(t);
    auto tod = t - dp;
    year_month_day ymd{dp};
    year_month_day target = ymd + std::chrono::months{months};
    if (!target.ok())
        target = year_month_day_last{target.year(), month_day_last{target.month()}};
    return UtcTime{sys_days{target}} + tod;
}

}  // namespace memaudit
