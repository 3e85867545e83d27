#pragma once

// Random inputs shared by the unit tests and the acceptance runner.

#include "memaudit/link_format.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <string>
#include <vector>

namespace gen {

using namespace memaudit;
using std::chrono::seconds;

inline memaudit::TimeMap make_timemap(std::vector<UtcTime> times)
{
    std::vector<MementoRecord> ms;
    for (std::size_t i = 0; i < times.size(); ++i)
        ms.push_back({"http://arc.example/web/" + format_timestamp14(times[i]) + "/http://s.example/#"
                          + std::to_string(i),
                      times[i],
                      {MementoRel::Memento}});
    std::sort(ms.begin(), ms.end(), memento_order);
    return TimeMap{OriginalUri::parse("http://s.example/"), "http://arc.example/tg", "http://arc.example/tm",
                   std::nullopt, ms};
}

inline std::vector<memaudit::UtcTime> random_times(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> size(1, 5000);
    std::uniform_int_distribution<long long> start(820454400LL, 1300000000LL);  // 1996..2011
    std::uniform_int_distribution<int> shape(0, 3);
    int n = size(rng);
    long long base = start(rng);
    std::vector<UtcTime> out;
    switch (shape(rng)) {
    case 0: {  // uniform over up to 20 years
        std::uniform_int_distribution<long long> off(0, 20LL * 365 * 86400);
        for (int i = 0; i < n; ++i)
            out.emplace_back(seconds{base + off(rng)});
        break;
    }
    case 1: {  // bursts of same-day captures with quiet years between
        std::uniform_int_distribution<int> burst(1, 60);
        std::uniform_int_distribution<long long> gap(3600, 3LL * 365 * 86400);
        std::uniform_int_distribution<long long> within(0, 86400);
        long long t = base;
        while (static_cast<int>(out.size()) < n) {
            t += gap(rng);
            int b = burst(rng);
            for (int i = 0; i < b && static_cast<int>(out.size()) < n; ++i)
                out.emplace_back(seconds{t + within(rng)});
        }
        break;
    }
    case 2: {  // near-annual with jitter and duplicate seconds
        std::normal_distribution<double> jitter(0, 20 * 86400);
        for (int i = 0; i < n; ++i) {
            long long t = base + (i % 25) * 31556952LL + static_cast<long long>(jitter(rng));
            out.emplace_back(seconds{t});
            if (rng() % 7 == 0 && static_cast<int>(out.size()) < n)
                out.emplace_back(seconds{t});
        }
        out.resize(static_cast<std::size_t>(n));
        break;
    }
    default: {  // dense: many captures per day over a few years
        std::uniform_int_distribution<long long> off(0, 4LL * 365 * 86400);
        for (int i = 0; i < n; ++i)
            out.emplace_back(seconds{base + off(rng)});
        break;
    }
    }
    return out;
}

/// A 14-digit timestamp and an original URI with assorted hosts, ports,
/// escapes and queries.
struct Pair {
    std::string timestamp;
    std::string original;
};

inline Pair random_pair(std::mt19937& rng)
{
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto two = [](int v) { return (v < 10 ? "0" : "") + std::to_string(v); };
    int year = pick(1996, 2030), month = pick(1, 12), day = pick(1, 28);
    std::string ts = std::to_string(year) + two(month) + two(day) + two(pick(0, 23)) + two(pick(0, 59))
                     + two(pick(0, 59));

    static const char* hosts[] = {"google.com", "www.cnn.com", "a.example", "xn--bcher-kva.example", "10.0.0.7",
                                  "sub.domain.example.org"};
    static const char* segs[] = {"", "index.html", "a b", "%7Euser", "img", "x.png", "dir", "q;p", "~tilde",
                                 "%E2%82%AC", "12345678901234", "web", "..."};
    std::string original = (pick(0, 3) == 0 ? "https://" : "http://") + std::string(hosts[pick(0, 5)]);
    if (pick(0, 4) == 0)
        original += ":" + std::to_string(pick(1, 65535));
    int depth = pick(0, 4);
    if (depth == 0 && pick(0, 1))
        original += "/";
    for (int i = 0; i < depth; ++i) {
        std::string seg = segs[pick(0, 12)];
        if (seg == "a b")
            seg = "a%20b";
        original += "/" + seg;
    }
    if (pick(0, 3) == 0)
        original += "?q=" + std::to_string(pick(0, 999)) + "&r=http://x.example/";
    return {ts, original};
}

/// Counts for the drop detector: length window+1..20, values 0..100, and a
/// planted low run in about half the series.
struct DropCase {
    std::vector<int> counts;
    double threshold;
    int window;
};

inline DropCase random_drop_case(std::mt19937& rng)
{
    DropCase d;
    d.window = 1 + static_cast<int>(rng() % 3);
    d.threshold = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    int n = d.window + 1 + static_cast<int>(rng() % static_cast<unsigned>(20 - d.window));
    d.counts.resize(static_cast<std::size_t>(n));
    bool lull = rng() % 2 == 0;
    for (int i = 0; i < n; ++i)
        d.counts[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 101);
    if (lull) {
        int start = 1 + static_cast<int>(rng() % static_cast<unsigned>(n - 1));
        int len = 1 + static_cast<int>(rng() % 5);
        for (int i = start; i < std::min(n, start + len); ++i)
            d.counts[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 15);
    }
    return d;
}

}  // namespace gen
