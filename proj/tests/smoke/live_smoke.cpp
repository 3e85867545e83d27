// Live smoke check against a public Memento endpoint. Exits 77 (skipped) when
// the network or the endpoint is unavailable; holdings drift, so only "at
// least one memento parses" is asserted.

#include "memaudit/error.hpp"
#include "memaudit/memento_client.hpp"

#include <cstdlib>
#include <iostream>

using namespace memaudit;

int main()
{
    const char* uri = std::getenv("MEMAUDIT_SMOKE_URI");
    const char* tmpl = std::getenv("MEMAUDIT_SMOKE_TIMEMAP");
    ArchiveEndpoint ep;
    ep.timemap_template = tmpl ? tmpl : "https://web.archive.org/web/timemap/link/{original}";
    ep.replay_template = "https://web.archive.org/web/{timestamp}/{original}";
    ep.archive_hosts = {"web.archive.org"};

    HttpOptions opts;
    opts.timeout = std::chrono::seconds(60);
    try {
        HttpClient client(opts);
        auto tm = fetch_timemap(client, OriginalUri::parse(uri ? uri : "http://www.cnn.com/"), ep);
        if (tm.mementos.empty()) {
            std::cout << "FAIL live TimeMap lists no mementos\n";
            return 1;
        }
        std::cout << "PASS live TimeMap: " << tm.mementos.size() << " mementos\n";
        return 0;
    } catch (const Error& e) {
        if (e.code() == Errc::NetworkError || e.code() == Errc::NotArchived || e.code() == Errc::RobotsExcluded) {
            std::cout << "SKIP live endpoint unavailable: " << e.what() << "\n";
            return 77;
        }
        std::cout << "FAIL " << e.what() << "\n";
        return 1;
    }
}
