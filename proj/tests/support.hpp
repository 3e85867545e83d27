#pragma once

#include "memaudit/fixture_archive.hpp"
#include "memaudit/http.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#ifndef MEMAUDIT_FIXTURE_DIR
#error "MEMAUDIT_FIXTURE_DIR must point at the fixtures directory"
#endif

namespace testsupport {

inline std::filesystem::path fixture_dir()
{
    return MEMAUDIT_FIXTURE_DIR;
}

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t")
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path()
                / ("memaudit-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// The fixture archive serving every authored site, plus a client wired to it.
struct RunningArchive {
    memaudit::FixtureArchive archive;
    std::shared_ptr<const memaudit::HttpClient> client;

    RunningArchive() : archive(memaudit::load_fixture_manifest(fixture_dir()))
    {
        archive.start();
        client = std::make_shared<memaudit::HttpClient>(archive.client_options());
    }
    ~RunningArchive() { archive.stop(); }
};

}  // namespace testsupport
