#include "test_util.hpp"

#include "iclmine/io.hpp"

#include <atomic>
#include <fstream>
#include <unistd.h>

namespace testutil {

namespace fs = std::filesystem;

TempDir::TempDir()
{
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() / ("iclmine-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path data_dir()
{
    return ICLMINE_TEST_DATA;
}

fs::path toy_dir()
{
    return data_dir() / "toy";
}

iclmine::config::PipelineConfig toy_config(const fs::path& root)
{
    auto c = iclmine::config::load(toy_dir() / "toy.ini");
    c.output_dir = root / "runs";
    c.backend.cache_dir = root / "cache";
    return c;
}

void write_text(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_text(const fs::path& path)
{
    return iclmine::io::read_file(path);
}

}  // namespace testutil
