#pragma once

#include "iclmine/config.hpp"

#include <filesystem>
#include <string>

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::filesystem::path data_dir();
std::filesystem::path toy_dir();

/// The bundled toy config with outputs and cache redirected under `root`.
iclmine::config::PipelineConfig toy_config(const std::filesystem::path& root);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace testutil
