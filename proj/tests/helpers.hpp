#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "wildfire/text.hpp"

namespace wildfire::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("wildfire-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string operator/(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Runs the CLI binary, capturing stdout into `out`. Returns the exit status.
inline int run_cli_binary(const std::string& args, std::string* out = nullptr) {
    const std::string capture = (std::filesystem::temp_directory_path() /
                                 ("wildfire-cli-out-" + std::to_string(::getpid()) + ".txt"))
                                    .string();
    const std::string cmd = std::string(WILDFIRE_CLI_PATH) + " " + args + " > " + capture + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (out) *out = read_file(capture);
    std::filesystem::remove(capture);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace wildfire::testing
