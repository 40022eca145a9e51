#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "m2vscope/decoder.hpp"
#include "m2vscope/fixtures.hpp"

namespace m2vscope::test {

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline fixtures::FixtureSpec fixture_spec(const std::string& name) {
    return fixtures::parse_fixture_spec(read_text(std::filesystem::path(M2VSCOPE_FIXTURE_DIR) / (name + ".fix")));
}

inline fixtures::GeneratedFixture fixture(const std::string& name) { return fixtures::generate(fixture_spec(name)); }

/// Largest absolute sample difference; -1 on a size mismatch.
inline int max_abs_diff(const Plane& a, const Plane& b) {
    if (a.width() != b.width() || a.height() != b.height()) return -1;
    int m = 0;
    for (std::size_t i = 0; i < a.pixels().size(); ++i) m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
    return m;
}

inline int max_abs_diff(const FramePicture& got, const fixtures::ExpectedFrame& want) {
    int m = 0;
    for (const auto& [g, w] : {std::pair{&got.y, &want.y}, std::pair{&got.cb, &want.cb}, std::pair{&got.cr, &want.cr}}) {
        const int d = max_abs_diff(*g, *w);
        if (d < 0) return -1;
        m = std::max(m, d);
    }
    return m;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("m2vscope_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Kind of the m2vscope::Error thrown by `f`, or nullopt when it returns.
template <typename F>
std::optional<ErrorKind> error_kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

/// Runs the CLI binary and returns its exit status.
inline int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + M2VSCOPE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

}  // namespace m2vscope::test
