// Writes the stream described by a fixture spec file, plus optionally the
// expected decoded frames as Y4M.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "m2vscope/fixtures.hpp"
#include "m2vscope/report.hpp"

int main(int argc, char** argv) {
    using namespace m2vscope;
    CLI::App app{"Generate an MPEG-2 test stream from a fixture spec"};
    std::string spec_path, out_path, expected_path;
    app.add_option("spec", spec_path, "Fixture spec file")->required()->check(CLI::ExistingFile);
    app.add_option("-o,--output", out_path, "Output .m2v")->required();
    app.add_option("--expected-y4m", expected_path, "Also write the expected display frames");
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(spec_path);
        std::stringstream text;
        text << in.rdbuf();
        const fixtures::FixtureSpec spec = fixtures::parse_fixture_spec(text.str());
        const fixtures::GeneratedFixture fx = fixtures::generate(spec);
        write_file_atomic(out_path, std::string_view(reinterpret_cast<const char*>(fx.bytes.data()), fx.bytes.size()));
        if (!expected_path.empty()) {
            std::vector<FrameHandle> frames;
            for (const auto& e : fx.display) {
                auto f = std::make_shared<FramePicture>();
                f->y = e.y;
                f->cb = e.cb;
                f->cr = e.cr;
                f->display_width = spec.width;
                f->display_height = spec.height;
                frames.push_back(std::move(f));
            }
            write_file_atomic(expected_path, y4m_stream(frames, frame_rate_for_code(spec.frame_rate_code), spec.progressive_sequence));
        }
        std::cout << out_path << ": " << fx.bytes.size() << " bytes, " << fx.frame_bits.size() << " frames\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
