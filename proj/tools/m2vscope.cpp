// Bandwidth characterization of an MPEG-2 video elementary stream.

#include <cstdlib>
#include <iostream>
#include <map>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "m2vscope/cli.hpp"

namespace {

spdlog::level::level_enum to_spdlog(m2vscope::LogLevel level) {
    using m2vscope::LogLevel;
    switch (level) {
        case LogLevel::Trace: return spdlog::level::trace;
        case LogLevel::Debug: return spdlog::level::debug;
        case LogLevel::Info: return spdlog::level::info;
        case LogLevel::Warn: return spdlog::level::warn;
        case LogLevel::Error: return spdlog::level::err;
        case LogLevel::Off: return spdlog::level::off;
    }
    return spdlog::level::info;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace m2vscope;
    CLI::App app{"Per-frame bandwidth, timing and VBV report for MPEG-2 video streams"};

    RunConfig cfg;
    std::string input, report_path, dump_path;
    std::string log_level = "info";
    if (const char* env = std::getenv("M2VSCOPE_LOG")) log_level = env;
    ReportFormat report = ReportFormat::Csv;
    FrameDump dump = FrameDump::None;
    std::int64_t max_frames = 0;

    const std::map<std::string, ReportFormat> report_names{
        {"csv", ReportFormat::Csv}, {"json", ReportFormat::Json}, {"both", ReportFormat::Both}};
    const std::map<std::string, FrameDump> dump_names{{"none", FrameDump::None}, {"y4m", FrameDump::Y4m}, {"pgm", FrameDump::Pgm}};

    app.add_option("--input", input, "MPEG-2 video elementary stream")->required();
    app.add_option("--report", report, "Report format")->transform(CLI::CheckedTransformer(report_names, CLI::ignore_case));
    app.add_option("--report-path", report_path, "Report file (default: next to the input)");
    app.add_option("--frame-dump", dump, "Decoded frame output")->transform(CLI::CheckedTransformer(dump_names, CLI::ignore_case));
    app.add_option("--frame-dump-path", dump_path, "Y4M file, or directory for PGM frames");
    app.add_option("--max-frames", max_frames, "Stop after N frames")->check(CLI::PositiveNumber);
    app.add_flag("--strict", cfg.strict, "Abort on the first stream error instead of concealing");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off (env M2VSCOPE_LOG)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help exits 0; every other parse failure is a usage error.
        return app.exit(e) == 0 ? exit_code::ok : exit_code::usage;
    }

    const auto level = parse_log_level(log_level);
    if (!level) {
        std::cerr << "unknown log level: " << log_level << "\n";
        return exit_code::usage;
    }
    cfg.input_path = input;
    cfg.report_format = report;
    cfg.report_path = report_path;
    cfg.frame_dump = dump;
    cfg.frame_dump_path = dump_path;
    if (max_frames > 0) cfg.max_frames = max_frames;
    cfg.log_level = *level;

    auto logger = spdlog::stderr_color_mt("m2vscope");
    logger->set_level(to_spdlog(cfg.log_level));
    logger->set_pattern("[%l] %v");

    const RunOutcome outcome =
        run(cfg, [&](LogLevel l, std::string_view msg) { logger->log(to_spdlog(l), "{}", msg); });
    if (outcome.exit_code == exit_code::ok) std::cout << outcome.summary << "\n";
    return outcome.exit_code;
}
