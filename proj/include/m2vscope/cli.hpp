#pragma once

// End-to-end run: read a file, decode, write reports and frame dumps.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "m2vscope/decoder.hpp"
#include "m2vscope/report.hpp"

namespace m2vscope {

enum class ReportFormat { Csv, Json, Both };
enum class FrameDump { None, Y4m, Pgm };
enum class LogLevel { Trace, Debug, Info, Warn, Error, Off };

inline std::optional<LogLevel> parse_log_level(std::string_view s) {
    if (s == "trace") return LogLevel::Trace;
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    if (s == "warn" || s == "warning") return LogLevel::Warn;
    if (s == "error") return LogLevel::Error;
    if (s == "off") return LogLevel::Off;
    return std::nullopt;
}

struct RunConfig {
    std::filesystem::path input_path;
    ReportFormat report_format = ReportFormat::Csv;
    std::filesystem::path report_path;  // empty: next to the input
    FrameDump frame_dump = FrameDump::None;
    std::filesystem::path frame_dump_path;
    std::optional<std::int64_t> max_frames;
    bool strict = false;
    LogLevel log_level = LogLevel::Info;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int malformed = 2;
inline constexpr int unsupported = 3;
inline constexpr int io = 4;
}  // namespace exit_code

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UnsupportedStream: return exit_code::unsupported;
        case ErrorKind::Io: return exit_code::io;
        case ErrorKind::SpecError: return exit_code::usage;
        default: return exit_code::malformed;
    }
}

using LogSink = std::function<void(LogLevel, std::string_view)>;

struct RunOutcome {
    int exit_code = exit_code::ok;
    std::string summary;
    std::optional<BandwidthReport> report;
    std::vector<std::filesystem::path> written;
};

namespace detail {

inline std::filesystem::path report_target(const RunConfig& cfg, std::string_view ext) {
    std::filesystem::path base = cfg.report_path.empty() ? cfg.input_path : cfg.report_path;
    const std::string e = base.extension().string();
    const bool both = cfg.report_format == ReportFormat::Both;
    if (cfg.report_path.empty() || (both && (e == ".csv" || e == ".json"))) base.replace_extension(ext);
    return base;
}

inline void validate(const RunConfig& cfg) {
    if (cfg.input_path.empty()) fail(ErrorKind::SpecError, "input path is empty");
    if (cfg.max_frames && *cfg.max_frames < 1) fail(ErrorKind::SpecError, "max_frames must be at least 1");
    if (cfg.frame_dump != FrameDump::None && cfg.frame_dump_path.empty()) {
        fail(ErrorKind::SpecError, "frame dump requested without a path");
    }
}

}  // namespace detail

inline RunOutcome run(const RunConfig& cfg, const LogSink& log = {}) {
    auto emit = [&](LogLevel level, const std::string& msg) {
        if (log && level >= cfg.log_level && cfg.log_level != LogLevel::Off) log(level, msg);
    };
    RunOutcome outcome;
    try {
        detail::validate(cfg);
        const std::vector<std::uint8_t> bytes = read_file(cfg.input_path);
        emit(LogLevel::Debug, "read " + std::to_string(bytes.size()) + " bytes from " + cfg.input_path.string());

        DecodeOptions opts;
        opts.strict = cfg.strict;
        opts.max_frames = cfg.max_frames;
        opts.keep_display_frames = cfg.frame_dump != FrameDump::None;

        const auto t0 = std::chrono::steady_clock::now();
        DecodeResult result = decode_stream(bytes, opts);
        const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& w : result.warnings) emit(LogLevel::Warn, w);

        BandwidthReport report = result.report(cfg.input_path.filename().string());

        // Everything is formatted before anything is committed.
        std::vector<std::pair<std::filesystem::path, std::string>> artifacts;
        if (cfg.report_format != ReportFormat::Json) artifacts.emplace_back(detail::report_target(cfg, ".csv"), report_csv(report));
        if (cfg.report_format != ReportFormat::Csv) artifacts.emplace_back(detail::report_target(cfg, ".json"), report_json(report));
        if (cfg.frame_dump == FrameDump::Y4m) {
            artifacts.emplace_back(cfg.frame_dump_path,
                                   y4m_stream(result.display, result.sequence.frame_rate(), result.sequence.progressive_sequence));
        } else if (cfg.frame_dump == FrameDump::Pgm) {
            std::error_code ec;
            std::filesystem::create_directories(cfg.frame_dump_path, ec);
            if (ec) fail(ErrorKind::Io, "cannot create " + cfg.frame_dump_path.string());
            for (std::size_t i = 0; i < result.display.size(); ++i) {
                artifacts.emplace_back(cfg.frame_dump_path / pgm_filename(i), pgm_image(*result.display[i]));
            }
        }
        for (const auto& [path, content] : artifacts) {
            write_file_atomic(path, content);
            outcome.written.push_back(path);
            emit(LogLevel::Debug, "wrote " + path.string());
        }

        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "frames=%zu min_bits=%lld avg_bits=%lld max_bits=%lld vbv_underflow=%s vbv_overflow=%s "
                      "concealed_mbs=%lld decode_ms=%.1f",
                      report.frames(), static_cast<long long>(report.min_bits), static_cast<long long>(report.avg_bits_rounded),
                      static_cast<long long>(report.max_bits), report.any_underflow ? "yes" : "no",
                      report.any_overflow ? "yes" : "no", static_cast<long long>(result.counters.concealed_macroblocks), elapsed);
        outcome.summary = buf;
        outcome.report = std::move(report);
        return outcome;
    } catch (const Error& e) {
        outcome.exit_code = exit_code_for(e.kind());
        outcome.summary = std::string("error: ") + e.what();
        emit(LogLevel::Error, outcome.summary);
        return outcome;
    }
}

}  // namespace m2vscope
