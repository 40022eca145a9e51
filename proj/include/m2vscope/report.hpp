#pragma once

// Report and frame-dump writers. Everything is formatted to strings first
// and committed with an atomic temp-then-rename, so a failed run leaves no
// partial artifacts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "m2vscope/bandwidth.hpp"
#include "m2vscope/error.hpp"
#include "m2vscope/framestore.hpp"

namespace m2vscope {

inline constexpr std::string_view kCsvHeader =
    "frame_index,frame_name,coding_type,bits,decode_time_s,cumulative_bits,vbv_fullness_bits,quant_error_max,"
    "prev_decoded_size_bits";

inline std::string format_seconds(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", t);
    return buf;
}

inline std::string report_csv(const BandwidthReport& r) {
    std::string out(kCsvHeader);
    out += '\n';
    for (std::size_t i = 0; i < r.per_frame.size(); ++i) {
        const FrameStats& f = r.per_frame[i];
        out += std::to_string(f.frame_index);
        out += ',';
        out += f.frame_name;
        out += ',';
        out += coding_type_letter(f.coding_type);
        out += ',';
        out += std::to_string(f.bits);
        out += ',';
        out += format_seconds(f.decode_time);
        out += ',';
        out += std::to_string(r.cumulative_bits[i]);
        out += ',';
        out += std::to_string(f.vbv_fullness_after);
        out += ',';
        out += std::to_string(f.quant_error_max);
        out += ',';
        out += std::to_string(f.prev_decoded_size);
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json report_json_value(const BandwidthReport& r) {
    using nlohmann::ordered_json;
    ordered_json frames = ordered_json::array();
    for (std::size_t i = 0; i < r.per_frame.size(); ++i) {
        const FrameStats& f = r.per_frame[i];
        frames.push_back({
            {"frame_index", f.frame_index},
            {"frame_name", f.frame_name},
            {"coding_type", std::string(1, coding_type_letter(f.coding_type))},
            {"bits", f.bits},
            {"decode_time_s", f.decode_time},
            {"cumulative_bits", r.cumulative_bits[i]},
            {"vbv_fullness_bits", f.vbv_fullness_after},
            {"quant_error_max", f.quant_error_max},
            {"prev_decoded_size_bits", f.prev_decoded_size},
            {"idct_clip_max", f.idct_clip_max},
            {"bit_offset", f.bit_offset},
            {"temporal_reference", f.temporal_reference},
            {"vbv_underflow", f.vbv_underflow},
            {"vbv_overflow", f.vbv_overflow},
            {"concealed_macroblocks", f.concealed_macroblocks},
            {"dropped", f.dropped},
        });
    }
    ordered_json summary = {
        {"frames", r.frames()},
        {"min_bits", r.min_bits},
        {"max_bits", r.max_bits},
        {"avg_bits_rational", {{"numerator", r.total_bits}, {"denominator", r.frames()}}},
        {"avg_bits_rounded", r.avg_bits_rounded},
        {"total_bits", r.total_bits},
        {"bit_rate", r.bit_rate},
        {"frame_period_s", r.frame_period},
        {"flags",
         {{"vbv_underflow", r.any_underflow},
          {"vbv_overflow", r.any_overflow},
          {"concealed_macroblocks", r.concealed_macroblocks}}},
    };
    return ordered_json{
        {"stream", r.stream_label},
        {"width", r.width},
        {"height", r.height},
        {"frame_rate", {{"numerator", r.frame_rate.num}, {"denominator", r.frame_rate.den}}},
        {"vbv_buffer_size_bits", r.vbv_buffer_size},
        {"frames", std::move(frames)},
        {"summary", std::move(summary)},
    };
}

inline std::string report_json(const BandwidthReport& r) { return report_json_value(r).dump(2) + "\n"; }

// -- frame dumps -------------------------------------------------------------

namespace detail {
inline void append_cropped(std::string& out, const Plane& p, int w, int h) {
    for (int y = 0; y < h; ++y) {
        const auto row = p.pixels().subspan(static_cast<std::size_t>(y) * static_cast<std::size_t>(p.width()), static_cast<std::size_t>(w));
        out.append(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

inline void check_geometry(std::span<const FrameHandle> frames) {
    for (const auto& f : frames) {
        if (f->display_width != frames.front()->display_width || f->display_height != frames.front()->display_height) {
            fail(ErrorKind::GeometryMismatch, "frame geometry changes within the dump");
        }
    }
}
}  // namespace detail

/// YUV4MPEG2 stream, 4:2:0, cropped to the display size.
inline std::string y4m_stream(std::span<const FrameHandle> frames, FrameRate rate, bool progressive) {
    detail::check_geometry(frames);
    const int w = frames.empty() ? 0 : frames.front()->display_width;
    const int h = frames.empty() ? 0 : frames.front()->display_height;
    std::string out = "YUV4MPEG2 W" + std::to_string(w) + " H" + std::to_string(h) + " F" + std::to_string(rate.num) + ":" +
                      std::to_string(rate.den) + (progressive ? " Ip" : " It") + " A0:0 C420jpeg\n";
    for (const auto& f : frames) {
        out += "FRAME\n";
        detail::append_cropped(out, f->y, w, h);
        detail::append_cropped(out, f->cb, (w + 1) / 2, (h + 1) / 2);
        detail::append_cropped(out, f->cr, (w + 1) / 2, (h + 1) / 2);
    }
    return out;
}

inline std::string pgm_image(const FramePicture& f) {
    std::string out = "P5\n" + std::to_string(f.display_width) + " " + std::to_string(f.display_height) + "\n255\n";
    detail::append_cropped(out, f.y, f.display_width, f.display_height);
    return out;
}

inline std::string pgm_filename(std::size_t display_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%03zu.pgm", display_index);
    return buf;
}

// -- atomic writes -------------------------------------------------------------

inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            fail(ErrorKind::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorKind::Io, "cannot rename into " + path.string());
    }
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorKind::Io, "read failed for " + path.string());
    return data;
}

}  // namespace m2vscope
