#pragma once

// Sequence, extension, GOP, picture and slice header parsing.

#include <array>
#include <cstdint>
#include <sstream>
#include <string>

#include "m2vscope/bitio.hpp"
#include "m2vscope/error.hpp"
#include "m2vscope/tables.hpp"

namespace m2vscope {

/// 8x8 weights in row-major (natural) order.
using QuantMatrix = std::array<std::uint8_t, 64>;

/// Parses whitespace-separated integers, as used by the matrix and scan
/// text tables.
inline std::array<int, 64> parse_int64_table(std::string_view text) {
    std::array<int, 64> out{};
    std::istringstream in{std::string(text)};
    for (std::size_t i = 0; i < 64; ++i) {
        if (!(in >> out[i])) fail(ErrorKind::SpecError, "table has fewer than 64 entries");
    }
    int extra = 0;
    if (in >> extra) fail(ErrorKind::SpecError, "table has more than 64 entries");
    return out;
}

inline const std::array<int, 64>& zigzag_order() {
    static const auto t = parse_int64_table(tables::zigzag_scan);
    return t;
}

inline const std::array<int, 64>& alternate_order() {
    static const auto t = parse_int64_table(tables::alternate_scan);
    return t;
}

inline QuantMatrix default_intra_matrix() {
    static const auto t = parse_int64_table(tables::default_intra_matrix);
    QuantMatrix m{};
    for (std::size_t i = 0; i < 64; ++i) m[i] = static_cast<std::uint8_t>(t[i]);
    return m;
}

inline QuantMatrix default_non_intra_matrix() {
    QuantMatrix m{};
    m.fill(tables::default_non_intra_weight);
    return m;
}

struct FrameRate {
    std::int64_t num = 25;
    std::int64_t den = 1;

    double period_seconds() const { return static_cast<double>(den) / static_cast<double>(num); }
};

inline FrameRate frame_rate_for_code(int code) {
    switch (code) {
        case 1: return {24000, 1001};
        case 2: return {24, 1};
        case 3: return {25, 1};
        case 4: return {30000, 1001};
        case 5: return {30, 1};
        case 6: return {50, 1};
        case 7: return {60000, 1001};
        case 8: return {60, 1};
        default: fail(ErrorKind::MalformedHeader, "frame_rate_code " + std::to_string(code));
    }
}

inline constexpr int chroma_format_420 = 1;

struct SequenceInfo {
    int horizontal_size = 0;
    int vertical_size = 0;
    int aspect_ratio_code = 0;
    int frame_rate_code = 0;
    std::int64_t bit_rate = 0;          // bits/second
    std::int64_t vbv_buffer_size = 0;   // bits
    bool constrained_parameters = false;
    QuantMatrix intra_quant_matrix = default_intra_matrix();
    QuantMatrix non_intra_quant_matrix = default_non_intra_matrix();
    bool has_extension = false;
    int profile_and_level = 0;
    bool progressive_sequence = true;
    int chroma_format = chroma_format_420;
    bool low_delay = false;
    int frame_rate_extension_n = 0;
    int frame_rate_extension_d = 0;

    // Raw fields kept so extensions can extend them.
    std::uint32_t bit_rate_value = 0;
    std::uint32_t vbv_buffer_size_value = 0;

    FrameRate frame_rate() const {
        FrameRate r = frame_rate_for_code(frame_rate_code);
        r.num *= frame_rate_extension_n + 1;
        r.den *= frame_rate_extension_d + 1;
        return r;
    }
    double frame_period() const { return frame_rate().period_seconds(); }

    int mb_width() const { return (horizontal_size + 15) / 16; }
    int mb_height() const {
        return progressive_sequence ? (vertical_size + 15) / 16 : 2 * ((vertical_size + 31) / 32);
    }
    /// Decoded plane size (macroblock aligned).
    int coded_width() const { return mb_width() * 16; }
    int coded_height() const { return mb_height() * 16; }
};

struct GopInfo {
    bool drop_frame = false;
    int hours = 0;
    int minutes = 0;
    int seconds = 0;
    int pictures = 0;
    bool closed_gop = false;
    bool broken_link = false;

    friend bool operator==(const GopInfo&, const GopInfo&) = default;
};

enum class CodingType { I = 1, P = 2, B = 3 };

inline char coding_type_letter(CodingType t) {
    switch (t) {
        case CodingType::I: return 'I';
        case CodingType::P: return 'P';
        case CodingType::B: return 'B';
    }
    return '?';
}

enum class PictureStructure { TopField = 1, BottomField = 2, FramePicture = 3 };

inline constexpr int f_code_none = 15;

struct PictureInfo {
    int temporal_reference = 0;
    CodingType coding_type = CodingType::I;
    int vbv_delay = 0xFFFF;
    bool full_pel_forward = false;
    bool full_pel_backward = false;
    int legacy_forward_f_code = 0;
    int legacy_backward_f_code = 0;

    // Picture coding extension.
    bool has_coding_extension = false;
    int f_code[2][2] = {{f_code_none, f_code_none}, {f_code_none, f_code_none}};  // [forward/backward][h/v]
    int intra_dc_precision = 8;  // bits
    PictureStructure structure = PictureStructure::FramePicture;
    bool top_field_first = false;
    bool frame_pred_frame_dct = true;
    bool concealment_motion_vectors = false;
    bool q_scale_type = false;
    bool intra_vlc_format = false;
    bool alternate_scan = false;
    bool repeat_first_field = false;
    bool chroma_420_type = false;
    bool progressive_frame = true;

    bool is_field() const { return structure != PictureStructure::FramePicture; }
    /// DC multiplier 8/4/2/1 for precision 8/9/10/11.
    int intra_dc_mult() const { return 8 >> (intra_dc_precision - 8); }
};

struct SliceInfo {
    int vertical_position = 0;  // start-code byte, 1-based macroblock row
    int quantiser_scale_code = 0;
    int quantiser_scale = 0;
    bool intra_slice = false;

    int mb_row() const { return vertical_position - 1; }
};

inline int quantiser_scale_for(int code, bool q_scale_type) {
    if (code < 1 || code > 31) fail(ErrorKind::MalformedHeader, "quantiser_scale_code " + std::to_string(code));
    return q_scale_type ? tables::non_linear_quantiser_scale[code] : 2 * code;
}

namespace detail {
inline QuantMatrix read_matrix(BitCursor& c) {
    QuantMatrix m{};
    const auto& zz = zigzag_order();
    for (std::size_t i = 0; i < 64; ++i) {
        const auto w = c.read_bits(8);
        if (w == 0) fail(ErrorKind::MalformedHeader, "quantiser matrix weight 0");
        m[static_cast<std::size_t>(zz[i])] = static_cast<std::uint8_t>(w);
    }
    return m;
}
}  // namespace detail

/// Cursor must sit just after the 0xB3 start-code byte. Matrices not
/// loaded in the header are reset to the defaults.
inline SequenceInfo parse_sequence_header(BitCursor& c) {
    SequenceInfo s;
    s.horizontal_size = static_cast<int>(c.read_bits(12));
    s.vertical_size = static_cast<int>(c.read_bits(12));
    s.aspect_ratio_code = static_cast<int>(c.read_bits(4));
    s.frame_rate_code = static_cast<int>(c.read_bits(4));
    s.bit_rate_value = c.read_bits(18);
    c.read_bits(1);  // marker
    s.vbv_buffer_size_value = c.read_bits(10);
    s.constrained_parameters = c.read_flag();
    if (c.read_flag()) s.intra_quant_matrix = detail::read_matrix(c);
    if (c.read_flag()) s.non_intra_quant_matrix = detail::read_matrix(c);

    if (s.horizontal_size == 0 || s.vertical_size == 0) fail(ErrorKind::MalformedHeader, "zero picture size");
    if (s.aspect_ratio_code == 0) fail(ErrorKind::MalformedHeader, "aspect_ratio_information 0");
    if (s.frame_rate_code < 1 || s.frame_rate_code > 8) {
        fail(ErrorKind::MalformedHeader, "frame_rate_code " + std::to_string(s.frame_rate_code));
    }
    if (s.bit_rate_value == 0) fail(ErrorKind::MalformedHeader, "bit_rate_value 0");
    s.bit_rate = static_cast<std::int64_t>(s.bit_rate_value) * 400;
    s.vbv_buffer_size = static_cast<std::int64_t>(s.vbv_buffer_size_value) * 16 * 1024;
    return s;
}

inline GopInfo parse_gop_header(BitCursor& c) {
    GopInfo g;
    g.drop_frame = c.read_flag();
    g.hours = static_cast<int>(c.read_bits(5));
    g.minutes = static_cast<int>(c.read_bits(6));
    c.read_bits(1);  // marker
    g.seconds = static_cast<int>(c.read_bits(6));
    g.pictures = static_cast<int>(c.read_bits(6));
    g.closed_gop = c.read_flag();
    g.broken_link = c.read_flag();
    if (g.hours > 23 || g.minutes > 59 || g.seconds > 59 || g.pictures > 59) {
        fail(ErrorKind::MalformedHeader, "time code out of range");
    }
    return g;
}

inline PictureInfo parse_picture_header(BitCursor& c) {
    PictureInfo p;
    p.temporal_reference = static_cast<int>(c.read_bits(10));
    const int type = static_cast<int>(c.read_bits(3));
    if (type < 1 || type > 3) fail(ErrorKind::MalformedHeader, "picture_coding_type " + std::to_string(type));
    p.coding_type = static_cast<CodingType>(type);
    p.vbv_delay = static_cast<int>(c.read_bits(16));
    if (p.coding_type == CodingType::P || p.coding_type == CodingType::B) {
        p.full_pel_forward = c.read_flag();
        p.legacy_forward_f_code = static_cast<int>(c.read_bits(3));
    }
    if (p.coding_type == CodingType::B) {
        p.full_pel_backward = c.read_flag();
        p.legacy_backward_f_code = static_cast<int>(c.read_bits(3));
    }
    while (c.read_flag()) c.read_bits(8);  // extra_information_picture
    return p;
}

namespace extension_id {
inline constexpr int sequence = 1;
inline constexpr int sequence_display = 2;
inline constexpr int quant_matrix = 3;
inline constexpr int copyright = 4;
inline constexpr int sequence_scalable = 5;
inline constexpr int picture_display = 7;
inline constexpr int picture_coding = 8;
inline constexpr int picture_spatial_scalable = 9;
inline constexpr int picture_temporal_scalable = 10;
}  // namespace extension_id

enum class ExtensionContext { Sequence, Picture };

/// Cursor must sit just after the 0xB5 start-code byte. Dispatches on the
/// 4-bit identifier and returns it. Optional extensions that carry nothing
/// the decoder uses are left unread; the caller skips to the next start code.
inline int parse_extensions(BitCursor& c, ExtensionContext context, SequenceInfo& seq, PictureInfo* pic) {
    const int id = static_cast<int>(c.read_bits(4));
    if (context == ExtensionContext::Sequence) {
        switch (id) {
            case extension_id::sequence: {
                seq.profile_and_level = static_cast<int>(c.read_bits(8));
                seq.progressive_sequence = c.read_flag();
                seq.chroma_format = static_cast<int>(c.read_bits(2));
                const auto h_ext = c.read_bits(2);
                const auto v_ext = c.read_bits(2);
                const auto rate_ext = c.read_bits(12);
                c.read_bits(1);  // marker
                const auto vbv_ext = c.read_bits(8);
                seq.low_delay = c.read_flag();
                seq.frame_rate_extension_n = static_cast<int>(c.read_bits(2));
                seq.frame_rate_extension_d = static_cast<int>(c.read_bits(5));
                if (seq.chroma_format == 0) fail(ErrorKind::MalformedHeader, "chroma_format 0");
                if (seq.chroma_format != chroma_format_420) {
                    fail(ErrorKind::UnsupportedStream, "only 4:2:0 chroma is supported");
                }
                seq.horizontal_size |= static_cast<int>(h_ext << 12);
                seq.vertical_size |= static_cast<int>(v_ext << 12);
                seq.bit_rate = static_cast<std::int64_t>((rate_ext << 18) | seq.bit_rate_value) * 400;
                seq.vbv_buffer_size = static_cast<std::int64_t>((vbv_ext << 10) | seq.vbv_buffer_size_value) * 16 * 1024;
                seq.has_extension = true;
                return id;
            }
            case extension_id::sequence_display: return id;
            case extension_id::sequence_scalable:
                fail(ErrorKind::UnsupportedStream, "scalable sequences are not supported");
            default: fail(ErrorKind::MalformedHeader, "extension id " + std::to_string(id) + " at sequence level");
        }
    }

    switch (id) {
        case extension_id::picture_coding: {
            if (pic == nullptr) fail(ErrorKind::MalformedHeader, "picture coding extension without picture");
            PictureInfo& p = *pic;
            for (auto& dir : p.f_code) {
                for (auto& f : dir) f = static_cast<int>(c.read_bits(4));
            }
            p.intra_dc_precision = 8 + static_cast<int>(c.read_bits(2));
            const int structure = static_cast<int>(c.read_bits(2));
            if (structure == 0) fail(ErrorKind::MalformedHeader, "picture_structure 0");
            p.structure = static_cast<PictureStructure>(structure);
            p.top_field_first = c.read_flag();
            p.frame_pred_frame_dct = c.read_flag();
            p.concealment_motion_vectors = c.read_flag();
            p.q_scale_type = c.read_flag();
            p.intra_vlc_format = c.read_flag();
            p.alternate_scan = c.read_flag();
            p.repeat_first_field = c.read_flag();
            p.chroma_420_type = c.read_flag();
            p.progressive_frame = c.read_flag();
            if (c.read_flag()) c.read_bits(20);  // composite display information
            for (int s = 0; s < 2; ++s) {
                for (int t = 0; t < 2; ++t) {
                    const int f = p.f_code[s][t];
                    const bool used = p.coding_type == CodingType::B || (p.coding_type == CodingType::P && s == 0);
                    if (used && (f < 1 || f > 9)) {
                        fail(ErrorKind::MalformedHeader, "f_code " + std::to_string(f));
                    }
                    if (!used && f != f_code_none && (f < 1 || f > 9)) {
                        fail(ErrorKind::MalformedHeader, "f_code " + std::to_string(f));
                    }
                }
            }
            p.has_coding_extension = true;
            return id;
        }
        case extension_id::quant_matrix: {
            if (c.read_flag()) seq.intra_quant_matrix = detail::read_matrix(c);
            if (c.read_flag()) seq.non_intra_quant_matrix = detail::read_matrix(c);
            // Chroma matrices only apply to 4:2:2 and 4:4:4.
            if (c.read_flag()) detail::read_matrix(c);
            if (c.read_flag()) detail::read_matrix(c);
            return id;
        }
        case extension_id::copyright:
        case extension_id::picture_display: return id;
        case extension_id::picture_spatial_scalable:
        case extension_id::picture_temporal_scalable:
            fail(ErrorKind::UnsupportedStream, "scalable picture extensions are not supported");
        default: fail(ErrorKind::MalformedHeader, "extension id " + std::to_string(id) + " at picture level");
    }
}

/// Cursor must sit just after a slice start-code byte.
inline SliceInfo parse_slice_header(BitCursor& c, std::uint8_t start_code_byte, bool q_scale_type,
                                    bool large_picture = false) {
    if (!start_code::is_slice(start_code_byte)) {
        fail(ErrorKind::MalformedHeader, "not a slice start code: " + std::to_string(start_code_byte));
    }
    SliceInfo s;
    s.vertical_position = start_code_byte;
    if (large_picture) s.vertical_position += static_cast<int>(c.read_bits(3)) << 7;
    s.quantiser_scale_code = static_cast<int>(c.read_bits(5));
    if (s.quantiser_scale_code == 0) fail(ErrorKind::MalformedHeader, "quantiser_scale_code 0");
    s.quantiser_scale = quantiser_scale_for(s.quantiser_scale_code, q_scale_type);
    if (c.read_flag()) {
        s.intra_slice = c.read_flag();
        c.read_bits(7);
        while (c.read_flag()) c.read_bits(8);
    }
    return s;
}

}  // namespace m2vscope
