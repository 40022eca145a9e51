#pragma once

// Deterministic generator of small MPEG-2 elementary streams together with
// the pictures they must decode to and their exact per-frame bit counts.
//
// The expected pictures are computed here from first principles: direct
// dequantization, a double-precision 2-D inverse DCT and a plain sample
// fetcher for prediction. None of the decoder's transform or prediction
// code is used, so the generator serves as a test oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "m2vscope/bitio.hpp"
#include "m2vscope/error.hpp"
#include "m2vscope/framestore.hpp"
#include "m2vscope/headers.hpp"
#include "m2vscope/motion.hpp"
#include "m2vscope/vlc.hpp"

namespace m2vscope::fixtures {

enum class Content { Flat, AcBasis, Textured, Motion, Skip };

struct PictureSpec {
    CodingType type = CodingType::I;
    std::optional<int> temporal_reference;  // nullopt: position since the last I picture
    Content content = Content::Flat;
    int dc = 128;
    int ac_u = 1, ac_v = 0, ac_level = 4;
    int seed = 0;
    MotionVector mv{};           // forward
    MotionVector mv_backward{};  // B only
    bool forward = true;
    bool backward = false;
    bool field_motion = false;               // field prediction in a frame picture
    bool field_select[2] = {false, true};    // per field of the macroblock, forward
    bool field_dct = false;
    int residual_dc = 0;
    std::int64_t pad_to_bits = 0;
    int corrupt_row = -1;
    PictureStructure structure = PictureStructure::FramePicture;  // Top/Bottom: a field pair, this field first
    CodingType second_field_type = CodingType::I;
    bool gop_header = false;  // implied for I pictures
    bool sequence_header = false;
};

struct FixtureSpec {
    std::string name = "fixture";
    int width = 16;
    int height = 16;
    int frame_rate_code = 3;
    std::int64_t bit_rate = 400000;
    int vbv_buffer_size_value = 112;
    int vbv_delay = 0xFFFF;
    bool progressive_sequence = true;
    int quantiser_scale_code = 8;
    bool q_scale_type = false;
    bool intra_vlc_format = false;
    bool alternate_scan = false;
    int intra_dc_precision = 8;
    int f_code = 3;
    std::optional<QuantMatrix> intra_matrix;
    std::optional<QuantMatrix> non_intra_matrix;
    std::vector<PictureSpec> pictures;  // coded order
};

struct ExpectedFrame {
    int temporal_reference = 0;
    CodingType coding_type = CodingType::I;
    std::int64_t decode_index = 0;
    Plane y, cb, cr;
};

struct GeneratedFixture {
    std::vector<std::uint8_t> bytes;
    std::vector<ExpectedFrame> display;       // display order
    std::vector<std::int64_t> frame_bits;     // decode order
    std::int64_t first_picture_bit = 0;
    std::int64_t sequence_end_bit = 0;
    int corrupted_macroblocks = 0;
    std::vector<std::int64_t> corrupted_frames;  // decode indices
    bool exact = true;  // DC-only content: bit-exact expectation
};

// -- reference math ----------------------------------------------------------

namespace oracle {

/// Row-major 8x8 coefficients after dequantization, saturation and
/// mismatch control, evaluated directly.
inline std::array<int, 64> dequantize(const std::array<int, 64>& qf, bool intra, const QuantMatrix& w, int q_s, int precision) {
    std::array<int, 64> f{};
    long long sum = 0;
    for (int i = 0; i < 64; ++i) {
        long long v;
        if (intra && i == 0) {
            v = static_cast<long long>(qf[0]) * (8 >> (precision - 8));
        } else {
            const long long k = intra ? 0 : (qf[i] > 0) - (qf[i] < 0);
            const long long num = (2LL * qf[i] + k) * w[static_cast<std::size_t>(i)] * q_s;
            v = num / 32;  // truncates toward zero
        }
        v = std::clamp<long long>(v, -2048, 2047);
        f[static_cast<std::size_t>(i)] = static_cast<int>(v);
        sum += v;
    }
    // Even sum: an odd last coefficient steps down by one, an even one up.
    if (sum % 2 == 0) f[63] += (f[63] % 2 != 0) ? -1 : 1;
    return f;
}

/// f(x, y) = sum_u sum_v C(u) C(v) / 4 F(u, v) cos((2x+1)u pi/16) cos((2y+1)v pi/16),
/// rounded half up and clipped to [-256, 255].
inline std::array<int, 64> idct(const std::array<int, 64>& F) {
    std::array<int, 64> out{};
    const double pi = std::numbers::pi;
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int v = 0; v < 8; ++v) {
                for (int u = 0; u < 8; ++u) {
                    const double cu = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
                    const double cv = v == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
                    s += cu * cv * F[static_cast<std::size_t>(v * 8 + u)] * std::cos((2 * x + 1) * u * pi / 16.0) *
                         std::cos((2 * y + 1) * v * pi / 16.0);
                }
            }
            // The guard keeps exact ties from flipping on double rounding error.
            const double r = std::floor(s / 4.0 + 0.5 + 1e-9);
            out[static_cast<std::size_t>(y * 8 + x)] = static_cast<int>(std::clamp(r, -256.0, 255.0));
        }
    }
    return out;
}

/// Sample (x, y) of a frame plane, or of one field of it (`parity` 0 top, 1 bottom).
inline int sample(const Plane& p, int parity, int x, int y) {
    const int yy = parity < 0 ? y : 2 * y + parity;
    if (x < 0 || yy < 0 || x >= p.width() || yy >= p.height()) fail(ErrorKind::SpecError, "oracle fetch out of bounds");
    return p.at(x, yy);
}

/// Prediction sample at integer position (x, y) displaced by a half-sample
/// vector (mvx, mvy).
inline int predict_sample(const Plane& p, int parity, int x, int y, int mvx, int mvy) {
    const int ix = x + (mvx >> 1), iy = y + (mvy >> 1);
    const bool hx = mvx & 1, hy = mvy & 1;
    const int a = sample(p, parity, ix, iy);
    if (!hx && !hy) return a;
    if (hx && !hy) return (a + sample(p, parity, ix + 1, iy) + 1) >> 1;
    if (!hx && hy) return (a + sample(p, parity, ix, iy + 1) + 1) >> 1;
    return (a + sample(p, parity, ix + 1, iy) + sample(p, parity, ix, iy + 1) + sample(p, parity, ix + 1, iy + 1) + 2) >> 2;
}

inline bool fits(const Plane& p, bool field, int x0, int y0, int w, int h, int mvx, int mvy) {
    const int ph = field ? p.height() / 2 : p.height();
    const int x = x0 + (mvx >> 1), y = y0 + (mvy >> 1);
    return x >= 0 && y >= 0 && x + w - 1 + (mvx & 1) < p.width() && y + h - 1 + (mvy & 1) < ph;
}

}  // namespace oracle

// -- generator ---------------------------------------------------------------

namespace detail {

struct BlockPlan {
    std::array<int, 64> qf{};  // row-major quantized levels; intra DC at [0]
    bool coded = false;
};

struct MacroblockPlan {
    bool intra = false;
    bool skipped = false;
    bool forward = false;
    bool backward = false;
    bool field_motion = false;
    bool field_dct = false;
    MotionVector mv[2][2] = {};  // [r][direction]
    bool field_select[2][2] = {};
    std::array<BlockPlan, 6> blocks{};

    int cbp() const {
        int c = 0;
        for (int b = 0; b < 6; ++b)
            if (blocks[static_cast<std::size_t>(b)].coded) c |= 1 << (5 - b);
        return c;
    }
};

struct FrameRefs {
    const ExpectedFrame* forward = nullptr;   // older reference
    const ExpectedFrame* backward = nullptr;  // newer reference
};

class Generator {
public:
    explicit Generator(const FixtureSpec& spec) : spec_(spec) { validate(); }

    GeneratedFixture run() {
        const auto& pics = spec_.pictures;
        write_sequence_header();
        std::vector<ExpectedFrame> decoded;  // decode order, all frames
        std::vector<std::pair<int, int>> display_keys;  // (gop, temporal reference)
        std::optional<ExpectedFrame> older, newer;
        int gop = -1;
        int since_i = 0;
        std::optional<std::int64_t> frame_start;

        for (std::size_t k = 0; k < pics.size(); ++k) {
            const PictureSpec& ps = pics[k];
            std::optional<std::int64_t> unit_start;
            if (k > 0 && ps.sequence_header) {
                unit_start = mark();
                write_sequence_header();
            }
            if (ps.type == CodingType::I || ps.gop_header || k == 0) {
                if (!unit_start) unit_start = mark();
                write_gop(k == 0);
                ++gop;
                since_i = 0;
            }
            if (k == 0) {
                unit_start.reset();
                out_.first_picture_bit = mark();
            }
            const std::int64_t start = unit_start.value_or(mark());
            if (k > 0) out_.frame_bits.push_back(start - *frame_start);
            frame_start = start;

            ExpectedFrame frame;
            frame.coding_type = ps.type;
            frame.temporal_reference = ps.temporal_reference.value_or(since_i);
            frame.decode_index = static_cast<std::int64_t>(k);
            frame.y = Plane(spec_.width, spec_.height, 0);
            frame.cb = Plane(spec_.width / 2, spec_.height / 2, 0);
            frame.cr = Plane(spec_.width / 2, spec_.height / 2, 0);
            ++since_i;

            FrameRefs refs;
            if (ps.type == CodingType::P) refs.forward = newer ? &*newer : nullptr;
            if (ps.type == CodingType::B) {
                refs.forward = older ? &*older : nullptr;
                refs.backward = newer ? &*newer : nullptr;
            }
            if (ps.type != CodingType::I && !refs.forward) fail(ErrorKind::SpecError, "prediction without a reference");
            if (ps.type == CodingType::B && !refs.backward) fail(ErrorKind::SpecError, "B picture needs two references");

            if (ps.structure == PictureStructure::FramePicture) {
                write_picture(ps, ps.type, PictureStructure::FramePicture, frame, refs, false);
            } else {
                const PictureStructure second =
                    ps.structure == PictureStructure::TopField ? PictureStructure::BottomField : PictureStructure::TopField;
                write_picture(ps, ps.type, ps.structure, frame, refs, false);
                PictureSpec second_spec = ps;
                second_spec.seed = ps.seed + 1;
                if (ps.second_field_type == CodingType::P && ps.type != CodingType::B) {
                    second_spec.content = Content::Motion;
                }
                write_picture(second_spec, ps.type == CodingType::B ? CodingType::B : ps.second_field_type, second, frame, refs, true);
            }
            if (ps.pad_to_bits > 0) pad_frame(*frame_start, ps.pad_to_bits);

            if (ps.corrupt_row >= 0) out_.corrupted_frames.push_back(static_cast<std::int64_t>(k));
            if (ps.type != CodingType::B) {
                older = std::move(newer);
                newer = frame;
            }
            display_keys.emplace_back(gop, frame.temporal_reference);
            decoded.push_back(std::move(frame));
        }
        out_.sequence_end_bit = mark();
        out_.frame_bits.push_back(out_.sequence_end_bit - *frame_start);
        w_.put_start_code(start_code::sequence_end);
        out_.bytes = std::move(w_).take();

        std::vector<std::size_t> order(decoded.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return display_keys[a] < display_keys[b]; });
        for (std::size_t i : order) out_.display.push_back(decoded[i]);
        return std::move(out_);
    }

private:
    std::int64_t pos() const { return static_cast<std::int64_t>(w_.bit_count()); }
    /// Position of the next start code, which is byte aligned.
    std::int64_t mark() {
        w_.align_zero();
        return pos();
    }

    void validate() const {
        const auto& s = spec_;
        if (s.width <= 0 || s.height <= 0 || s.width % 16 || s.height % 16) fail(ErrorKind::SpecError, "size must be a multiple of 16");
        if (!s.progressive_sequence && s.height % 32) fail(ErrorKind::SpecError, "interlaced height must be a multiple of 32");
        if (s.bit_rate <= 0 || s.bit_rate % 400) fail(ErrorKind::SpecError, "bit rate must be a positive multiple of 400");
        if (s.pictures.empty()) fail(ErrorKind::SpecError, "no pictures");
        if (s.pictures.front().type != CodingType::I) fail(ErrorKind::SpecError, "first picture must be I");
        if (s.intra_dc_precision < 8 || s.intra_dc_precision > 11) fail(ErrorKind::SpecError, "intra_dc_precision out of range");
        if (s.quantiser_scale_code < 1 || s.quantiser_scale_code > 31) fail(ErrorKind::SpecError, "quantiser_scale_code out of range");
        int refs = 0;
        for (const auto& p : s.pictures) {
            if (p.type == CodingType::B && refs < 2) fail(ErrorKind::SpecError, "B picture before two references");
            if (p.type != CodingType::B) ++refs;
            if (p.structure != PictureStructure::FramePicture && s.progressive_sequence) {
                fail(ErrorKind::SpecError, "field pictures need an interlaced sequence");
            }
            if (p.field_motion && s.progressive_sequence) fail(ErrorKind::SpecError, "field motion needs an interlaced sequence");
            if (p.field_dct && s.progressive_sequence) fail(ErrorKind::SpecError, "field DCT needs an interlaced sequence");
            if (p.content == Content::Motion && p.type == CodingType::I) fail(ErrorKind::SpecError, "motion content in I picture");
            if (p.content == Content::Skip && p.type == CodingType::I) fail(ErrorKind::SpecError, "skip content in I picture");
            if (p.pad_to_bits % 8) fail(ErrorKind::SpecError, "pad_to_bits must be whole bytes");
        }
    }

    QuantMatrix intra_matrix() const { return spec_.intra_matrix.value_or(default_intra_matrix()); }
    QuantMatrix non_intra_matrix() const { return spec_.non_intra_matrix.value_or(default_non_intra_matrix()); }
    int q_s() const { return spec_.q_scale_type ? static_cast<int>(tables::non_linear_quantiser_scale[spec_.quantiser_scale_code]) : 2 * spec_.quantiser_scale_code; }

    // -- headers ---------------------------------------------------------------

    void write_matrix(const QuantMatrix& m) {
        for (int i = 0; i < 64; ++i) w_.put_bits(m[static_cast<std::size_t>(zigzag_order()[static_cast<std::size_t>(i)])], 8);
    }

    void write_sequence_header() {
        const auto& s = spec_;
        const std::int64_t rate = s.bit_rate / 400;
        w_.put_start_code(start_code::sequence_header);
        w_.put_bits(static_cast<std::uint32_t>(s.width & 0xFFF), 12);
        w_.put_bits(static_cast<std::uint32_t>(s.height & 0xFFF), 12);
        w_.put_bits(1, 4);  // square samples
        w_.put_bits(static_cast<std::uint32_t>(s.frame_rate_code), 4);
        w_.put_bits(static_cast<std::uint32_t>(rate & 0x3FFFF), 18);
        w_.put_bit(1);
        w_.put_bits(static_cast<std::uint32_t>(s.vbv_buffer_size_value & 0x3FF), 10);
        w_.put_bit(0);
        w_.put_bit(s.intra_matrix ? 1 : 0);
        if (s.intra_matrix) write_matrix(*s.intra_matrix);
        w_.put_bit(s.non_intra_matrix ? 1 : 0);
        if (s.non_intra_matrix) write_matrix(*s.non_intra_matrix);

        w_.put_start_code(start_code::extension);
        w_.put_bits(1, 4);
        w_.put_bits(0x48, 8);  // main profile, main level
        w_.put_bit(s.progressive_sequence ? 1 : 0);
        w_.put_bits(1, 2);  // 4:2:0
        w_.put_bits(static_cast<std::uint32_t>(s.width >> 12), 2);
        w_.put_bits(static_cast<std::uint32_t>(s.height >> 12), 2);
        w_.put_bits(static_cast<std::uint32_t>(rate >> 18), 12);
        w_.put_bit(1);
        w_.put_bits(static_cast<std::uint32_t>(s.vbv_buffer_size_value >> 10), 8);
        w_.put_bit(0);
        w_.put_bits(0, 2);
        w_.put_bits(0, 5);
    }

    void write_gop(bool closed) {
        w_.put_start_code(start_code::group);
        w_.put_bit(0);
        w_.put_bits(0, 5);
        w_.put_bits(0, 6);
        w_.put_bit(1);
        w_.put_bits(0, 6);
        w_.put_bits(0, 6);
        w_.put_bit(closed ? 1 : 0);
        w_.put_bit(0);
    }

    void write_picture_header(CodingType type, int temporal_reference, PictureStructure structure, bool frame_pred_frame_dct,
                              bool progressive_frame) {
        const int f = spec_.f_code;
        w_.put_start_code(start_code::picture);
        w_.put_bits(static_cast<std::uint32_t>(temporal_reference & 0x3FF), 10);
        w_.put_bits(static_cast<std::uint32_t>(type), 3);
        w_.put_bits(static_cast<std::uint32_t>(spec_.vbv_delay), 16);
        if (type != CodingType::I) {
            w_.put_bit(0);
            w_.put_bits(7, 3);
        }
        if (type == CodingType::B) {
            w_.put_bit(0);
            w_.put_bits(7, 3);
        }
        w_.put_bit(0);

        w_.put_start_code(start_code::extension);
        w_.put_bits(8, 4);
        const int fwd = type == CodingType::I ? 15 : f;
        const int bwd = type == CodingType::B ? f : 15;
        w_.put_bits(static_cast<std::uint32_t>(fwd), 4);
        w_.put_bits(static_cast<std::uint32_t>(fwd), 4);
        w_.put_bits(static_cast<std::uint32_t>(bwd), 4);
        w_.put_bits(static_cast<std::uint32_t>(bwd), 4);
        w_.put_bits(static_cast<std::uint32_t>(spec_.intra_dc_precision - 8), 2);
        w_.put_bits(static_cast<std::uint32_t>(structure), 2);
        w_.put_bit(structure == PictureStructure::FramePicture && !progressive_frame ? 1 : 0);  // top_field_first
        w_.put_bit(frame_pred_frame_dct ? 1 : 0);
        w_.put_bit(0);  // concealment_motion_vectors
        w_.put_bit(spec_.q_scale_type ? 1 : 0);
        w_.put_bit(spec_.intra_vlc_format ? 1 : 0);
        w_.put_bit(spec_.alternate_scan ? 1 : 0);
        w_.put_bit(0);  // repeat_first_field
        w_.put_bit(progressive_frame ? 1 : 0);  // chroma_420_type
        w_.put_bit(progressive_frame ? 1 : 0);
        w_.put_bit(0);  // composite_display_flag
    }

    void pad_frame(std::int64_t frame_start, std::int64_t target) {
        w_.align_zero();
        const std::int64_t used = pos() - frame_start;
        if (used > target) fail(ErrorKind::SpecError, "picture already larger than pad target (" + std::to_string(used) + " bits)");
        for (std::int64_t i = used; i < target; i += 8) w_.put_bits(0, 8);
    }

    // -- content ---------------------------------------------------------------

    /// Per-block intra DC pixel value for textured content.
    static int textured_value(int mbx, int mby, int block, int seed) {
        if (block < 4) return 32 + ((mbx * 5 + mby * 3 + block * 7 + seed * 11) * 23) % 192;
        return 64 + ((mbx + 2 * mby + block + seed * 3) * 17) % 128;
    }

    MacroblockPlan intra_plan(const PictureSpec& ps, int mbx, int mby, bool field_dct) const {
        MacroblockPlan mb;
        mb.intra = true;
        mb.field_dct = field_dct;
        const int scale = 1 << (spec_.intra_dc_precision - 8);
        for (int b = 0; b < 6; ++b) {
            BlockPlan& bp = mb.blocks[static_cast<std::size_t>(b)];
            bp.coded = true;
            int value = ps.dc;
            if (ps.content == Content::Textured) value = textured_value(mbx, mby, b, ps.seed);
            bp.qf[0] = value * scale;
            if (ps.content == Content::AcBasis && b < 4) bp.qf[static_cast<std::size_t>(ps.ac_v * 8 + ps.ac_u)] = ps.ac_level;
        }
        return mb;
    }

    // -- pictures --------------------------------------------------------------

    struct PictureContext {
        CodingType type;
        PictureStructure structure;
        bool frame_pred_frame_dct;
        int mb_width;
        int mb_rows;
        bool second_field;
    };

    void write_picture(const PictureSpec& ps, CodingType type, PictureStructure structure, ExpectedFrame& frame,
                       const FrameRefs& refs, bool second_field) {
        const bool frame_picture = structure == PictureStructure::FramePicture;
        const bool progressive_frame = spec_.progressive_sequence;
        // Interlaced frame pictures signal motion and DCT type per macroblock.
        PictureContext ctx{type, structure, frame_picture && progressive_frame, spec_.width / 16,
                           frame_picture ? spec_.height / 16 : spec_.height / 32, second_field};
        write_picture_header(type, frame.temporal_reference, structure, ctx.frame_pred_frame_dct, progressive_frame);

        for (int row = 0; row < ctx.mb_rows; ++row) {
            w_.put_start_code(static_cast<std::uint8_t>(row + 1));
            w_.put_bits(static_cast<std::uint32_t>(spec_.quantiser_scale_code), 5);
            w_.put_bit(0);  // extra_bit_slice
            if (row == ps.corrupt_row) {
                // An address increment no table entry starts with.
                w_.put_code("000000001");
                while (w_.bit_count() % 8) w_.put_bit(1);
                w_.put_bits(0xFF, 8);
                out_.corrupted_macroblocks += ctx.mb_width;
                continue;
            }
            write_slice_row(ps, ctx, row, frame, refs);
        }
    }

    std::vector<MacroblockPlan> plan_row(const PictureSpec& ps, const PictureContext& ctx, int row, const ExpectedFrame& frame,
                                         const FrameRefs& refs) const {
        std::vector<MacroblockPlan> plans;
        const bool frame_picture = ctx.structure == PictureStructure::FramePicture;
        for (int mbx = 0; mbx < ctx.mb_width; ++mbx) {
            const bool use_field_dct = frame_picture && !ctx.frame_pred_frame_dct && ps.field_dct;
            if (ctx.type == CodingType::I) {
                plans.push_back(intra_plan(ps, mbx, row, use_field_dct));
                continue;
            }
            MacroblockPlan mb;
            mb.field_dct = use_field_dct && ps.residual_dc != 0;
            if (ctx.type == CodingType::P) {
                mb.forward = true;
            } else {
                mb.forward = ps.forward;
                mb.backward = ps.backward;
                if (!mb.forward && !mb.backward) fail(ErrorKind::SpecError, "B macroblock without direction");
            }
            mb.field_motion = frame_picture && ps.field_motion;
            const MotionVector wanted[2] = {ps.mv, ps.mv_backward};
            for (int s = 0; s < 2; ++s) {
                const bool on = s == 0 ? mb.forward : mb.backward;
                if (!on) continue;
                for (int r = 0; r < 2; ++r) {
                    mb.mv[r][s] = wanted[s];
                    mb.field_select[r][s] = ps.field_select[r];
                }
                if (!frame_picture) {
                    // Field pictures: one vector, field_select picks the reference field.
                    mb.field_select[0][s] = ps.field_select[0];
                } else if (!mb.field_motion) {
                    mb.field_select[0][s] = mb.field_select[1][s] = false;
                }
            }
            if (ps.content == Content::Motion) {
                // Vectors that would leave the picture fall back to zero.
                if (!vectors_fit(mb, ctx, mbx, row, frame, refs)) {
                    for (auto& r : mb.mv)
                        for (auto& v : r) v = MotionVector{};
                }
            } else if (ps.content == Content::Skip) {
                const bool skipped = mbx > 0 && mbx + 1 < ctx.mb_width;
                mb.skipped = skipped;
                if (ctx.type == CodingType::P) {
                    for (auto& r : mb.mv)
                        for (auto& v : r) v = MotionVector{};
                    mb.field_motion = false;
                    const bool bottom = ctx.structure == PictureStructure::BottomField;
                    mb.field_select[0][0] = frame_picture ? false : bottom;
                }
                if (!vectors_fit(mb, ctx, mbx, row, frame, refs)) fail(ErrorKind::SpecError, "skip vectors leave the picture");
            }
            if (ps.residual_dc != 0 && !mb.skipped) {
                for (int b = 0; b < 4; ++b) {
                    mb.blocks[static_cast<std::size_t>(b)].coded = true;
                    mb.blocks[static_cast<std::size_t>(b)].qf[0] = ps.residual_dc;
                }
            }
            plans.push_back(mb);
        }
        return plans;
    }

    // Reference planes for one prediction: the frame and the field parity
    // (-1 for the whole frame).
    struct RefField {
        const ExpectedFrame* frame;
        int parity;
    };

    RefField reference_for(const PictureContext& ctx, int dir, bool field_select_bottom, const ExpectedFrame& current,
                           const FrameRefs& refs, bool whole) const {
        const ExpectedFrame* f = dir == 0 ? refs.forward : refs.backward;
        if (ctx.type == CodingType::P && ctx.second_field) {
            const bool current_bottom = ctx.structure == PictureStructure::BottomField;
            if (field_select_bottom != current_bottom) f = &current;
        }
        if (ctx.type == CodingType::I && ctx.second_field) f = &current;
        return {f, whole ? -1 : (field_select_bottom ? 1 : 0)};
    }

    bool vectors_fit(const MacroblockPlan& mb, const PictureContext& ctx, int mbx, int row, const ExpectedFrame& current,
                     const FrameRefs& refs) const {
        const bool frame_picture = ctx.structure == PictureStructure::FramePicture;
        for (int s = 0; s < 2; ++s) {
            if ((s == 0 && !mb.forward) || (s == 1 && !mb.backward)) continue;
            const int count = mb.field_motion ? 2 : 1;
            for (int r = 0; r < count; ++r) {
                const RefField ref = reference_for(ctx, s, mb.field_select[r][s], current, refs, frame_picture && !mb.field_motion);
                const bool field = ref.parity >= 0;
                const int lh = mb.field_motion ? 8 : 16;
                const MotionVector v = mb.mv[r][s];
                const MotionVector c{v.horizontal / 2, v.vertical / 2};
                const int mb_y = row;
                if (!oracle::fits(ref.frame->y, field, mbx * 16, mb_y * lh, 16, lh, v.horizontal, v.vertical)) return false;
                if (!oracle::fits(ref.frame->cb, field, mbx * 8, mb_y * lh / 2, 8, lh / 2, c.horizontal, c.vertical)) return false;
                const MotionRange range = motion_range(spec_.f_code);
                if (v.horizontal < range.low || v.horizontal > range.high || v.vertical < range.low || v.vertical > range.high) {
                    fail(ErrorKind::SpecError, "vector outside f_code range");
                }
            }
        }
        return true;
    }

    // -- reconstruction oracle ---------------------------------------------------

    void reconstruct(const MacroblockPlan& mb, const PictureContext& ctx, int mbx, int row, ExpectedFrame& frame,
                     const FrameRefs& refs) {
        const bool frame_picture = ctx.structure == PictureStructure::FramePicture;
        const int parity = frame_picture ? -1 : (ctx.structure == PictureStructure::BottomField ? 1 : 0);
        // Prediction, laid out as a 16x16 luma and two 8x8 chroma arrays.
        std::array<int, 256> py{};
        std::array<int, 64> pcb{}, pcr{};
        if (!mb.intra) {
            std::array<int, 256> dy[2];
            std::array<int, 64> dcb[2], dcr[2];
            for (int s = 0; s < 2; ++s) {
                if ((s == 0 && !mb.forward) || (s == 1 && !mb.backward)) continue;
                for (int i = 0; i < 16; ++i) {
                    const int r = mb.field_motion ? (i & 1) : 0;
                    const MotionVector v = mb.mv[r][s];
                    const RefField ref = reference_for(ctx, s, mb.field_select[r][s], frame, refs, frame_picture && !mb.field_motion);
                    const int y = mb.field_motion ? row * 8 + (i >> 1) : row * 16 + i;
                    for (int j = 0; j < 16; ++j) {
                        dy[s][static_cast<std::size_t>(i * 16 + j)] =
                            oracle::predict_sample(ref.frame->y, ref.parity, mbx * 16 + j, y, v.horizontal, v.vertical);
                    }
                }
                for (int i = 0; i < 8; ++i) {
                    const int r = mb.field_motion ? (i & 1) : 0;
                    const MotionVector v = mb.mv[r][s];
                    const int cx = v.horizontal / 2, cy = v.vertical / 2;
                    const RefField ref = reference_for(ctx, s, mb.field_select[r][s], frame, refs, frame_picture && !mb.field_motion);
                    const int y = mb.field_motion ? row * 4 + (i >> 1) : row * 8 + i;
                    for (int j = 0; j < 8; ++j) {
                        dcb[s][static_cast<std::size_t>(i * 8 + j)] = oracle::predict_sample(ref.frame->cb, ref.parity, mbx * 8 + j, y, cx, cy);
                        dcr[s][static_cast<std::size_t>(i * 8 + j)] = oracle::predict_sample(ref.frame->cr, ref.parity, mbx * 8 + j, y, cx, cy);
                    }
                }
            }
            if (mb.forward && mb.backward) {
                for (std::size_t i = 0; i < 256; ++i) py[i] = (dy[0][i] + dy[1][i] + 1) >> 1;
                for (std::size_t i = 0; i < 64; ++i) {
                    pcb[i] = (dcb[0][i] + dcb[1][i] + 1) >> 1;
                    pcr[i] = (dcr[0][i] + dcr[1][i] + 1) >> 1;
                }
            } else {
                const int s = mb.forward ? 0 : 1;
                py = dy[s];
                pcb = dcb[s];
                pcr = dcr[s];
            }
        }

        const QuantMatrix weights = mb.intra ? intra_matrix() : non_intra_matrix();
        for (int b = 0; b < 6; ++b) {
            const BlockPlan& bp = mb.blocks[static_cast<std::size_t>(b)];
            std::array<int, 64> residual{};
            if (bp.coded) {
                residual = oracle::idct(oracle::dequantize(bp.qf, mb.intra, weights, q_s(), spec_.intra_dc_precision));
                if (!std::all_of(bp.qf.begin() + 1, bp.qf.end(), [](int v) { return v == 0; })) out_.exact = false;
            }
            for (int i = 0; i < 8; ++i) {
                for (int j = 0; j < 8; ++j) {
                    int local_y, x, pred;
                    Plane* plane;
                    if (b < 4) {
                        local_y = mb.field_dct ? (b >> 1) + 2 * i : (b >> 1) * 8 + i;
                        x = mbx * 16 + (b & 1) * 8 + j;
                        pred = py[static_cast<std::size_t>(local_y * 16 + (b & 1) * 8 + j)];
                        plane = &frame.y;
                        local_y += row * 16;
                    } else {
                        local_y = row * 8 + i;
                        x = mbx * 8 + j;
                        pred = (b == 4 ? pcb : pcr)[static_cast<std::size_t>(i * 8 + j)];
                        plane = b == 4 ? &frame.cb : &frame.cr;
                    }
                    const int value = std::clamp((mb.intra ? 0 : pred) + residual[static_cast<std::size_t>(i * 8 + j)], 0, 255);
                    const int yy = parity < 0 ? local_y : 2 * local_y + parity;
                    plane->at(x, yy) = static_cast<std::uint8_t>(value);
                }
            }
        }
    }

    // -- bitstream ---------------------------------------------------------------

    void write_slice_row(const PictureSpec& ps, const PictureContext& ctx, int row, ExpectedFrame& frame, const FrameRefs& refs) {
        const std::vector<MacroblockPlan> plans = plan_row(ps, ctx, row, frame, refs);
        const int dc_reset = 1 << (spec_.intra_dc_precision - 1);
        int dc[3] = {dc_reset, dc_reset, dc_reset};
        int pmv[2][2][2] = {};
        auto reset_pmv = [&] {
            for (auto& a : pmv)
                for (auto& b : a)
                    for (auto& c : b) c = 0;
        };
        const VlcTables& t = vlc_tables();
        const bool frame_picture = ctx.structure == PictureStructure::FramePicture;
        int pending_skips = 0;

        for (int mbx = 0; mbx < ctx.mb_width; ++mbx) {
            const MacroblockPlan& mb = plans[static_cast<std::size_t>(mbx)];
            reconstruct(mb, ctx, mbx, row, frame, refs);
            if (mb.skipped) {
                ++pending_skips;
                dc[0] = dc[1] = dc[2] = dc_reset;
                if (ctx.type == CodingType::P) reset_pmv();
                continue;
            }
            int increment = 1 + pending_skips;
            pending_skips = 0;
            while (increment > 33) {
                w_.put_code(*t.address_increment.encode({SymbolKind::Escape, 0, 0}));
                increment -= 33;
            }
            put_value(w_, t.address_increment, increment);

            int flags = 0;
            if (mb.intra) flags |= mb_flag::intra;
            if (mb.forward) flags |= mb_flag::forward;
            if (mb.backward) flags |= mb_flag::backward;
            const int cbp = mb.intra ? 0 : mb.cbp();
            if (cbp) flags |= mb_flag::pattern;
            const VlcTable& type_table = ctx.type == CodingType::I ? t.mb_type_i : ctx.type == CodingType::P ? t.mb_type_p : t.mb_type_b;
            put_symbol(w_, type_table, {SymbolKind::MbType, flags, 0});

            if (mb.forward || mb.backward) {
                if (frame_picture) {
                    if (!ctx.frame_pred_frame_dct) w_.put_bits(mb.field_motion ? 1 : 2, 2);
                } else {
                    w_.put_bits(1, 2);  // field prediction
                }
            }
            if (frame_picture && !ctx.frame_pred_frame_dct && (mb.intra || cbp)) w_.put_bit(mb.field_dct ? 1 : 0);

            for (int s = 0; s < 2; ++s) {
                if ((s == 0 && !mb.forward) || (s == 1 && !mb.backward)) continue;
                if (mb.field_motion) {
                    for (int r = 0; r < 2; ++r) {
                        w_.put_bit(mb.field_select[r][s] ? 1 : 0);
                        put_motion_component(w_, spec_.f_code, pmv[r][s][0], mb.mv[r][s].horizontal);
                        put_motion_component(w_, spec_.f_code, pmv[r][s][1] >> 1, mb.mv[r][s].vertical);
                        pmv[r][s][0] = mb.mv[r][s].horizontal;
                        pmv[r][s][1] = mb.mv[r][s].vertical * 2;
                    }
                } else {
                    if (!frame_picture) w_.put_bit(mb.field_select[0][s] ? 1 : 0);
                    put_motion_component(w_, spec_.f_code, pmv[0][s][0], mb.mv[0][s].horizontal);
                    put_motion_component(w_, spec_.f_code, pmv[0][s][1], mb.mv[0][s].vertical);
                    pmv[0][s][0] = pmv[1][s][0] = mb.mv[0][s].horizontal;
                    pmv[0][s][1] = pmv[1][s][1] = mb.mv[0][s].vertical;
                }
            }
            if (mb.intra) {
                reset_pmv();
            } else {
                dc[0] = dc[1] = dc[2] = dc_reset;
                if (cbp) put_value(w_, t.coded_block_pattern, cbp);
            }

            const auto& scan = spec_.alternate_scan ? alternate_order() : zigzag_order();
            for (int b = 0; b < 6; ++b) {
                const BlockPlan& bp = mb.blocks[static_cast<std::size_t>(b)];
                if (mb.intra ? false : !bp.coded) continue;
                int position = 0;
                const CoefficientTable table = mb.intra && spec_.intra_vlc_format ? CoefficientTable::B15 : CoefficientTable::B14;
                if (mb.intra) {
                    const int cc = b < 4 ? 0 : b - 3;
                    put_dc_differential(w_, cc == 0 ? Component::Luma : Component::Chroma, bp.qf[0] - dc[cc]);
                    dc[cc] = bp.qf[0];
                    position = 1;
                }
                bool first = !mb.intra;
                int run = 0;
                for (int i = position; i < 64; ++i) {
                    const int level = bp.qf[static_cast<std::size_t>(scan[static_cast<std::size_t>(i)])];
                    if (level == 0) {
                        ++run;
                        continue;
                    }
                    put_run_level(w_, table, first, run, level);
                    first = false;
                    run = 0;
                }
                put_eob(w_, table);
            }
        }
        if (pending_skips) fail(ErrorKind::SpecError, "slice cannot end with skipped macroblocks");
    }

    FixtureSpec spec_;
    BitWriter w_;
    GeneratedFixture out_;
};

}  // namespace detail

inline GeneratedFixture generate(const FixtureSpec& spec) { return detail::Generator(spec).run(); }

// -- text format ---------------------------------------------------------------
//
//   name half_mv
//   size 32 32
//   picture I content=textured seed=2
//   picture P content=motion mv=3,1
//   repeat 24 picture P content=flat pad=16000
//
// Lines are `key values...`; picture lines take `key=value` options.

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline int to_int(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used, 0);
        if (used != s.size()) throw std::invalid_argument(s);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": not a number: " + s);
    }
}

inline CodingType to_type(const std::string& s, int line) {
    if (s == "I") return CodingType::I;
    if (s == "P") return CodingType::P;
    if (s == "B") return CodingType::B;
    fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": coding type must be I, P or B");
}

inline MotionVector to_vector(const std::string& s, int line) {
    const auto parts = split(s, ',');
    if (parts.size() != 2) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": vector must be h,v");
    return {to_int(parts[0], line), to_int(parts[1], line)};
}

inline QuantMatrix to_matrix(const std::vector<std::string>& words, int line) {
    QuantMatrix m{};
    if (words.size() == 2 && words[0] == "flat") {
        m.fill(static_cast<std::uint8_t>(to_int(words[1], line)));
        return m;
    }
    if (words.size() != 64) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": matrix needs 64 row-major weights or 'flat N'");
    for (std::size_t i = 0; i < 64; ++i) m[i] = static_cast<std::uint8_t>(to_int(words[i], line));
    for (auto v : m)
        if (v == 0) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": matrix weight 0");
    return m;
}

inline PictureSpec parse_picture(const std::vector<std::string>& words, int line) {
    if (words.empty()) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": picture needs a coding type");
    PictureSpec p;
    p.type = to_type(words[0], line);
    p.second_field_type = p.type;
    p.content = p.type == CodingType::I ? Content::Flat : Content::Motion;
    for (std::size_t i = 1; i < words.size(); ++i) {
        const auto eq = words[i].find('=');
        if (eq == std::string::npos) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": expected key=value, got " + words[i]);
        const std::string key = words[i].substr(0, eq);
        const std::string val = words[i].substr(eq + 1);
        if (key == "tr") {
            p.temporal_reference = to_int(val, line);
        } else if (key == "content") {
            static const std::map<std::string, Content> names{{"flat", Content::Flat},
                                                              {"ac", Content::AcBasis},
                                                              {"textured", Content::Textured},
                                                              {"motion", Content::Motion},
                                                              {"skip", Content::Skip}};
            const auto it = names.find(val);
            if (it == names.end()) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": unknown content " + val);
            p.content = it->second;
        } else if (key == "dc") {
            p.dc = to_int(val, line);
        } else if (key == "ac") {
            const auto parts = split(val, ',');
            if (parts.size() != 3) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": ac=u,v,level");
            p.ac_u = to_int(parts[0], line);
            p.ac_v = to_int(parts[1], line);
            p.ac_level = to_int(parts[2], line);
            if (p.ac_u < 0 || p.ac_u > 7 || p.ac_v < 0 || p.ac_v > 7 || (p.ac_u == 0 && p.ac_v == 0)) {
                fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": ac position must be an AC cell");
            }
        } else if (key == "seed") {
            p.seed = to_int(val, line);
        } else if (key == "mv") {
            p.mv = to_vector(val, line);
        } else if (key == "bwd") {
            p.mv_backward = to_vector(val, line);
        } else if (key == "dir") {
            if (val == "fwd") {
                p.forward = true;
                p.backward = false;
            } else if (val == "bwd") {
                p.forward = false;
                p.backward = true;
            } else if (val == "bi") {
                p.forward = p.backward = true;
            } else {
                fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": dir must be fwd, bwd or bi");
            }
        } else if (key == "field_motion") {
            p.field_motion = to_int(val, line) != 0;
        } else if (key == "fs") {
            const auto parts = split(val, ',');
            if (parts.size() != 2) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": fs=top_lines,bottom_lines");
            p.field_select[0] = to_int(parts[0], line) != 0;
            p.field_select[1] = to_int(parts[1], line) != 0;
        } else if (key == "field_dct") {
            p.field_dct = to_int(val, line) != 0;
        } else if (key == "residual") {
            p.residual_dc = to_int(val, line);
        } else if (key == "pad") {
            p.pad_to_bits = to_int(val, line);
        } else if (key == "corrupt_row") {
            p.corrupt_row = to_int(val, line);
        } else if (key == "structure") {
            if (val == "frame") p.structure = PictureStructure::FramePicture;
            else if (val == "top") p.structure = PictureStructure::TopField;
            else if (val == "bottom") p.structure = PictureStructure::BottomField;
            else fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": structure must be frame, top or bottom");
        } else if (key == "second") {
            p.second_field_type = to_type(val, line);
        } else if (key == "gop") {
            p.gop_header = to_int(val, line) != 0;
        } else if (key == "seqhdr") {
            p.sequence_header = to_int(val, line) != 0;
        } else {
            fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": unknown picture option " + key);
        }
    }
    return p;
}

}  // namespace detail

inline FixtureSpec parse_fixture_spec(std::string_view text) {
    FixtureSpec spec;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::vector<std::string> words;
        for (std::string w; ls >> w;) words.push_back(w);
        if (words.empty()) continue;
        int repeat = 1;
        if (words[0] == "repeat") {
            if (words.size() < 3) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": repeat N picture ...");
            repeat = detail::to_int(words[1], line);
            if (repeat < 1) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": repeat count must be positive");
            words.erase(words.begin(), words.begin() + 2);
        }
        const std::string key = words[0];
        const std::vector<std::string> args(words.begin() + 1, words.end());
        auto one = [&]() -> int {
            if (args.size() != 1) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": " + key + " takes one value");
            return detail::to_int(args[0], line);
        };
        if (key == "picture") {
            const PictureSpec p = detail::parse_picture(args, line);
            for (int i = 0; i < repeat; ++i) spec.pictures.push_back(p);
            continue;
        }
        if (repeat != 1) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": only pictures repeat");
        if (key == "name") {
            if (args.size() != 1) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": name takes one word");
            spec.name = args[0];
        } else if (key == "size") {
            if (args.size() != 2) fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": size W H");
            spec.width = detail::to_int(args[0], line);
            spec.height = detail::to_int(args[1], line);
        } else if (key == "frame_rate_code") {
            spec.frame_rate_code = one();
        } else if (key == "bit_rate") {
            spec.bit_rate = one();
        } else if (key == "vbv_buffer_size") {
            spec.vbv_buffer_size_value = one();
        } else if (key == "vbv_delay") {
            spec.vbv_delay = one();
        } else if (key == "progressive") {
            spec.progressive_sequence = one() != 0;
        } else if (key == "quantiser_scale_code") {
            spec.quantiser_scale_code = one();
        } else if (key == "q_scale_type") {
            spec.q_scale_type = one() != 0;
        } else if (key == "intra_vlc_format") {
            spec.intra_vlc_format = one() != 0;
        } else if (key == "alternate_scan") {
            spec.alternate_scan = one() != 0;
        } else if (key == "intra_dc_precision") {
            spec.intra_dc_precision = one();
        } else if (key == "f_code") {
            spec.f_code = one();
        } else if (key == "intra_matrix") {
            spec.intra_matrix = detail::to_matrix(args, line);
        } else if (key == "non_intra_matrix") {
            spec.non_intra_matrix = detail::to_matrix(args, line);
        } else {
            fail(ErrorKind::SpecError, "line " + std::to_string(line) + ": unknown key " + key);
        }
    }
    return spec;
}

}  // namespace m2vscope::fixtures
