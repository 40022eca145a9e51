#pragma once

// Motion-vector decoding, motion-compensated prediction, reference
// selection, and boundary-variation vector selection for concealment.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "m2vscope/bitio.hpp"
#include "m2vscope/framestore.hpp"
#include "m2vscope/headers.hpp"
#include "m2vscope/vlc.hpp"

namespace m2vscope {

/// Half-sample units. Field vectors carry the vertical component in field
/// lines.
struct MotionVector {
    int horizontal = 0;
    int vertical = 0;

    friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

struct MotionRange {
    int low;
    int high;
    int span;
};

inline MotionRange motion_range(int f_code) {
    if (f_code < 1 || f_code > 9) fail(ErrorKind::MalformedStream, "f_code " + std::to_string(f_code) + " used for a vector");
    const int f = 1 << (f_code - 1);
    return {-16 * f, 16 * f - 1, 32 * f};
}

/// Adds a decoded delta to the predictor and wraps into the f_code range.
inline int apply_motion_delta(int predictor, int delta, int f_code) {
    const MotionRange r = motion_range(f_code);
    int v = predictor + delta;
    if (v < r.low) v += r.span;
    if (v > r.high) v -= r.span;
    return v;
}

/// motion_code followed by f_code-1 residual bits (when the code is nonzero).
inline int decode_motion_component(BitCursor& cursor, int f_code, int predictor) {
    const int r_size = f_code - 1;
    motion_range(f_code);
    const int code = vlc_tables().motion_code.decode(cursor).value;
    int delta = code;
    if (r_size > 0 && code != 0) {
        const int residual = static_cast<int>(cursor.read_bits(static_cast<unsigned>(r_size)));
        delta = ((std::abs(code) - 1) << r_size) + residual + 1;
        if (code < 0) delta = -delta;
    }
    return apply_motion_delta(predictor, delta, f_code);
}

inline MotionVector decode_motion_vector(BitCursor& cursor, int f_code_h, int f_code_v, MotionVector predictor) {
    MotionVector v;
    v.horizontal = decode_motion_component(cursor, f_code_h, predictor.horizontal);
    v.vertical = decode_motion_component(cursor, f_code_v, predictor.vertical);
    return v;
}

inline MotionVector decode_motion_vector(BitCursor& cursor, int f_code, MotionVector predictor) {
    return decode_motion_vector(cursor, f_code, f_code, predictor);
}

/// Encoder side: the shortest motion_code/residual pair that moves the
/// predictor onto `target`.
inline void put_motion_component(BitWriter& w, int f_code, int predictor, int target) {
    const MotionRange r = motion_range(f_code);
    if (target < r.low || target > r.high) fail(ErrorKind::SpecError, "vector outside f_code range");
    int delta = target - predictor;
    if (delta < r.low) delta += r.span;
    if (delta > r.high) delta -= r.span;
    const int r_size = f_code - 1;
    if (delta == 0) {
        put_value(w, vlc_tables().motion_code, 0);
        return;
    }
    const int magnitude = std::abs(delta) - 1;
    const int code = (magnitude >> r_size) + 1;
    put_value(w, vlc_tables().motion_code, delta < 0 ? -code : code);
    if (r_size > 0) w.put_bits(static_cast<std::uint32_t>(magnitude & ((1 << r_size) - 1)), static_cast<unsigned>(r_size));
}

enum class PredictionMode { FrameFrame, FieldInFrame, FieldInField };
enum class Direction { Forward = 0, Backward = 1 };

/// Luma, Cb and Cr views to fetch prediction samples from.
struct ReferenceViews {
    ConstPlaneView y;
    ConstPlaneView cb;
    ConstPlaneView cr;
};

inline ReferenceViews views_of(const FramePicture& frame, FieldSelect field) {
    return {frame.y.view(field), frame.cb.view(field), frame.cr.view(field)};
}

struct PredictionRequest {
    PredictionMode mode = PredictionMode::FrameFrame;
    bool forward = false;
    bool backward = false;
    /// [direction][r]; FieldInFrame uses r = 0 for the top-field lines of
    /// the macroblock and r = 1 for the bottom-field lines.
    MotionVector vectors[2][2] = {};
    bool field_select[2][2] = {};
    /// Macroblock position in the coordinates of the picture being decoded
    /// (field rows for field pictures).
    int mb_x = 0;
    int mb_y = 0;
    /// Views already resolved per [direction][r]: whole frames for
    /// FrameFrame, single fields otherwise.
    ReferenceViews refs[2][2] = {};
};

struct MacroblockPrediction {
    std::array<std::uint8_t, 256> y{};
    std::array<std::uint8_t, 64> cb{};
    std::array<std::uint8_t, 64> cr{};
};

/// Copies a w x h block whose top-left full-sample position is (x, y) with
/// optional half-sample offsets, averaging with round-half-up. Samples
/// outside the view are a stream error.
inline void fetch_block(const ConstPlaneView& ref, int x, int y, bool half_x, bool half_y, int w, int h,
                        std::uint8_t* out, std::ptrdiff_t out_stride) {
    if (!ref) fail(ErrorKind::MissingReference, "no reference plane");
    const int x_last = x + w - 1 + (half_x ? 1 : 0);
    const int y_last = y + h - 1 + (half_y ? 1 : 0);
    if (x < 0 || y < 0 || x_last >= ref.width || y_last >= ref.height) {
        fail(ErrorKind::MalformedStream, "motion vector points outside the reference picture");
    }
    for (int r = 0; r < h; ++r) {
        const std::uint8_t* s0 = ref.row(y + r) + x;
        const std::uint8_t* s1 = half_y ? ref.row(y + r + 1) + x : s0;
        std::uint8_t* d = out + r * out_stride;
        for (int c = 0; c < w; ++c) {
            if (half_x && half_y) {
                d[c] = static_cast<std::uint8_t>((s0[c] + s0[c + 1] + s1[c] + s1[c + 1] + 2) >> 2);
            } else if (half_x) {
                d[c] = static_cast<std::uint8_t>((s0[c] + s0[c + 1] + 1) >> 1);
            } else if (half_y) {
                d[c] = static_cast<std::uint8_t>((s0[c] + s1[c] + 1) >> 1);
            } else {
                d[c] = s0[c];
            }
        }
    }
}

namespace detail {
// Luma: integer part by arithmetic shift, half flag from the low bit.
// Chroma: the vector is first halved with truncation toward zero.
inline void fetch_luma(const ConstPlaneView& ref, int base_x, int base_y, MotionVector mv, int w, int h,
                       std::uint8_t* out, std::ptrdiff_t stride) {
    fetch_block(ref, base_x + (mv.horizontal >> 1), base_y + (mv.vertical >> 1), (mv.horizontal & 1) != 0,
                (mv.vertical & 1) != 0, w, h, out, stride);
}

inline void fetch_chroma(const ConstPlaneView& ref, int base_x, int base_y, MotionVector mv, int w, int h,
                         std::uint8_t* out, std::ptrdiff_t stride) {
    const MotionVector c{mv.horizontal / 2, mv.vertical / 2};
    fetch_luma(ref, base_x, base_y, c, w, h, out, stride);
}

inline MacroblockPrediction predict_one(const PredictionRequest& req, int dir) {
    MacroblockPrediction p;
    switch (req.mode) {
        case PredictionMode::FrameFrame:
        case PredictionMode::FieldInField: {
            const ReferenceViews& ref = req.refs[dir][0];
            const MotionVector mv = req.vectors[dir][0];
            fetch_luma(ref.y, req.mb_x * 16, req.mb_y * 16, mv, 16, 16, p.y.data(), 16);
            fetch_chroma(ref.cb, req.mb_x * 8, req.mb_y * 8, mv, 8, 8, p.cb.data(), 8);
            fetch_chroma(ref.cr, req.mb_x * 8, req.mb_y * 8, mv, 8, 8, p.cr.data(), 8);
            break;
        }
        case PredictionMode::FieldInFrame: {
            for (int r = 0; r < 2; ++r) {
                const ReferenceViews& ref = req.refs[dir][r];
                const MotionVector mv = req.vectors[dir][r];
                // Field r of the macroblock occupies every other output row.
                fetch_luma(ref.y, req.mb_x * 16, req.mb_y * 8, mv, 16, 8, p.y.data() + r * 16, 32);
                fetch_chroma(ref.cb, req.mb_x * 8, req.mb_y * 4, mv, 8, 4, p.cb.data() + r * 8, 16);
                fetch_chroma(ref.cr, req.mb_x * 8, req.mb_y * 4, mv, 8, 4, p.cr.data() + r * 8, 16);
            }
            break;
        }
    }
    return p;
}

template <std::size_t N>
void average_into(std::array<std::uint8_t, N>& a, const std::array<std::uint8_t, N>& b) {
    for (std::size_t i = 0; i < N; ++i) a[i] = static_cast<std::uint8_t>((a[i] + b[i] + 1) >> 1);
}
}  // namespace detail

/// Forms the 16x16 luma and two 8x8 chroma predictions for one macroblock.
/// Bidirectional predictions are the round-half-up average of both
/// directions.
inline MacroblockPrediction predict(const PredictionRequest& req) {
    if (!req.forward && !req.backward) fail(ErrorKind::MalformedStream, "prediction without direction");
    if (req.forward && req.backward) {
        MacroblockPrediction p = detail::predict_one(req, 0);
        const MacroblockPrediction b = detail::predict_one(req, 1);
        detail::average_into(p.y, b.y);
        detail::average_into(p.cb, b.cb);
        detail::average_into(p.cr, b.cr);
        return p;
    }
    return detail::predict_one(req, req.forward ? 0 : 1);
}

/// Which picture a prediction reads from. For the second field of a frame,
/// a forward prediction from the opposite-parity field refers to the first
/// field of the frame being decoded.
struct SecondFieldState {
    bool is_second_field = false;
    const FramePicture* current_frame = nullptr;
};

inline const FramePicture* select_reference(const PictureInfo& pic, Direction direction, bool field_select_bottom,
                                            const ReferencePair& refs, const SecondFieldState& second_field = {}) {
    if (pic.coding_type == CodingType::I) fail(ErrorKind::MalformedStream, "I picture has no references");
    if (direction == Direction::Backward) {
        if (pic.coding_type != CodingType::B) fail(ErrorKind::MalformedStream, "backward prediction outside B picture");
        if (!refs.backward) fail(ErrorKind::MissingReference, "no backward reference");
        return refs.backward.get();
    }
    if (pic.coding_type == CodingType::P) {
        if (pic.is_field() && second_field.is_second_field && second_field.current_frame) {
            const bool current_bottom = pic.structure == PictureStructure::BottomField;
            if (field_select_bottom != current_bottom) return second_field.current_frame;
        }
        // The latest I/P picture is the forward reference of a P picture.
        if (!refs.backward) fail(ErrorKind::MissingReference, "no forward reference");
        return refs.backward.get();
    }
    if (!refs.forward) fail(ErrorKind::MissingReference, "no forward reference");
    return refs.forward.get();
}

// Concealment vector selection.

/// Reconstructed neighbour samples around an N x N block: the row above,
/// the column to the left, and the row below. Missing neighbours contribute
/// nothing to the variation.
struct BoundaryEdges {
    std::optional<std::vector<int>> above;
    std::optional<std::vector<int>> left;
    std::optional<std::vector<int>> below;
};

/// Sum of squared differences between the block's outer rows/column and the
/// adjacent reconstructed samples: top edge, left edge, bottom edge.
inline std::int64_t total_variation(std::span<const std::uint8_t> block, int n, const BoundaryEdges& edges) {
    std::int64_t top = 0, left = 0, bottom = 0;
    auto sq = [](std::int64_t d) { return d * d; };
    for (int i = 0; i < n; ++i) {
        if (edges.above) top += sq(block[static_cast<std::size_t>(i)] - (*edges.above)[static_cast<std::size_t>(i)]);
        if (edges.left) left += sq(block[static_cast<std::size_t>(i * n)] - (*edges.left)[static_cast<std::size_t>(i)]);
        if (edges.below) {
            bottom += sq(block[static_cast<std::size_t>((n - 1) * n + i)] - (*edges.below)[static_cast<std::size_t>(i)]);
        }
    }
    return top + left + bottom;
}

struct ConcealmentChoice {
    MotionVector vector;
    std::size_t index = 0;
    std::int64_t variation = 0;
};

/// Picks the candidate whose predicted block minimises the boundary
/// variation; the earliest candidate wins ties. `predict_block` maps a
/// candidate to its N x N predicted samples, or nullopt when the candidate
/// cannot be formed (for instance it points outside the reference).
template <typename PredictFn>
ConcealmentChoice conceal_select_mv(std::span<const MotionVector> candidates, PredictFn&& predict_block,
                                    const BoundaryEdges& edges, int n) {
    std::optional<ConcealmentChoice> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        std::optional<std::vector<std::uint8_t>> block = predict_block(candidates[i]);
        if (!block) continue;
        const std::int64_t v = total_variation(*block, n, edges);
        if (!best || v < best->variation) best = ConcealmentChoice{candidates[i], i, v};
    }
    if (!best) fail(ErrorKind::NoCandidates, "no usable concealment candidate");
    return *best;
}

}  // namespace m2vscope
