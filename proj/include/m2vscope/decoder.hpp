#pragma once

// Stream-level decoding: start-code dispatch, header parsing, slice and
// macroblock decoding, reconstruction, concealment of undecodable
// macroblocks, frame-store commits and per-frame bit accounting.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "m2vscope/bandwidth.hpp"
#include "m2vscope/bitio.hpp"
#include "m2vscope/framestore.hpp"
#include "m2vscope/headers.hpp"
#include "m2vscope/macroblock.hpp"
#include "m2vscope/motion.hpp"
#include "m2vscope/transform.hpp"

namespace m2vscope {

struct DecodeOptions {
    /// Strict: the first error aborts. Tolerant: slice-level errors are
    /// concealed and decoding resumes at the next slice.
    bool strict = false;
    std::optional<std::int64_t> max_frames;
    bool keep_display_frames = true;
};

struct DecodeCounters {
    std::int64_t pictures = 0;  // coded pictures (fields count separately)
    std::int64_t frames = 0;
    std::int64_t macroblocks = 0;
    std::int64_t skipped_macroblocks = 0;
    std::int64_t concealed_macroblocks = 0;
    std::int64_t concealment_selections = 0;  // boundary-variation vector choices
    std::int64_t slice_errors = 0;
    std::int64_t displayed = 0;
    std::int64_t dropped = 0;
};

struct DecodeResult {
    SequenceInfo sequence;
    std::vector<FrameStats> frames;    // decode order
    std::vector<FrameHandle> display;  // display order, when kept
    std::vector<std::string> warnings;
    DecodeCounters counters;
    std::int64_t first_picture_bit = -1;
    std::int64_t sequence_end_bit = -1;
    bool truncated_by_max_frames = false;

    BandwidthReport report(std::string label) const { return summarize(frames, sequence, std::move(label)); }
};

/// Where each macroblock of the picture being decoded stands.
enum class MacroblockState : std::uint8_t { Missing, Decoded, Concealed };

class Decoder {
public:
    explicit Decoder(std::span<const std::uint8_t> data, DecodeOptions options = {})
        : cursor_(data), options_(options) {}

    DecodeResult run() {
        std::optional<std::uint8_t> code = cursor_.next_start_code();
        while (code && !done_) {
            const auto unit_bit = static_cast<std::int64_t>(cursor_.bits_consumed()) - 32;
            handle_unit(*code, unit_bit);
            if (done_) break;
            code = cursor_.next_start_code();
        }
        if (!done_) {
            finish_current_picture();
            if (!done_) end_frame(static_cast<std::int64_t>(cursor_.total_bits()));
            if (!done_) emit(store_.flush());
        }
        for (const auto& w : store_.warnings()) result_.warnings.push_back(w);
        return std::move(result_);
    }

private:
    enum class Context { None, Sequence, Gop, Picture, Slices };

    struct FrameInProgress {
        FrameHandle frame;
        PictureInfo first_info;
        std::int64_t bit_start = 0;
        int fields_done = 0;
        bool skip = false;  // B picture without references
        PictureStructure last_structure = PictureStructure::FramePicture;
        ClampStats clamps;
        int concealed = 0;
    };

    // -- unit dispatch ---------------------------------------------------

    void handle_unit(std::uint8_t code, std::int64_t unit_bit) {
        if (expect_sequence_extension_ && code != start_code::extension) {
            fail(ErrorKind::UnsupportedStream, "sequence header without sequence extension (MPEG-1 stream)");
        }
        switch (code) {
            case start_code::sequence_header: {
                finish_current_picture();
                if (done_) return;
                note_boundary(unit_bit);
                SequenceInfo s = parse_sequence_header(cursor_);
                if (have_sequence_ && frame_ && (s.horizontal_size != seq_.horizontal_size || s.vertical_size != seq_.vertical_size)) {
                    fail(ErrorKind::UnsupportedStream, "picture size changes mid-stream");
                }
                seq_ = s;
                expect_sequence_extension_ = true;
                context_ = Context::Sequence;
                return;
            }
            case start_code::extension: handle_extension(); return;
            case start_code::group: {
                finish_current_picture();
                if (done_) return;
                note_boundary(unit_bit);
                require_sequence();
                gop_ = parse_gop_header(cursor_);
                context_ = Context::Gop;
                return;
            }
            case start_code::picture: start_picture(unit_bit); return;
            case start_code::user_data: return;
            case start_code::sequence_end: {
                finish_current_picture();
                if (done_) return;
                end_frame(unit_bit);
                if (done_) return;
                result_.sequence_end_bit = unit_bit;
                emit(store_.flush());
                context_ = Context::None;
                return;
            }
            default:
                if (start_code::is_slice(code)) {
                    decode_slice(code);
                    return;
                }
                return;  // reserved or sequence_error codes carry nothing
        }
    }

    void handle_extension() {
        if (expect_sequence_extension_) {
            const int id = parse_extensions(cursor_, ExtensionContext::Sequence, seq_, nullptr);
            if (id != extension_id::sequence) {
                fail(ErrorKind::UnsupportedStream, "sequence header without sequence extension (MPEG-1 stream)");
            }
            expect_sequence_extension_ = false;
            have_sequence_ = true;
            result_.sequence = seq_;
            return;
        }
        switch (context_) {
            case Context::Sequence: parse_extensions(cursor_, ExtensionContext::Sequence, seq_, nullptr); break;
            case Context::Picture: parse_extensions(cursor_, ExtensionContext::Picture, seq_, &pic_); break;
            default: break;  // extensions elsewhere are skipped to the next start code
        }
    }

    void require_sequence() const {
        if (!have_sequence_) fail(ErrorKind::MalformedStream, "data before the first sequence header");
    }

    /// Sequence and GOP headers between pictures belong to the next picture.
    void note_boundary(std::int64_t unit_bit) {
        if (frame_ && !pending_boundary_) pending_boundary_ = unit_bit;
    }

    // -- pictures ----------------------------------------------------------

    bool awaiting_second_field() const {
        return frame_ && frame_->fields_done == 1 && frame_->last_structure != PictureStructure::FramePicture;
    }

    void start_picture(std::int64_t unit_bit) {
        require_sequence();
        finish_current_picture();
        if (done_) return;
        const std::optional<std::int64_t> boundary = pending_boundary_;
        if (frame_ && (!awaiting_second_field() || boundary)) {
            end_frame(boundary.value_or(unit_bit));
            if (done_) return;
        }
        picture_bit_ = unit_bit;
        frame_start_bit_ = boundary.value_or(unit_bit);
        pic_ = parse_picture_header(cursor_);
        picture_open_ = true;
        bound_ = false;
        second_field_ = false;
        context_ = Context::Picture;
    }

    /// Picture structure is only known after the coding extension, so a
    /// picture joins the pending first field or opens a new frame here.
    void bind_picture() {
        if (bound_) return;
        bound_ = true;
        if (frame_) {
            const bool pairs = pic_.is_field() && pic_.structure != frame_->last_structure;
            if (pairs) {
                second_field_ = true;
                return;
            }
            end_frame(picture_bit_);
            if (done_) return;
            frame_start_bit_ = picture_bit_;
        }
        if (result_.first_picture_bit < 0) {
            result_.first_picture_bit = picture_bit_;
            frame_start_bit_ = picture_bit_;
        }
        frame_ = FrameInProgress{};
        frame_->bit_start = frame_start_bit_;
        frame_->first_info = pic_;
        auto fp = std::make_shared<FramePicture>(FramePicture::blank(seq_.coded_width(), seq_.coded_height()));
        fp->display_width = seq_.horizontal_size;
        fp->display_height = seq_.vertical_size;
        fp->temporal_reference = pic_.temporal_reference;
        fp->coding_type = pic_.coding_type;
        fp->progressive = pic_.progressive_frame;
        fp->decode_index = result_.counters.frames;
        frame_->frame = std::move(fp);
        const ReferencePair& refs = store_.references();
        if (pic_.coding_type == CodingType::B && (!refs.forward || !refs.backward)) frame_->skip = true;
    }

    void begin_slices() {
        if (!pic_.has_coding_extension) {
            fail(ErrorKind::UnsupportedStream, "picture without picture coding extension (MPEG-1 stream)");
        }
        if (pic_.is_field() && (seq_.coded_height() % 32) != 0) {
            fail(ErrorKind::UnsupportedStream, "field pictures need a height that is a multiple of 32");
        }
        bind_picture();
        if (done_) return;
        mb_width_ = seq_.mb_width();
        mb_rows_ = pic_.is_field() ? seq_.mb_height() / 2 : seq_.mb_height();
        mb_state_.assign(static_cast<std::size_t>(mb_width_ * mb_rows_), MacroblockState::Missing);
        mb_vectors_.assign(mb_state_.size(), MotionVector{});
        last_vector_ = MotionVector{};
        context_ = Context::Slices;
    }

    FieldSelect target_field() const {
        switch (pic_.structure) {
            case PictureStructure::TopField: return FieldSelect::Top;
            case PictureStructure::BottomField: return FieldSelect::Bottom;
            default: return FieldSelect::Whole;
        }
    }

    /// Closes the current coded picture (frame or one field) and conceals
    /// the macroblocks that were not decoded.
    void finish_current_picture() {
        if (!picture_open_) return;
        picture_open_ = false;
        if (context_ != Context::Slices) {
            if (options_.strict) fail(ErrorKind::MalformedStream, "picture carries no slices");
            begin_slices();
            if (done_) return;
        }
        if (!frame_->skip) conceal_missing();
        ++frame_->fields_done;
        frame_->last_structure = pic_.structure;
        ++result_.counters.pictures;
    }

    void end_frame(std::int64_t end_bit) {
        if (!frame_) return;
        FrameInProgress f = std::move(*frame_);
        frame_.reset();
        pending_boundary_.reset();
        if (f.last_structure != PictureStructure::FramePicture && f.fields_done < 2) {
            if (options_.strict) fail(ErrorKind::MalformedStream, "frame ends after a single field");
            result_.warnings.push_back("frame " + std::to_string(result_.counters.frames) + " has a single field");
        }
        result_.frames.push_back(accumulator_.account_picture(f.bit_start, end_bit, f.first_info, seq_, f.clamps, f.concealed));
        result_.frames.back().dropped = f.skip;
        ++result_.counters.frames;
        if (f.skip) {
            ++result_.counters.dropped;
            store_.commit_picture(f.frame);  // records the drop
        } else {
            emit(store_.commit_picture(f.frame));
        }
        if (options_.max_frames && result_.counters.frames >= *options_.max_frames) {
            result_.truncated_by_max_frames = true;
            emit(store_.flush());
            done_ = true;
        }
    }

    void emit(std::vector<FrameHandle> pictures) {
        for (auto& p : pictures) {
            ++result_.counters.displayed;
            if (options_.keep_display_frames) result_.display.push_back(std::move(p));
        }
    }

    // -- slices --------------------------------------------------------------

    void decode_slice(std::uint8_t code) {
        if (!picture_open_) return;  // stray slice
        if (context_ == Context::Picture) begin_slices();
        if (done_ || context_ != Context::Slices) return;
        if (frame_->skip) return;

        const std::uint64_t slice_bit = cursor_.bits_consumed();
        try {
            const SliceInfo slice = parse_slice_header(cursor_, code, pic_.q_scale_type, seq_.vertical_size > 2800);
            if (slice.mb_row() >= mb_rows_) fail(ErrorKind::MalformedStream, "slice row past picture bottom");
            PredictorState ps = PredictorState::at_slice_start(pic_, slice, mb_width_);
            do {
                std::vector<MacroblockRec> mbs = decode_macroblock(cursor_, pic_, seq_, ps);
                for (const MacroblockRec& mb : mbs) {
                    if (mb.address / mb_width_ != slice.mb_row()) fail(ErrorKind::MalformedStream, "slice crosses a macroblock row");
                }
                for (const MacroblockRec& mb : mbs) reconstruct(mb);
            } while (!cursor_.at_start_code_or_end());
        } catch (const Error& e) {
            if (options_.strict || !e.slice_recoverable()) throw;
            ++result_.counters.slice_errors;
            result_.warnings.push_back("slice at bit " + std::to_string(slice_bit) + " abandoned: " + e.what());
        }
    }

    struct TargetViews {
        MutablePlaneView y, cb, cr;
    };

    TargetViews target_views() const {
        FramePicture& f = *frame_->frame;
        const FieldSelect field = target_field();
        return {f.y.view(field), f.cb.view(field), f.cr.view(field)};
    }

    SecondFieldState second_field_state() const { return {second_field_, frame_->frame.get()}; }

    ReferenceViews reference_views(Direction dir, bool bottom_field, bool whole_frame) const {
        const FramePicture* ref = select_reference(pic_, dir, bottom_field, store_.references(), second_field_state());
        return views_of(*ref, whole_frame ? FieldSelect::Whole : (bottom_field ? FieldSelect::Bottom : FieldSelect::Top));
    }

    MacroblockPrediction prediction_for(const MacroblockRec& mb, int mb_x, int mb_y) const {
        PredictionRequest req;
        req.mode = mb.mode;
        req.mb_x = mb_x;
        req.mb_y = mb_y;
        req.forward = mb.forward() || (pic_.coding_type == CodingType::P);
        req.backward = mb.backward();
        for (int s = 0; s < 2; ++s) {
            if ((s == 0 && !req.forward) || (s == 1 && !req.backward)) continue;
            const auto dir = static_cast<Direction>(s);
            switch (mb.mode) {
                case PredictionMode::FrameFrame:
                    req.vectors[s][0] = mb.vectors[0][s];
                    req.refs[s][0] = reference_views(dir, false, true);
                    break;
                case PredictionMode::FieldInFrame:
                    for (int r = 0; r < 2; ++r) {
                        req.vectors[s][r] = mb.vectors[r][s];
                        req.field_select[s][r] = mb.field_select[r][s];
                        req.refs[s][r] = reference_views(dir, mb.field_select[r][s], false);
                    }
                    break;
                case PredictionMode::FieldInField:
                    req.vectors[s][0] = mb.vectors[0][s];
                    req.field_select[s][0] = mb.field_select[0][s];
                    req.refs[s][0] = reference_views(dir, mb.field_select[0][s], false);
                    break;
            }
        }
        return predict(req);
    }

    void reconstruct(const MacroblockRec& mb) {
        const int mb_x = mb.address % mb_width_;
        const int mb_y = mb.address / mb_width_;
        const TargetViews out = target_views();

        std::optional<MacroblockPrediction> pred;
        if (!mb.intra()) pred = prediction_for(mb, mb_x, mb_y);

        const QuantMatrix& weights = mb.intra() ? seq_.intra_quant_matrix : seq_.non_intra_quant_matrix;
        const ScanMatrix& scan = ScanMatrix::for_picture(pic_.alternate_scan);
        for (int b = 0; b < 6; ++b) {
            Block spatial{};
            if (mb.block_coded(b)) {
                const CoeffBlock& cb = mb.blocks[static_cast<std::size_t>(b)];
                Block quantized = inverse_scan(cb.run_levels, scan, mb.intra() ? 1 : 0);
                if (mb.intra()) quantized[0] = cb.dc;
                const Block dequantized =
                    inverse_quantize(quantized, mb.intra(), weights, mb.quantiser_scale, pic_.intra_dc_precision, &frame_->clamps);
                spatial = idct_8x8(dequantized, &frame_->clamps);
            }
            // Destination rows of this block within the picture.
            MutablePlaneView plane;
            int x0 = 0, y0 = 0, row_step = 1;
            const std::uint8_t* pred_base = nullptr;
            int pred_stride = 0;
            if (b < 4) {
                plane = out.y;
                x0 = mb_x * 16 + (b & 1) * 8;
                if (mb.field_dct) {
                    y0 = mb_y * 16 + (b >> 1);
                    row_step = 2;
                } else {
                    y0 = mb_y * 16 + (b >> 1) * 8;
                }
                if (pred) {
                    const int local_y = y0 - mb_y * 16;
                    pred_base = pred->y.data() + local_y * 16 + (b & 1) * 8;
                    pred_stride = 16 * row_step;
                }
            } else {
                plane = b == 4 ? out.cb : out.cr;
                x0 = mb_x * 8;
                y0 = mb_y * 8;
                if (pred) {
                    pred_base = b == 4 ? pred->cb.data() : pred->cr.data();
                    pred_stride = 8;
                }
            }
            std::optional<PixelBlock> prediction;
            if (pred_base) {
                PixelBlock p{};
                for (int i = 0; i < 8; ++i)
                    for (int j = 0; j < 8; ++j) p[static_cast<std::size_t>(i * 8 + j)] = pred_base[i * pred_stride + j];
                prediction = p;
            }
            const PixelBlock pixels = reconstruct_block(spatial, prediction);
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) plane.at(x0 + j, y0 + i * row_step) = pixels[static_cast<std::size_t>(i * 8 + j)];
        }

        const auto idx = static_cast<std::size_t>(mb.address);
        mb_state_[idx] = MacroblockState::Decoded;
        const bool has_forward = !mb.intra() && (mb.forward() || pic_.coding_type == CodingType::P);
        mb_vectors_[idx] = has_forward ? mb.vectors[0][0] : MotionVector{};
        if (has_forward) last_vector_ = mb_vectors_[idx];
        ++result_.counters.macroblocks;
        if (mb.skipped) ++result_.counters.skipped_macroblocks;
    }

    // -- concealment -----------------------------------------------------------

    /// Reference used to conceal in this picture: the forward reference for
    /// P and B, the most recent reference for I, none at stream start.
    const FramePicture* concealment_reference() const {
        const ReferencePair& refs = store_.references();
        if (pic_.coding_type == CodingType::B) return refs.forward.get();
        return refs.backward.get();
    }

    void conceal_missing() {
        const TargetViews out = target_views();
        const FramePicture* ref = concealment_reference();
        const FieldSelect field = target_field();
        const std::optional<ReferenceViews> ref_views =
            ref ? std::optional<ReferenceViews>(views_of(*ref, field)) : std::nullopt;

        for (int mb_y = 0; mb_y < mb_rows_; ++mb_y) {
            for (int mb_x = 0; mb_x < mb_width_; ++mb_x) {
                const auto idx = static_cast<std::size_t>(mb_y * mb_width_ + mb_x);
                if (mb_state_[idx] != MacroblockState::Missing) continue;
                if (options_.strict) fail(ErrorKind::MalformedStream, "macroblock " + std::to_string(idx) + " not coded");
                conceal_one(mb_x, mb_y, out, ref_views);
                mb_state_[idx] = MacroblockState::Concealed;
                ++frame_->concealed;
                ++result_.counters.concealed_macroblocks;
            }
        }
    }

    void conceal_one(int mb_x, int mb_y, const TargetViews& out, const std::optional<ReferenceViews>& ref) {
        const auto idx = static_cast<std::size_t>(mb_y * mb_width_ + mb_x);
        if (!ref) {
            for (int i = 0; i < 16; ++i)
                for (int j = 0; j < 16; ++j) out.y.at(mb_x * 16 + j, mb_y * 16 + i) = 128;
            for (int i = 0; i < 8; ++i) {
                for (int j = 0; j < 8; ++j) {
                    out.cb.at(mb_x * 8 + j, mb_y * 8 + i) = 128;
                    out.cr.at(mb_x * 8 + j, mb_y * 8 + i) = 128;
                }
            }
            return;
        }

        std::vector<MotionVector> candidates{MotionVector{}, last_vector_};
        if (mb_y > 0) candidates.push_back(mb_vectors_[idx - static_cast<std::size_t>(mb_width_)]);

        BoundaryEdges edges;
        auto state_at = [&](int x, int y) { return mb_state_[static_cast<std::size_t>(y * mb_width_ + x)]; };
        if (mb_y > 0 && state_at(mb_x, mb_y - 1) != MacroblockState::Missing) {
            std::vector<int> row(16);
            for (int i = 0; i < 16; ++i) row[static_cast<std::size_t>(i)] = out.y.at(mb_x * 16 + i, mb_y * 16 - 1);
            edges.above = std::move(row);
        }
        if (mb_x > 0 && state_at(mb_x - 1, mb_y) != MacroblockState::Missing) {
            std::vector<int> col(16);
            for (int i = 0; i < 16; ++i) col[static_cast<std::size_t>(i)] = out.y.at(mb_x * 16 - 1, mb_y * 16 + i);
            edges.left = std::move(col);
        }
        if (mb_y + 1 < mb_rows_ && state_at(mb_x, mb_y + 1) != MacroblockState::Missing) {
            std::vector<int> row(16);
            for (int i = 0; i < 16; ++i) row[static_cast<std::size_t>(i)] = out.y.at(mb_x * 16 + i, mb_y * 16 + 16);
            edges.below = std::move(row);
        }

        auto predict_luma = [&](const MotionVector& mv) -> std::optional<std::vector<std::uint8_t>> {
            std::vector<std::uint8_t> block(256);
            try {
                detail::fetch_luma(ref->y, mb_x * 16, mb_y * 16, mv, 16, 16, block.data(), 16);
            } catch (const Error&) {
                return std::nullopt;
            }
            return block;
        };
        const ConcealmentChoice choice = conceal_select_mv(candidates, predict_luma, edges, 16);
        ++result_.counters.concealment_selections;

        PredictionRequest req;
        req.mode = PredictionMode::FrameFrame;
        req.forward = true;
        req.mb_x = mb_x;
        req.mb_y = mb_y;
        req.vectors[0][0] = choice.vector;
        req.refs[0][0] = *ref;
        MacroblockPrediction p;
        try {
            p = predict(req);
        } catch (const Error&) {
            // Chroma of the chosen vector can fall outside; use the co-located block.
            req.vectors[0][0] = MotionVector{};
            p = predict(req);
        }
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) out.y.at(mb_x * 16 + j, mb_y * 16 + i) = p.y[static_cast<std::size_t>(i * 16 + j)];
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) {
                out.cb.at(mb_x * 8 + j, mb_y * 8 + i) = p.cb[static_cast<std::size_t>(i * 8 + j)];
                out.cr.at(mb_x * 8 + j, mb_y * 8 + i) = p.cr[static_cast<std::size_t>(i * 8 + j)];
            }
        }
        mb_vectors_[idx] = choice.vector;
    }

    BitCursor cursor_;
    DecodeOptions options_;
    DecodeResult result_;

    SequenceInfo seq_;
    bool have_sequence_ = false;
    bool expect_sequence_extension_ = false;
    GopInfo gop_;
    PictureInfo pic_;
    bool second_field_ = false;
    bool picture_open_ = false;
    bool bound_ = false;
    std::int64_t picture_bit_ = 0;
    std::int64_t frame_start_bit_ = 0;
    Context context_ = Context::None;

    std::optional<FrameInProgress> frame_;
    std::optional<std::int64_t> pending_boundary_;
    FrameStore store_;
    BandwidthAccumulator accumulator_;
    bool done_ = false;

    int mb_width_ = 0;
    int mb_rows_ = 0;
    std::vector<MacroblockState> mb_state_;
    std::vector<MotionVector> mb_vectors_;
    MotionVector last_vector_;
};

inline DecodeResult decode_stream(std::span<const std::uint8_t> data, DecodeOptions options = {}) {
    return Decoder(data, options).run();
}

}  // namespace m2vscope
