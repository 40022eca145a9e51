#pragma once

// Macroblock layer: address increments and skipped macroblocks, macroblock
// modes, motion vectors, coded block pattern and per-block coefficients.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "m2vscope/bitio.hpp"
#include "m2vscope/headers.hpp"
#include "m2vscope/motion.hpp"
#include "m2vscope/transform.hpp"
#include "m2vscope/vlc.hpp"

namespace m2vscope {

/// Prediction chains carried through a slice. Reset at every slice start.
struct PredictorState {
    int dc[3] = {128, 128, 128};
    int pmv[2][2][2] = {};  // [r][direction][horizontal/vertical]
    int last_address = -1;
    bool first_in_slice = true;
    int quantiser_scale_code = 1;

    // Previous macroblock's motion, reused by skipped macroblocks in B pictures.
    int prev_flags = 0;
    PredictionMode prev_mode = PredictionMode::FrameFrame;
    MotionVector prev_vectors[2][2] = {};
    bool prev_field_select[2][2] = {};

    static PredictorState at_slice_start(const PictureInfo& pic, const SliceInfo& slice, int mb_width) {
        PredictorState s;
        s.reset_dc(pic);
        s.last_address = slice.mb_row() * mb_width - 1;
        s.quantiser_scale_code = slice.quantiser_scale_code;
        return s;
    }

    void reset_dc(const PictureInfo& pic) {
        const int v = 1 << (pic.intra_dc_precision - 1);
        dc[0] = dc[1] = dc[2] = v;
    }
    void reset_pmv() {
        for (auto& r : pmv)
            for (auto& s : r)
                for (auto& t : s) t = 0;
    }
};

struct MacroblockRec {
    int address = 0;
    std::optional<int> quant_scale_override;  // quantiser_scale_code 1..31
    int quantiser_scale = 0;                  // effective step for this macroblock
    int flags = 0;                            // mb_flag bits
    bool skipped = false;
    PredictionMode mode = PredictionMode::FrameFrame;
    bool field_dct = false;
    MotionVector vectors[2][2] = {};  // [r][direction]
    bool field_select[2][2] = {};     // [r][direction]
    int coded_block_pattern = 0;      // bit 5 = block 0
    std::array<CoeffBlock, 6> blocks{};

    bool intra() const { return (flags & mb_flag::intra) != 0; }
    bool forward() const { return (flags & mb_flag::forward) != 0; }
    bool backward() const { return (flags & mb_flag::backward) != 0; }
    bool pattern() const { return (flags & mb_flag::pattern) != 0; }
    bool block_coded(int b) const { return (coded_block_pattern >> (5 - b)) & 1; }
};

/// Run-level list of one block. Intra blocks first add the DC differential
/// to the component predictor.
inline CoeffBlock decode_block(BitCursor& c, int block_index, bool intra, const PictureInfo& pic, int (&dc_predictors)[3]) {
    CoeffBlock block;
    block.intra = intra;
    int position = 0;
    CoefficientTable table = CoefficientTable::B14;
    if (intra) {
        const int cc = block_index < 4 ? 0 : block_index - 3;
        const int delta = decode_dc_differential(c, cc == 0 ? Component::Luma : Component::Chroma);
        dc_predictors[cc] += delta;
        block.dc = dc_predictors[cc];
        position = 1;
        if (pic.intra_vlc_format) table = CoefficientTable::B15;
    }
    bool first = !intra;
    for (;;) {
        const RunLevel rl = decode_run_level(c, table, first);
        first = false;
        if (rl.is_eob) break;
        position += rl.run;
        if (position > 63) fail(ErrorKind::CoefficientOverflow, "run past coefficient 63");
        block.run_levels.push_back(rl);
        ++position;
    }
    return block;
}

namespace detail {

inline void decode_vectors_for(BitCursor& c, const PictureInfo& pic, int s, int motion_vector_count, bool field_format,
                               PredictorState& ps, MacroblockRec& mb) {
    const int fh = pic.f_code[s][0];
    const int fv = pic.f_code[s][1];
    if (motion_vector_count == 1) {
        if (field_format) mb.field_select[0][s] = c.read_flag();
        MotionVector pred{ps.pmv[0][s][0], ps.pmv[0][s][1]};
        const MotionVector v = decode_motion_vector(c, fh, fv, pred);
        mb.vectors[0][s] = v;
        ps.pmv[0][s][0] = ps.pmv[1][s][0] = v.horizontal;
        ps.pmv[0][s][1] = ps.pmv[1][s][1] = v.vertical;
        return;
    }
    // Field prediction in a frame picture: vertical predictors are kept in
    // frame units and halved for the field vector.
    for (int r = 0; r < 2; ++r) {
        mb.field_select[r][s] = c.read_flag();
        const int h = decode_motion_component(c, fh, ps.pmv[r][s][0]);
        const int v = decode_motion_component(c, fv, ps.pmv[r][s][1] >> 1);
        mb.vectors[r][s] = {h, v};
        ps.pmv[r][s][0] = h;
        ps.pmv[r][s][1] = v * 2;
    }
}

inline MacroblockRec synthesize_skipped(int address, const PictureInfo& pic, PredictorState& ps) {
    MacroblockRec mb;
    mb.address = address;
    mb.skipped = true;
    mb.quantiser_scale = 0;
    ps.reset_dc(pic);
    if (pic.coding_type == CodingType::I) fail(ErrorKind::MalformedStream, "skipped macroblock in I picture");
    if (pic.coding_type == CodingType::P) {
        mb.flags = mb_flag::forward;
        ps.reset_pmv();
        if (pic.is_field()) {
            mb.mode = PredictionMode::FieldInField;
            mb.field_select[0][0] = pic.structure == PictureStructure::BottomField;
        } else {
            mb.mode = PredictionMode::FrameFrame;
        }
        return mb;
    }
    if (ps.prev_flags & mb_flag::intra) fail(ErrorKind::MalformedStream, "skipped macroblock after intra in B picture");
    mb.flags = ps.prev_flags & (mb_flag::forward | mb_flag::backward);
    mb.mode = ps.prev_mode;
    for (int r = 0; r < 2; ++r) {
        for (int s = 0; s < 2; ++s) {
            mb.vectors[r][s] = ps.prev_vectors[r][s];
            mb.field_select[r][s] = ps.prev_field_select[r][s];
        }
    }
    return mb;
}

inline void remember_motion(const MacroblockRec& mb, PredictorState& ps) {
    ps.prev_flags = mb.flags;
    ps.prev_mode = mb.mode;
    for (int r = 0; r < 2; ++r) {
        for (int s = 0; s < 2; ++s) {
            ps.prev_vectors[r][s] = mb.vectors[r][s];
            ps.prev_field_select[r][s] = mb.field_select[r][s];
        }
    }
}

}  // namespace detail

/// Decodes one coded macroblock. An address increment above one in the
/// middle of a slice synthesizes the skipped macroblocks in between; they
/// precede the coded one in the returned list.
inline std::vector<MacroblockRec> decode_macroblock(BitCursor& c, const PictureInfo& pic, const SequenceInfo& seq,
                                                    PredictorState& ps) {
    const VlcTables& t = vlc_tables();
    int increment = 0;
    for (;;) {
        const VlcSymbol sym = t.address_increment.decode(c);
        if (sym.kind == SymbolKind::Escape) {
            increment += 33;
            continue;
        }
        increment += sym.value;
        break;
    }

    std::vector<MacroblockRec> out;
    const int address = ps.last_address + increment;
    const int mb_count = seq.mb_width() * (pic.is_field() ? seq.mb_height() / 2 : seq.mb_height());
    if (address >= mb_count) fail(ErrorKind::MalformedStream, "macroblock address past end of picture");
    if (!ps.first_in_slice) {
        for (int a = ps.last_address + 1; a < address; ++a) {
            out.push_back(detail::synthesize_skipped(a, pic, ps));
        }
    }
    ps.first_in_slice = false;
    ps.last_address = address;

    MacroblockRec mb;
    mb.address = address;
    const VlcTable& type_table = pic.coding_type == CodingType::I   ? t.mb_type_i
                                 : pic.coding_type == CodingType::P ? t.mb_type_p
                                                                    : t.mb_type_b;
    mb.flags = type_table.decode(c).value;

    int motion_vector_count = 1;
    bool field_format = pic.is_field();
    if (mb.forward() || mb.backward()) {
        if (!pic.is_field()) {
            int motion_type = 2;
            if (!pic.frame_pred_frame_dct) motion_type = static_cast<int>(c.read_bits(2));
            switch (motion_type) {
                case 1:
                    mb.mode = PredictionMode::FieldInFrame;
                    motion_vector_count = 2;
                    field_format = true;
                    break;
                case 2: mb.mode = PredictionMode::FrameFrame; break;
                case 3: fail(ErrorKind::UnsupportedStream, "dual-prime prediction");
                default: fail(ErrorKind::MalformedStream, "reserved frame_motion_type");
            }
        } else {
            const int motion_type = static_cast<int>(c.read_bits(2));
            switch (motion_type) {
                case 1: mb.mode = PredictionMode::FieldInField; break;
                case 2: fail(ErrorKind::UnsupportedStream, "16x8 motion compensation in field pictures");
                case 3: fail(ErrorKind::UnsupportedStream, "dual-prime prediction");
                default: fail(ErrorKind::MalformedStream, "reserved field_motion_type");
            }
        }
    } else if (pic.is_field()) {
        mb.mode = PredictionMode::FieldInField;
    }
    if (!pic.is_field() && !pic.frame_pred_frame_dct && (mb.intra() || mb.pattern())) {
        mb.field_dct = c.read_flag();
    }
    if (mb.flags & mb_flag::quant) {
        const int code = static_cast<int>(c.read_bits(5));
        if (code == 0) fail(ErrorKind::MalformedStream, "quantiser_scale_code 0");
        mb.quant_scale_override = code;
        ps.quantiser_scale_code = code;
    }
    mb.quantiser_scale = quantiser_scale_for(ps.quantiser_scale_code, pic.q_scale_type);

    if (mb.intra() && pic.concealment_motion_vectors) {
        // Parsed to keep the predictors in step, then discarded.
        MacroblockRec scratch;
        detail::decode_vectors_for(c, pic, 0, 1, pic.is_field(), ps, scratch);
        c.read_bits(1);  // marker
    } else {
        if (mb.forward()) detail::decode_vectors_for(c, pic, 0, motion_vector_count, field_format, ps, mb);
        if (mb.backward()) detail::decode_vectors_for(c, pic, 1, motion_vector_count, field_format, ps, mb);
    }

    if (mb.intra()) {
        mb.coded_block_pattern = 0x3F;
        if (!pic.concealment_motion_vectors) ps.reset_pmv();
    } else {
        ps.reset_dc(pic);
        if (pic.coding_type == CodingType::P && !mb.forward()) {
            // No motion compensation: zero vector from the same-parity field.
            ps.reset_pmv();
            if (pic.is_field()) mb.field_select[0][0] = pic.structure == PictureStructure::BottomField;
        }
        if (mb.pattern()) {
            mb.coded_block_pattern = t.coded_block_pattern.decode(c).value;
            if (mb.coded_block_pattern == 0) fail(ErrorKind::MalformedStream, "coded_block_pattern 0 in 4:2:0");
        }
    }

    for (int b = 0; b < 6; ++b) {
        if (mb.block_coded(b)) mb.blocks[static_cast<std::size_t>(b)] = decode_block(c, b, mb.intra(), pic, ps.dc);
    }
    detail::remember_motion(mb, ps);
    out.push_back(std::move(mb));
    return out;
}

}  // namespace m2vscope
