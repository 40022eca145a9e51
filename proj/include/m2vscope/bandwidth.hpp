#pragma once

// Per-frame bandwidth statistics and the VBV buffer fullness model.
//
// A frame's bits run from its picture start code to the next picture,
// GOP or sequence start code (or the sequence end code). Sequence and GOP
// headers therefore count toward the picture that follows them, and the
// per-frame sizes sum to the total coded bits between the first picture
// start code and the sequence end code.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "m2vscope/error.hpp"
#include "m2vscope/headers.hpp"
#include "m2vscope/transform.hpp"

namespace m2vscope {

struct FrameStats {
    std::int64_t frame_index = 0;
    std::string frame_name;
    CodingType coding_type = CodingType::I;
    int temporal_reference = 0;
    std::int64_t bit_offset = 0;
    std::int64_t bits = 0;
    double decode_time = 0.0;
    std::int64_t vbv_fullness_after = 0;
    bool vbv_underflow = false;
    bool vbv_overflow = false;
    int quant_error_max = 0;  // coefficient saturation
    int idct_clip_max = 0;    // spatial clip
    std::int64_t prev_decoded_size = 0;
    int concealed_macroblocks = 0;
    bool dropped = false;  // B picture without references: counted, not displayed
};

/// Fullness recurrence f <- f + bit_rate * period - picture_bits, clamped
/// to [0, buffer size]. Tracked exactly as a rational over the frame-rate
/// numerator.
class VbvModel {
public:
    VbvModel() = default;
    VbvModel(std::int64_t bit_rate, FrameRate rate, std::int64_t buffer_size)
        : bit_rate_(bit_rate), rate_(rate), buffer_size_(buffer_size) {
        if (bit_rate <= 0) fail(ErrorKind::SpecError, "VBV model needs a positive bit rate");
    }

    /// Initial fullness bit_rate * vbv_delay / 90000, or half the buffer
    /// for the variable-rate sentinel 0xFFFF.
    void start(int vbv_delay) {
        const std::int64_t initial =
            vbv_delay == 0xFFFF ? buffer_size_ / 2 : bit_rate_ * static_cast<std::int64_t>(vbv_delay) / 90000;
        scaled_ = std::min(initial, buffer_size_) * rate_.num;
        started_ = true;
    }

    void set_fullness(std::int64_t bits) {
        scaled_ = bits * rate_.num;
        started_ = true;
    }

    bool started() const noexcept { return started_; }

    struct Update {
        std::int64_t fullness;
        bool underflow;
        bool overflow;
    };

    Update update(std::int64_t picture_bits) {
        const std::int64_t inflow = bit_rate_ * rate_.den;
        std::int64_t next = scaled_ + inflow - picture_bits * rate_.num;
        Update u{0, false, false};
        const std::int64_t cap = buffer_size_ * rate_.num;
        if (next < 0) {
            next = 0;
            u.underflow = true;
        } else if (buffer_size_ > 0 && next > cap) {
            next = cap;
            u.overflow = true;
        }
        scaled_ = next;
        u.fullness = fullness();
        return u;
    }

    std::int64_t fullness() const noexcept { return scaled_ / rate_.num; }

private:
    std::int64_t bit_rate_ = 0;
    FrameRate rate_{};
    std::int64_t buffer_size_ = 0;
    std::int64_t scaled_ = 0;
    bool started_ = false;
};

/// Single-owner accumulator fed in decode order.
class BandwidthAccumulator {
public:
    FrameStats account_picture(std::int64_t bit_start, std::int64_t bit_end, const PictureInfo& pic,
                               const SequenceInfo& seq, const ClampStats& clamps = {}, int concealed = 0) {
        if (bit_end <= bit_start) fail(ErrorKind::SpecError, "picture spans no bits");
        if (!vbv_.started()) {
            vbv_ = VbvModel(seq.bit_rate, seq.frame_rate(), seq.vbv_buffer_size);
            vbv_.start(pic.vbv_delay);
        }
        FrameStats s;
        s.frame_index = next_index_++;
        s.coding_type = pic.coding_type;
        s.temporal_reference = pic.temporal_reference;
        s.frame_name = std::string(1, coding_type_letter(pic.coding_type)) + std::to_string(pic.temporal_reference);
        s.bit_offset = bit_start;
        s.bits = bit_end - bit_start;
        s.decode_time = static_cast<double>(s.frame_index) * seq.frame_period();
        const auto u = vbv_.update(s.bits);
        s.vbv_fullness_after = u.fullness;
        s.vbv_underflow = u.underflow;
        s.vbv_overflow = u.overflow;
        s.quant_error_max = clamps.coefficient_max;
        s.idct_clip_max = clamps.pixel_max;
        s.prev_decoded_size = prev_bits_;
        s.concealed_macroblocks = concealed;
        prev_bits_ = s.bits;
        return s;
    }

private:
    VbvModel vbv_;
    std::int64_t next_index_ = 0;
    std::int64_t prev_bits_ = 0;
};

struct BandwidthReport {
    std::vector<FrameStats> per_frame;
    std::vector<std::int64_t> cumulative_bits;
    std::int64_t min_bits = 0;
    std::int64_t max_bits = 0;
    std::int64_t total_bits = 0;  // avg = total_bits / frames
    std::int64_t avg_bits_rounded = 0;
    double frame_period = 0.0;
    FrameRate frame_rate{};
    std::int64_t bit_rate = 0;
    std::int64_t vbv_buffer_size = 0;
    int width = 0;
    int height = 0;
    std::string stream_label;
    bool any_underflow = false;
    bool any_overflow = false;
    int concealed_macroblocks = 0;

    std::size_t frames() const { return per_frame.size(); }
    double avg_bits() const { return static_cast<double>(total_bits) / static_cast<double>(per_frame.size()); }
};

inline BandwidthReport summarize(std::vector<FrameStats> per_frame, const SequenceInfo& seq, std::string label) {
    if (per_frame.empty()) fail(ErrorKind::EmptyStream, "no pictures to summarize");
    BandwidthReport r;
    r.min_bits = per_frame.front().bits;
    r.max_bits = per_frame.front().bits;
    std::int64_t running = 0;
    for (const auto& f : per_frame) {
        running += f.bits;
        r.cumulative_bits.push_back(running);
        r.min_bits = std::min(r.min_bits, f.bits);
        r.max_bits = std::max(r.max_bits, f.bits);
        r.any_underflow = r.any_underflow || f.vbv_underflow;
        r.any_overflow = r.any_overflow || f.vbv_overflow;
        r.concealed_macroblocks += f.concealed_macroblocks;
    }
    r.total_bits = running;
    const auto n = static_cast<std::int64_t>(per_frame.size());
    r.avg_bits_rounded = (running + n / 2) / n;
    r.frame_period = seq.frame_period();
    r.frame_rate = seq.frame_rate();
    r.bit_rate = seq.bit_rate;
    r.vbv_buffer_size = seq.vbv_buffer_size;
    r.width = seq.horizontal_size;
    r.height = seq.vertical_size;
    r.stream_label = std::move(label);
    r.per_frame = std::move(per_frame);
    return r;
}

}  // namespace m2vscope
