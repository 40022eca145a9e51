#pragma once

// Bit-granular access to an elementary stream held in memory, plus the
// matching MSB-first writer used by the fixture generator.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "m2vscope/error.hpp"

namespace m2vscope {

namespace start_code {
inline constexpr std::uint8_t picture = 0x00;
inline constexpr std::uint8_t slice_min = 0x01;
inline constexpr std::uint8_t slice_max = 0xAF;
inline constexpr std::uint8_t user_data = 0xB2;
inline constexpr std::uint8_t sequence_header = 0xB3;
inline constexpr std::uint8_t sequence_error = 0xB4;
inline constexpr std::uint8_t extension = 0xB5;
inline constexpr std::uint8_t sequence_end = 0xB7;
inline constexpr std::uint8_t group = 0xB8;

constexpr bool is_slice(std::uint8_t code) { return code >= slice_min && code <= slice_max; }
}  // namespace start_code

/// Position-tracked MSB-first reader over an immutable byte sequence.
/// Over-reads throw EndOfStream instead of zero-filling.
class BitCursor {
public:
    BitCursor() = default;
    explicit BitCursor(std::span<const std::uint8_t> data)
        : data_(data), total_bits_(data.size() * 8) {}

    std::uint64_t bits_consumed() const noexcept { return bit_pos_; }
    std::uint64_t total_bits() const noexcept { return total_bits_; }
    std::uint64_t bits_left() const noexcept { return total_bits_ - bit_pos_; }
    bool byte_aligned() const noexcept { return (bit_pos_ & 7) == 0; }
    std::span<const std::uint8_t> data() const noexcept { return data_; }

    std::uint32_t peek_bits(unsigned n) const {
        if (n > 32) fail(ErrorKind::SpecError, "peek of more than 32 bits");
        if (n == 0) return 0;
        if (n > bits_left()) {
            fail(ErrorKind::EndOfStream, "need " + std::to_string(n) + " bits at bit " +
                                             std::to_string(bit_pos_) + ", " +
                                             std::to_string(bits_left()) + " left");
        }
        const std::size_t first = bit_pos_ >> 3;
        const unsigned skip = bit_pos_ & 7;
        // Up to 5 bytes cover any 32-bit window at an arbitrary bit offset.
        std::uint64_t window = 0;
        for (std::size_t i = 0; i < 5; ++i) {
            window <<= 8;
            if (first + i < data_.size()) window |= data_[first + i];
        }
        window <<= 24;  // 40 bits of window now sit at the top of 64
        window <<= skip;
        return static_cast<std::uint32_t>(window >> (64 - n));
    }

    std::uint32_t read_bits(unsigned n) {
        const std::uint32_t v = peek_bits(n);
        bit_pos_ += n;
        return v;
    }

    bool read_flag() { return read_bits(1) != 0; }

    void skip_bits(std::uint64_t n) {
        if (n > bits_left()) fail(ErrorKind::EndOfStream, "skip past end of stream");
        bit_pos_ += n;
    }

    void align_to_byte() noexcept {
        bit_pos_ = (bit_pos_ + 7) & ~std::uint64_t{7};
        if (bit_pos_ > total_bits_) bit_pos_ = total_bits_;
    }

    /// True when the next 24 bits are a start-code prefix (or too few bits
    /// remain to hold more syntax). Used for the end-of-slice test.
    bool at_start_code_or_end() const {
        if (bits_left() < 24) return true;
        return peek_bits(23) == 0;
    }

    /// Byte-aligns, then scans for the next 0x000001 prefix and consumes it
    /// together with the identifying byte. Returns nullopt at exhaustion, in
    /// which case the cursor is left at the end of the data.
    std::optional<std::uint8_t> next_start_code() noexcept {
        align_to_byte();
        std::size_t i = bit_pos_ >> 3;
        const std::size_t n = data_.size();
        while (i + 3 < n) {
            if (data_[i + 2] > 1) {
                i += 3;
                continue;
            }
            if (data_[i] == 0 && data_[i + 1] == 0 && data_[i + 2] == 1) {
                bit_pos_ = (i + 4) * 8;
                return data_[i + 3];
            }
            ++i;
        }
        bit_pos_ = total_bits_;
        return std::nullopt;
    }

    void seek_bits(std::uint64_t pos) {
        if (pos > total_bits_) fail(ErrorKind::EndOfStream, "seek past end of stream");
        bit_pos_ = pos;
    }

private:
    std::span<const std::uint8_t> data_;
    std::uint64_t bit_pos_ = 0;
    std::uint64_t total_bits_ = 0;
};

/// MSB-first bit writer.
class BitWriter {
public:
    void put_bits(std::uint32_t value, unsigned n) {
        for (unsigned i = n; i-- > 0;) put_bit((value >> i) & 1u);
    }

    void put_bit(unsigned bit) {
        if ((bits_ & 7) == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ & 7));
        ++bits_;
    }

    /// Writes a code given as a string of '0'/'1' characters.
    void put_code(std::string_view code) {
        for (char c : code) put_bit(c == '1' ? 1u : 0u);
    }

    void put_signed(int value, unsigned n) {
        put_bits(static_cast<std::uint32_t>(value) & ((n == 32) ? 0xFFFFFFFFu : ((1u << n) - 1)), n);
    }

    /// Zero-pads to the next byte boundary.
    void align_zero() {
        while (bits_ & 7) put_bit(0);
    }

    void put_start_code(std::uint8_t code) {
        align_zero();
        put_bits(0x000001, 24);
        put_bits(code, 8);
    }

    std::uint64_t bit_count() const noexcept { return bits_; }
    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
    std::vector<std::uint8_t> take() && { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t bits_ = 0;
};

}  // namespace m2vscope
