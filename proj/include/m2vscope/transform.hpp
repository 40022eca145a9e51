#pragma once

// Inverse scan, inverse quantisation with saturation and mismatch control,
// 8x8 IDCT and final reconstruction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "m2vscope/headers.hpp"
#include "m2vscope/vlc.hpp"

namespace m2vscope {

/// 8x8 values in row-major order.
using Block = std::array<int, 64>;
using PixelBlock = std::array<std::uint8_t, 64>;

inline constexpr int kCoefficientMin = -2048;
inline constexpr int kCoefficientMax = 2047;
inline constexpr int kSpatialMin = -256;
inline constexpr int kSpatialMax = 255;

struct CoeffBlock {
    enum class Stage { RunLevels, Quantized, Dequantized, Spatial };

    Stage stage = Stage::RunLevels;
    bool intra = false;
    int dc = 0;  // intra only: predictor + differential
    std::vector<RunLevel> run_levels;
    Block matrix{};
};

/// Largest corrections applied by the two clamps, per picture.
struct ClampStats {
    int coefficient_max = 0;  // in coefficient units, [-2048, 2047] saturation
    int pixel_max = 0;        // in pixel units, [-256, 255] IDCT clip

    void merge(const ClampStats& o) {
        coefficient_max = std::max(coefficient_max, o.coefficient_max);
        pixel_max = std::max(pixel_max, o.pixel_max);
    }
};

class ScanMatrix {
public:
    /// `order[i]` is the row-major cell for serial position i.
    explicit ScanMatrix(const std::array<int, 64>& order) : order_(order) {
        std::array<bool, 64> seen{};
        for (int cell : order_) {
            if (cell < 0 || cell > 63 || seen[static_cast<std::size_t>(cell)]) {
                fail(ErrorKind::SpecError, "scan order is not a permutation of 0..63");
            }
            seen[static_cast<std::size_t>(cell)] = true;
        }
        if (order_[0] != 0) fail(ErrorKind::SpecError, "scan order must start at (0,0)");
    }

    static const ScanMatrix& zigzag() {
        static const ScanMatrix s(zigzag_order());
        return s;
    }
    static const ScanMatrix& alternate() {
        static const ScanMatrix s(alternate_order());
        return s;
    }
    static const ScanMatrix& for_picture(bool alternate_scan) { return alternate_scan ? alternate() : zigzag(); }

    int cell(int serial) const { return order_[static_cast<std::size_t>(serial)]; }
    int row(int serial) const { return cell(serial) / 8; }
    int col(int serial) const { return cell(serial) % 8; }
    const std::array<int, 64>& order() const { return order_; }

private:
    std::array<int, 64> order_;
};

/// Expands runs from serial position `first_position` onwards. Positions past
/// 63 throw CoefficientOverflow.
inline Block inverse_scan(std::span<const RunLevel> run_levels, const ScanMatrix& scan, int first_position = 0) {
    Block m{};
    int pos = first_position;
    for (const RunLevel& rl : run_levels) {
        if (rl.is_eob) break;
        pos += rl.run;
        if (pos > 63) fail(ErrorKind::CoefficientOverflow, "coefficient position " + std::to_string(pos));
        m[static_cast<std::size_t>(scan.cell(pos))] = rl.level;
        ++pos;
    }
    return m;
}

namespace detail {
inline int saturate_coefficient(std::int64_t v, ClampStats* stats) {
    const std::int64_t clamped = std::clamp<std::int64_t>(v, kCoefficientMin, kCoefficientMax);
    if (stats && clamped != v) {
        const std::int64_t diff = v > clamped ? v - clamped : clamped - v;
        stats->coefficient_max = static_cast<int>(std::max<std::int64_t>(stats->coefficient_max, std::min<std::int64_t>(diff, 1 << 30)));
    }
    return static_cast<int>(clamped);
}
}  // namespace detail

/// If the coefficient sum is even, flips the least significant bit of the
/// (7,7) coefficient.
inline Block mismatch_control(Block block) {
    std::int64_t sum = 0;
    for (int v : block) sum += v;
    if ((sum & 1) == 0) block[63] ^= 1;
    return block;
}

/// Intra DC uses the precision multiplier; every other coefficient is
/// ((2*QF + k) * w * q_s) / 32 truncated toward zero, k = 0 for intra and
/// sign(QF) otherwise. Saturation then mismatch control follow.
inline Block inverse_quantize(const Block& quantized, bool intra, const QuantMatrix& weights, int quantiser_scale,
                              int intra_dc_precision, ClampStats* stats = nullptr) {
    Block out{};
    for (std::size_t i = 0; i < 64; ++i) {
        const std::int64_t qf = quantized[i];
        std::int64_t value = 0;
        if (intra && i == 0) {
            value = qf * (8 >> (intra_dc_precision - 8));
        } else if (qf != 0) {
            const std::int64_t k = intra ? 0 : (qf > 0 ? 1 : -1);
            const std::int64_t product = (2 * qf + k) * weights[i] * quantiser_scale;
            const std::int64_t magnitude = (product < 0 ? -product : product) / 32;
            value = product < 0 ? -magnitude : magnitude;
        }
        out[i] = detail::saturate_coefficient(value, stats);
    }
    return mismatch_control(out);
}

namespace detail {
// Basis scaled by 2^22: kIdctBasis[i][x] = c(x)/2 * cos((2i+1) x pi / 16).
inline constexpr int kIdctShift = 22;

inline const std::array<std::array<std::int64_t, 8>, 8>& idct_basis() {
    static const auto basis = [] {
        std::array<std::array<std::int64_t, 8>, 8> b{};
        const double pi = std::acos(-1.0);
        for (int i = 0; i < 8; ++i) {
            for (int x = 0; x < 8; ++x) {
                const double c = x == 0 ? std::sqrt(2.0) / 2.0 : 1.0;
                const double v = c / 2.0 * std::cos((2 * i + 1) * x * pi / 16.0);
                b[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] =
                    std::llround(v * static_cast<double>(std::int64_t{1} << kIdctShift));
            }
        }
        return b;
    }();
    return basis;
}
}  // namespace detail

/// Separable fixed-point IDCT: a row pass then a column pass, each with a
/// 22-bit fractional basis, rounded half up once at the end and clipped to
/// [-256, 255].
inline Block idct_8x8(const Block& coefficients, ClampStats* stats = nullptr) {
    const auto& basis = detail::idct_basis();
    // Row pass: for each coefficient row u, transform along columns index.
    std::array<std::int64_t, 64> rows{};
    for (int u = 0; u < 8; ++u) {
        for (int j = 0; j < 8; ++j) {
            std::int64_t acc = 0;
            for (int v = 0; v < 8; ++v) {
                acc += basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(v)] *
                       coefficients[static_cast<std::size_t>(u * 8 + v)];
            }
            rows[static_cast<std::size_t>(u * 8 + j)] = acc;
        }
    }
    Block out{};
    constexpr int shift = 2 * detail::kIdctShift;
    constexpr std::int64_t half = std::int64_t{1} << (shift - 1);
    // Exact .5 results (DC-only blocks, the 4th basis functions) come out of
    // the rounded basis a hair either side of the tie. Values within 1/4096
    // below a tie round up with it.
    constexpr std::int64_t tie_guard = std::int64_t{1} << (shift - 12);
    for (int j = 0; j < 8; ++j) {
        for (int i = 0; i < 8; ++i) {
            std::int64_t acc = 0;
            for (int u = 0; u < 8; ++u) {
                acc += basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(u)] *
                       rows[static_cast<std::size_t>(u * 8 + j)];
            }
            // Arithmetic shift floors, so adding half rounds to nearest.
            const std::int64_t value = (acc + half + tie_guard) >> shift;
            const std::int64_t clipped = std::clamp<std::int64_t>(value, kSpatialMin, kSpatialMax);
            if (stats && clipped != value) {
                stats->pixel_max = std::max(stats->pixel_max, static_cast<int>(std::abs(value - clipped)));
            }
            out[static_cast<std::size_t>(i * 8 + j)] = static_cast<int>(clipped);
        }
    }
    return out;
}

/// Intra blocks take no prediction and no level offset; predicted blocks
/// add the residual to the prediction. Results clamp to 0..255.
inline PixelBlock reconstruct_block(const Block& spatial, const std::optional<PixelBlock>& prediction) {
    PixelBlock out{};
    for (std::size_t i = 0; i < 64; ++i) {
        const int base = prediction ? (*prediction)[i] : 0;
        out[i] = static_cast<std::uint8_t>(std::clamp(base + spatial[i], 0, 255));
    }
    return out;
}

}  // namespace m2vscope
