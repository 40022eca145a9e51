#pragma once

// Reconstructed pictures, field/frame views over them, and the reference
// store that turns decode order into display order.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "m2vscope/error.hpp"
#include "m2vscope/headers.hpp"

namespace m2vscope {

template <typename T>
struct PlaneView {
    T* data = nullptr;
    int width = 0;
    int height = 0;
    std::ptrdiff_t stride = 0;

    T& at(int x, int y) const { return data[static_cast<std::ptrdiff_t>(y) * stride + x]; }
    T* row(int y) const { return data + static_cast<std::ptrdiff_t>(y) * stride; }
    explicit operator bool() const { return data != nullptr; }

    operator PlaneView<const T>() const { return {data, width, height, stride}; }
};

using ConstPlaneView = PlaneView<const std::uint8_t>;
using MutablePlaneView = PlaneView<std::uint8_t>;

enum class FieldSelect { Top, Bottom, Whole };

class Plane {
public:
    Plane() = default;
    Plane(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y * width_ + x)]; }
    std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y * width_ + x)]; }

    /// Top field = even rows, bottom field = odd rows.
    MutablePlaneView view(FieldSelect field = FieldSelect::Whole) {
        return make_view<std::uint8_t>(pixels_.data(), field);
    }
    ConstPlaneView view(FieldSelect field = FieldSelect::Whole) const {
        return make_view<const std::uint8_t>(pixels_.data(), field);
    }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    template <typename T>
    PlaneView<T> make_view(T* base, FieldSelect field) const {
        if (field == FieldSelect::Whole) return {base, width_, height_, width_};
        const int offset = field == FieldSelect::Top ? 0 : width_;
        return {base + offset, width_, height_ / 2, 2 * static_cast<std::ptrdiff_t>(width_)};
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

struct FramePicture {
    Plane y;
    Plane cb;
    Plane cr;
    int display_width = 0;
    int display_height = 0;
    int temporal_reference = 0;
    CodingType coding_type = CodingType::I;
    bool progressive = true;
    std::int64_t decode_index = 0;

    static FramePicture blank(int coded_width, int coded_height, std::uint8_t fill = 0) {
        FramePicture f;
        f.y = Plane(coded_width, coded_height, fill);
        f.cb = Plane(coded_width / 2, coded_height / 2, fill);
        f.cr = Plane(coded_width / 2, coded_height / 2, fill);
        f.display_width = coded_width;
        f.display_height = coded_height;
        return f;
    }

    Plane& plane(int component) { return component == 0 ? y : component == 1 ? cb : cr; }
    const Plane& plane(int component) const { return component == 0 ? y : component == 1 ? cb : cr; }
};

using FrameHandle = std::shared_ptr<FramePicture>;

struct ReferencePair {
    FrameHandle forward;
    FrameHandle backward;
};

/// Interlaced targets take the top field on even rows and the bottom field
/// on odd rows; `Whole` writes contiguous rows.
inline void write_field_or_frame(Plane& target, FieldSelect field, std::span<const std::vector<std::uint8_t>> rows) {
    MutablePlaneView v = target.view(field);
    if (static_cast<int>(rows.size()) != v.height) {
        fail(ErrorKind::GeometryMismatch, "expected " + std::to_string(v.height) + " rows, got " + std::to_string(rows.size()));
    }
    for (int r = 0; r < v.height; ++r) {
        const auto& src = rows[static_cast<std::size_t>(r)];
        if (static_cast<int>(src.size()) != v.width) fail(ErrorKind::GeometryMismatch, "row width mismatch");
        std::copy(src.begin(), src.end(), v.row(r));
    }
}

/// Holds the forward/backward references and emits pictures in display
/// order. Callers commit in decode order.
class FrameStore {
public:
    /// I/P: the previous backward reference is released for display and
    /// becomes the forward reference. B: emitted at once when both references
    /// exist, otherwise dropped with a warning.
    std::vector<FrameHandle> commit_picture(FrameHandle picture) {
        std::vector<FrameHandle> out;
        if (!picture) return out;
        if (picture->coding_type == CodingType::B) {
            if (!refs_.forward || !refs_.backward) {
                warnings_.push_back("BrokenGop: B picture with temporal_reference " +
                                    std::to_string(picture->temporal_reference) + " dropped, missing reference");
                return out;
            }
            out.push_back(std::move(picture));
            return out;
        }
        if (refs_.backward) out.push_back(refs_.backward);
        refs_.forward = std::move(refs_.backward);
        refs_.backward = std::move(picture);
        return out;
    }

    std::vector<FrameHandle> flush() {
        std::vector<FrameHandle> out;
        if (refs_.backward) out.push_back(std::move(refs_.backward));
        refs_ = {};
        return out;
    }

    /// For predicting the next picture: P uses `backward` (the most recent
    /// reference) as its forward reference.
    const ReferencePair& references() const noexcept { return refs_; }

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    ReferencePair refs_;
    std::vector<std::string> warnings_;
};

}  // namespace m2vscope
