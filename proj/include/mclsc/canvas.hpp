#pragma once

#include <array>
#include <map>
#include <vector>

#include "mclsc/image.hpp"
#include "mclsc/motion_model.hpp"

namespace mclsc {

// Labels pack a class id (high 6 bits, <= 63) and an instance index
// (low 10 bits, <= 1023) into one 16-bit value; 0 stays reserved for
// "no assignment".
inline std::uint16_t encode_label(int class_id, int instance) {
    return static_cast<std::uint16_t>(((class_id & 0x3f) << 10) | (instance & 0x3ff));
}
inline int label_class(std::uint16_t label) { return label >> 10; }
inline int label_instance(std::uint16_t label) { return label & 0x3ff; }

enum class ClassKind { Static, Dynamic };

// class_id -> static/dynamic. Every class a backend can produce must be
// mapped before its results reach the canvas.
struct Taxonomy {
    std::map<int, ClassKind> kinds;

    bool is_static(int class_id) const;   // throws UnmappedClass
    bool is_dynamic(int class_id) const;  // throws UnmappedClass
    bool contains(int class_id) const { return kinds.count(class_id) != 0; }
};

struct InstanceTrack {
    int track_id = 0;
    int class_id = 0;
    Rect last_mask_bbox;  // canvas coordinates
    int last_seen_frame = 0;
    int ttl = 0;  // frames remaining; 0 means prunable
};

struct CanvasConfig {
    double iou_threshold = 0.3;
    int ttl_frames = 30;
    double overlay_alpha = 0.5;
};

struct CanvasState {
    int canvas_w = 0;  // 2x viewport
    int canvas_h = 0;
    Rect viewport;              // centered in the canvas
    LabelImage static_layer;    // canvas-sized, write-once per pixel
    LabelImage dynamic_layer;   // canvas-sized, viewport region rewritten per update
    AffineTransform centering;  // C: viewport -> canvas center
    std::vector<InstanceTrack> tracks;
    int next_track_id = 1;
};

// Segment observation used for track association.
struct SegmentObservation {
    Rect bbox;  // canvas coordinates
    int class_id = 0;
};

// Canvas is 2x the viewport in both dimensions; layers start empty.
CanvasState new_canvas(int viewport_w, int viewport_h);

// M_t = C * T_t.
AffineTransform canvas_transform(const CanvasState& state, const AffineTransform& t);

// Warps the frame by M_t = C * T_t and crops the centered viewport; the
// validity mask is the same warp applied to an all-true frame-sized mask.
std::pair<GrayImage, BinaryMask> warp_to_viewport(const CanvasState& state,
                                                  const GrayImage& frame,
                                                  const AffineTransform& t);

// Same warp-and-crop path for a frame-aligned label map (nearest neighbor).
// Used to land segmentation results with the transform of the frame they
// were computed on.
LabelImage warp_labels_to_viewport(const CanvasState& state, const LabelImage& labels,
                                   const AffineTransform& t);

// Writes static-class labels into empty static-layer pixels of the viewport
// region; nonzero pixels are never overwritten and dynamic-class input is
// ignored. Throws UnmappedClass for labels without a taxonomy entry.
void write_static(CanvasState& state, const LabelImage& labels, const Taxonomy& taxonomy);

// Clears the viewport region of the dynamic layer, writes dynamic-class
// labels, and updates instance tracks. Pixels outside the viewport are
// untouched. Throws UnmappedClass as write_static does.
void write_dynamic(CanvasState& state, const LabelImage& labels, const Taxonomy& taxonomy,
                   int frame_index, const CanvasConfig& cfg = {});

// Intersection over union of two rectangles. Throws DegenerateRect when
// either has non-positive width or height.
double bbox_iou(const Rect& a, const Rect& b);

// Greedy same-class association in descending IoU; matches reset the TTL,
// unmatched tracks decay and are pruned at zero, unmatched segments open new
// tracks numbered from *next_track_id.
std::vector<InstanceTrack> associate_tracks(const std::vector<InstanceTrack>& tracks,
                                            const std::vector<SegmentObservation>& segments,
                                            int frame_index, double iou_threshold,
                                            int ttl_frames, int* next_track_id);

enum class OverlayLayers { StaticOnly, DynamicOnly, Both };

using Palette = std::map<int, std::array<std::uint8_t, 3>>;

// Deterministic fallback color for classes missing from the palette.
std::array<std::uint8_t, 3> default_class_color(int class_id);

// Alpha-blends class colors over the grayscale viewport; the dynamic layer
// is drawn over the static layer and label 0 stays transparent.
ColorImage render_overlay(const CanvasState& state, const GrayImage& viewport_frame,
                          const Palette& palette, double alpha,
                          OverlayLayers layers = OverlayLayers::Both);

}  // namespace mclsc
