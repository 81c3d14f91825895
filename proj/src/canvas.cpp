#include "mclsc/canvas.hpp"

#include <algorithm>
#include <cmath>

namespace mclsc {

bool Taxonomy::is_static(int class_id) const {
    const auto it = kinds.find(class_id);
    if (it == kinds.end()) {
        throw UnmappedClass("taxonomy has no entry for class " + std::to_string(class_id));
    }
    return it->second == ClassKind::Static;
}

bool Taxonomy::is_dynamic(int class_id) const { return !is_static(class_id); }

CanvasState new_canvas(int viewport_w, int viewport_h) {
    if (viewport_w < 16 || viewport_h < 16) {
        throw InvalidArgument("new_canvas: viewport must be at least 16x16");
    }
    CanvasState state;
    state.canvas_w = 2 * viewport_w;
    state.canvas_h = 2 * viewport_h;
    state.viewport = Rect{viewport_w / 2, viewport_h / 2, viewport_w, viewport_h};
    state.static_layer = LabelImage(state.canvas_w, state.canvas_h);
    state.dynamic_layer = LabelImage(state.canvas_w, state.canvas_h);
    state.centering = AffineTransform::translation(viewport_w / 2, viewport_h / 2);
    return state;
}

AffineTransform canvas_transform(const CanvasState& state, const AffineTransform& t) {
    return compose(state.centering, t);
}

namespace {

// Composing with the viewport offset warps straight into the cropped
// viewport, skipping the three quarters of the canvas that the crop would
// discard.
AffineTransform viewport_warp(const CanvasState& state, const AffineTransform& t) {
    const auto to_canvas = canvas_transform(state, t);
    return compose(AffineTransform::translation(-state.viewport.x, -state.viewport.y),
                   to_canvas);
}

}  // namespace

std::pair<GrayImage, BinaryMask> warp_to_viewport(const CanvasState& state,
                                                  const GrayImage& frame,
                                                  const AffineTransform& t) {
    if (frame.width != state.viewport.w || frame.height != state.viewport.h) {
        throw DimensionMismatch("warp_to_viewport: frame size differs from viewport");
    }
    const AffineTransform m = viewport_warp(state, t);
    GrayImage viewport = warp_affine(frame, m, state.viewport.w, state.viewport.h);
    BinaryMask all_true(frame.width, frame.height, true);
    BinaryMask valid = warp_affine(all_true, m, state.viewport.w, state.viewport.h);
    return {std::move(viewport), std::move(valid)};
}

LabelImage warp_labels_to_viewport(const CanvasState& state, const LabelImage& labels,
                                   const AffineTransform& t) {
    if (labels.width != state.viewport.w || labels.height != state.viewport.h) {
        throw DimensionMismatch("warp_labels_to_viewport: label map size differs from viewport");
    }
    return warp_affine(labels, viewport_warp(state, t), state.viewport.w, state.viewport.h);
}

namespace {

void check_labels_mapped(const LabelImage& labels, const Taxonomy& taxonomy) {
    // One pass over distinct classes keeps the error check cheap.
    std::array<bool, 64> seen{};
    for (const auto v : labels.data) {
        if (v == 0) continue;
        const int cls = label_class(v);
        if (seen[cls]) continue;
        seen[cls] = true;
        if (!taxonomy.contains(cls)) {
            throw UnmappedClass("label class " + std::to_string(cls) +
                                " has no taxonomy entry");
        }
    }
}

}  // namespace

void write_static(CanvasState& state, const LabelImage& labels, const Taxonomy& taxonomy) {
    if (labels.width != state.viewport.w || labels.height != state.viewport.h) {
        throw DimensionMismatch("write_static: label map size differs from viewport");
    }
    check_labels_mapped(labels, taxonomy);
    const Rect vp = state.viewport;
    for (int y = 0; y < vp.h; ++y) {
        const std::uint16_t* src = &labels.data[size_t(y) * vp.w];
        std::uint16_t* dst = &state.static_layer.data[size_t(y + vp.y) * state.canvas_w + vp.x];
        for (int x = 0; x < vp.w; ++x) {
            const std::uint16_t v = src[x];
            if (v == 0 || dst[x] != 0) continue;
            if (taxonomy.is_static(label_class(v))) dst[x] = v;
        }
    }
}

void write_dynamic(CanvasState& state, const LabelImage& labels, const Taxonomy& taxonomy,
                   int frame_index, const CanvasConfig& cfg) {
    if (labels.width != state.viewport.w || labels.height != state.viewport.h) {
        throw DimensionMismatch("write_dynamic: label map size differs from viewport");
    }
    check_labels_mapped(labels, taxonomy);
    const Rect vp = state.viewport;

    // Per-label bounding boxes (canvas coordinates) for track association.
    std::map<std::uint16_t, Rect> boxes;
    for (int y = 0; y < vp.h; ++y) {
        const std::uint16_t* src = &labels.data[size_t(y) * vp.w];
        std::uint16_t* dst = &state.dynamic_layer.data[size_t(y + vp.y) * state.canvas_w + vp.x];
        for (int x = 0; x < vp.w; ++x) {
            const std::uint16_t v = src[x];
            if (v != 0 && taxonomy.is_dynamic(label_class(v))) {
                dst[x] = v;
                const int cx = x + vp.x;
                const int cy = y + vp.y;
                auto [it, inserted] = boxes.try_emplace(v, Rect{cx, cy, 1, 1});
                if (!inserted) {
                    Rect& r = it->second;
                    const int x1 = std::max(r.x + r.w, cx + 1);
                    const int y1 = std::max(r.y + r.h, cy + 1);
                    r.x = std::min(r.x, cx);
                    r.y = std::min(r.y, cy);
                    r.w = x1 - r.x;
                    r.h = y1 - r.y;
                }
            } else {
                dst[x] = 0;
            }
        }
    }

    std::vector<SegmentObservation> segments;
    segments.reserve(boxes.size());
    for (const auto& [label, box] : boxes) {
        segments.push_back({box, label_class(label)});
    }
    state.tracks = associate_tracks(state.tracks, segments, frame_index,
                                    cfg.iou_threshold, cfg.ttl_frames,
                                    &state.next_track_id);
}

double bbox_iou(const Rect& a, const Rect& b) {
    if (a.w <= 0 || a.h <= 0 || b.w <= 0 || b.h <= 0) {
        throw DegenerateRect("bbox_iou: rectangle with non-positive extent");
    }
    const Rect inter = intersect(a, b);
    const double inter_area = static_cast<double>(inter.area());
    const double union_area = static_cast<double>(a.area() + b.area()) - inter_area;
    return inter_area / union_area;
}

std::vector<InstanceTrack> associate_tracks(const std::vector<InstanceTrack>& tracks,
                                            const std::vector<SegmentObservation>& segments,
                                            int frame_index, double iou_threshold,
                                            int ttl_frames, int* next_track_id) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
        throw InvalidArgument("associate_tracks: iou_threshold must be in (0, 1)");
    }
    if (ttl_frames < 1) throw InvalidArgument("associate_tracks: ttl_frames must be >= 1");

    struct Pair {
        double iou;
        size_t track_idx;
        size_t seg_idx;
    };
    std::vector<Pair> pairs;
    for (size_t ti = 0; ti < tracks.size(); ++ti) {
        for (size_t si = 0; si < segments.size(); ++si) {
            if (tracks[ti].class_id != segments[si].class_id) continue;
            const double iou = bbox_iou(tracks[ti].last_mask_bbox, segments[si].bbox);
            if (iou >= iou_threshold) pairs.push_back({iou, ti, si});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.track_idx != b.track_idx) return a.track_idx < b.track_idx;
        return a.seg_idx < b.seg_idx;
    });

    std::vector<bool> track_matched(tracks.size(), false);
    std::vector<bool> seg_matched(segments.size(), false);
    std::vector<InstanceTrack> updated;
    updated.reserve(tracks.size() + segments.size());

    for (const auto& p : pairs) {
        if (track_matched[p.track_idx] || seg_matched[p.seg_idx]) continue;
        track_matched[p.track_idx] = true;
        seg_matched[p.seg_idx] = true;
        InstanceTrack t = tracks[p.track_idx];
        t.last_mask_bbox = segments[p.seg_idx].bbox;
        t.last_seen_frame = frame_index;
        t.ttl = ttl_frames;
        updated.push_back(t);
    }
    for (size_t ti = 0; ti < tracks.size(); ++ti) {
        if (track_matched[ti]) continue;
        InstanceTrack t = tracks[ti];
        t.ttl -= 1;
        if (t.ttl > 0) updated.push_back(t);
    }
    for (size_t si = 0; si < segments.size(); ++si) {
        if (seg_matched[si]) continue;
        InstanceTrack t;
        t.track_id = (*next_track_id)++;
        t.class_id = segments[si].class_id;
        t.last_mask_bbox = segments[si].bbox;
        t.last_seen_frame = frame_index;
        t.ttl = ttl_frames;
        updated.push_back(t);
    }
    std::sort(updated.begin(), updated.end(),
              [](const InstanceTrack& a, const InstanceTrack& b) {
                  return a.track_id < b.track_id;
              });
    return updated;
}

std::array<std::uint8_t, 3> default_class_color(int class_id) {
    // Golden-angle hue walk gives well-separated stable colors.
    const double hue = std::fmod(class_id * 137.50776405003785, 360.0);
    const double s = 0.65, v = 0.95;
    const double c = v * s;
    const double hp = hue / 60.0;
    const double xcomp = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c; g = xcomp; break;
        case 1: r = xcomp; g = c; break;
        case 2: g = c; b = xcomp; break;
        case 3: g = xcomp; b = c; break;
        case 4: r = xcomp; b = c; break;
        default: r = c; b = xcomp; break;
    }
    const double m = v - c;
    return {static_cast<std::uint8_t>(std::lround((r + m) * 255.0)),
            static_cast<std::uint8_t>(std::lround((g + m) * 255.0)),
            static_cast<std::uint8_t>(std::lround((b + m) * 255.0))};
}

ColorImage render_overlay(const CanvasState& state, const GrayImage& viewport_frame,
                          const Palette& palette, double alpha, OverlayLayers layers) {
    if (viewport_frame.width != state.viewport.w ||
        viewport_frame.height != state.viewport.h) {
        throw DimensionMismatch("render_overlay: frame size differs from viewport");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("render_overlay: alpha must be in [0, 1]");
    }
    const Rect vp = state.viewport;
    ColorImage out(vp.w, vp.h);
    for (int y = 0; y < vp.h; ++y) {
        for (int x = 0; x < vp.w; ++x) {
            const double gray = viewport_frame.at(x, y);
            std::uint16_t label = 0;
            if (layers != OverlayLayers::StaticOnly) {
                label = state.dynamic_layer.at(x + vp.x, y + vp.y);
            }
            if (label == 0 && layers != OverlayLayers::DynamicOnly) {
                label = state.static_layer.at(x + vp.x, y + vp.y);
            }
            std::uint8_t* px = out.rgb(x, y);
            if (label == 0) {
                const auto g8 = static_cast<std::uint8_t>(gray);
                px[0] = px[1] = px[2] = g8;
                continue;
            }
            const int cls = label_class(label);
            const auto it = palette.find(cls);
            const auto color = it != palette.end() ? it->second : default_class_color(cls);
            for (int ch = 0; ch < 3; ++ch) {
                const double blended = (1.0 - alpha) * gray + alpha * color[ch];
                px[ch] = static_cast<std::uint8_t>(std::lround(blended));
            }
        }
    }
    return out;
}

}  // namespace mclsc
