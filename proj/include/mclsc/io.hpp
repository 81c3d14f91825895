#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mclsc/image.hpp"
#include "mclsc/motion_model.hpp"

namespace mclsc {

// Binary netpbm codecs. Labels use P5 with maxval 65535, big-endian samples.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
void write_pgm16(const std::filesystem::path& path, const LabelImage& img);
void write_ppm(const std::filesystem::path& path, const ColorImage& img);
GrayImage read_pgm(const std::filesystem::path& path);
LabelImage read_pgm16(const std::filesystem::path& path);
ColorImage read_ppm(const std::filesystem::path& path);

// On-disk frame sequence:
//   <dir>/index.json                 {"width", "height", "frame_count", "color"}
//   <dir>/frame_000000.pgm|.ppm      contiguous from 0
//   <dir>/truth_labels/frame_%06d.pgm   optional 16-bit ground truth
//   <dir>/truth.json                 optional per-frame transforms (six floats)
struct FrameSequenceInfo {
    std::filesystem::path dir;
    int width = 0;
    int height = 0;
    int frame_count = 0;
    bool color = false;
    bool has_truth_labels = false;
    std::vector<AffineTransform> truth_transforms;  // empty when absent
};

std::string frame_file_name(int index, bool color);

// Reads and validates index.json (+ truth.json when present).
// Throws SourceError on a missing or inconsistent layout.
FrameSequenceInfo open_frame_sequence(const std::filesystem::path& dir);

GrayImage load_sequence_gray(const FrameSequenceInfo& info, int index);
std::optional<ColorImage> load_sequence_color(const FrameSequenceInfo& info, int index);
LabelImage load_sequence_truth_labels(const FrameSequenceInfo& info, int index);

// Writes index.json for a sequence produced frame-by-frame with the
// write_* codecs above.
void write_sequence_index(const std::filesystem::path& dir, int width, int height,
                          int frame_count, bool color);
void write_sequence_truth_transforms(const std::filesystem::path& dir,
                                     const std::vector<AffineTransform>& transforms);

}  // namespace mclsc
