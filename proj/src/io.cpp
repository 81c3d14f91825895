#include "mclsc/io.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace mclsc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_binary(const fs::path& path, const std::string& header,
                  const void* data, size_t bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw IoError("short write: " + path.string());
}

struct PnmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::ifstream stream;
};

PnmHeader read_pnm_header(const fs::path& path, const char* expected_magic) {
    PnmHeader h;
    h.stream.open(path, std::ios::binary);
    if (!h.stream) throw IoError("cannot open: " + path.string());
    // Token reader with '#' comment support.
    const auto next_token = [&]() {
        std::string tok;
        int c;
        while ((c = h.stream.get()) != EOF) {
            if (c == '#') {
                while ((c = h.stream.get()) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        if (tok.empty()) throw IoError("truncated header: " + path.string());
        return tok;
    };
    h.magic = next_token();
    if (h.magic != expected_magic) {
        throw IoError("unexpected magic '" + h.magic + "' in " + path.string());
    }
    h.width = std::stoi(next_token());
    h.height = std::stoi(next_token());
    h.maxval = std::stoi(next_token());
    if (h.width < 1 || h.height < 1) throw IoError("bad dimensions: " + path.string());
    return h;
}

void read_exact(std::ifstream& in, void* dst, size_t bytes, const fs::path& path) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<size_t>(in.gcount()) != bytes) {
        throw IoError("truncated pixel data: " + path.string());
    }
}

}  // namespace

void write_pgm(const fs::path& path, const GrayImage& img) {
    char header[64];
    std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", img.width, img.height);
    write_binary(path, header, img.data.data(), img.data.size());
}

void write_pgm16(const fs::path& path, const LabelImage& img) {
    char header[64];
    std::snprintf(header, sizeof(header), "P5\n%d %d\n65535\n", img.width, img.height);
    std::vector<std::uint8_t> be(img.data.size() * 2);
    for (size_t i = 0; i < img.data.size(); ++i) {
        be[2 * i] = static_cast<std::uint8_t>(img.data[i] >> 8);
        be[2 * i + 1] = static_cast<std::uint8_t>(img.data[i] & 0xff);
    }
    write_binary(path, header, be.data(), be.size());
}

void write_ppm(const fs::path& path, const ColorImage& img) {
    char header[64];
    std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.width, img.height);
    write_binary(path, header, img.data.data(), img.data.size());
}

GrayImage read_pgm(const fs::path& path) {
    auto h = read_pnm_header(path, "P5");
    if (h.maxval != 255) throw IoError("expected 8-bit PGM: " + path.string());
    GrayImage img(h.width, h.height);
    read_exact(h.stream, img.data.data(), img.data.size(), path);
    return img;
}

LabelImage read_pgm16(const fs::path& path) {
    auto h = read_pnm_header(path, "P5");
    if (h.maxval != 65535) throw IoError("expected 16-bit PGM: " + path.string());
    LabelImage img(h.width, h.height);
    std::vector<std::uint8_t> be(img.data.size() * 2);
    read_exact(h.stream, be.data(), be.size(), path);
    for (size_t i = 0; i < img.data.size(); ++i) {
        img.data[i] = static_cast<std::uint16_t>((be[2 * i] << 8) | be[2 * i + 1]);
    }
    return img;
}

ColorImage read_ppm(const fs::path& path) {
    auto h = read_pnm_header(path, "P6");
    if (h.maxval != 255) throw IoError("expected 8-bit PPM: " + path.string());
    ColorImage img(h.width, h.height);
    read_exact(h.stream, img.data.data(), img.data.size(), path);
    return img;
}

std::string frame_file_name(int index, bool color) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.%s", index, color ? "ppm" : "pgm");
    return buf;
}

FrameSequenceInfo open_frame_sequence(const fs::path& dir) {
    const fs::path index_path = dir / "index.json";
    std::ifstream in(index_path);
    if (!in) throw SourceError("no index.json in " + dir.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SourceError("bad index.json in " + dir.string() + ": " + e.what());
    }
    FrameSequenceInfo info;
    info.dir = dir;
    try {
        info.width = doc.at("width").get<int>();
        info.height = doc.at("height").get<int>();
        info.frame_count = doc.at("frame_count").get<int>();
        info.color = doc.at("color").get<bool>();
    } catch (const json::exception& e) {
        throw SourceError("index.json missing fields: " + std::string(e.what()));
    }
    if (info.width < 1 || info.height < 1 || info.frame_count < 1) {
        throw SourceError("index.json has invalid dimensions");
    }
    for (int i : {0, info.frame_count - 1}) {
        if (!fs::exists(dir / frame_file_name(i, info.color))) {
            throw SourceError("missing frame file " + frame_file_name(i, info.color));
        }
    }
    info.has_truth_labels = fs::exists(dir / "truth_labels" / frame_file_name(0, false));

    const fs::path truth_path = dir / "truth.json";
    if (fs::exists(truth_path)) {
        std::ifstream tin(truth_path);
        json tdoc;
        try {
            tin >> tdoc;
            for (const auto& row : tdoc.at("transforms")) {
                if (row.size() != 6) throw SourceError("truth.json row size != 6");
                info.truth_transforms.push_back({row[0].get<double>(), row[1].get<double>(),
                                                 row[2].get<double>(), row[3].get<double>(),
                                                 row[4].get<double>(), row[5].get<double>()});
            }
        } catch (const json::exception& e) {
            throw SourceError("bad truth.json: " + std::string(e.what()));
        }
        if (static_cast<int>(info.truth_transforms.size()) != info.frame_count) {
            throw SourceError("truth.json transform count != frame_count");
        }
    }
    return info;
}

namespace {

void check_frame_index(const FrameSequenceInfo& info, int index) {
    if (index < 0 || index >= info.frame_count) {
        throw IndexOutOfRange("frame index " + std::to_string(index) + " outside sequence");
    }
}

}  // namespace

GrayImage load_sequence_gray(const FrameSequenceInfo& info, int index) {
    check_frame_index(info, index);
    const fs::path p = info.dir / frame_file_name(index, info.color);
    if (info.color) return to_gray(read_ppm(p));
    return read_pgm(p);
}

std::optional<ColorImage> load_sequence_color(const FrameSequenceInfo& info, int index) {
    check_frame_index(info, index);
    if (!info.color) return std::nullopt;
    return read_ppm(info.dir / frame_file_name(index, true));
}

LabelImage load_sequence_truth_labels(const FrameSequenceInfo& info, int index) {
    check_frame_index(info, index);
    if (!info.has_truth_labels) {
        throw SourceError("sequence has no truth_labels directory");
    }
    return read_pgm16(info.dir / "truth_labels" / frame_file_name(index, false));
}

void write_sequence_index(const fs::path& dir, int width, int height, int frame_count,
                          bool color) {
    json doc{{"width", width}, {"height", height}, {"frame_count", frame_count},
             {"color", color}};
    std::ofstream out(dir / "index.json");
    if (!out) throw IoError("cannot write index.json in " + dir.string());
    out << doc.dump(2) << "\n";
}

void write_sequence_truth_transforms(const fs::path& dir,
                                     const std::vector<AffineTransform>& transforms) {
    json rows = json::array();
    for (const auto& t : transforms) {
        rows.push_back({t.a11, t.a12, t.a13, t.a21, t.a22, t.a23});
    }
    std::ofstream out(dir / "truth.json");
    if (!out) throw IoError("cannot write truth.json in " + dir.string());
    out << json{{"transforms", rows}}.dump() << "\n";
}

}  // namespace mclsc
