#include "mclsc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace mclsc {

using nlohmann::json;

AppConfig default_config() {
    AppConfig cfg;
    cfg.pipeline.taxonomy = synth_taxonomy();
    cfg.pipeline.palette = synth_palette();
    return cfg;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (allowed.find(key) == allowed.end()) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void fetch(const json& obj, const char* key, T& out) {
    if (const auto it = obj.find(key); it != obj.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("bad value for \"" + std::string(key) + "\": " + e.what());
        }
    }
}

int parse_class_id(const std::string& key, const std::string& where) {
    size_t pos = 0;
    int id = 0;
    try {
        id = std::stoi(key, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != key.size() || id < 1 || id > 63) {
        throw ConfigError("bad class id \"" + key + "\" in " + where +
                          " (expect 1..63)");
    }
    return id;
}

}  // namespace

AppConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    check_keys(doc,
               {"pipeline", "gate", "trust", "features", "lk", "ransac", "canvas",
                "taxonomy", "palette", "backend"},
               "config root");

    AppConfig cfg = default_config();

    if (doc.contains("pipeline")) {
        const json& p = doc["pipeline"];
        check_keys(p,
                   {"mode", "target_fps", "buffer_capacity", "prebuffer", "realtime",
                    "result_delay_frames", "debug_every"},
                   "pipeline");
        std::string mode = cfg.pipeline.mode == PipelineMode::Naive ? "naive" : "gated";
        fetch(p, "mode", mode);
        if (mode == "naive") cfg.pipeline.mode = PipelineMode::Naive;
        else if (mode == "gated") cfg.pipeline.mode = PipelineMode::Gated;
        else throw ConfigError("pipeline.mode must be \"naive\" or \"gated\"");
        fetch(p, "target_fps", cfg.pipeline.target_fps);
        fetch(p, "buffer_capacity", cfg.pipeline.buffer_capacity);
        fetch(p, "prebuffer", cfg.pipeline.prebuffer);
        fetch(p, "realtime", cfg.pipeline.realtime);
        fetch(p, "result_delay_frames", cfg.result_delay_frames);
        fetch(p, "debug_every", cfg.pipeline.debug_every);
        if (cfg.pipeline.target_fps <= 0.0) throw ConfigError("target_fps must be > 0");
        if (cfg.pipeline.buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
        if (cfg.pipeline.prebuffer > cfg.pipeline.buffer_capacity) {
            throw ConfigError("prebuffer must be <= buffer_capacity");
        }
    }
    if (doc.contains("gate")) {
        const json& g = doc["gate"];
        check_keys(g, {"tau_s", "tau_a", "pixel_threshold", "min_spacing"}, "gate");
        fetch(g, "tau_s", cfg.pipeline.gate.tau_s);
        fetch(g, "tau_a", cfg.pipeline.gate.tau_a);
        fetch(g, "pixel_threshold", cfg.pipeline.gate.pixel_threshold);
        fetch(g, "min_spacing", cfg.pipeline.gate.min_spacing);
        if (cfg.pipeline.gate.tau_s <= 0.0 || cfg.pipeline.gate.tau_a <= 0.0 ||
            cfg.pipeline.gate.tau_a >= 1.0 || cfg.pipeline.gate.min_spacing < 0) {
            throw ConfigError("gate thresholds out of range");
        }
    }
    if (doc.contains("trust")) {
        const json& t = doc["trust"];
        check_keys(t, {"min_tracked", "min_inlier_ratio", "max_median_error"}, "trust");
        fetch(t, "min_tracked", cfg.pipeline.trust.min_tracked);
        fetch(t, "min_inlier_ratio", cfg.pipeline.trust.min_inlier_ratio);
        fetch(t, "max_median_error", cfg.pipeline.trust.max_median_error);
        if (cfg.pipeline.trust.min_tracked < 3 ||
            cfg.pipeline.trust.min_inlier_ratio <= 0.0 ||
            cfg.pipeline.trust.min_inlier_ratio > 1.0 ||
            cfg.pipeline.trust.max_median_error <= 0.0) {
            throw ConfigError("trust thresholds out of range");
        }
    }
    if (doc.contains("features")) {
        const json& f = doc["features"];
        check_keys(f, {"max_corners", "quality_level", "min_distance"}, "features");
        fetch(f, "max_corners", cfg.pipeline.features.max_corners);
        fetch(f, "quality_level", cfg.pipeline.features.quality_level);
        fetch(f, "min_distance", cfg.pipeline.features.min_distance);
    }
    if (doc.contains("lk")) {
        const json& l = doc["lk"];
        check_keys(l, {"levels", "window", "max_iters", "epsilon", "max_residual"}, "lk");
        fetch(l, "levels", cfg.pipeline.lk.levels);
        fetch(l, "window", cfg.pipeline.lk.window);
        fetch(l, "max_iters", cfg.pipeline.lk.max_iters);
        fetch(l, "epsilon", cfg.pipeline.lk.epsilon);
        fetch(l, "max_residual", cfg.pipeline.lk.max_residual);
    }
    if (doc.contains("ransac")) {
        const json& r = doc["ransac"];
        check_keys(r, {"inlier_threshold", "max_iters", "confidence", "seed"}, "ransac");
        fetch(r, "inlier_threshold", cfg.pipeline.ransac.inlier_threshold);
        fetch(r, "max_iters", cfg.pipeline.ransac.max_iters);
        fetch(r, "confidence", cfg.pipeline.ransac.confidence);
        fetch(r, "seed", cfg.pipeline.ransac.seed);
    }
    if (doc.contains("canvas")) {
        const json& c = doc["canvas"];
        check_keys(c, {"iou_threshold", "ttl_frames", "overlay_alpha"}, "canvas");
        fetch(c, "iou_threshold", cfg.pipeline.canvas.iou_threshold);
        fetch(c, "ttl_frames", cfg.pipeline.canvas.ttl_frames);
        fetch(c, "overlay_alpha", cfg.pipeline.canvas.overlay_alpha);
    }
    if (doc.contains("taxonomy")) {
        const json& t = doc["taxonomy"];
        if (!t.is_object()) throw ConfigError("taxonomy must be an object");
        cfg.pipeline.taxonomy = Taxonomy{};
        for (const auto& [key, value] : t.items()) {
            const int id = parse_class_id(key, "taxonomy");
            const std::string kind = value.is_string() ? value.get<std::string>() : "";
            if (kind == "static") cfg.pipeline.taxonomy.kinds[id] = ClassKind::Static;
            else if (kind == "dynamic") cfg.pipeline.taxonomy.kinds[id] = ClassKind::Dynamic;
            else throw ConfigError("taxonomy values must be \"static\" or \"dynamic\"");
        }
    }
    if (doc.contains("palette")) {
        const json& p = doc["palette"];
        if (!p.is_object()) throw ConfigError("palette must be an object");
        cfg.pipeline.palette = Palette{};
        for (const auto& [key, value] : p.items()) {
            const int id = parse_class_id(key, "palette");
            if (!value.is_array() || value.size() != 3) {
                throw ConfigError("palette entries must be [r, g, b]");
            }
            cfg.pipeline.palette[id] = {value[0].get<std::uint8_t>(),
                                        value[1].get<std::uint8_t>(),
                                        value[2].get<std::uint8_t>()};
        }
    }
    if (doc.contains("backend")) {
        const json& b = doc["backend"];
        check_keys(b,
                   {"type", "mock_latency_ms", "mock_label_noise", "mock_seed", "command",
                    "args", "timeout_ms"},
                   "backend");
        fetch(b, "type", cfg.backend.type);
        if (cfg.backend.type != "mock" && cfg.backend.type != "external") {
            throw ConfigError("backend.type must be \"mock\" or \"external\"");
        }
        fetch(b, "mock_latency_ms", cfg.backend.mock_latency_ms);
        fetch(b, "mock_label_noise", cfg.backend.mock_label_noise);
        fetch(b, "mock_seed", cfg.backend.mock_seed);
        fetch(b, "command", cfg.backend.command);
        fetch(b, "args", cfg.backend.args);
        fetch(b, "timeout_ms", cfg.backend.timeout_ms);
    }
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

std::string config_to_text(const AppConfig& cfg) {
    json taxonomy = json::object();
    for (const auto& [id, kind] : cfg.pipeline.taxonomy.kinds) {
        taxonomy[std::to_string(id)] = kind == ClassKind::Static ? "static" : "dynamic";
    }
    json palette = json::object();
    for (const auto& [id, rgb] : cfg.pipeline.palette) {
        palette[std::to_string(id)] = {rgb[0], rgb[1], rgb[2]};
    }
    const json doc{
        {"pipeline",
         {{"mode", cfg.pipeline.mode == PipelineMode::Naive ? "naive" : "gated"},
          {"target_fps", cfg.pipeline.target_fps},
          {"buffer_capacity", cfg.pipeline.buffer_capacity},
          {"prebuffer", cfg.pipeline.prebuffer},
          {"realtime", cfg.pipeline.realtime},
          {"result_delay_frames", cfg.result_delay_frames},
          {"debug_every", cfg.pipeline.debug_every}}},
        {"gate",
         {{"tau_s", cfg.pipeline.gate.tau_s},
          {"tau_a", cfg.pipeline.gate.tau_a},
          {"pixel_threshold", cfg.pipeline.gate.pixel_threshold},
          {"min_spacing", cfg.pipeline.gate.min_spacing}}},
        {"trust",
         {{"min_tracked", cfg.pipeline.trust.min_tracked},
          {"min_inlier_ratio", cfg.pipeline.trust.min_inlier_ratio},
          {"max_median_error", cfg.pipeline.trust.max_median_error}}},
        {"features",
         {{"max_corners", cfg.pipeline.features.max_corners},
          {"quality_level", cfg.pipeline.features.quality_level},
          {"min_distance", cfg.pipeline.features.min_distance}}},
        {"lk",
         {{"levels", cfg.pipeline.lk.levels},
          {"window", cfg.pipeline.lk.window},
          {"max_iters", cfg.pipeline.lk.max_iters},
          {"epsilon", cfg.pipeline.lk.epsilon},
          {"max_residual", cfg.pipeline.lk.max_residual}}},
        {"ransac",
         {{"inlier_threshold", cfg.pipeline.ransac.inlier_threshold},
          {"max_iters", cfg.pipeline.ransac.max_iters},
          {"confidence", cfg.pipeline.ransac.confidence},
          {"seed", cfg.pipeline.ransac.seed}}},
        {"canvas",
         {{"iou_threshold", cfg.pipeline.canvas.iou_threshold},
          {"ttl_frames", cfg.pipeline.canvas.ttl_frames},
          {"overlay_alpha", cfg.pipeline.canvas.overlay_alpha}}},
        {"taxonomy", taxonomy},
        {"palette", palette},
        {"backend",
         {{"type", cfg.backend.type},
          {"mock_latency_ms", cfg.backend.mock_latency_ms},
          {"mock_label_noise", cfg.backend.mock_label_noise},
          {"mock_seed", cfg.backend.mock_seed},
          {"command", cfg.backend.command},
          {"args", cfg.backend.args},
          {"timeout_ms", cfg.backend.timeout_ms}}},
    };
    return doc.dump(2);
}

void resolve_result_delay(AppConfig& cfg) {
    if (cfg.result_delay_frames > 0) {
        cfg.pipeline.result_delay_frames = cfg.result_delay_frames;
        return;
    }
    if (cfg.backend.type == "mock") {
        cfg.pipeline.result_delay_frames = std::max(
            1, static_cast<int>(std::ceil(cfg.backend.mock_latency_ms *
                                          cfg.pipeline.target_fps / 1000.0)));
    } else {
        cfg.pipeline.result_delay_frames = 1;
    }
}

}  // namespace mclsc
