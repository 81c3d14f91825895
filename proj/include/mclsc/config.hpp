#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mclsc/runtime.hpp"

namespace mclsc {

struct BackendSpec {
    std::string type = "mock";  // "mock" | "external"
    double mock_latency_ms = 200.0;
    double mock_label_noise = 0.0;
    std::uint64_t mock_seed = 7;
    std::string command;  // external backend executable
    std::vector<std::string> args;
    int timeout_ms = 10000;
};

struct AppConfig {
    PipelineConfig pipeline;
    BackendSpec backend;
    // <= 0 in the file means "derive from backend latency and target fps".
    int result_delay_frames = 0;
};

// Defaults double as documentation: taxonomy and palette cover the synthetic
// generator's classes.
AppConfig default_config();

// Parses the JSON config document. Unknown keys anywhere are rejected
// (ConfigError); missing keys keep their defaults.
AppConfig parse_config_text(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);

// Serializes a config back to the document format (used by tests and to
// show the effective defaults).
std::string config_to_text(const AppConfig& cfg);

// Fills pipeline.result_delay_frames from the backend spec when the config
// left it on "derive".
void resolve_result_delay(AppConfig& cfg);

}  // namespace mclsc
