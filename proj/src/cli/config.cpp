#include "gazezone/cli/config.hpp"

#include <fstream>

namespace gazezone::cli {

#define GAZEZONE_CONFIG_FIELDS(X)                                                                           \
    X(manifests) X(camera_profiles) X(detector) X(backbone) X(weights) X(width_divisor) X(variable_resolution) \
    X(strategy) X(resolution) X(context_expand) X(split_kind) X(train_subjects) X(test_subjects)              \
    X(temporal_fractions) X(validation_fraction) X(validation_gap) X(balance_cap) X(per_event_cap) X(split)   \
    X(train) X(checkpoint) X(mode) X(columbia_manifest) X(charts) X(grid_backbones) X(grid_strategies)        \
    X(frames) X(alpha) X(iterations) X(warmup) X(end_to_end) X(output) X(seed) X(cache_dir) X(log_level)

nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
#define X(name) j[#name] = cfg.name;
    GAZEZONE_CONFIG_FIELDS(X)
#undef X
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw UsageError("configuration must be a JSON object");
    RunConfig cfg;
    const nlohmann::json known = to_json(cfg);
    std::string unknown;
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty()) throw UsageError("unknown configuration keys: " + unknown);
#define X(name)                                                                                 \
    if (j.contains(#name)) {                                                                    \
        try {                                                                                   \
            j.at(#name).get_to(cfg.name);                                                       \
        } catch (const nlohmann::json::exception& e) {                                          \
            throw UsageError(std::string("configuration key '" #name "' has the wrong type: ") + \
                             e.what());                                                         \
        }                                                                                       \
    }
    GAZEZONE_CONFIG_FIELDS(X)
#undef X
    if (!cfg.train.is_object()) throw UsageError("configuration key 'train' must be an object");
    return cfg;
}

RunConfig resolve_config(const std::filesystem::path& file, const nlohmann::json& overrides) {
    nlohmann::json merged = to_json(RunConfig{});
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw UsageError("cannot open config file " + file.string());
        nlohmann::json from_file;
        try {
            in >> from_file;
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config file " + file.string() + " is not valid JSON: " + e.what());
        }
        run_config_from_json(from_file);
        merged.merge_patch(from_file);
    }
    run_config_from_json(overrides);
    merged.merge_patch(overrides);
    return run_config_from_json(merged);
}

void persist_config(const RunConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "resolved_config.json");
    if (!out) throw Error("cannot write " + (dir / "resolved_config.json").string());
    out << to_json(cfg).dump(2) << '\n';
}

}  // namespace gazezone::cli
