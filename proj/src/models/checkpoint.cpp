#include "gazezone/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace gazezone::models {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'Z', 'Z', 'C', 'K', 'P', 'T', '\0'};

struct RawHeader {
    nlohmann::json header;
    std::streamoff payload_offset = 0;
};

RawHeader read_header(std::ifstream& in, const std::filesystem::path& path) {
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t length = 0;
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw ModelError(path.string() + " is not a gazezone checkpoint");
    }
    if (!in.read(reinterpret_cast<char*>(&version), 4) || version != kCheckpointVersion) {
        throw ModelError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    if (!in.read(reinterpret_cast<char*>(&length), 8) || length > (1u << 30)) {
        throw ModelError(path.string() + ": corrupt checkpoint header");
    }
    std::string text(length, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
        throw ModelError(path.string() + ": truncated checkpoint header");
    }
    RawHeader raw;
    try {
        raw.header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(path.string() + ": malformed checkpoint header: " + e.what());
    }
    raw.payload_offset = in.tellg();
    return raw;
}

CheckpointInfo info_from_header(const nlohmann::json& h) {
    CheckpointInfo info;
    info.backbone = BackboneSpec::from_json(h.at("backbone"));
    info.classes = h.at("classes").get<int>();
    info.zones = h.value("zones", std::vector<std::string>{});
    info.variable_resolution = h.value("variable_resolution", false);
    info.config_fingerprint = h.value("config_fingerprint", std::string{});
    info.extra = h.value("extra", nlohmann::json::object());
    return info;
}

}  // namespace

void save_checkpoint(const GazeModel& model, const std::filesystem::path& path, const std::string& config_fingerprint,
                     const nlohmann::json& extra) {
    nlohmann::json tensors = nlohmann::json::array();
    std::uint64_t offset = 0;
    const auto params = model.parameters();
    for (const auto* p : params) {
        const auto& s = p->value.shape();
        tensors.push_back({{"name", p->name}, {"shape", {s[0], s[1], s[2], s[3]}}, {"offset", offset}});
        offset += p->value.size();
    }
    nlohmann::json zones = nlohmann::json::array();
    if (model.classes() == kNumZones) {
        for (GazeZone z : kAllZones) zones.push_back(zone_name(z));
    }
    const nlohmann::json header = {{"format", "gazezone-checkpoint"},
                                   {"backbone", model.spec().to_json()},
                                   {"classes", model.classes()},
                                   {"zones", zones},
                                   {"variable_resolution", model.accepts_variable_resolution()},
                                   {"config_fingerprint", config_fingerprint},
                                   {"extra", extra},
                                   {"tensors", tensors}};
    const std::string text = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ModelError("cannot write checkpoint " + path.string());
        const std::uint32_t version = kCheckpointVersion;
        const std::uint64_t length = text.size();
        out.write(kMagic, 8);
        out.write(reinterpret_cast<const char*>(&version), 4);
        out.write(reinterpret_cast<const char*>(&length), 8);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto* p : params) {
            out.write(reinterpret_cast<const char*>(p->value.data()),
                      static_cast<std::streamsize>(p->value.size() * sizeof(float)));
        }
        if (!out) throw ModelError("failed writing checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open checkpoint " + path.string());
    return info_from_header(read_header(in, path).header);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open checkpoint " + path.string());
    const RawHeader raw = read_header(in, path);
    CheckpointInfo info = info_from_header(raw.header);
    if (info.classes < 1) throw ModelError(path.string() + ": bad class count");

    GazeModel model(info.backbone, build_network(info.backbone, info.classes), info.classes);
    model.set_variable_resolution(info.variable_resolution);
    std::map<std::string, nn::Parameter*> by_name;
    for (auto* p : model.parameters()) by_name[p->name] = p;

    const auto& tensors = raw.header.at("tensors");
    if (tensors.size() != by_name.size()) {
        throw ModelError(path.string() + ": holds " + std::to_string(tensors.size()) + " tensors, " +
                         std::string(family_name(info.backbone.family)) + " needs " + std::to_string(by_name.size()));
    }
    for (const auto& t : tensors) {
        const std::string name = t.at("name").get<std::string>();
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw ModelError(path.string() + ": unexpected tensor '" + name + "'");
        nn::Parameter& p = *it->second;
        const auto shape = t.at("shape").get<std::vector<int>>();
        const nn::Shape expect = p.value.shape();
        if (shape.size() != 4 || !std::equal(shape.begin(), shape.end(), expect.begin())) {
            throw ModelError(path.string() + ": tensor '" + name + "' has shape " + t.at("shape").dump() +
                             ", expected " + nn::to_string(expect));
        }
        const auto offset = t.at("offset").get<std::uint64_t>();
        in.seekg(raw.payload_offset + static_cast<std::streamoff>(offset * sizeof(float)));
        if (!in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(float)))) {
            throw ModelError(path.string() + ": truncated data for tensor '" + name + "'");
        }
        by_name.erase(it);
    }
    if (!by_name.empty()) throw ModelError(path.string() + ": missing tensor '" + by_name.begin()->first + "'");
    return {std::move(model), std::move(info)};
}

}  // namespace gazezone::models
