#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sicl/error.hpp"
#include "sicl/graph_io.hpp"
#include "sicl/nn.hpp"

namespace sicl::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

namespace {

constexpr const char* kFormat = "sicl-checkpoint";
constexpr int kVersion = 1;

std::filesystem::path blob_path(const std::filesystem::path& manifest) {
    std::filesystem::path p = manifest;
    p += ".bin";
    return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net, const nlohmann::json& training) {
    nlohmann::json params = nlohmann::json::array();
    std::vector<double> blob;
    for (const auto& [name, t] : net.params().items()) {
        params.push_back({{"name", name}, {"shape", t->shape}, {"offset", blob.size()}});
        blob.insert(blob.end(), t->value.begin(), t->value.end());
    }
    nlohmann::json j = {{"format", kFormat},
                        {"version", kVersion},
                        {"kind", to_string(net.kind())},
                        {"model", to_json(net.config())},
                        {"shape_hash", net.params().shape_hash()},
                        {"blob", blob_path(path).filename().string()},
                        {"scalars", blob.size()},
                        {"params", params},
                        {"training", training.is_null() ? nlohmann::json::object() : training}};
    write_text_file(path, dump_json(j));
    std::ofstream out(blob_path(path), std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open for writing: " + blob_path(path).string());
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(double)));
    if (!out) fail(ErrorKind::Io, "write failed: " + blob_path(path).string());
}

Network load_checkpoint(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::InvalidInput, "malformed checkpoint manifest " + path.string() + ": " + e.what());
    }
    try {
        if (j.at("format") != kFormat || j.at("version") != kVersion)
            fail(ErrorKind::InvalidInput, "unsupported checkpoint format in " + path.string());
        Network net(model_kind_from_string(j.at("kind").get<std::string>()), model_config_from_json(j.at("model")), 0);
        if (j.at("shape_hash").get<std::string>() != net.params().shape_hash())
            fail(ErrorKind::InvalidInput, "checkpoint shape hash does not match its model description");
        const auto scalars = j.at("scalars").get<std::size_t>();
        if (scalars != net.params().scalar_count())
            fail(ErrorKind::InvalidInput, "checkpoint scalar count does not match its model description");
        const std::filesystem::path bp = path.parent_path() / j.at("blob").get<std::string>();
        const std::string raw = read_text_file(bp);
        if (raw.size() != scalars * sizeof(double)) fail(ErrorKind::InvalidInput, "checkpoint blob has wrong size: " + bp.string());
        const auto& entries = j.at("params");
        if (entries.size() != net.params().items().size()) fail(ErrorKind::InvalidInput, "checkpoint parameter list mismatch");
        std::size_t k = 0;
        for (const auto& [name, t] : net.params().items()) {
            const auto& e = entries[k++];
            if (e.at("name").get<std::string>() != name || e.at("shape").get<Shape>() != t->shape)
                fail(ErrorKind::InvalidInput, "checkpoint parameter mismatch at " + name);
            const auto off = e.at("offset").get<std::size_t>();
            if (off + t->size() > scalars) fail(ErrorKind::InvalidInput, "checkpoint offset out of range at " + name);
            std::memcpy(t->value.data(), raw.data() + off * sizeof(double), t->size() * sizeof(double));
            for (double x : t->value)
                if (!std::isfinite(x)) fail(ErrorKind::InvalidInput, "non-finite value in checkpoint parameter " + name);
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidInput, "malformed checkpoint manifest " + path.string() + ": " + e.what());
    }
}

}  // namespace sicl::nn
