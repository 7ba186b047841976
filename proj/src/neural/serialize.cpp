#include "gatepose/neural/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gatepose/errors.hpp"

namespace gatepose::neural {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "parameter blobs are little-endian");

std::unique_ptr<Layer> layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv1d")
        return std::make_unique<Conv1d>(j.at("kernel").get<int>(), j.at("ch_in").get<int>(),
                                        j.at("ch_out").get<int>());
    if (kind == "conv2d")
        return std::make_unique<Conv2d>(j.at("kernel").get<int>(), j.at("ch_in").get<int>(),
                                        j.at("ch_out").get<int>());
    if (kind == "instance_norm")
        return std::make_unique<InstanceNorm>(j.at("channels").get<int>(),
                                              j.at("eps").get<double>());
    if (kind == "relu") return std::make_unique<Relu>();
    if (kind == "sigmoid") return std::make_unique<Sigmoid>();
    if (kind == "dropout") return std::make_unique<Dropout>(j.at("rate").get<double>());
    if (kind == "maxpool1d") return std::make_unique<MaxPool1d>(j.at("kernel").get<int>());
    if (kind == "maxpool2d")
        return std::make_unique<MaxPool2d>(j.at("kernel_h").get<int>(),
                                           j.at("kernel_w").get<int>());
    if (kind == "flatten") return std::make_unique<Flatten>();
    if (kind == "reshape")
        return std::make_unique<Reshape>(j.at("target").get<std::vector<int>>());
    if (kind == "dense")
        return std::make_unique<Dense>(j.at("in_features").get<int>(),
                                       j.at("out_features").get<int>());
    if (kind == "lstm")
        return std::make_unique<Lstm>(j.at("input_size").get<int>(),
                                      j.at("units").get<int>());
    throw IoError("unknown layer kind in manifest: " + kind);
}

}  // namespace

json network_manifest(const Network& net) {
    json layers = json::array();
    for (const auto& layer : net.layers()) {
        json j;
        layer->describe(j);
        layers.push_back(std::move(j));
    }
    json trace = json::array();
    for (const auto& shape : net.shape_trace()) trace.push_back(shape);

    Network& mut = const_cast<Network&>(net);
    json params = json::array();
    for (const ParamView& p : mut.params())
        params.push_back({{"name", p.name}, {"count", p.value->size()}});

    return json{{"format", "gatepose-model"},
                {"version", 1},
                {"input_shape", net.input_shape()},
                {"layers", std::move(layers)},
                {"shape_trace", std::move(trace)},
                {"params", std::move(params)}};
}

void save_network(const Network& net, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& blob_path, const json& metadata) {
    json manifest = network_manifest(net);
    if (!metadata.is_null()) manifest["metadata"] = metadata;

    std::ofstream mf(manifest_path);
    if (!mf) throw IoError("cannot write " + manifest_path.string());
    mf << manifest.dump(2) << '\n';

    std::ofstream bf(blob_path, std::ios::binary);
    if (!bf) throw IoError("cannot write " + blob_path.string());
    Network& mut = const_cast<Network&>(net);
    std::vector<float> buf;
    for (const ParamView& p : mut.params()) {
        buf.resize(p.value->size());
        for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>((*p.value)[i]);
        bf.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!bf) throw IoError("short write to " + blob_path.string());
}

void save_network(const Network& net, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& blob_path) {
    save_network(net, manifest_path, blob_path, json());
}

Network load_network(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& blob_path, json* metadata_out) {
    std::ifstream mf(manifest_path);
    if (!mf) throw IoError("cannot read " + manifest_path.string());
    json manifest = json::parse(mf, nullptr, /*allow_exceptions=*/true);
    if (manifest.value("format", "") != "gatepose-model")
        throw IoError(manifest_path.string() + " is not a model manifest");

    Network net(manifest.at("input_shape").get<std::vector<int>>());
    for (const json& j : manifest.at("layers")) net.add(layer_from_json(j));
    if (metadata_out) *metadata_out = manifest.value("metadata", json());

    std::ifstream bf(blob_path, std::ios::binary);
    if (!bf) throw IoError("cannot read " + blob_path.string());
    for (const ParamView& p : net.params()) {
        std::vector<float> buf(p.value->size());
        bf.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (bf.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
            throw IoError("parameter blob " + blob_path.string() + " is too short");
        for (size_t i = 0; i < buf.size(); ++i) (*p.value)[i] = buf[i];
    }
    char extra;
    if (bf.read(&extra, 1))
        throw IoError("parameter blob " + blob_path.string() + " has trailing bytes");
    return net;
}

}  // namespace gatepose::neural
