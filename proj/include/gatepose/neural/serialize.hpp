#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "gatepose/neural/network.hpp"

namespace gatepose::neural {

/// Layer specs, shapes and shape trace as a JSON document.
nlohmann::json network_manifest(const Network& net);

/**
 * Persist a network as a JSON manifest plus a flat little-endian float32
 * blob of every parameter in declaration order. `metadata` rides along in
 * the manifest untouched.
 */
void save_network(const Network& net, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& blob_path, const nlohmann::json& metadata);
void save_network(const Network& net, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& blob_path);

/// Rebuild a network from its manifest and parameter blob.
Network load_network(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& blob_path,
                     nlohmann::json* metadata_out = nullptr);

}  // namespace gatepose::neural
