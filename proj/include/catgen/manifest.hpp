#pragma once

// Run manifests: a key=value record of how an artifact was produced,
// written next to it as `<artifact>.manifest`. No timestamps, so reruns
// with the same inputs produce identical manifests.

#include <filesystem>
#include <string>

#include "catgen/keyvalue.hpp"

namespace catgen {

/// Lowercase hex SHA-256 of a file's bytes. Throws if it cannot be read.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

struct RunManifest {
  std::string subcommand;
  KeyValues settings;  // resolved config, seeds, input paths
  std::map<std::string, std::filesystem::path> inputs;
  std::map<std::string, std::filesystem::path> outputs;

  /// Hashes every input and output that exists as a regular file.
  KeyValues to_key_values() const;
};

std::filesystem::path manifest_path(const std::filesystem::path& artifact);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& artifact);

}  // namespace catgen
