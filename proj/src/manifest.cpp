#include "catgen/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace catgen {

namespace {

struct Hasher {
  Hasher() : ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256 init failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw std::runtime_error("sha256 update failed");
  }
  std::string finish() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
      throw std::runtime_error("sha256 final failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(hex[md[i] >> 4]);
      out.push_back(hex[md[i] & 15]);
    }
    return out;
  }
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Hasher h;
  h.update(bytes.data(), bytes.size());
  return h.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Hasher h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

KeyValues RunManifest::to_key_values() const {
  KeyValues kv = settings;
  kv["subcommand"] = subcommand;
  auto add = [&](const char* prefix, const auto& files) {
    for (const auto& [name, path] : files) {
      kv[std::string(prefix) + name + ".path"] = path.string();
      std::error_code ec;
      if (std::filesystem::is_regular_file(path, ec)) {
        kv[std::string(prefix) + name + ".sha256"] = sha256_file(path);
      }
    }
  };
  add("input.", inputs);
  add("output.", outputs);
  return kv;
}

std::filesystem::path manifest_path(const std::filesystem::path& artifact) {
  auto p = artifact;
  if (p.has_filename()) {
    p += ".manifest";
  } else {
    p /= "run.manifest";
  }
  return p;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& artifact) {
  write_key_values(manifest.to_key_values(), manifest_path(artifact));
}

}  // namespace catgen
