#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "coner/errors.hpp"
#include "coner/params.hpp"

namespace coner {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blob is little-endian f32");

// Checkpoint = JSON manifest at `path` plus a companion `<path>.bin` blob of
// f32 values. Offsets and lengths in the manifest are float counts.
inline void checkpoint_save(const std::string& path, const ParamStore<float>& store,
                            const nlohmann::json& config) {
    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["config"] = config;
    nlohmann::json tensors = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& name : store.order) {
        const TensorF& t = store.params.at(name);
        tensors.push_back({{"name", name},
                           {"shape", {t.rows, t.cols}},
                           {"offset", offset},
                           {"len", t.size()}});
        offset += t.size();
    }
    manifest["tensors"] = tensors;

    std::ofstream mf(path, std::ios::binary | std::ios::trunc);
    if (!mf) throw DataError("checkpoint_save: cannot write " + path);
    mf << manifest.dump(2) << "\n";

    std::ofstream bf(path + ".bin", std::ios::binary | std::ios::trunc);
    if (!bf) throw DataError("checkpoint_save: cannot write " + path + ".bin");
    for (const auto& name : store.order) {
        const TensorF& t = store.params.at(name);
        bf.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
}

inline ParamStore<float> checkpoint_load(const std::string& path, nlohmann::json* config_out = nullptr) {
    std::ifstream mf(path, std::ios::binary);
    if (!mf) throw DataError("checkpoint_load: cannot open " + path);
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint_load: bad manifest: " + std::string(e.what()));
    }
    if (!manifest.contains("version") || manifest["version"].get<int>() != 1)
        throw DataError("checkpoint_load: unsupported version");
    if (config_out && manifest.contains("config")) *config_out = manifest["config"];

    std::ifstream bf(path + ".bin", std::ios::binary | std::ios::ate);
    if (!bf) throw DataError("checkpoint_load: cannot open " + path + ".bin");
    std::size_t blob_floats = static_cast<std::size_t>(bf.tellg()) / sizeof(float);
    bf.seekg(0);

    ParamStore<float> store;
    std::size_t expected = 0;
    for (const auto& entry : manifest["tensors"]) {
        std::string name = entry["name"].get<std::string>();
        std::size_t rows = entry["shape"][0].get<std::size_t>();
        std::size_t cols = entry["shape"][1].get<std::size_t>();
        std::size_t offset = entry["offset"].get<std::size_t>();
        std::size_t len = entry["len"].get<std::size_t>();
        if (len != rows * cols)
            throw DataError("checkpoint_load: len mismatch for " + name);
        if (offset != expected)
            throw DataError("checkpoint_load: non-contiguous offset for " + name);
        expected += len;
        TensorF& t = store.add(name, rows, cols);
        bf.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(len * sizeof(float)));
        if (!bf) throw DataError("checkpoint_load: blob truncated at " + name);
    }
    if (expected != blob_floats)
        throw DataError("checkpoint_load: blob length " + std::to_string(blob_floats) +
                        " != manifest total " + std::to_string(expected));
    return store;
}

}  // namespace coner
