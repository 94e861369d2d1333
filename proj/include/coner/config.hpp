#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "coner/agent.hpp"
#include "coner/inference.hpp"
#include "coner/model.hpp"

namespace coner {

// Everything a run needs: model + trainer hyperparameters, file paths and the
// preset they start from. Config files use sectioned key = value lines; every
// key can also be set from the matching command-line flag, and flags win.
struct RunConfig {
    std::string preset = "desk";
    ModelConfig model = ModelConfig::desk_preset();
    TrainerConfig trainer;
    RevisionMode revision = RevisionMode::PAndC;

    std::string corpus_path;
    std::string dk_path;
    std::string checkpoint_path;
    std::string report_path;
    std::string log_path;
};

inline RevisionMode revision_from_string(const std::string& s) {
    if (s == "pandc") return RevisionMode::PAndC;
    if (s == "conly") return RevisionMode::COnly;
    if (s == "off") return RevisionMode::Off;
    throw DataError("revision must be pandc, conly or off, got \"" + s + "\"");
}

inline CascadeMode cascade_from_string(const std::string& s) {
    if (s == "end_to_end") return CascadeMode::EndToEnd;
    if (s == "staged") return CascadeMode::Staged;
    throw DataError("cascade must be end_to_end or staged, got \"" + s + "\"");
}

inline void apply_preset(RunConfig& cfg, const std::string& name) {
    int window = cfg.model.window;
    if (name == "desk") {
        cfg.model = ModelConfig::desk_preset(window);
    } else if (name == "paper") {
        cfg.model = ModelConfig::paper_preset(window);
    } else {
        throw DataError("unknown preset \"" + name + "\" (expected desk or paper)");
    }
    cfg.preset = name;
}

// Parses sectioned key-value text:
//   [trainer]
//   lr = 0.001   # comment
// into {"trainer.lr": "0.001"}. Lines without a section are rejected.
inline std::map<std::string, std::string> parse_config_text(std::istream& in,
                                                            const std::string& origin) {
    std::map<std::string, std::string> out;
    std::string section, line;
    int line_no = 0;
    auto trim = [](std::string s) {
        std::size_t b = s.find_first_not_of(" \t\r");
        std::size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw DataError(origin + " line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw DataError(origin + " line " + std::to_string(line_no) + ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError(origin + " line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw DataError(origin + " line " + std::to_string(line_no) + ": empty key or value");
        if (section.empty())
            throw DataError(origin + " line " + std::to_string(line_no) + ": key outside any section");
        if (!out.emplace(section + "." + key, value).second)
            throw DataError(origin + " line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    return out;
}

namespace detail {

inline int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError("config key " + key + ": expected integer, got \"" + v + "\"");
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError("config key " + key + ": expected number, got \"" + v + "\"");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError("config key " + key + ": expected unsigned integer, got \"" + v + "\"");
    }
}

}  // namespace detail

inline void config_apply(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
    // the preset resets model fields, so it must land before everything else
    if (auto it = kv.find("run.preset"); it != kv.end()) apply_preset(cfg, it->second);
    for (const auto& [key, value] : kv) {
        if (key == "run.preset") {
            continue;
        } else if (key == "run.seed") {
            cfg.trainer.seed = detail::to_u64(key, value);
        } else if (key == "run.window") {
            cfg.model.window = detail::to_int(key, value);
        } else if (key == "run.revision") {
            cfg.revision = revision_from_string(value);
        } else if (key == "model.dim_audio") {
            cfg.model.encoder.dim_audio = detail::to_int(key, value);
        } else if (key == "model.dim_video") {
            cfg.model.encoder.dim_video = detail::to_int(key, value);
        } else if (key == "model.dim_text") {
            cfg.model.encoder.dim_text = detail::to_int(key, value);
        } else if (key == "model.unimodal_hidden") {
            cfg.model.encoder.unimodal_hidden = detail::to_int(key, value);
        } else if (key == "model.fusion_hidden") {
            cfg.model.encoder.fusion_hidden = detail::to_int(key, value);
        } else if (key == "model.fusion_layers") {
            cfg.model.encoder.fusion_layers = detail::to_int(key, value);
        } else if (key == "model.dropout") {
            cfg.model.encoder.dropout = detail::to_double(key, value);
        } else if (key == "model.graph_heads") {
            cfg.model.graph.heads = detail::to_int(key, value);
        } else if (key == "model.rgcn_layers") {
            cfg.model.graph.rgcn_layers = detail::to_int(key, value);
        } else if (key == "model.attn_layers") {
            cfg.model.graph.attn_layers = detail::to_int(key, value);
        } else if (key == "model.head_hidden") {
            cfg.model.heads.hidden = detail::to_int(key, value);
        } else if (key == "trainer.gamma") {
            cfg.trainer.gamma = detail::to_double(key, value);
        } else if (key == "trainer.reward") {
            cfg.trainer.reward = detail::to_double(key, value);
        } else if (key == "trainer.lr") {
            cfg.trainer.lr = detail::to_double(key, value);
        } else if (key == "trainer.weight_decay") {
            cfg.trainer.weight_decay = detail::to_double(key, value);
        } else if (key == "trainer.beta1") {
            cfg.trainer.beta1 = detail::to_double(key, value);
        } else if (key == "trainer.beta2") {
            cfg.trainer.beta2 = detail::to_double(key, value);
        } else if (key == "trainer.adam_eps") {
            cfg.trainer.adam_eps = detail::to_double(key, value);
        } else if (key == "trainer.grad_clip") {
            cfg.trainer.grad_clip = detail::to_double(key, value);
        } else if (key == "trainer.sync_period") {
            cfg.trainer.sync_period = detail::to_int(key, value);
        } else if (key == "trainer.batch_size") {
            cfg.trainer.batch_size = detail::to_int(key, value);
        } else if (key == "trainer.replay_capacity") {
            cfg.trainer.replay_capacity = detail::to_int(key, value);
        } else if (key == "trainer.eps_start") {
            cfg.trainer.eps_start = detail::to_double(key, value);
        } else if (key == "trainer.eps_end") {
            cfg.trainer.eps_end = detail::to_double(key, value);
        } else if (key == "trainer.episodes") {
            cfg.trainer.episodes = detail::to_int(key, value);
        } else if (key == "trainer.cascade") {
            cfg.trainer.cascade = cascade_from_string(value);
        } else if (key == "trainer.log_every") {
            cfg.trainer.log_every = detail::to_int(key, value);
        } else if (key == "paths.corpus") {
            cfg.corpus_path = value;
        } else if (key == "paths.dk") {
            cfg.dk_path = value;
        } else if (key == "paths.checkpoint") {
            cfg.checkpoint_path = value;
        } else if (key == "paths.report") {
            cfg.report_path = value;
        } else if (key == "paths.log") {
            cfg.log_path = value;
        } else {
            throw DataError("unknown config key " + key);
        }
    }
    cfg.model.graph.dim = cfg.model.encoder.fused_dim();
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config file " + path);
    RunConfig cfg;
    config_apply(cfg, parse_config_text(f, path));
    return cfg;
}

}  // namespace coner
