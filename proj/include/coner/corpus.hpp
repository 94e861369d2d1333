#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coner/errors.hpp"
#include "coner/rng.hpp"

namespace coner {

// ---------------------------------------------------------------------------
// emotion labels

inline constexpr int kNumEmotions = 6;
inline constexpr std::array<const char*, kNumEmotions> kEmotionNames = {
    "happy", "sad", "neutral", "angry", "excited", "frustrated"};

inline const char* emotion_name(int index) {
    if (index < 0 || index >= kNumEmotions)
        throw DataError("emotion_name: index " + std::to_string(index) + " out of range");
    return kEmotionNames[static_cast<std::size_t>(index)];
}

inline int emotion_index(const std::string& name) {
    for (int i = 0; i < kNumEmotions; ++i)
        if (name == kEmotionNames[static_cast<std::size_t>(i)]) return i;
    throw DataError("emotion_index: unknown emotion '" + name + "'");
}

// ---------------------------------------------------------------------------
// data model

enum class Speaker { A, B };

inline char speaker_char(Speaker s) { return s == Speaker::A ? 'A' : 'B'; }

struct Utterance {
    std::string conversation_id;
    int turn_index = 0;
    Speaker speaker = Speaker::A;
    std::optional<int> label;
    std::vector<float> audio;
    std::vector<float> video;
    std::vector<float> text;
};

struct Conversation {
    std::string id;
    std::vector<Utterance> utterances;

    std::size_t size() const { return utterances.size(); }
};

struct CorpusManifest {
    int dim_audio = 0;
    int dim_video = 0;
    int dim_text = 0;
    int n_classes = kNumEmotions;
};

inline void manifest_save(const std::string& path, const CorpusManifest& m) {
    nlohmann::json j = {{"dim_audio", m.dim_audio},
                        {"dim_video", m.dim_video},
                        {"dim_text", m.dim_text},
                        {"n_classes", m.n_classes}};
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("manifest_save: cannot write " + path);
    f << j.dump(2) << "\n";
}

inline CorpusManifest manifest_load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("manifest_load: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest_load: " + std::string(e.what()));
    }
    CorpusManifest m;
    m.dim_audio = j.at("dim_audio").get<int>();
    m.dim_video = j.at("dim_video").get<int>();
    m.dim_text = j.at("dim_text").get<int>();
    m.n_classes = j.value("n_classes", kNumEmotions);
    if (m.n_classes != kNumEmotions)
        throw DataError("manifest_load: n_classes must be 6");
    return m;
}

// ---------------------------------------------------------------------------
// JSONL reader / writer
//
// One utterance per line:
//   {"conversation_id": str, "turn_index": int, "speaker": "A"|"B",
//    "label": int|null, "audio": [...], "video": [...], "text": [...]}

inline std::vector<Conversation> load_corpus(const std::string& path,
                                             const CorpusManifest& manifest,
                                             bool require_labels = false) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_corpus: cannot open " + path);

    std::map<std::string, Conversation> by_id;
    std::vector<std::string> id_order;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("load_corpus: line " + std::to_string(line_no) + ": malformed JSON: " +
                            e.what());
        }
        Utterance u;
        try {
            u.conversation_id = j.at("conversation_id").get<std::string>();
            u.turn_index = j.at("turn_index").get<int>();
            std::string sp = j.at("speaker").get<std::string>();
            if (sp == "A") u.speaker = Speaker::A;
            else if (sp == "B") u.speaker = Speaker::B;
            else throw DataError("speaker must be \"A\" or \"B\"");
            if (!j.at("label").is_null()) {
                int lab = j.at("label").get<int>();
                if (lab < 0 || lab >= kNumEmotions)
                    throw DataError("label " + std::to_string(lab) + " out of range");
                u.label = lab;
            }
            u.audio = j.at("audio").get<std::vector<float>>();
            u.video = j.at("video").get<std::vector<float>>();
            u.text = j.at("text").get<std::vector<float>>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("load_corpus: line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("load_corpus: line " + std::to_string(line_no) + ": " + e.what());
        }
        if (u.turn_index < 0)
            throw DataError("load_corpus: line " + std::to_string(line_no) + ": negative turn_index");
        if (static_cast<int>(u.audio.size()) != manifest.dim_audio ||
            static_cast<int>(u.video.size()) != manifest.dim_video ||
            static_cast<int>(u.text.size()) != manifest.dim_text)
            throw DataError("load_corpus: line " + std::to_string(line_no) +
                            ": feature dim mismatch (audio " + std::to_string(u.audio.size()) +
                            "/" + std::to_string(manifest.dim_audio) + ", video " +
                            std::to_string(u.video.size()) + "/" + std::to_string(manifest.dim_video) +
                            ", text " + std::to_string(u.text.size()) + "/" +
                            std::to_string(manifest.dim_text) + ")");
        for (const auto* vec : {&u.audio, &u.video, &u.text})
            for (float x : *vec)
                if (!std::isfinite(x))
                    throw DataError("load_corpus: line " + std::to_string(line_no) +
                                    ": non-finite feature value");
        if (require_labels && !u.label)
            throw DataError("load_corpus: line " + std::to_string(line_no) +
                            ": unlabeled utterance in a labeled-corpus context");
        if (!by_id.count(u.conversation_id)) id_order.push_back(u.conversation_id);
        by_id[u.conversation_id].id = u.conversation_id;
        by_id[u.conversation_id].utterances.push_back(std::move(u));
    }

    std::vector<Conversation> out;
    out.reserve(id_order.size());
    for (const auto& id : id_order) {
        Conversation& c = by_id[id];
        std::sort(c.utterances.begin(), c.utterances.end(),
                  [](const Utterance& a, const Utterance& b) { return a.turn_index < b.turn_index; });
        for (std::size_t i = 0; i < c.utterances.size(); ++i) {
            if (i > 0 && c.utterances[i].turn_index == c.utterances[i - 1].turn_index)
                throw DataError("load_corpus: duplicate turn_index " +
                                std::to_string(c.utterances[i].turn_index) + " in conversation " + id);
            if (c.utterances[i].turn_index != static_cast<int>(i))
                throw DataError("load_corpus: conversation " + id +
                                " has gap at turn_index " + std::to_string(i));
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline void append_utterance_jsonl(std::ostream& os, const Utterance& u) {
    nlohmann::json j;
    j["conversation_id"] = u.conversation_id;
    j["turn_index"] = u.turn_index;
    j["speaker"] = std::string(1, speaker_char(u.speaker));
    if (u.label) j["label"] = *u.label;
    else j["label"] = nullptr;
    j["audio"] = u.audio;
    j["video"] = u.video;
    j["text"] = u.text;
    os << j.dump() << "\n";
}

inline void save_corpus(const std::string& path, const std::vector<Conversation>& convs) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("save_corpus: cannot write " + path);
    for (const auto& c : convs)
        for (const auto& u : c.utterances) append_utterance_jsonl(f, u);
}

// ---------------------------------------------------------------------------
// synthetic corpus generation
//
// Labels follow an order-w Markov chain over the 6 emotions (first w labels
// uniform); features are class mean + per-speaker offset + Gaussian noise;
// speakers strictly alternate A,B,A,B,...

struct SynthSpec {
    std::uint64_t seed = 0;
    int n_conversations = 0;
    int len_min = 0;
    int len_max = 0;
    int window = 3;
    std::map<std::vector<int>, std::array<double, kNumEmotions>> transition;
    // class_feature_means[emotion][modality], modality order audio, video, text
    std::array<std::array<std::vector<float>, 3>, kNumEmotions> class_feature_means;
    double feature_noise_sigma = 1.0;
    double speaker_offset_sigma = 0.0;
    std::string id_prefix = "synth";

    void validate() const {
        if (n_conversations < 0) throw DataError("SynthSpec: negative n_conversations");
        if (len_min < window + 1)
            throw DataError("SynthSpec: len_min must be >= window+1");
        if (len_max < len_min) throw DataError("SynthSpec: len_max < len_min");
        if (feature_noise_sigma <= 0) throw DataError("SynthSpec: feature_noise_sigma must be > 0");
        if (speaker_offset_sigma < 0) throw DataError("SynthSpec: negative speaker_offset_sigma");
        for (const auto& [key, probs] : transition) {
            if (static_cast<int>(key.size()) != window)
                throw DataError("SynthSpec: transition key length != window");
            double sum = 0.0;
            for (double p : probs) {
                if (p < 0) throw DataError("SynthSpec: negative transition prob");
                sum += p;
            }
            if (std::fabs(sum - 1.0) > 1e-9)
                throw DataError("SynthSpec: transition row does not sum to 1");
        }
    }

    CorpusManifest manifest() const {
        CorpusManifest m;
        m.dim_audio = static_cast<int>(class_feature_means[0][0].size());
        m.dim_video = static_cast<int>(class_feature_means[0][1].size());
        m.dim_text = static_cast<int>(class_feature_means[0][2].size());
        return m;
    }
};

// Fully specified synthetic preset: every transition row peaks at `peak` on a
// tuple-dependent favored class, class means are scaled one-hot patterns with
// pairwise separation sep_mult * noise_sigma * sqrt(2).
inline SynthSpec make_separable_spec(std::uint64_t seed, int n_conversations, int len_min,
                                     int len_max, int window, int dim_audio, int dim_video,
                                     int dim_text, double peak = 0.8, double noise_sigma = 1.0,
                                     double sep_mult = 4.0, double speaker_offset_sigma = 0.25) {
    SynthSpec spec;
    spec.seed = seed;
    spec.n_conversations = n_conversations;
    spec.len_min = len_min;
    spec.len_max = len_max;
    spec.window = window;
    spec.feature_noise_sigma = noise_sigma;
    spec.speaker_offset_sigma = speaker_offset_sigma;

    // enumerate all 6^w label tuples
    std::vector<int> key(static_cast<std::size_t>(window), 0);
    const double rest = (1.0 - peak) / (kNumEmotions - 1);
    for (;;) {
        std::uint64_t packed = 0;
        for (int k : key) packed = packed * 6 + static_cast<std::uint64_t>(k);
        Rng h(seed ^ (packed * 0x9e3779b97f4a7c15ULL + 1));
        int favored = static_cast<int>(h.below(kNumEmotions));
        std::array<double, kNumEmotions> probs;
        probs.fill(rest);
        probs[static_cast<std::size_t>(favored)] = peak;
        spec.transition[key] = probs;
        int i = window - 1;
        while (i >= 0 && key[static_cast<std::size_t>(i)] == kNumEmotions - 1)
            key[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) break;
        key[static_cast<std::size_t>(i)] += 1;
    }

    const double sep = sep_mult * noise_sigma;
    const int dims[3] = {dim_audio, dim_video, dim_text};
    for (int e = 0; e < kNumEmotions; ++e)
        for (int mo = 0; mo < 3; ++mo) {
            std::vector<float> mean(static_cast<std::size_t>(dims[mo]), 0.0f);
            if (dims[mo] > 0) mean[static_cast<std::size_t>(e % dims[mo])] = static_cast<float>(sep);
            spec.class_feature_means[static_cast<std::size_t>(e)][static_cast<std::size_t>(mo)] =
                std::move(mean);
        }
    return spec;
}

inline std::vector<Conversation> synth_generate(const SynthSpec& spec) {
    spec.validate();
    Rng root(spec.seed);
    Rng labels_rng = root.substream("corpus.labels");
    Rng feat_rng = root.substream("corpus.features");
    Rng len_rng = root.substream("corpus.lengths");

    const int dims[3] = {static_cast<int>(spec.class_feature_means[0][0].size()),
                         static_cast<int>(spec.class_feature_means[0][1].size()),
                         static_cast<int>(spec.class_feature_means[0][2].size())};

    std::array<double, kNumEmotions> uniform;
    uniform.fill(1.0 / kNumEmotions);

    std::vector<Conversation> out;
    out.reserve(static_cast<std::size_t>(spec.n_conversations));
    for (int c = 0; c < spec.n_conversations; ++c) {
        Conversation conv;
        conv.id = spec.id_prefix + "-" + std::to_string(c);
        int n = spec.len_min + static_cast<int>(len_rng.below(
                                   static_cast<std::uint64_t>(spec.len_max - spec.len_min + 1)));

        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int t = 0; t < spec.window && t < n; ++t)
            labels[static_cast<std::size_t>(t)] = static_cast<int>(labels_rng.below(kNumEmotions));
        std::vector<int> key(static_cast<std::size_t>(spec.window));
        for (int t = spec.window; t < n; ++t) {
            for (int k = 0; k < spec.window; ++k)
                key[static_cast<std::size_t>(k)] = labels[static_cast<std::size_t>(t - spec.window + k)];
            auto it = spec.transition.find(key);
            const auto& probs = it != spec.transition.end() ? it->second : uniform;
            labels[static_cast<std::size_t>(t)] = labels_rng.categorical(probs);
        }

        // per-speaker, per-modality additive offsets for this conversation
        std::array<std::array<std::vector<float>, 3>, 2> offsets;
        for (int s = 0; s < 2; ++s)
            for (int mo = 0; mo < 3; ++mo) {
                offsets[s][mo].resize(static_cast<std::size_t>(dims[mo]));
                for (auto& x : offsets[s][mo])
                    x = static_cast<float>(feat_rng.normal() * spec.speaker_offset_sigma);
            }

        for (int t = 0; t < n; ++t) {
            Utterance u;
            u.conversation_id = conv.id;
            u.turn_index = t;
            u.speaker = (t % 2 == 0) ? Speaker::A : Speaker::B;
            u.label = labels[static_cast<std::size_t>(t)];
            int sp = t % 2;
            std::vector<float>* feats[3] = {&u.audio, &u.video, &u.text};
            for (int mo = 0; mo < 3; ++mo) {
                const auto& mean =
                    spec.class_feature_means[static_cast<std::size_t>(*u.label)][static_cast<std::size_t>(mo)];
                feats[mo]->resize(static_cast<std::size_t>(dims[mo]));
                for (int d = 0; d < dims[mo]; ++d)
                    (*feats[mo])[static_cast<std::size_t>(d)] =
                        mean[static_cast<std::size_t>(d)] + offsets[sp][mo][static_cast<std::size_t>(d)] +
                        static_cast<float>(feat_rng.normal() * spec.feature_noise_sigma);
            }
            conv.utterances.push_back(std::move(u));
        }
        out.push_back(std::move(conv));
    }
    return out;
}

// ---------------------------------------------------------------------------
// splitting

struct CorpusSplit {
    std::vector<Conversation> train, valid, test;
};

inline CorpusSplit split_corpus(const std::vector<Conversation>& convs,
                                std::array<double, 3> fractions, std::uint64_t seed) {
    double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::fabs(sum - 1.0) > 1e-9) throw DataError("split_corpus: fractions must sum to 1");
    for (double f : fractions)
        if (f < 0) throw DataError("split_corpus: negative fraction");
    std::size_t n = convs.size();
    int nonzero = 0;
    for (double f : fractions)
        if (f > 0) ++nonzero;
    if (n < static_cast<std::size_t>(nonzero))
        throw DataError("split_corpus: fewer conversations than non-zero splits");

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng = Rng(seed).substream("split");
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.below(i)]);

    std::array<std::size_t, 3> counts;
    std::array<double, 3> frac_part;
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
        double exact = fractions[static_cast<std::size_t>(s)] * static_cast<double>(n);
        counts[static_cast<std::size_t>(s)] = static_cast<std::size_t>(exact);
        frac_part[static_cast<std::size_t>(s)] = exact - std::floor(exact);
        assigned += counts[static_cast<std::size_t>(s)];
    }
    while (assigned < n) {  // largest remainder, ties to the earlier split
        int best = 0;
        for (int s = 1; s < 3; ++s)
            if (frac_part[static_cast<std::size_t>(s)] > frac_part[static_cast<std::size_t>(best)])
                best = s;
        counts[static_cast<std::size_t>(best)] += 1;
        frac_part[static_cast<std::size_t>(best)] = -1.0;
        ++assigned;
    }
    // every split with a positive fraction gets at least one conversation
    for (int s = 0; s < 3; ++s) {
        if (fractions[static_cast<std::size_t>(s)] > 0 && counts[static_cast<std::size_t>(s)] == 0) {
            int donor = 0;
            for (int d = 1; d < 3; ++d)
                if (counts[static_cast<std::size_t>(d)] > counts[static_cast<std::size_t>(donor)])
                    donor = d;
            counts[static_cast<std::size_t>(donor)] -= 1;
            counts[static_cast<std::size_t>(s)] += 1;
        }
    }

    CorpusSplit split;
    std::size_t pos = 0;
    std::vector<Conversation>* outs[3] = {&split.train, &split.valid, &split.test};
    for (int s = 0; s < 3; ++s) {
        std::vector<std::size_t> chosen(idx.begin() + static_cast<long>(pos),
                                        idx.begin() + static_cast<long>(pos + counts[static_cast<std::size_t>(s)]));
        std::sort(chosen.begin(), chosen.end());  // keep corpus order within a split
        for (std::size_t i : chosen) outs[s]->push_back(convs[i]);
        pos += counts[static_cast<std::size_t>(s)];
    }
    return split;
}

}  // namespace coner
