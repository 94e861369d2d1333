#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "coner/agent.hpp"
#include "coner/dk.hpp"
#include "coner/inference.hpp"

namespace coner {

// ---------------------------------------------------------------------------
// confusion matrix and F1

struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kNumEmotions>, kNumEmotions> m{};  // [gold][pred]

    std::int64_t total() const {
        std::int64_t n = 0;
        for (const auto& r : m)
            for (auto v : r) n += v;
        return n;
    }
};

inline ConfusionMatrix confusion(const std::vector<int>& golds, const std::vector<int>& preds) {
    if (golds.size() != preds.size()) throw DataError("confusion: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        int g = golds[i], p = preds[i];
        if (g < 0 || g >= kNumEmotions || p < 0 || p >= kNumEmotions)
            throw DataError("confusion: label out of range at position " + std::to_string(i));
        cm.m[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)] += 1;
    }
    return cm;
}

struct F1Report {
    std::array<double, kNumEmotions> per_class{};
    std::array<std::int64_t, kNumEmotions> support{};
    double weighted = 0.0;  // "overall": support-weighted F1
    double macro = 0.0;
    std::int64_t n = 0;
};

// Per-class F1 = 2PR/(P+R), 0 when P+R = 0. Weighted F1 uses gold supports
// as weights, so classes absent from gold drop out of the numerator.
inline F1Report f1_report(const ConfusionMatrix& cm) {
    F1Report rep;
    rep.n = cm.total();
    if (rep.n == 0) throw DataError("f1_report: empty matrix");
    for (int c = 0; c < kNumEmotions; ++c) {
        std::size_t cc = static_cast<std::size_t>(c);
        std::int64_t tp = cm.m[cc][cc];
        std::int64_t gold_c = 0, pred_c = 0;
        for (int k = 0; k < kNumEmotions; ++k) {
            gold_c += cm.m[cc][static_cast<std::size_t>(k)];
            pred_c += cm.m[static_cast<std::size_t>(k)][cc];
        }
        rep.support[cc] = gold_c;
        double precision = pred_c > 0 ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
        double recall = gold_c > 0 ? static_cast<double>(tp) / static_cast<double>(gold_c) : 0.0;
        rep.per_class[cc] =
            (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        rep.weighted += rep.per_class[cc] * static_cast<double>(gold_c) / static_cast<double>(rep.n);
        rep.macro += rep.per_class[cc] / kNumEmotions;
    }
    return rep;
}

inline std::string confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "gold\\pred";
    for (int c = 0; c < kNumEmotions; ++c) out += std::string(",") + kEmotionNames[static_cast<std::size_t>(c)];
    out += "\n";
    for (int g = 0; g < kNumEmotions; ++g) {
        out += kEmotionNames[static_cast<std::size_t>(g)];
        for (int p = 0; p < kNumEmotions; ++p)
            out += "," + std::to_string(cm.m[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)]);
        out += "\n";
    }
    return out;
}

// Plain-text heatmap, darker glyph = larger share of the gold row.
inline std::string confusion_heatmap(const ConfusionMatrix& cm) {
    static const char* shades = " .:-=+*#%@";
    std::string out;
    for (int g = 0; g < kNumEmotions; ++g) {
        std::int64_t row_total = 0;
        for (int p = 0; p < kNumEmotions; ++p)
            row_total += cm.m[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%-10s ", kEmotionNames[static_cast<std::size_t>(g)]);
        out += buf;
        for (int p = 0; p < kNumEmotions; ++p) {
            double frac = row_total > 0
                              ? static_cast<double>(cm.m[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)]) /
                                    static_cast<double>(row_total)
                              : 0.0;
            int idx = std::min(9, static_cast<int>(frac * 10.0));
            out += shades[idx];
            out += ' ';
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// corpus-level evaluation

struct EvalResult {
    ConfusionMatrix cm;
    F1Report f1;
    std::int64_t n_scored = 0;   // predictions (first w of each conversation excluded)
    std::int64_t n_total = 0;    // all utterances, both denominators reported
    double accuracy = 0.0;
};

inline EvalResult evaluate_corpus(const std::vector<Conversation>& convs, const ModelConfig& mcfg,
                                  const ParamStore<float>& store, const DKTable& table,
                                  RevisionMode revision = RevisionMode::PAndC) {
    std::vector<int> golds, preds;
    std::int64_t n_total = 0;
    for (const auto& conv : convs) {
        n_total += static_cast<std::int64_t>(conv.size());
        auto predictions = run_episode(conv, mcfg, store, table, EpisodeMode::Eval, revision);
        for (const auto& p : predictions) {
            golds.push_back(*conv.utterances[static_cast<std::size_t>(p.turn_index)].label);
            preds.push_back(p.label);
        }
    }
    if (golds.empty()) throw DataError("evaluate_corpus: no scorable utterances");
    EvalResult r;
    r.cm = confusion(golds, preds);
    r.f1 = f1_report(r.cm);
    r.n_scored = static_cast<std::int64_t>(golds.size());
    r.n_total = n_total;
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < golds.size(); ++i)
        if (golds[i] == preds[i]) ++hits;
    r.accuracy = static_cast<double>(hits) / static_cast<double>(golds.size());
    return r;
}

// ---------------------------------------------------------------------------
// window-size sweep

struct SweepJobConfig {
    ModelConfig model;            // window field overridden per job
    TrainerConfig trainer;        // seed field overridden per job
    std::array<double, 3> fractions = {0.8, 0.1, 0.1};
    bool dk_include_valid = false;
    RevisionMode revision = RevisionMode::PAndC;
};

struct SweepRow {
    int window = 0;
    std::uint64_t seed = 0;
    double overall = 0.0;
    std::array<double, kNumEmotions> per_class{};
};

inline ModelConfig with_window(ModelConfig cfg, int w) {
    cfg.window = w;
    return cfg;
}

// One fully seed-isolated job: split, DK from train (optionally + valid),
// train, evaluate on test with revision.
inline SweepRow sweep_job(const std::vector<Conversation>& corpus, const SweepJobConfig& cfg,
                          int window, std::uint64_t seed) {
    ModelConfig mcfg = with_window(cfg.model, window);
    TrainerConfig tcfg = cfg.trainer;
    tcfg.seed = seed;
    CorpusSplit split = split_corpus(corpus, cfg.fractions, seed);
    std::vector<Conversation> dk_source = split.train;
    if (cfg.dk_include_valid)
        dk_source.insert(dk_source.end(), split.valid.begin(), split.valid.end());
    DKTable table = build_dk(dk_source, window);
    TrainResult trained = run_training(split.train, mcfg, tcfg);
    EvalResult ev = evaluate_corpus(split.test.empty() ? split.valid : split.test, mcfg,
                                    trained.store, table, cfg.revision);
    SweepRow row;
    row.window = window;
    row.seed = seed;
    row.overall = ev.f1.weighted;
    row.per_class = ev.f1.per_class;
    return row;
}

inline unsigned sweep_thread_cap(std::size_t n_jobs) {
    unsigned cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CONER_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) cap = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::min<std::size_t>(cap, n_jobs));
}

inline std::vector<SweepRow> sweep_windows(const std::vector<Conversation>& corpus,
                                           const SweepJobConfig& cfg,
                                           const std::vector<int>& windows,
                                           const std::vector<std::uint64_t>& seeds) {
    struct Job {
        int window;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int w : windows)
        for (std::uint64_t s : seeds) jobs.push_back({w, s});
    std::vector<SweepRow> rows(jobs.size());
    std::vector<std::string> errors(jobs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                rows[i] = sweep_job(corpus, cfg, jobs[i].window, jobs[i].seed);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    unsigned n_threads = sweep_thread_cap(jobs.size());
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (!errors[i].empty())
            throw DataError("sweep_windows: job w=" + std::to_string(jobs[i].window) +
                            " seed=" + std::to_string(jobs[i].seed) + " failed: " + errors[i]);
    return rows;
}

// Single seed: one row per window, 8 columns. Multiple seeds: a seed column
// plus per-window mean and std rows.
inline std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<int>& windows,
                             const std::vector<std::uint64_t>& seeds) {
    auto fmt = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", x);
        return std::string(buf);
    };
    std::string out;
    bool multi = seeds.size() > 1;
    out += multi ? "w,seed,overall" : "w,overall";
    for (int c = 0; c < kNumEmotions; ++c) out += std::string(",") + kEmotionNames[static_cast<std::size_t>(c)];
    out += "\n";
    for (int w : windows) {
        std::array<double, kNumEmotions + 1> sum{}, sum_sq{};
        for (const auto& row : rows) {
            if (row.window != w) continue;
            out += std::to_string(w);
            if (multi) out += "," + std::to_string(row.seed);
            out += "," + fmt(row.overall);
            sum[0] += row.overall;
            sum_sq[0] += row.overall * row.overall;
            for (int c = 0; c < kNumEmotions; ++c) {
                out += "," + fmt(row.per_class[static_cast<std::size_t>(c)]);
                sum[static_cast<std::size_t>(c) + 1] += row.per_class[static_cast<std::size_t>(c)];
                sum_sq[static_cast<std::size_t>(c) + 1] +=
                    row.per_class[static_cast<std::size_t>(c)] * row.per_class[static_cast<std::size_t>(c)];
            }
            out += "\n";
        }
        if (multi) {
            double n = static_cast<double>(seeds.size());
            out += std::to_string(w) + ",mean";
            for (std::size_t k = 0; k <= kNumEmotions; ++k) out += "," + fmt(sum[k] / n);
            out += "\n" + std::to_string(w) + ",std";
            for (std::size_t k = 0; k <= kNumEmotions; ++k) {
                double var = sum_sq[k] / n - (sum[k] / n) * (sum[k] / n);
                out += "," + fmt(std::sqrt(std::max(0.0, var)));
            }
            out += "\n";
        }
    }
    return out;
}

}  // namespace coner
