#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "coner/corpus.hpp"
#include "coner/errors.hpp"

namespace coner {

// Key of the domain-knowledge table: the ordered labels of the w utterances
// preceding a target.
using LabelPair = std::vector<int>;

struct DKRow {
    std::array<std::int64_t, kNumEmotions> counts{};
    std::int64_t total = 0;
};

// P(e|L) = counts / total; C(e|L) = softmax over emotions of P(.|L).
struct DKDistribution {
    std::array<double, kNumEmotions> p{};
    std::array<double, kNumEmotions> c{};
};

inline DKDistribution dk_distribution_from_counts(const DKRow& row) {
    DKDistribution d;
    for (int e = 0; e < kNumEmotions; ++e)
        d.p[static_cast<std::size_t>(e)] =
            static_cast<double>(row.counts[static_cast<std::size_t>(e)]) / static_cast<double>(row.total);
    double mx = d.p[0];
    for (double x : d.p) mx = std::max(mx, x);
    double sum = 0.0;
    for (int e = 0; e < kNumEmotions; ++e) {
        d.c[static_cast<std::size_t>(e)] = std::exp(d.p[static_cast<std::size_t>(e)] - mx);
        sum += d.c[static_cast<std::size_t>(e)];
    }
    for (auto& x : d.c) x /= sum;
    return d;
}

class DKTable {
public:
    explicit DKTable(int window) : window_(window) {
        if (window < 2 || window > 5) throw DataError("DKTable: window must be in {2..5}");
    }

    int window() const { return window_; }
    const std::map<LabelPair, DKRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }
    std::size_t size() const { return rows_.size(); }

    void observe(const LabelPair& key, int target) {
        if (static_cast<int>(key.size()) != window_)
            throw DataError("DKTable::observe: key length != window");
        for (int l : key)
            if (l < 0 || l >= kNumEmotions) throw DataError("DKTable::observe: label out of range");
        if (target < 0 || target >= kNumEmotions)
            throw DataError("DKTable::observe: target out of range");
        DKRow& row = rows_[key];
        row.counts[static_cast<std::size_t>(target)] += 1;
        row.total += 1;
    }

    std::int64_t total_observations() const {
        std::int64_t n = 0;
        for (const auto& [k, row] : rows_) n += row.total;
        return n;
    }

    // Stored distribution if L was observed, otherwise the uniform fallback
    // (softmax of a constant vector is uniform, so P = C = 1/6).
    DKDistribution lookup(const LabelPair& key) const {
        if (static_cast<int>(key.size()) != window_)
            throw DataError("DKTable::lookup: key length " + std::to_string(key.size()) +
                            " != window " + std::to_string(window_));
        auto it = rows_.find(key);
        if (it == rows_.end()) {
            DKDistribution d;
            d.p.fill(1.0 / kNumEmotions);
            d.c.fill(1.0 / kNumEmotions);
            return d;
        }
        return dk_distribution_from_counts(it->second);
    }

    void insert_row(const LabelPair& key, const DKRow& row) {
        std::int64_t sum = 0;
        for (auto c : row.counts) {
            if (c < 0) throw DataError("DKTable: negative count");
            sum += c;
        }
        if (sum != row.total || row.total <= 0)
            throw DataError("DKTable: counts row does not match total");
        if (static_cast<int>(key.size()) != window_)
            throw DataError("DKTable: key length != window");
        rows_[key] = row;
    }

    bool operator==(const DKTable& o) const { return window_ == o.window_ && rows_ == o.rows_; }

private:
    int window_;
    std::map<LabelPair, DKRow> rows_;
};

inline bool operator==(const DKRow& a, const DKRow& b) {
    return a.counts == b.counts && a.total == b.total;
}

// Each conversation of length n contributes max(0, n-w) observations:
// L = labels[t-w .. t-1], target = labels[t], for t = w .. n-1.
inline DKTable build_dk(const std::vector<Conversation>& convs, int window) {
    DKTable table(window);
    for (const auto& conv : convs) {
        for (const auto& u : conv.utterances)
            if (!u.label)
                throw DataError("build_dk: unlabeled utterance in conversation " + conv.id);
        int n = static_cast<int>(conv.size());
        LabelPair key(static_cast<std::size_t>(window));
        for (int t = window; t < n; ++t) {
            for (int k = 0; k < window; ++k)
                key[static_cast<std::size_t>(k)] =
                    *conv.utterances[static_cast<std::size_t>(t - window + k)].label;
            table.observe(key, *conv.utterances[static_cast<std::size_t>(t)].label);
        }
    }
    return table;
}

// File format: {"version": 1, "window": w, "rows": [{"L": [...], "counts": [6 ints]}]}
// Probabilities are derived on load, never serialized.
inline void dk_save(const std::string& path, const DKTable& table) {
    nlohmann::json j;
    j["version"] = 1;
    j["window"] = table.window();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [key, row] : table.rows())
        rows.push_back({{"L", key}, {"counts", row.counts}, {"total", row.total}});
    j["rows"] = rows;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("dk_save: cannot write " + path);
    f << j.dump(2) << "\n";
}

inline DKTable dk_load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("dk_load: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("dk_load: " + std::string(e.what()));
    }
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw DataError("dk_load: unsupported version");
    DKTable table(j.at("window").get<int>());
    for (const auto& entry : j.at("rows")) {
        LabelPair key = entry.at("L").get<LabelPair>();
        for (int l : key)
            if (l < 0 || l >= kNumEmotions) throw DataError("dk_load: label out of range");
        auto counts = entry.at("counts").get<std::vector<std::int64_t>>();
        if (counts.size() != kNumEmotions) throw DataError("dk_load: counts row must have 6 entries");
        DKRow row;
        std::int64_t sum = 0;
        for (int e = 0; e < kNumEmotions; ++e) {
            row.counts[static_cast<std::size_t>(e)] = counts[static_cast<std::size_t>(e)];
            sum += counts[static_cast<std::size_t>(e)];
        }
        row.total = entry.value("total", sum);
        if (row.total != sum)
            throw DataError("dk_load: corrupted entry, counts do not sum to total");
        table.insert_row(key, row);
    }
    return table;
}

}  // namespace coner
