#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "coner/corpus.hpp"
#include "coner/layers.hpp"

namespace coner {

enum class Relation { Intra, Inter };

struct GraphEdge {
    int src = 0;
    int dst = 0;
    Relation rel = Relation::Intra;
};

// Conversation graph over the window: nodes are utterances, every ordered
// pair i<j gets a forward edge (no future information flows backward),
// INTRA when both utterances share a speaker, INTER otherwise.
struct ConvGraph {
    int n_nodes = 0;
    std::vector<GraphEdge> edges;

    std::vector<std::vector<int>> in_neighbors(Relation rel) const {
        std::vector<std::vector<int>> in(static_cast<std::size_t>(n_nodes));
        for (const auto& e : edges)
            if (e.rel == rel) in[static_cast<std::size_t>(e.dst)].push_back(e.src);
        return in;
    }

    std::vector<std::vector<int>> in_neighbors_all() const {
        std::vector<std::vector<int>> in(static_cast<std::size_t>(n_nodes));
        for (const auto& e : edges) in[static_cast<std::size_t>(e.dst)].push_back(e.src);
        return in;
    }
};

inline ConvGraph build_graph(const std::vector<Speaker>& speakers) {
    ConvGraph g;
    g.n_nodes = static_cast<int>(speakers.size());
    for (int i = 0; i < g.n_nodes; ++i)
        for (int j = i + 1; j < g.n_nodes; ++j)
            g.edges.push_back({i, j,
                               speakers[static_cast<std::size_t>(i)] ==
                                       speakers[static_cast<std::size_t>(j)]
                                   ? Relation::Intra
                                   : Relation::Inter});
    return g;
}

inline nlohmann::json graph_to_json(const ConvGraph& g) {
    nlohmann::json j;
    j["n_nodes"] = g.n_nodes;
    j["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back({{"src", e.src},
                              {"dst", e.dst},
                              {"relation", e.rel == Relation::Intra ? "INTRA" : "INTER"}});
    return j;
}

struct GraphConfig {
    int dim = 32;       // model dim F; must equal the encoder's fused dim
    int heads = 4;
    int rgcn_layers = 1;
    int attn_layers = 1;

    int head_dim() const { return dim / heads; }

    void validate() const {
        if (dim <= 0 || heads <= 0 || rgcn_layers < 0 || attn_layers < 0)
            throw ShapeError("GraphConfig: non-positive field");
        if (dim % heads != 0) throw ShapeError("GraphConfig: heads must divide dim");
    }
};

template <class T>
void graph_register(ParamStore<T>& store, const GraphConfig& cfg, Rng& rng) {
    cfg.validate();
    Rng r = rng.substream("init.graph");
    std::size_t F = static_cast<std::size_t>(cfg.dim);
    for (int l = 0; l < cfg.rgcn_layers; ++l) {
        std::string p = "graph.rgcn.l" + std::to_string(l);
        init_uniform(store.add(p + ".W0", F, F), F, r);
        init_uniform(store.add(p + ".Wintra", F, F), F, r);
        init_uniform(store.add(p + ".Winter", F, F), F, r);
    }
    std::size_t dh = static_cast<std::size_t>(cfg.head_dim());
    for (int l = 0; l < cfg.attn_layers; ++l) {
        std::string p = "graph.attn.l" + std::to_string(l);
        for (int h = 0; h < cfg.heads; ++h) {
            std::string hp = p + ".h" + std::to_string(h);
            init_uniform(store.add(hp + ".Wq", F, dh), F, r);
            init_uniform(store.add(hp + ".Wk", F, dh), F, r);
            init_uniform(store.add(hp + ".Wv", F, dh), F, r);
        }
        init_uniform(store.add(p + ".proj", F, F), F, r);
    }
}

// ---------------------------------------------------------------------------
// Relational GCN layer:
//   h_i' = ReLU( W0 h_i + sum_r (1/|N_r(i)|) sum_{j in N_r(i)} W_r h_j )
// with incoming neighborhoods; empty neighborhoods contribute nothing.

template <class T>
struct RgcnCache {
    Tensor<T> input;       // N x F
    Tensor<T> pre;         // N x F, pre-ReLU
    Tensor<T> agg_intra;   // N x F, mean of in-neighbors per relation
    Tensor<T> agg_inter;
};

template <class T>
Tensor<T> rgcn_forward(const ParamStore<T>& store, const std::string& prefix, const Tensor<T>& h,
                       const ConvGraph& g, RgcnCache<T>* cache = nullptr) {
    const Tensor<T>& W0 = store.get(prefix + ".W0");
    const Tensor<T>& Wintra = store.get(prefix + ".Wintra");
    const Tensor<T>& Winter = store.get(prefix + ".Winter");
    std::size_t N = h.rows, F = h.cols;
    if (W0.rows != F) throw ShapeError("rgcn_forward: dim mismatch");

    Tensor<T> agg_intra(N, F), agg_inter(N, F);
    auto fill_agg = [&](Relation rel, Tensor<T>& agg) {
        auto in = g.in_neighbors(rel);
        for (std::size_t i = 0; i < N; ++i) {
            if (in[i].empty()) continue;
            T inv = static_cast<T>(1.0 / static_cast<double>(in[i].size()));
            for (int j : in[i])
                for (std::size_t k = 0; k < F; ++k)
                    agg(i, k) += inv * h(static_cast<std::size_t>(j), k);
        }
    };
    fill_agg(Relation::Intra, agg_intra);
    fill_agg(Relation::Inter, agg_inter);

    Tensor<T> pre = matmul(h, W0);
    matmul_acc(pre, agg_intra, Wintra);
    matmul_acc(pre, agg_inter, Winter);
    Tensor<T> out = relu(pre);
    if (cache) {
        cache->input = h;
        cache->pre = std::move(pre);
        cache->agg_intra = std::move(agg_intra);
        cache->agg_inter = std::move(agg_inter);
    }
    return out;
}

template <class T>
void rgcn_backward(const ParamStore<T>& store, const std::string& prefix, const Tensor<T>& dout,
                   const RgcnCache<T>& cache, const ConvGraph& g, GradStore<T>& grads,
                   Tensor<T>& dinput) {
    const Tensor<T>& W0 = store.get(prefix + ".W0");
    const Tensor<T>& Wintra = store.get(prefix + ".Wintra");
    const Tensor<T>& Winter = store.get(prefix + ".Winter");
    std::size_t N = dout.rows, F = dout.cols;

    Tensor<T> dpre(N, F);
    for (std::size_t i = 0; i < dpre.data.size(); ++i)
        dpre.data[i] = cache.pre.data[i] > T(0) ? dout.data[i] : T(0);

    matmul_tn_acc(grads.acc_like(prefix + ".W0", W0), cache.input, dpre);
    matmul_nt_acc(dinput, dpre, W0);

    auto back_rel = [&](Relation rel, const Tensor<T>& agg, const Tensor<T>& Wr,
                        const std::string& wname) {
        matmul_tn_acc(grads.acc_like(wname, Wr), agg, dpre);
        Tensor<T> dagg(N, F);
        matmul_nt_acc(dagg, dpre, Wr);
        auto in = g.in_neighbors(rel);
        for (std::size_t i = 0; i < N; ++i) {
            if (in[i].empty()) continue;
            T inv = static_cast<T>(1.0 / static_cast<double>(in[i].size()));
            for (int j : in[i])
                for (std::size_t k = 0; k < F; ++k)
                    dinput(static_cast<std::size_t>(j), k) += inv * dagg(i, k);
        }
    };
    back_rel(Relation::Intra, cache.agg_intra, Wintra, prefix + ".Wintra");
    back_rel(Relation::Inter, cache.agg_inter, Winter, prefix + ".Winter");
}

// ---------------------------------------------------------------------------
// Graph transformer layer: per head, node i attends over {i} + in-neighbors,
// scaled dot-product scores, context concatenated over heads, output
// projection, residual connection.

template <class T>
struct AttnHeadCache {
    Tensor<T> q, k, v;                      // N x dh each
    std::vector<std::vector<T>> alpha;      // per node, attention over its key set
};

template <class T>
struct AttnCache {
    Tensor<T> input;                        // N x F
    Tensor<T> ctx;                          // N x F, concat of head contexts
    std::vector<AttnHeadCache<T>> heads;
    std::vector<std::vector<int>> keysets;  // per node: {i} + in-neighbors
};

template <class T>
Tensor<T> attn_forward(const ParamStore<T>& store, const std::string& prefix, const Tensor<T>& h,
                       const ConvGraph& g, const GraphConfig& cfg, AttnCache<T>* cache = nullptr) {
    std::size_t N = h.rows, F = h.cols;
    std::size_t dh = static_cast<std::size_t>(cfg.head_dim());
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    std::vector<std::vector<int>> keysets(N);
    {
        auto in = g.in_neighbors_all();
        for (std::size_t i = 0; i < N; ++i) {
            keysets[i].push_back(static_cast<int>(i));
            for (int j : in[i]) keysets[i].push_back(j);
        }
    }

    Tensor<T> ctx(N, F);
    std::vector<AttnHeadCache<T>> head_caches(static_cast<std::size_t>(cfg.heads));
    for (int hd = 0; hd < cfg.heads; ++hd) {
        std::string hp = prefix + ".h" + std::to_string(hd);
        AttnHeadCache<T>& hc = head_caches[static_cast<std::size_t>(hd)];
        hc.q = matmul(h, store.get(hp + ".Wq"));
        hc.k = matmul(h, store.get(hp + ".Wk"));
        hc.v = matmul(h, store.get(hp + ".Wv"));
        hc.alpha.resize(N);
        for (std::size_t i = 0; i < N; ++i) {
            const auto& keys = keysets[i];
            std::vector<T> score(keys.size());
            T mx = std::numeric_limits<T>::lowest();
            for (std::size_t s = 0; s < keys.size(); ++s) {
                T dot = 0;
                for (std::size_t d = 0; d < dh; ++d)
                    dot += hc.q(i, d) * hc.k(static_cast<std::size_t>(keys[s]), d);
                score[s] = dot * scale;
                mx = std::max(mx, score[s]);
            }
            double sum = 0.0;
            for (auto& s : score) {
                s = static_cast<T>(std::exp(double(s) - double(mx)));
                sum += double(s);
            }
            hc.alpha[i].resize(keys.size());
            for (std::size_t s = 0; s < keys.size(); ++s) {
                hc.alpha[i][s] = static_cast<T>(double(score[s]) / sum);
                for (std::size_t d = 0; d < dh; ++d)
                    ctx(i, static_cast<std::size_t>(hd) * dh + d) +=
                        hc.alpha[i][s] * hc.v(static_cast<std::size_t>(keys[s]), d);
            }
        }
    }

    Tensor<T> out = matmul(ctx, store.get(prefix + ".proj"));
    out += h;  // residual
    if (cache) {
        cache->input = h;
        cache->ctx = std::move(ctx);
        cache->heads = std::move(head_caches);
        cache->keysets = std::move(keysets);
    }
    return out;
}

template <class T>
void attn_backward(const ParamStore<T>& store, const std::string& prefix, const Tensor<T>& dout,
                   const AttnCache<T>& cache, const GraphConfig& cfg, GradStore<T>& grads,
                   Tensor<T>& dinput) {
    std::size_t N = dout.rows, F = dout.cols;
    std::size_t dh = static_cast<std::size_t>(cfg.head_dim());
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    const Tensor<T>& proj = store.get(prefix + ".proj");

    dinput += dout;  // residual path
    matmul_tn_acc(grads.acc_like(prefix + ".proj", proj), cache.ctx, dout);
    Tensor<T> dctx(N, F);
    matmul_nt_acc(dctx, dout, proj);

    for (int hd = 0; hd < cfg.heads; ++hd) {
        std::string hp = prefix + ".h" + std::to_string(hd);
        const AttnHeadCache<T>& hc = cache.heads[static_cast<std::size_t>(hd)];
        Tensor<T> dq(N, dh), dk(N, dh), dv(N, dh);
        for (std::size_t i = 0; i < N; ++i) {
            const auto& keys = cache.keysets[i];
            const auto& alpha = hc.alpha[i];
            std::vector<T> dalpha(keys.size(), T(0));
            for (std::size_t s = 0; s < keys.size(); ++s) {
                std::size_t j = static_cast<std::size_t>(keys[s]);
                for (std::size_t d = 0; d < dh; ++d) {
                    dalpha[s] += dctx(i, static_cast<std::size_t>(hd) * dh + d) * hc.v(j, d);
                    dv(j, d) += alpha[s] * dctx(i, static_cast<std::size_t>(hd) * dh + d);
                }
            }
            // softmax backward
            T inner = 0;
            for (std::size_t s = 0; s < keys.size(); ++s) inner += alpha[s] * dalpha[s];
            for (std::size_t s = 0; s < keys.size(); ++s) {
                T dscore = alpha[s] * (dalpha[s] - inner) * scale;
                std::size_t j = static_cast<std::size_t>(keys[s]);
                for (std::size_t d = 0; d < dh; ++d) {
                    dq(i, d) += dscore * hc.k(j, d);
                    dk(j, d) += dscore * hc.q(i, d);
                }
            }
        }
        const Tensor<T>& Wq = store.get(hp + ".Wq");
        const Tensor<T>& Wk = store.get(hp + ".Wk");
        const Tensor<T>& Wv = store.get(hp + ".Wv");
        matmul_tn_acc(grads.acc_like(hp + ".Wq", Wq), cache.input, dq);
        matmul_tn_acc(grads.acc_like(hp + ".Wk", Wk), cache.input, dk);
        matmul_tn_acc(grads.acc_like(hp + ".Wv", Wv), cache.input, dv);
        matmul_nt_acc(dinput, dq, Wq);
        matmul_nt_acc(dinput, dk, Wk);
        matmul_nt_acc(dinput, dv, Wv);
    }
}

// ---------------------------------------------------------------------------
// full graph stack

template <class T>
struct GraphStackCache {
    std::vector<RgcnCache<T>> rgcn;
    std::vector<AttnCache<T>> attn;
};

template <class T>
Tensor<T> graph_forward(const ParamStore<T>& store, const GraphConfig& cfg, const Tensor<T>& nodes,
                        const ConvGraph& g, GraphStackCache<T>* cache = nullptr) {
    if (cache) {
        cache->rgcn.resize(static_cast<std::size_t>(cfg.rgcn_layers));
        cache->attn.resize(static_cast<std::size_t>(cfg.attn_layers));
    }
    Tensor<T> h = nodes;
    for (int l = 0; l < cfg.rgcn_layers; ++l)
        h = rgcn_forward(store, "graph.rgcn.l" + std::to_string(l), h, g,
                         cache ? &cache->rgcn[static_cast<std::size_t>(l)] : nullptr);
    for (int l = 0; l < cfg.attn_layers; ++l)
        h = attn_forward(store, "graph.attn.l" + std::to_string(l), h, g, cfg,
                         cache ? &cache->attn[static_cast<std::size_t>(l)] : nullptr);
    return h;
}

template <class T>
void graph_backward(const ParamStore<T>& store, const GraphConfig& cfg, const Tensor<T>& dout,
                    const GraphStackCache<T>& cache, const ConvGraph& g, GradStore<T>& grads,
                    Tensor<T>& dnodes) {
    Tensor<T> d = dout;
    for (int l = cfg.attn_layers - 1; l >= 0; --l) {
        Tensor<T> din(d.rows, d.cols);
        attn_backward(store, "graph.attn.l" + std::to_string(l), d,
                      cache.attn[static_cast<std::size_t>(l)], cfg, grads, din);
        d = std::move(din);
    }
    for (int l = cfg.rgcn_layers - 1; l >= 0; --l) {
        Tensor<T> din(d.rows, d.cols);
        rgcn_backward(store, "graph.rgcn.l" + std::to_string(l), d,
                      cache.rgcn[static_cast<std::size_t>(l)], g, grads, din);
        d = std::move(din);
    }
    dnodes += d;
}

}  // namespace coner
