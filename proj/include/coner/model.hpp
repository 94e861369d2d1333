#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "coner/encoder.hpp"
#include "coner/graph.hpp"

namespace coner {

struct HeadConfig {
    int hidden = 64;

    void validate() const {
        if (hidden <= 0) throw ShapeError("HeadConfig: hidden must be positive");
    }
};

// Full pipeline configuration. The agent state is the concatenation of the
// (w+1) post-graph node embeddings, dim (w+1) * F.
struct ModelConfig {
    int window = 3;
    EncoderConfig encoder;
    GraphConfig graph;
    HeadConfig heads;

    int state_dim() const { return (window + 1) * graph.dim; }

    void validate() const {
        if (window < 2 || window > 5) throw ShapeError("ModelConfig: window must be in {2..5}");
        encoder.validate();
        graph.validate();
        heads.validate();
        if (graph.dim != encoder.fused_dim())
            throw ShapeError("ModelConfig: graph dim must equal encoder fused dim");
    }

    nlohmann::json to_json() const {
        return {{"window", window},
                {"dim_audio", encoder.dim_audio},
                {"dim_video", encoder.dim_video},
                {"dim_text", encoder.dim_text},
                {"unimodal_hidden", encoder.unimodal_hidden},
                {"fusion_hidden", encoder.fusion_hidden},
                {"fusion_layers", encoder.fusion_layers},
                {"dropout", encoder.dropout},
                {"graph_heads", graph.heads},
                {"rgcn_layers", graph.rgcn_layers},
                {"attn_layers", graph.attn_layers},
                {"head_hidden", heads.hidden}};
    }

    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig cfg;
        cfg.window = j.at("window").get<int>();
        cfg.encoder.dim_audio = j.at("dim_audio").get<int>();
        cfg.encoder.dim_video = j.at("dim_video").get<int>();
        cfg.encoder.dim_text = j.at("dim_text").get<int>();
        cfg.encoder.unimodal_hidden = j.at("unimodal_hidden").get<int>();
        cfg.encoder.fusion_hidden = j.at("fusion_hidden").get<int>();
        cfg.encoder.fusion_layers = j.at("fusion_layers").get<int>();
        cfg.encoder.dropout = j.at("dropout").get<double>();
        cfg.graph.dim = cfg.encoder.fused_dim();
        cfg.graph.heads = j.at("graph_heads").get<int>();
        cfg.graph.rgcn_layers = j.at("rgcn_layers").get<int>();
        cfg.graph.attn_layers = j.at("attn_layers").get<int>();
        cfg.heads.hidden = j.at("head_hidden").get<int>();
        cfg.validate();
        return cfg;
    }

    // Full-size reference hyperparameters: 100/100-dim text/audio, 512-dim
    // video, 512 hidden units, dropout 0.3.
    static ModelConfig paper_preset(int window = 3) {
        ModelConfig cfg;
        cfg.window = window;
        cfg.encoder = {100, 512, 100, 512, 512, 2, 0.3};
        cfg.graph.dim = cfg.encoder.fused_dim();
        cfg.graph.heads = 8;
        cfg.heads.hidden = 512;
        return cfg;
    }

    // Small dims so full pipeline runs finish in minutes on one core.
    static ModelConfig desk_preset(int window = 3) {
        ModelConfig cfg;
        cfg.window = window;
        cfg.encoder = {8, 12, 8, 16, 16, 2, 0.3};
        cfg.graph.dim = cfg.encoder.fused_dim();
        cfg.graph.heads = 4;
        cfg.heads.hidden = 64;
        return cfg;
    }
};

template <class T>
void heads_register(ParamStore<T>& store, const ModelConfig& cfg, Rng& rng) {
    Rng r = rng.substream("init.heads");
    std::size_t S = static_cast<std::size_t>(cfg.state_dim());
    std::size_t H = static_cast<std::size_t>(cfg.heads.hidden);
    init_uniform(store.add("heads.value.W1", S, H), S, r);
    store.add("heads.value.b1", 1, H);
    init_uniform(store.add("heads.value.W2", H, 1), H, r);
    store.add("heads.value.b2", 1, 1);
    init_uniform(store.add("heads.adv.W1", S, H), S, r);
    store.add("heads.adv.b1", 1, H);
    init_uniform(store.add("heads.adv.W2", H, kNumEmotions), H, r);
    store.add("heads.adv.b2", 1, kNumEmotions);
}

template <class T>
void model_register(ParamStore<T>& store, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    encoder_register(store, cfg.encoder, rng);
    graph_register(store, cfg.graph, rng);
    heads_register(store, cfg, rng);
}

template <class T>
ParamStore<T> model_init(const ModelConfig& cfg, std::uint64_t seed) {
    ParamStore<T> store;
    Rng rng(seed);
    model_register(store, cfg, rng);
    return store;
}

template <class T>
struct HeadsCache {
    Tensor<T> state;           // 1 x S
    Tensor<T> v1, a1;          // post-ReLU hidden activations
    Tensor<T> v1_pre, a1_pre;  // pre-ReLU
    Tensor<T> adv;             // 1 x 6
};

// Dueling combination: Q(s,a) = V(s) + A(s,a) - mean_a' A(s,a').
template <class T>
Tensor<T> q_forward(const ParamStore<T>& store, const Tensor<T>& state,
                    HeadsCache<T>* cache = nullptr) {
    Tensor<T> v1_pre = affine(state, store.get("heads.value.W1"), store.get("heads.value.b1"));
    Tensor<T> v1 = relu(v1_pre);
    Tensor<T> value = affine(v1, store.get("heads.value.W2"), store.get("heads.value.b2"));
    Tensor<T> a1_pre = affine(state, store.get("heads.adv.W1"), store.get("heads.adv.b1"));
    Tensor<T> a1 = relu(a1_pre);
    Tensor<T> adv = affine(a1, store.get("heads.adv.W2"), store.get("heads.adv.b2"));

    T mean = 0;
    for (int a = 0; a < kNumEmotions; ++a) mean += adv(0, static_cast<std::size_t>(a));
    mean /= T(kNumEmotions);
    Tensor<T> q(1, kNumEmotions);
    for (int a = 0; a < kNumEmotions; ++a)
        q(0, static_cast<std::size_t>(a)) = value(0, 0) + adv(0, static_cast<std::size_t>(a)) - mean;
    if (cache) {
        cache->state = state;
        cache->v1 = std::move(v1);
        cache->a1 = std::move(a1);
        cache->v1_pre = std::move(v1_pre);
        cache->a1_pre = std::move(a1_pre);
        cache->adv = std::move(adv);
    }
    return q;
}

template <class T>
void q_backward(const ParamStore<T>& store, const Tensor<T>& dq, const HeadsCache<T>& cache,
                GradStore<T>& grads, Tensor<T>& dstate) {
    // value receives the full sum of dq; advantages get the mean-centered dq
    T dq_sum = 0;
    for (int a = 0; a < kNumEmotions; ++a) dq_sum += dq(0, static_cast<std::size_t>(a));
    Tensor<T> dvalue(1, 1);
    dvalue(0, 0) = dq_sum;
    Tensor<T> dadv(1, kNumEmotions);
    for (int a = 0; a < kNumEmotions; ++a)
        dadv(0, static_cast<std::size_t>(a)) =
            dq(0, static_cast<std::size_t>(a)) - dq_sum / T(kNumEmotions);

    auto back_stream = [&](const Tensor<T>& dtop, const Tensor<T>& h1, const Tensor<T>& h1_pre,
                           const std::string& p) {
        const Tensor<T>& W1 = store.get(p + ".W1");
        const Tensor<T>& W2 = store.get(p + ".W2");
        Tensor<T> dh1(1, h1.cols);
        affine_backward(dtop, h1, W2, &dh1, grads.acc_like(p + ".W2", W2),
                        grads.acc(p + ".b2", 1, dtop.cols));
        for (std::size_t i = 0; i < dh1.data.size(); ++i)
            if (h1_pre.data[i] <= T(0)) dh1.data[i] = T(0);
        affine_backward(dh1, cache.state, W1, &dstate, grads.acc_like(p + ".W1", W1),
                        grads.acc(p + ".b1", 1, dh1.cols));
    };
    back_stream(dvalue, cache.v1, cache.v1_pre, "heads.value");
    back_stream(dadv, cache.a1, cache.a1_pre, "heads.adv");
}

// ---------------------------------------------------------------------------
// end-to-end: window -> encoder -> graph -> flatten -> dueling heads -> Q

template <class T>
struct ModelCache {
    EncoderCache<T> encoder;
    GraphStackCache<T> graph;
    HeadsCache<T> heads;
    ConvGraph conv_graph;
    std::size_t n_nodes = 0;
};

template <class T>
Tensor<T> model_forward(const ParamStore<T>& store, const ModelConfig& cfg,
                        const WindowInput<T>& win, Mode mode, Rng& dropout_rng,
                        ModelCache<T>* cache = nullptr) {
    if (static_cast<int>(win.n()) != cfg.window + 1)
        throw ShapeError("model_forward: window must have w+1 utterances");
    ModelCache<T> local;
    ModelCache<T>* c = cache ? cache : &local;
    Tensor<T> fused = encode_window(store, cfg.encoder, win, mode, dropout_rng, &c->encoder);
    c->conv_graph = build_graph(win.speakers);
    Tensor<T> nodes = graph_forward(store, cfg.graph, fused, c->conv_graph, &c->graph);
    c->n_nodes = nodes.rows;

    Tensor<T> state(1, nodes.rows * nodes.cols);
    for (std::size_t i = 0; i < nodes.rows; ++i)
        for (std::size_t j = 0; j < nodes.cols; ++j)
            state(0, i * nodes.cols + j) = nodes(i, j);
    return q_forward(store, state, &c->heads);
}

template <class T>
void model_backward(const ParamStore<T>& store, const ModelConfig& cfg, const Tensor<T>& dq,
                    const ModelCache<T>& cache, GradStore<T>& grads,
                    WindowInput<T>* dwin = nullptr) {
    std::size_t F = static_cast<std::size_t>(cfg.graph.dim);
    Tensor<T> dstate(1, cache.n_nodes * F);
    q_backward(store, dq, cache.heads, grads, dstate);

    Tensor<T> dnodes(cache.n_nodes, F);
    for (std::size_t i = 0; i < cache.n_nodes; ++i)
        for (std::size_t j = 0; j < F; ++j) dnodes(i, j) = dstate(0, i * F + j);

    Tensor<T> dfused(cache.n_nodes, F);
    graph_backward(store, cfg.graph, dnodes, cache.graph, cache.conv_graph, grads, dfused);
    encoder_backward(store, cfg.encoder, dfused, cache.encoder, grads, dwin);
}

}  // namespace coner
