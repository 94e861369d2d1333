#pragma once

#include <string>
#include <vector>

#include "coner/corpus.hpp"
#include "coner/layers.hpp"

namespace coner {

struct EncoderConfig {
    int dim_audio = 8;
    int dim_video = 12;
    int dim_text = 8;
    int unimodal_hidden = 16;   // Hu
    int fusion_hidden = 16;     // Hf; fused feature dim F = 2*Hf
    int fusion_layers = 2;
    double dropout = 0.3;

    int fused_dim() const { return 2 * fusion_hidden; }

    void validate() const {
        if (dim_audio <= 0 || dim_video <= 0 || dim_text <= 0)
            throw ShapeError("EncoderConfig: modality dims must be positive");
        if (unimodal_hidden <= 0 || fusion_hidden <= 0 || fusion_layers <= 0)
            throw ShapeError("EncoderConfig: hidden sizes must be positive");
        if (dropout < 0.0 || dropout >= 1.0) throw ShapeError("EncoderConfig: dropout must be in [0,1)");
    }
};

// Raw modality features of one window: (w+1) rows per modality plus speakers.
// The last row is the target utterance.
template <class T>
struct WindowInput {
    Tensor<T> audio;  // N x Da
    Tensor<T> video;  // N x Dv
    Tensor<T> text;   // N x Dt
    std::vector<Speaker> speakers;

    std::size_t n() const { return speakers.size(); }

    template <class U>
    WindowInput<U> cast_window() const {
        WindowInput<U> out;
        out.audio = audio.template cast<U>();
        out.video = video.template cast<U>();
        out.text = text.template cast<U>();
        out.speakers = speakers;
        return out;
    }
};

template <class T>
WindowInput<T> make_window(const Conversation& conv, int target_index, int window) {
    if (target_index < window || target_index >= static_cast<int>(conv.size()))
        throw ShapeError("make_window: incomplete window");
    std::size_t n = static_cast<std::size_t>(window + 1);
    WindowInput<T> out;
    const Utterance& first = conv.utterances[static_cast<std::size_t>(target_index - window)];
    out.audio = Tensor<T>(n, first.audio.size());
    out.video = Tensor<T>(n, first.video.size());
    out.text = Tensor<T>(n, first.text.size());
    out.speakers.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Utterance& u =
            conv.utterances[static_cast<std::size_t>(target_index - window) + i];
        for (std::size_t j = 0; j < u.audio.size(); ++j) out.audio(i, j) = static_cast<T>(u.audio[j]);
        for (std::size_t j = 0; j < u.video.size(); ++j) out.video(i, j) = static_cast<T>(u.video[j]);
        for (std::size_t j = 0; j < u.text.size(); ++j) out.text(i, j) = static_cast<T>(u.text[j]);
        out.speakers[i] = u.speaker;
    }
    return out;
}

template <class T>
struct EncoderCache {
    BiGruCache<T> audio, video, text;
    std::vector<BiGruCache<T>> fusion;       // per fusion layer
    std::vector<Tensor<T>> fusion_inputs;    // input to each fusion layer
    Tensor<T> concat;                        // N x 6Hu
    Tensor<T> dropout_mask;                  // mask on the fusion output
};

template <class T>
void encoder_register(ParamStore<T>& store, const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    Rng r = rng.substream("init.encoder");
    bigru_register(store, "encoder.audio", static_cast<std::size_t>(cfg.dim_audio),
                   static_cast<std::size_t>(cfg.unimodal_hidden), r);
    bigru_register(store, "encoder.video", static_cast<std::size_t>(cfg.dim_video),
                   static_cast<std::size_t>(cfg.unimodal_hidden), r);
    bigru_register(store, "encoder.text", static_cast<std::size_t>(cfg.dim_text),
                   static_cast<std::size_t>(cfg.unimodal_hidden), r);
    std::size_t in = 6 * static_cast<std::size_t>(cfg.unimodal_hidden);
    for (int l = 0; l < cfg.fusion_layers; ++l) {
        bigru_register(store, "encoder.fusion.l" + std::to_string(l), in,
                       static_cast<std::size_t>(cfg.fusion_hidden), r);
        in = 2 * static_cast<std::size_t>(cfg.fusion_hidden);
    }
}

// Three unimodal bigrus over the window, concat, fusion bigru stack, dropout
// (training mode only). Output: N x 2Hf fused per-utterance features.
template <class T>
Tensor<T> encode_window(const ParamStore<T>& store, const EncoderConfig& cfg,
                        const WindowInput<T>& win, Mode mode, Rng& dropout_rng,
                        EncoderCache<T>* cache = nullptr) {
    std::size_t Hu = static_cast<std::size_t>(cfg.unimodal_hidden);
    std::size_t Hf = static_cast<std::size_t>(cfg.fusion_hidden);
    if (win.audio.cols != static_cast<std::size_t>(cfg.dim_audio) ||
        win.video.cols != static_cast<std::size_t>(cfg.dim_video) ||
        win.text.cols != static_cast<std::size_t>(cfg.dim_text))
        throw ShapeError("encode_window: modality dim mismatch");

    Tensor<T> a = bigru_forward(store, "encoder.audio", win.audio, Hu, cache ? &cache->audio : nullptr);
    Tensor<T> v = bigru_forward(store, "encoder.video", win.video, Hu, cache ? &cache->video : nullptr);
    Tensor<T> x = bigru_forward(store, "encoder.text", win.text, Hu, cache ? &cache->text : nullptr);
    Tensor<T> cat = concat_cols(concat_cols(a, v), x);

    if (cache) {
        cache->concat = cat;
        cache->fusion.resize(static_cast<std::size_t>(cfg.fusion_layers));
        cache->fusion_inputs.resize(static_cast<std::size_t>(cfg.fusion_layers));
    }
    Tensor<T> h = std::move(cat);
    for (int l = 0; l < cfg.fusion_layers; ++l) {
        if (cache) cache->fusion_inputs[static_cast<std::size_t>(l)] = h;
        h = bigru_forward(store, "encoder.fusion.l" + std::to_string(l), h, Hf,
                          cache ? &cache->fusion[static_cast<std::size_t>(l)] : nullptr);
    }
    h = dropout_apply(h, cfg.dropout, mode, dropout_rng, cache ? &cache->dropout_mask : nullptr);
    return h;
}

// dWin members, when non-null, receive gradients w.r.t. the raw modality inputs.
template <class T>
void encoder_backward(const ParamStore<T>& store, const EncoderConfig& cfg,
                      const Tensor<T>& dout, const EncoderCache<T>& cache, GradStore<T>& grads,
                      WindowInput<T>* dwin = nullptr) {
    std::size_t Hu = static_cast<std::size_t>(cfg.unimodal_hidden);
    std::size_t Hf = static_cast<std::size_t>(cfg.fusion_hidden);
    std::size_t N = dout.rows;

    Tensor<T> d = dout;
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] *= cache.dropout_mask.data[i];

    for (int l = cfg.fusion_layers - 1; l >= 0; --l) {
        const Tensor<T>& input = cache.fusion_inputs[static_cast<std::size_t>(l)];
        Tensor<T> dinput(input.rows, input.cols);
        bigru_backward(store, "encoder.fusion.l" + std::to_string(l), d,
                       cache.fusion[static_cast<std::size_t>(l)], Hf, grads, &dinput);
        d = std::move(dinput);
    }

    // split the concat gradient back into the three unimodal outputs
    Tensor<T> da(N, 2 * Hu), dv(N, 2 * Hu), dx(N, 2 * Hu);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < 2 * Hu; ++j) {
            da(i, j) = d(i, j);
            dv(i, j) = d(i, 2 * Hu + j);
            dx(i, j) = d(i, 4 * Hu + j);
        }
    bigru_backward(store, "encoder.audio", da, cache.audio, Hu, grads,
                   dwin ? &dwin->audio : nullptr);
    bigru_backward(store, "encoder.video", dv, cache.video, Hu, grads,
                   dwin ? &dwin->video : nullptr);
    bigru_backward(store, "encoder.text", dx, cache.text, Hu, grads,
                   dwin ? &dwin->text : nullptr);
}

}  // namespace coner
