#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "coner/errors.hpp"
#include "coner/rng.hpp"
#include "coner/tensor.hpp"

namespace coner {

// Named parameters plus ADAM moments. Iteration order is registration order,
// which keeps updates and serialization deterministic.
template <class T>
struct ParamStore {
    std::vector<std::string> order;
    std::unordered_map<std::string, Tensor<T>> params;
    std::unordered_map<std::string, Tensor<T>> m;
    std::unordered_map<std::string, Tensor<T>> v;
    std::int64_t step = 0;

    Tensor<T>& add(const std::string& name, std::size_t rows, std::size_t cols) {
        if (params.count(name)) throw ShapeError("ParamStore: duplicate name " + name);
        order.push_back(name);
        m.emplace(name, Tensor<T>(rows, cols));
        v.emplace(name, Tensor<T>(rows, cols));
        return params.emplace(name, Tensor<T>(rows, cols)).first->second;
    }

    Tensor<T>& get(const std::string& name) {
        auto it = params.find(name);
        if (it == params.end()) throw ShapeError("ParamStore: unknown name " + name);
        return it->second;
    }
    const Tensor<T>& get(const std::string& name) const {
        auto it = params.find(name);
        if (it == params.end()) throw ShapeError("ParamStore: unknown name " + name);
        return it->second;
    }

    bool has(const std::string& name) const { return params.count(name) != 0; }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& name : order) n += params.at(name).size();
        return n;
    }

    template <class U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        out.order = order;
        out.step = step;
        for (const auto& name : order) {
            out.params.emplace(name, params.at(name).template cast<U>());
            out.m.emplace(name, m.at(name).template cast<U>());
            out.v.emplace(name, v.at(name).template cast<U>());
        }
        return out;
    }
};

// Gradient accumulator keyed like a ParamStore.
template <class T>
struct GradStore {
    std::unordered_map<std::string, Tensor<T>> grads;

    Tensor<T>& acc(const std::string& name, std::size_t rows, std::size_t cols) {
        auto it = grads.find(name);
        if (it == grads.end())
            it = grads.emplace(name, Tensor<T>(rows, cols)).first;
        return it->second;
    }

    Tensor<T>& acc_like(const std::string& name, const Tensor<T>& like) {
        return acc(name, like.rows, like.cols);
    }

    void clear() { grads.clear(); }
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.
template <class T>
void init_uniform(Tensor<T>& t, std::size_t fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& x : t.data) x = static_cast<T>(rng.uniform(-bound, bound));
}

struct AdamConfig {
    double lr = 0.00015;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled
    double grad_clip = 0.0;     // global-norm clip; 0 disables
};

// Decoupled weight decay, then the bias-corrected ADAM update. `grads` must
// carry exactly the keys in `names` (default: every parameter).
template <class T>
void adam_step(ParamStore<T>& store, GradStore<T>& grads, const AdamConfig& cfg,
               const std::vector<std::string>* names = nullptr) {
    const std::vector<std::string>& keys = names ? *names : store.order;
    for (const auto& name : keys)
        if (!grads.grads.count(name))
            throw ShapeError("adam_step: missing grad for " + name);
    if (grads.grads.size() != keys.size())
        throw ShapeError("adam_step: extra grad keys (" + std::to_string(grads.grads.size()) +
                         " grads, " + std::to_string(keys.size()) + " params)");

    if (cfg.grad_clip > 0.0) {
        double norm_sq = 0.0;
        for (const auto& name : keys)
            for (T g : grads.grads.at(name).data) norm_sq += double(g) * double(g);
        double norm = std::sqrt(norm_sq);
        if (norm > cfg.grad_clip) {
            T scale = static_cast<T>(cfg.grad_clip / norm);
            for (const auto& name : keys)
                for (T& g : grads.grads.at(name).data) g *= scale;
        }
    }

    store.step += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(store.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(store.step));
    for (const auto& name : keys) {
        Tensor<T>& p = store.params.at(name);
        Tensor<T>& mm = store.m.at(name);
        Tensor<T>& vv = store.v.at(name);
        const Tensor<T>& g = grads.grads.at(name);
        p.require_same(g, "adam_step");
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            double pi = p.data[i];
            pi -= cfg.lr * cfg.weight_decay * pi;
            double gi = g.data[i];
            double mi = cfg.beta1 * mm.data[i] + (1.0 - cfg.beta1) * gi;
            double vi = cfg.beta2 * vv.data[i] + (1.0 - cfg.beta2) * gi * gi;
            mm.data[i] = static_cast<T>(mi);
            vv.data[i] = static_cast<T>(vi);
            double mhat = mi / bc1;
            double vhat = vi / bc2;
            p.data[i] = static_cast<T>(pi - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

}  // namespace coner
