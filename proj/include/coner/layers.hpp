#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "coner/errors.hpp"
#include "coner/params.hpp"
#include "coner/rng.hpp"
#include "coner/tensor.hpp"

namespace coner {

enum class Mode { Train, Infer };

// ---------------------------------------------------------------------------
// activations

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        y.data[i] = static_cast<T>(1.0 / (1.0 + std::exp(-double(x.data[i]))));
    return y;
}

template <class T>
Tensor<T> tanh_t(const Tensor<T>& x) {
    Tensor<T> y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        y.data[i] = static_cast<T>(std::tanh(double(x.data[i])));
    return y;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    return y;
}

// Row-wise softmax with max-subtraction stabilization.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    Tensor<T> y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        T mx = x(i, 0);
        for (std::size_t j = 1; j < x.cols; ++j) mx = std::max(mx, x(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            double e = std::exp(double(x(i, j)) - double(mx));
            y(i, j) = static_cast<T>(e);
            sum += e;
        }
        for (std::size_t j = 0; j < x.cols; ++j)
            y(i, j) = static_cast<T>(double(y(i, j)) / sum);
    }
    return y;
}

// ---------------------------------------------------------------------------
// affine: y = x W + b   (b is 1 x N, broadcast over rows)

template <class T>
Tensor<T> affine(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (b.rows != 1 || b.cols != w.cols) throw ShapeError("affine: bias shape");
    Tensor<T> y = matmul(x, w);
    for (std::size_t i = 0; i < y.rows; ++i)
        for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += b(0, j);
    return y;
}

template <class T>
void affine_backward(const Tensor<T>& dy, const Tensor<T>& x, const Tensor<T>& w,
                     Tensor<T>* dx, Tensor<T>& dw, Tensor<T>& db) {
    if (dx) matmul_nt_acc(*dx, dy, w);   // dx += dy W^T
    matmul_tn_acc(dw, x, dy);            // dW += x^T dy
    for (std::size_t i = 0; i < dy.rows; ++i)
        for (std::size_t j = 0; j < dy.cols; ++j) db(0, j) += dy(i, j);
}

// ---------------------------------------------------------------------------
// dropout (inverted; identity at inference)

template <class T>
Tensor<T> dropout_apply(const Tensor<T>& x, double rate, Mode mode, Rng& rng,
                        Tensor<T>* mask_out = nullptr) {
    if (rate < 0.0 || rate >= 1.0) throw ShapeError("dropout_apply: rate must be in [0,1)");
    if (mode == Mode::Infer || rate == 0.0) {
        if (mask_out) {
            *mask_out = Tensor<T>(x.rows, x.cols);
            mask_out->fill(T(1));
        }
        return x;
    }
    Tensor<T> y(x.rows, x.cols);
    Tensor<T> mask(x.rows, x.cols);
    T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        T m = rng.uniform() < rate ? T(0) : scale;
        mask.data[i] = m;
        y.data[i] = x.data[i] * m;
    }
    if (mask_out) *mask_out = std::move(mask);
    return y;
}

// ---------------------------------------------------------------------------
// GRU cell
//
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   hbar = tanh(x Wh + (r.h) Uh + bh)
//   h' = (1-z).h + z.hbar

template <class T>
struct GruRef {
    const Tensor<T>*Wz, *Uz, *bz, *Wr, *Ur, *br, *Wh, *Uh, *bh;

    GruRef(const ParamStore<T>& s, const std::string& p)
        : Wz(&s.get(p + ".Wz")), Uz(&s.get(p + ".Uz")), bz(&s.get(p + ".bz")),
          Wr(&s.get(p + ".Wr")), Ur(&s.get(p + ".Ur")), br(&s.get(p + ".br")),
          Wh(&s.get(p + ".Wh")), Uh(&s.get(p + ".Uh")), bh(&s.get(p + ".bh")) {}
};

template <class T>
void gru_register(ParamStore<T>& store, const std::string& prefix, std::size_t in,
                  std::size_t hid, Rng& rng) {
    auto mat = [&](const std::string& n, std::size_t r, std::size_t c, std::size_t fan) {
        init_uniform(store.add(prefix + n, r, c), fan, rng);
    };
    for (const char* g : {".Wz", ".Wr", ".Wh"}) mat(g, in, hid, in);
    for (const char* g : {".Uz", ".Ur", ".Uh"}) mat(g, hid, hid, hid);
    for (const char* g : {".bz", ".br", ".bh"}) store.add(prefix + g, 1, hid);
}

template <class T>
struct GruStepCache {
    Tensor<T> x, h_prev, z, r, hbar, rh;
};

template <class T>
Tensor<T> gru_cell_step(const Tensor<T>& x, const Tensor<T>& h_prev, const GruRef<T>& p,
                        GruStepCache<T>* cache = nullptr) {
    Tensor<T> z = sigmoid(affine(x, *p.Wz, *p.bz) += matmul(h_prev, *p.Uz));
    Tensor<T> r = sigmoid(affine(x, *p.Wr, *p.br) += matmul(h_prev, *p.Ur));
    Tensor<T> rh(h_prev.rows, h_prev.cols);
    for (std::size_t i = 0; i < rh.data.size(); ++i) rh.data[i] = r.data[i] * h_prev.data[i];
    Tensor<T> hbar = tanh_t(affine(x, *p.Wh, *p.bh) += matmul(rh, *p.Uh));
    Tensor<T> h(h_prev.rows, h_prev.cols);
    for (std::size_t i = 0; i < h.data.size(); ++i)
        h.data[i] = (T(1) - z.data[i]) * h_prev.data[i] + z.data[i] * hbar.data[i];
    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->z = std::move(z);
        cache->r = std::move(r);
        cache->hbar = std::move(hbar);
        cache->rh = std::move(rh);
    }
    return h;
}

// Accumulates parameter grads into `grads` under `prefix`; returns dh_prev via
// out param and accumulates dx into *dx when non-null.
template <class T>
void gru_cell_backward(const Tensor<T>& dh, const GruStepCache<T>& c, const GruRef<T>& p,
                       const std::string& prefix, GradStore<T>& grads,
                       Tensor<T>* dx, Tensor<T>& dh_prev) {
    std::size_t H = c.h_prev.cols;
    Tensor<T> dz(1, H), dhbar(1, H);
    for (std::size_t i = 0; i < H; ++i) {
        dz.data[i] = dh.data[i] * (c.hbar.data[i] - c.h_prev.data[i]);
        dhbar.data[i] = dh.data[i] * c.z.data[i];
        dh_prev.data[i] += dh.data[i] * (T(1) - c.z.data[i]);
    }
    // hbar = tanh(a_h)
    Tensor<T> da_h(1, H);
    for (std::size_t i = 0; i < H; ++i)
        da_h.data[i] = dhbar.data[i] * (T(1) - c.hbar.data[i] * c.hbar.data[i]);
    Tensor<T> drh(1, H);
    matmul_nt_acc(drh, da_h, *p.Uh);
    Tensor<T> dr(1, H);
    for (std::size_t i = 0; i < H; ++i) {
        dr.data[i] = drh.data[i] * c.h_prev.data[i];
        dh_prev.data[i] += drh.data[i] * c.r.data[i];
    }
    Tensor<T> da_z(1, H), da_r(1, H);
    for (std::size_t i = 0; i < H; ++i) {
        da_z.data[i] = dz.data[i] * c.z.data[i] * (T(1) - c.z.data[i]);
        da_r.data[i] = dr.data[i] * c.r.data[i] * (T(1) - c.r.data[i]);
    }

    auto& dWh = grads.acc_like(prefix + ".Wh", *p.Wh);
    auto& dUh = grads.acc_like(prefix + ".Uh", *p.Uh);
    auto& dbh = grads.acc_like(prefix + ".bh", *p.bh);
    matmul_tn_acc(dWh, c.x, da_h);
    matmul_tn_acc(dUh, c.rh, da_h);
    dbh += da_h;
    if (dx) matmul_nt_acc(*dx, da_h, *p.Wh);

    auto& dWz = grads.acc_like(prefix + ".Wz", *p.Wz);
    auto& dUz = grads.acc_like(prefix + ".Uz", *p.Uz);
    auto& dbz = grads.acc_like(prefix + ".bz", *p.bz);
    matmul_tn_acc(dWz, c.x, da_z);
    matmul_tn_acc(dUz, c.h_prev, da_z);
    dbz += da_z;
    if (dx) matmul_nt_acc(*dx, da_z, *p.Wz);
    matmul_nt_acc(dh_prev, da_z, *p.Uz);

    auto& dWr = grads.acc_like(prefix + ".Wr", *p.Wr);
    auto& dUr = grads.acc_like(prefix + ".Ur", *p.Ur);
    auto& dbr = grads.acc_like(prefix + ".br", *p.br);
    matmul_tn_acc(dWr, c.x, da_r);
    matmul_tn_acc(dUr, c.h_prev, da_r);
    dbr += da_r;
    if (dx) matmul_nt_acc(*dx, da_r, *p.Wr);
    matmul_nt_acc(dh_prev, da_r, *p.Ur);
}

// ---------------------------------------------------------------------------
// bidirectional GRU over a T x D sequence -> T x 2H
// Position t holds [forward h_t ; backward h_t]; the backward pass consumes
// the sequence in reverse time order. Direction params live under
// prefix+".fwd" / prefix+".bwd".

template <class T>
struct BiGruCache {
    std::vector<GruStepCache<T>> fwd;  // index = time t
    std::vector<GruStepCache<T>> bwd;  // index = processing order (reversed time)
};

template <class T>
void bigru_register(ParamStore<T>& store, const std::string& prefix, std::size_t in,
                    std::size_t hid, Rng& rng) {
    gru_register(store, prefix + ".fwd", in, hid, rng);
    gru_register(store, prefix + ".bwd", in, hid, rng);
}

template <class T>
Tensor<T> bigru_forward(const ParamStore<T>& store, const std::string& prefix,
                        const Tensor<T>& seq, std::size_t hid,
                        BiGruCache<T>* cache = nullptr) {
    if (seq.rows == 0) throw ShapeError("bigru_forward: empty sequence");
    std::size_t Tn = seq.rows;
    GruRef<T> pf(store, prefix + ".fwd");
    GruRef<T> pb(store, prefix + ".bwd");
    Tensor<T> out(Tn, 2 * hid);
    if (cache) {
        cache->fwd.resize(Tn);
        cache->bwd.resize(Tn);
    }
    Tensor<T> h(1, hid);
    for (std::size_t t = 0; t < Tn; ++t) {
        h = gru_cell_step(row(seq, t), h, pf, cache ? &cache->fwd[t] : nullptr);
        for (std::size_t j = 0; j < hid; ++j) out(t, j) = h(0, j);
    }
    h = Tensor<T>(1, hid);
    for (std::size_t k = 0; k < Tn; ++k) {
        std::size_t t = Tn - 1 - k;
        h = gru_cell_step(row(seq, t), h, pb, cache ? &cache->bwd[k] : nullptr);
        for (std::size_t j = 0; j < hid; ++j) out(t, hid + j) = h(0, j);
    }
    return out;
}

template <class T>
void bigru_backward(const ParamStore<T>& store, const std::string& prefix,
                    const Tensor<T>& dout, const BiGruCache<T>& cache, std::size_t hid,
                    GradStore<T>& grads, Tensor<T>* dseq) {
    std::size_t Tn = dout.rows;
    GruRef<T> pf(store, prefix + ".fwd");
    GruRef<T> pb(store, prefix + ".bwd");

    // forward direction, from the last step back
    Tensor<T> dh_carry(1, hid);
    for (std::size_t k = 0; k < Tn; ++k) {
        std::size_t t = Tn - 1 - k;
        Tensor<T> dh(1, hid);
        for (std::size_t j = 0; j < hid; ++j) dh(0, j) = dout(t, j) + dh_carry(0, j);
        Tensor<T> dh_prev(1, hid);
        Tensor<T> dx(1, cache.fwd[t].x.cols);
        gru_cell_backward(dh, cache.fwd[t], pf, prefix + ".fwd", grads, &dx, dh_prev);
        if (dseq)
            for (std::size_t j = 0; j < dx.cols; ++j) (*dseq)(t, j) += dx(0, j);
        dh_carry = std::move(dh_prev);
    }
    // backward direction: processing order k covers sequence row Tn-1-k
    dh_carry = Tensor<T>(1, hid);
    for (std::size_t k = Tn; k-- > 0;) {
        std::size_t t = Tn - 1 - k;
        Tensor<T> dh(1, hid);
        for (std::size_t j = 0; j < hid; ++j) dh(0, j) = dout(t, hid + j) + dh_carry(0, j);
        Tensor<T> dh_prev(1, hid);
        Tensor<T> dx(1, cache.bwd[k].x.cols);
        gru_cell_backward(dh, cache.bwd[k], pb, prefix + ".bwd", grads, &dx, dh_prev);
        if (dseq)
            for (std::size_t j = 0; j < dx.cols; ++j) (*dseq)(t, j) += dx(0, j);
        dh_carry = std::move(dh_prev);
    }
}

}  // namespace coner
