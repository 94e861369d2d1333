#pragma once

#include <algorithm>
#include <cstdio>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "coner/model.hpp"

namespace coner {

// ---------------------------------------------------------------------------
// action / reward / TD target

// Epsilon-greedy over the 6 Q values; greedy ties break to the lowest index.
template <class T>
int select_action(const Tensor<T>& q, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && rng.uniform() < epsilon)
        return static_cast<int>(rng.below(kNumEmotions));
    int best = 0;
    for (int a = 1; a < kNumEmotions; ++a)
        if (q(0, static_cast<std::size_t>(a)) > q(0, static_cast<std::size_t>(best))) best = a;
    return best;
}

template <class T>
int argmax6(const Tensor<T>& q) {
    int best = 0;
    for (int a = 1; a < kNumEmotions; ++a)
        if (q(0, static_cast<std::size_t>(a)) > q(0, static_cast<std::size_t>(best))) best = a;
    return best;
}

// +r on a correct action, -r otherwise.
inline double compute_reward(int action, int gold_label, double r) {
    return action == gold_label ? r : -r;
}

// R at terminal steps, else R + gamma * max over the target network's
// next-state Q values.
template <class T>
double td_target(double reward, const Tensor<T>& next_q_target, double gamma, bool terminal) {
    if (terminal) return reward;
    double mx = next_q_target(0, 0);
    for (int a = 1; a < kNumEmotions; ++a)
        mx = std::max(mx, static_cast<double>(next_q_target(0, static_cast<std::size_t>(a))));
    return reward + gamma * mx;
}

// ---------------------------------------------------------------------------
// replay

// Windows are stored raw and re-encoded at training time so gradients reach
// the encoder from replayed transitions.
struct Transition {
    WindowInput<float> window;
    int action = 0;
    double reward = 0.0;
    std::optional<WindowInput<float>> next_window;
    bool terminal = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(t));
        } else {  // FIFO eviction
            items_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }

    const Transition& sample_one(Rng& rng) const { return items_[rng.below(items_.size())]; }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> items_;
};

// ---------------------------------------------------------------------------
// trainer

enum class CascadeMode { EndToEnd, Staged };

struct TrainerConfig {
    double gamma = 0.9;
    double reward = 1.0;
    double lr = 0.00015;
    double weight_decay = 1e-4;   // "10e-5" read literally as 1e-4
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip = 0.0;       // off by default
    int sync_period = 100;
    int batch_size = 32;
    int replay_capacity = 10000;
    double eps_start = 1.0;
    double eps_end = 0.05;
    int episodes = 500;
    std::uint64_t seed = 0;
    CascadeMode cascade = CascadeMode::EndToEnd;
    int log_every = 10;

    void validate() const {
        if (gamma < 0.0 || gamma > 1.0) throw DataError("TrainerConfig: gamma must be in [0,1]");
        if (sync_period < 1) throw DataError("TrainerConfig: sync_period must be >= 1");
        if (batch_size < 1 || replay_capacity < 1) throw DataError("TrainerConfig: bad replay sizes");
        if (reward < 0.0) throw DataError("TrainerConfig: reward magnitude must be >= 0");
        if (episodes < 0) throw DataError("TrainerConfig: negative episodes");
    }

    AdamConfig adam() const {
        return {lr, beta1, beta2, adam_eps, weight_decay, grad_clip};
    }
};

inline void sync_target(const ParamStore<float>& online, ParamStore<float>& target) {
    if (online.order != target.order) throw ShapeError("sync_target: parameter manifest mismatch");
    for (const auto& name : online.order) {
        const TensorF& src = online.params.at(name);
        TensorF& dst = target.params.at(name);
        src.require_same(dst, "sync_target");
        dst.data = src.data;
    }
}

// One replay batch: mean squared TD error, one ADAM step on the online
// parameters. The TD target is a constant w.r.t. gradients.
template <class T>
double train_step(ParamStore<T>& online, const ParamStore<T>& target, const ModelConfig& mcfg,
                  const TrainerConfig& tcfg, const std::vector<const Transition*>& batch,
                  Rng& dropout_rng, const std::vector<std::string>* trainable = nullptr) {
    if (batch.empty()) throw DataError("train_step: empty batch");
    GradStore<T> grads;
    Rng dummy(0);
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const Transition* tr : batch) {
        double q_expect = tr->reward;
        if (!tr->terminal) {
            WindowInput<T> next = tr->next_window->template cast_window<T>();
            Tensor<T> qn = model_forward(target, mcfg, next, Mode::Infer, dummy);
            q_expect = td_target(tr->reward, qn, tcfg.gamma, false);
        }
        ModelCache<T> cache;
        WindowInput<T> cur = tr->window.template cast_window<T>();
        Tensor<T> q = model_forward(online, mcfg, cur, Mode::Train, dropout_rng, &cache);
        double residual = static_cast<double>(q(0, static_cast<std::size_t>(tr->action))) - q_expect;
        loss += residual * residual * inv_b;
        Tensor<T> dq(1, kNumEmotions);
        dq(0, static_cast<std::size_t>(tr->action)) = static_cast<T>(2.0 * residual * inv_b);
        model_backward(online, mcfg, dq, cache, grads);
    }
    if (!std::isfinite(loss))
        throw NumericError("train_step: non-finite loss " + std::to_string(loss));

    if (trainable) {
        GradStore<T> filtered;
        for (const auto& name : *trainable)
            filtered.grads.emplace(name, std::move(grads.grads.at(name)));
        adam_step(online, filtered, tcfg.adam(), trainable);
    } else {
        adam_step(online, grads, tcfg.adam());
    }
    return loss;
}

struct TrainResult {
    ParamStore<float> store;
    std::string log_csv;
    long steps = 0;
    long target_syncs = 0;
    double final_running_accuracy = 0.0;
};

namespace detail {

inline std::string fmt_g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

}  // namespace detail

// Episode = one conversation. The agent walks targets t = w .. n-1, selects
// epsilon-greedily, stores the transition, and trains on a replay batch each
// step. Target net syncs every sync_period steps.
inline TrainResult run_training(const std::vector<Conversation>& convs, const ModelConfig& mcfg,
                                const TrainerConfig& tcfg) {
    mcfg.validate();
    tcfg.validate();
    const int w = mcfg.window;

    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < convs.size(); ++i) {
        if (static_cast<int>(convs[i].size()) < w + 1) continue;
        for (const auto& u : convs[i].utterances)
            if (!u.label) throw DataError("run_training: unlabeled utterance in " + convs[i].id);
        usable.push_back(i);
    }
    if (usable.empty()) throw DataError("run_training: corpus has no usable windows");

    Rng root(tcfg.seed);
    Rng episode_rng = root.substream("episodes");
    Rng eps_rng = root.substream("epsilon");
    Rng replay_rng = root.substream("replay");
    Rng dropout_rng = root.substream("dropout");

    TrainResult result;
    result.store = model_init<float>(mcfg, tcfg.seed);
    ParamStore<float> target = result.store;

    // schedule all episodes upfront so the epsilon decay horizon is known
    std::vector<std::size_t> schedule;
    schedule.reserve(static_cast<std::size_t>(tcfg.episodes));
    {
        std::vector<std::size_t> pass = usable;
        std::size_t pos = pass.size();
        for (int e = 0; e < tcfg.episodes; ++e) {
            if (pos == pass.size()) {
                for (std::size_t i = pass.size(); i > 1; --i)
                    std::swap(pass[i - 1], pass[episode_rng.below(i)]);
                pos = 0;
            }
            schedule.push_back(pass[pos++]);
        }
    }
    long total_steps = 0;
    for (std::size_t ci : schedule) total_steps += static_cast<long>(convs[ci].size()) - w;
    const long decay_steps = std::max<long>(1, total_steps / 2);

    // staged cascade: one supervised cross-entropy epoch over all windows,
    // then RL with encoder+graph frozen
    std::vector<std::string> head_names;
    const std::vector<std::string>* trainable = nullptr;
    if (tcfg.cascade == CascadeMode::Staged) {
        GradStore<float> grads;
        for (std::size_t ci : usable) {
            const Conversation& conv = convs[ci];
            for (int t = w; t < static_cast<int>(conv.size()); ++t) {
                grads.clear();
                ModelCache<float> cache;
                WindowInput<float> win = make_window<float>(conv, t, w);
                TensorF q = model_forward(result.store, mcfg, win, Mode::Train, dropout_rng, &cache);
                TensorF probs = softmax_rows(q);
                TensorF dq = probs;
                dq(0, static_cast<std::size_t>(*conv.utterances[static_cast<std::size_t>(t)].label)) -= 1.0f;
                model_backward(result.store, mcfg, dq, cache, grads);
                adam_step(result.store, grads, tcfg.adam());
            }
        }
        sync_target(result.store, target);
        for (const auto& name : result.store.order)
            if (name.rfind("heads.", 0) == 0) head_names.push_back(name);
        trainable = &head_names;
    }

    ReplayBuffer replay(static_cast<std::size_t>(tcfg.replay_capacity));
    std::deque<int> recent_hits;
    double last_loss = 0.0;
    long step = 0;
    std::string log = "step,episode,epsilon,loss,running_accuracy,target_syncs\n";

    auto log_row = [&](long episode, double epsilon) {
        double acc = recent_hits.empty()
                         ? 0.0
                         : static_cast<double>(std::count(recent_hits.begin(), recent_hits.end(), 1)) /
                               static_cast<double>(recent_hits.size());
        result.final_running_accuracy = acc;
        log += std::to_string(step) + "," + std::to_string(episode) + "," +
               detail::fmt_g(epsilon) + "," + detail::fmt_g(last_loss) + "," + detail::fmt_g(acc) +
               "," + std::to_string(result.target_syncs) + "\n";
    };

    for (std::size_t ep = 0; ep < schedule.size(); ++ep) {
        const Conversation& conv = convs[schedule[ep]];
        const int n = static_cast<int>(conv.size());
        for (int t = w; t < n; ++t) {
            double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(decay_steps));
            double epsilon = tcfg.eps_start + (tcfg.eps_end - tcfg.eps_start) * frac;

            WindowInput<float> win = make_window<float>(conv, t, w);
            Rng dummy(0);
            TensorF q = model_forward(result.store, mcfg, win, Mode::Infer, dummy);
            int action = select_action(q, epsilon, eps_rng);
            int gold = *conv.utterances[static_cast<std::size_t>(t)].label;
            recent_hits.push_back(argmax6(q) == gold ? 1 : 0);
            if (recent_hits.size() > 200) recent_hits.pop_front();

            Transition tr;
            tr.action = action;
            tr.reward = compute_reward(action, gold, tcfg.reward);
            tr.terminal = (t == n - 1);
            tr.window = std::move(win);
            if (!tr.terminal) tr.next_window = make_window<float>(conv, t + 1, w);
            replay.push(std::move(tr));

            if (replay.size() >= static_cast<std::size_t>(tcfg.batch_size)) {
                std::vector<const Transition*> batch;
                batch.reserve(static_cast<std::size_t>(tcfg.batch_size));
                for (int b = 0; b < tcfg.batch_size; ++b) batch.push_back(&replay.sample_one(replay_rng));
                last_loss = train_step(result.store, target, mcfg, tcfg, batch, dropout_rng, trainable);
            }

            ++step;
            if (step % tcfg.sync_period == 0) {
                sync_target(result.store, target);
                ++result.target_syncs;
            }
            if (tcfg.log_every > 0 && (step % tcfg.log_every == 0 || step == total_steps))
                log_row(static_cast<long>(ep), epsilon);
        }
    }
    result.steps = step;
    result.log_csv = std::move(log);
    return result;
}

}  // namespace coner
