#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "coner/agent.hpp"
#include "coner/dk.hpp"
#include "coner/model.hpp"

namespace coner {

enum class RevisionMode { PAndC, COnly, Off };

struct Prediction {
    std::string conversation_id;
    int turn_index = 0;
    int label = 0;
    std::array<double, kNumEmotions> scores{};   // softmax of Q
    std::array<double, kNumEmotions> revised{};  // scores + P + C (a score, not a distribution)
    bool revision_applied = false;
};

// Rolling per-conversation state: the last w utterances' features plus their
// labels (gold during initialization, predicted afterwards).
class EpisodeState {
public:
    EpisodeState(std::string conversation_id, const ModelConfig& mcfg, const ParamStore<float>& store,
                 const DKTable& table, RevisionMode revision = RevisionMode::PAndC)
        : conversation_id_(std::move(conversation_id)), mcfg_(&mcfg), store_(&store), table_(&table),
          revision_(revision) {
        if (table.window() != mcfg.window)
            throw DataError("EpisodeState: DK window " + std::to_string(table.window()) +
                            " != model window " + std::to_string(mcfg.window));
    }

    int window() const { return mcfg_->window; }
    int next_turn() const { return next_turn_; }
    bool initialized() const { return static_cast<int>(buffer_.size()) == window(); }

    // Eval-mode initialization: exactly w labeled utterances. Label-free
    // streaming initialization passes unlabeled ones; revision stays off
    // until the buffer holds w predicted labels.
    void init(const std::vector<Utterance>& head) {
        if (static_cast<int>(head.size()) != window())
            throw DataError("EpisodeState::init: need exactly " + std::to_string(window()) +
                            " utterances, got " + std::to_string(head.size()));
        bool labeled = true;
        for (const auto& u : head) labeled = labeled && u.label.has_value();
        for (const auto& u : head) {
            if (u.turn_index != next_turn_)
                throw DataError("EpisodeState::init: out-of-order utterance");
            buffer_.push_back(u);
            if (labeled) labels_.push_back(*u.label);
            ++next_turn_;
        }
    }

    // Label-free streaming: absorb one of the first w utterances, emitting a
    // raw-model prediction from a left-padded window. Its label seeds the
    // label buffer.
    Prediction absorb_streaming(const Utterance& utt) {
        if (initialized()) throw DataError("EpisodeState: already initialized");
        check_order(utt);
        std::vector<const Utterance*> padded;
        int missing = window() - static_cast<int>(buffer_.size());
        const Utterance& pad = buffer_.empty() ? utt : buffer_.front();
        for (int i = 0; i < missing; ++i) padded.push_back(&pad);
        for (const auto& u : buffer_) padded.push_back(&u);
        padded.push_back(&utt);
        Prediction p = score_window(padded, utt, /*revise=*/false);
        buffer_.push_back(utt);
        labels_.push_back(p.label);
        ++next_turn_;
        return p;
    }

    // Predict the emotion of `utt` given the buffered window; the buffer then
    // rolls forward carrying the predicted label.
    Prediction predict_next(const Utterance& utt) {
        if (!initialized()) throw DataError("EpisodeState: not initialized");
        check_order(utt);
        std::vector<const Utterance*> win;
        for (const auto& u : buffer_) win.push_back(&u);
        win.push_back(&utt);
        bool revise = revision_ != RevisionMode::Off &&
                      static_cast<int>(labels_.size()) == window();
        Prediction p = score_window(win, utt, revise);
        buffer_.push_back(utt);
        buffer_.pop_front();
        labels_.push_back(p.label);
        if (static_cast<int>(labels_.size()) > window()) labels_.pop_front();
        ++next_turn_;
        return p;
    }

private:
    void check_order(const Utterance& utt) const {
        if (utt.conversation_id != conversation_id_)
            throw DataError("EpisodeState: utterance from conversation " + utt.conversation_id +
                            " fed to episode " + conversation_id_);
        if (utt.turn_index != next_turn_)
            throw DataError("EpisodeState: expected turn " + std::to_string(next_turn_) + ", got " +
                            std::to_string(utt.turn_index));
    }

    Prediction score_window(const std::vector<const Utterance*>& win, const Utterance& target,
                            bool revise) {
        WindowInput<float> input;
        std::size_t n = win.size();
        input.audio = TensorF(n, win[0]->audio.size());
        input.video = TensorF(n, win[0]->video.size());
        input.text = TensorF(n, win[0]->text.size());
        input.speakers.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Utterance& u = *win[i];
            if (static_cast<int>(u.audio.size()) != mcfg_->encoder.dim_audio ||
                static_cast<int>(u.video.size()) != mcfg_->encoder.dim_video ||
                static_cast<int>(u.text.size()) != mcfg_->encoder.dim_text)
                throw DataError("EpisodeState: feature dim mismatch at turn " +
                                std::to_string(u.turn_index));
            for (std::size_t j = 0; j < u.audio.size(); ++j) input.audio(i, j) = u.audio[j];
            for (std::size_t j = 0; j < u.video.size(); ++j) input.video(i, j) = u.video[j];
            for (std::size_t j = 0; j < u.text.size(); ++j) input.text(i, j) = u.text[j];
            input.speakers[i] = u.speaker;
        }

        Rng dummy(0);
        TensorF q = model_forward(*store_, *mcfg_, input, Mode::Infer, dummy);
        TensorF probs = softmax_rows(q);

        Prediction p;
        p.conversation_id = conversation_id_;
        p.turn_index = target.turn_index;
        for (int a = 0; a < kNumEmotions; ++a)
            p.scores[static_cast<std::size_t>(a)] = probs(0, static_cast<std::size_t>(a));
        p.revised = p.scores;
        if (revise) {
            LabelPair key(labels_.begin(), labels_.end());
            DKDistribution d = table_->lookup(key);
            for (int a = 0; a < kNumEmotions; ++a) {
                if (revision_ != RevisionMode::COnly)
                    p.revised[static_cast<std::size_t>(a)] += d.p[static_cast<std::size_t>(a)];
                p.revised[static_cast<std::size_t>(a)] += d.c[static_cast<std::size_t>(a)];
            }
            p.revision_applied = true;
        }
        int best = 0;
        for (int a = 1; a < kNumEmotions; ++a)
            if (p.revised[static_cast<std::size_t>(a)] > p.revised[static_cast<std::size_t>(best)])
                best = a;
        p.label = best;
        return p;
    }

    std::string conversation_id_;
    const ModelConfig* mcfg_;
    const ParamStore<float>* store_;
    const DKTable* table_;
    RevisionMode revision_;
    std::deque<Utterance> buffer_;
    std::deque<int> labels_;
    int next_turn_ = 0;
};

enum class EpisodeMode { Eval, Stream };

// Eval mode mirrors the test protocol: gold labels initialize the first
// window, predicted labels roll it forward; predictions start at index w.
// Stream mode needs no gold labels and predicts every utterance.
inline std::vector<Prediction> run_episode(const Conversation& conv, const ModelConfig& mcfg,
                                           const ParamStore<float>& store, const DKTable& table,
                                           EpisodeMode mode,
                                           RevisionMode revision = RevisionMode::PAndC) {
    const int w = mcfg.window;
    std::vector<Prediction> out;
    if (static_cast<int>(conv.size()) < w + 1) return out;  // skipped, mirrors DK construction

    EpisodeState state(conv.id, mcfg, store, table, revision);
    if (mode == EpisodeMode::Eval) {
        std::vector<Utterance> head(conv.utterances.begin(), conv.utterances.begin() + w);
        for (const auto& u : head)
            if (!u.label) throw DataError("run_episode: eval mode needs gold labels for the first " +
                                          std::to_string(w) + " utterances of " + conv.id);
        state.init(head);
        for (int t = w; t < static_cast<int>(conv.size()); ++t)
            out.push_back(state.predict_next(conv.utterances[static_cast<std::size_t>(t)]));
    } else {
        for (int t = 0; t < static_cast<int>(conv.size()); ++t) {
            const Utterance& u = conv.utterances[static_cast<std::size_t>(t)];
            out.push_back(t < w ? state.absorb_streaming(u) : state.predict_next(u));
        }
    }
    return out;
}

}  // namespace coner
