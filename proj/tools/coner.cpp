// coner: corpus synthesis, DK extraction, training, prediction, evaluation and
// window sweeps for emotion recognition in dyadic conversations.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "coner/checkpoint.hpp"
#include "coner/config.hpp"
#include "coner/eval.hpp"

using namespace coner;

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + path);
    f << text;
}

// Shared flag block for subcommands that build a RunConfig. Flags override
// config-file values, which override the preset, which overrides defaults.
struct RunFlags {
    std::optional<std::string> config_path, preset, revision, cascade;
    std::optional<std::string> corpus, dk, checkpoint, report, log;
    std::optional<std::uint64_t> seed;
    std::optional<int> window, episodes, batch_size, sync_period, replay_capacity, log_every;
    std::optional<int> dim_audio, dim_video, dim_text, unimodal_hidden, fusion_hidden;
    std::optional<int> fusion_layers, graph_heads, rgcn_layers, attn_layers, head_hidden;
    std::optional<double> lr, gamma, reward, weight_decay, grad_clip, eps_start, eps_end, dropout;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (sectioned key = value)");
        cmd->add_option("--preset", preset, "hyperparameter preset: desk or paper");
        cmd->add_option("--revision", revision, "DK revision mode: pandc, conly or off");
        cmd->add_option("--cascade", cascade, "training cascade: end_to_end or staged");
        cmd->add_option("--corpus", corpus, "corpus JSONL path");
        cmd->add_option("--dk", dk, "DK table JSON path");
        cmd->add_option("--checkpoint", checkpoint, "checkpoint path");
        cmd->add_option("--report", report, "report output path");
        cmd->add_option("--log", log, "training log CSV path");
        cmd->add_option("--seed", seed, "root random seed");
        cmd->add_option("--window", window, "context window size w (2..5)");
        cmd->add_option("--episodes", episodes, "training episodes");
        cmd->add_option("--batch-size", batch_size, "replay batch size");
        cmd->add_option("--sync-period", sync_period, "target network sync period");
        cmd->add_option("--replay-capacity", replay_capacity, "replay buffer capacity");
        cmd->add_option("--log-every", log_every, "log row period in steps");
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--gamma", gamma, "discount factor");
        cmd->add_option("--reward", reward, "reward magnitude r");
        cmd->add_option("--weight-decay", weight_decay, "decoupled weight decay");
        cmd->add_option("--grad-clip", grad_clip, "global gradient-norm clip (0 = off)");
        cmd->add_option("--eps-start", eps_start, "initial exploration epsilon");
        cmd->add_option("--eps-end", eps_end, "final exploration epsilon");
        cmd->add_option("--dropout", dropout, "encoder dropout rate");
        cmd->add_option("--dim-audio", dim_audio, "audio feature dim");
        cmd->add_option("--dim-video", dim_video, "video feature dim");
        cmd->add_option("--dim-text", dim_text, "text feature dim");
        cmd->add_option("--unimodal-hidden", unimodal_hidden, "unimodal GRU hidden size");
        cmd->add_option("--fusion-hidden", fusion_hidden, "fusion bigru hidden size");
        cmd->add_option("--fusion-layers", fusion_layers, "fusion bigru layer count");
        cmd->add_option("--graph-heads", graph_heads, "graph attention head count");
        cmd->add_option("--rgcn-layers", rgcn_layers, "relational GCN layer count");
        cmd->add_option("--attn-layers", attn_layers, "graph transformer layer count");
        cmd->add_option("--head-hidden", head_hidden, "dueling head hidden size");
    }

    RunConfig resolve() const {
        RunConfig cfg = config_path ? load_run_config(*config_path) : RunConfig{};
        if (preset) {
            int w = window ? *window : cfg.model.window;
            apply_preset(cfg, *preset);
            cfg.model.window = w;
        }
        if (revision) cfg.revision = revision_from_string(*revision);
        if (cascade) cfg.trainer.cascade = cascade_from_string(*cascade);
        if (corpus) cfg.corpus_path = *corpus;
        if (dk) cfg.dk_path = *dk;
        if (checkpoint) cfg.checkpoint_path = *checkpoint;
        if (report) cfg.report_path = *report;
        if (log) cfg.log_path = *log;
        if (seed) cfg.trainer.seed = *seed;
        if (window) cfg.model.window = *window;
        if (episodes) cfg.trainer.episodes = *episodes;
        if (batch_size) cfg.trainer.batch_size = *batch_size;
        if (sync_period) cfg.trainer.sync_period = *sync_period;
        if (replay_capacity) cfg.trainer.replay_capacity = *replay_capacity;
        if (log_every) cfg.trainer.log_every = *log_every;
        if (lr) cfg.trainer.lr = *lr;
        if (gamma) cfg.trainer.gamma = *gamma;
        if (reward) cfg.trainer.reward = *reward;
        if (weight_decay) cfg.trainer.weight_decay = *weight_decay;
        if (grad_clip) cfg.trainer.grad_clip = *grad_clip;
        if (eps_start) cfg.trainer.eps_start = *eps_start;
        if (eps_end) cfg.trainer.eps_end = *eps_end;
        if (dropout) cfg.model.encoder.dropout = *dropout;
        if (dim_audio) cfg.model.encoder.dim_audio = *dim_audio;
        if (dim_video) cfg.model.encoder.dim_video = *dim_video;
        if (dim_text) cfg.model.encoder.dim_text = *dim_text;
        if (unimodal_hidden) cfg.model.encoder.unimodal_hidden = *unimodal_hidden;
        if (fusion_hidden) cfg.model.encoder.fusion_hidden = *fusion_hidden;
        if (fusion_layers) cfg.model.encoder.fusion_layers = *fusion_layers;
        if (graph_heads) cfg.model.graph.heads = *graph_heads;
        if (rgcn_layers) cfg.model.graph.rgcn_layers = *rgcn_layers;
        if (attn_layers) cfg.model.graph.attn_layers = *attn_layers;
        if (head_hidden) cfg.model.heads.hidden = *head_hidden;
        cfg.model.graph.dim = cfg.model.encoder.fused_dim();
        return cfg;
    }
};

std::string require_path(const std::string& value, const std::string& what) {
    if (value.empty()) throw DataError("missing required path: " + what);
    return value;
}

std::vector<Conversation> load_corpus_for(const RunConfig& cfg, bool require_labels,
                                          bool check_dims = true) {
    std::string path = require_path(cfg.corpus_path, "--corpus");
    CorpusManifest manifest = manifest_load(path + ".manifest.json");
    if (check_dims && (manifest.dim_audio != cfg.model.encoder.dim_audio ||
                       manifest.dim_video != cfg.model.encoder.dim_video ||
                       manifest.dim_text != cfg.model.encoder.dim_text))
        throw DataError("corpus feature dims (" + std::to_string(manifest.dim_audio) + "," +
                        std::to_string(manifest.dim_video) + "," + std::to_string(manifest.dim_text) +
                        ") do not match the model config");
    return load_corpus(path, manifest, require_labels);
}

nlohmann::json prediction_to_json(const Prediction& p) {
    return {{"conversation_id", p.conversation_id},
            {"turn_index", p.turn_index},
            {"label", p.label},
            {"scores", p.scores},
            {"revised", p.revised}};
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_synth(const std::string& out, std::uint64_t seed, int conversations, int len_min,
              int len_max, int window, int da, int dv, int dt, double peak, double noise,
              double separation, double speaker_offset, const std::string& id_prefix) {
    SynthSpec spec = make_separable_spec(seed, conversations, len_min, len_max, window, da, dv, dt,
                                         peak, noise, separation, speaker_offset);
    spec.id_prefix = id_prefix;
    std::vector<Conversation> convs = synth_generate(spec);
    save_corpus(out, convs);
    CorpusManifest manifest{da, dv, dt, kNumEmotions};
    manifest_save(out + ".manifest.json", manifest);
    std::size_t utts = 0;
    for (const auto& c : convs) utts += c.size();
    std::cout << "wrote " << convs.size() << " conversations (" << utts << " utterances) to " << out
              << "\n";
    return 0;
}

int cmd_dk_extract(const RunConfig& cfg) {
    // feature dims are irrelevant here; the table only reads labels
    std::vector<Conversation> convs =
        load_corpus_for(cfg, /*require_labels=*/true, /*check_dims=*/false);
    DKTable table = build_dk(convs, cfg.model.window);
    dk_save(require_path(cfg.dk_path, "--out/--dk"), table);
    std::cout << "wrote " << table.size() << " DK rows (" << table.total_observations()
              << " observations, window " << table.window() << ") to " << cfg.dk_path << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    cfg.model.validate();
    std::vector<Conversation> convs = load_corpus_for(cfg, /*require_labels=*/true);
    TrainResult result = run_training(convs, cfg.model, cfg.trainer);
    nlohmann::json config = {{"model", cfg.model.to_json()}, {"seed", cfg.trainer.seed}};
    checkpoint_save(require_path(cfg.checkpoint_path, "--checkpoint"), result.store, config);
    if (!cfg.log_path.empty()) write_text(cfg.log_path, result.log_csv);
    std::printf("trained %ld steps (%ld target syncs), running accuracy %.3f\n", result.steps,
                result.target_syncs, result.final_running_accuracy);
    std::cout << "wrote checkpoint " << cfg.checkpoint_path << "\n";
    return 0;
}

struct LoadedModel {
    ModelConfig mcfg;
    ParamStore<float> store;
    DKTable table{3};
};

LoadedModel load_model(const RunConfig& cfg) {
    LoadedModel m;
    nlohmann::json config;
    m.store = checkpoint_load(require_path(cfg.checkpoint_path, "--checkpoint"), &config);
    if (!config.contains("model")) throw DataError("checkpoint config has no model section");
    m.mcfg = ModelConfig::from_json(config["model"]);
    m.table = dk_load(require_path(cfg.dk_path, "--dk"));
    return m;
}

// Streaming protocol: utterance JSONL on stdin, one prediction JSON per line
// on stdout, flushed as each line completes. Labeled utterances inside the
// first window initialize silently (the evaluation protocol); unlabeled ones
// get raw-model predictions that seed the label buffer.
int cmd_predict_stream(const RunConfig& cfg, std::istream& in, std::ostream& out) {
    LoadedModel m = load_model(cfg);
    std::map<std::string, EpisodeState> episodes;
    std::map<std::string, std::vector<Utterance>> heads;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Utterance utt;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            utt.conversation_id = j.at("conversation_id").get<std::string>();
            utt.turn_index = j.at("turn_index").get<int>();
            utt.speaker = j.at("speaker").get<std::string>() == "A" ? Speaker::A : Speaker::B;
            if (j.contains("label") && !j["label"].is_null()) utt.label = j["label"].get<int>();
            utt.audio = j.at("audio").get<std::vector<float>>();
            utt.video = j.at("video").get<std::vector<float>>();
            utt.text = j.at("text").get<std::vector<float>>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("stdin line " + std::to_string(line_no) + ": " + e.what());
        }

        auto [it, fresh] = episodes.try_emplace(utt.conversation_id, utt.conversation_id, m.mcfg,
                                                m.store, m.table, cfg.revision);
        EpisodeState& state = it->second;
        std::optional<Prediction> p;
        if (state.initialized()) {
            p = state.predict_next(utt);
        } else if (utt.label) {
            auto& head = heads[utt.conversation_id];
            head.push_back(utt);
            if (static_cast<int>(head.size()) == m.mcfg.window) state.init(head);
        } else {
            p = state.absorb_streaming(utt);
        }
        if (p) out << prediction_to_json(*p).dump() << "\n" << std::flush;
        (void)fresh;
    }
    return 0;
}

int cmd_predict_corpus(const RunConfig& cfg, EpisodeMode mode) {
    LoadedModel m = load_model(cfg);
    RunConfig dims = cfg;
    dims.model = m.mcfg;
    std::vector<Conversation> convs = load_corpus_for(dims, mode == EpisodeMode::Eval);
    std::ostringstream out;
    std::size_t n = 0;
    for (const auto& conv : convs)
        for (const auto& p : run_episode(conv, m.mcfg, m.store, m.table, mode, cfg.revision)) {
            out << prediction_to_json(p).dump() << "\n";
            ++n;
        }
    if (cfg.report_path.empty())
        std::cout << out.str() << std::flush;
    else
        write_text(cfg.report_path, out.str());
    std::cerr << n << " predictions\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    LoadedModel m = load_model(cfg);
    RunConfig dims = cfg;
    dims.model = m.mcfg;
    std::vector<Conversation> convs = load_corpus_for(dims, /*require_labels=*/true);
    EvalResult r = evaluate_corpus(convs, m.mcfg, m.store, m.table, cfg.revision);

    std::ostringstream rep;
    rep << "scored " << r.n_scored << " of " << r.n_total
        << " utterances (first w per conversation are given, not predicted)\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "accuracy %.4f  weighted F1 %.4f  macro F1 %.4f\n", r.accuracy,
                  r.f1.weighted, r.f1.macro);
    rep << buf;
    for (int c = 0; c < kNumEmotions; ++c) {
        std::snprintf(buf, sizeof(buf), "%-10s F1 %.4f  (support %lld)\n",
                      kEmotionNames[static_cast<std::size_t>(c)],
                      r.f1.per_class[static_cast<std::size_t>(c)],
                      static_cast<long long>(r.f1.support[static_cast<std::size_t>(c)]));
        rep << buf;
    }
    rep << "\n" << confusion_csv(r.cm) << "\n" << confusion_heatmap(r.cm);
    std::cout << rep.str();
    if (!cfg.report_path.empty()) write_text(cfg.report_path, rep.str());
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::vector<int>& windows,
              const std::vector<std::uint64_t>& seeds, const std::string& out_path) {
    std::vector<Conversation> convs = load_corpus_for(cfg, /*require_labels=*/true);
    SweepJobConfig job;
    job.model = cfg.model;
    job.trainer = cfg.trainer;
    job.revision = cfg.revision;
    std::vector<SweepRow> rows = sweep_windows(convs, job, windows, seeds);
    std::string csv = sweep_csv(rows, windows, seeds);
    if (out_path.empty())
        std::cout << csv;
    else
        write_text(out_path, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conversation emotion recognition pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    std::string synth_out, synth_prefix = "synth";
    std::uint64_t synth_seed = 0;
    int synth_convs = 100, synth_len_min = 8, synth_len_max = 12, synth_window = 3;
    int synth_da = 8, synth_dv = 12, synth_dt = 8;
    double synth_peak = 0.8, synth_noise = 1.0, synth_sep = 4.0, synth_spk = 0.25;
    synth->add_option("--out", synth_out, "output corpus JSONL path")->required();
    synth->add_option("--seed", synth_seed, "corpus seed");
    synth->add_option("--conversations", synth_convs, "number of conversations");
    synth->add_option("--len-min", synth_len_min, "minimum conversation length");
    synth->add_option("--len-max", synth_len_max, "maximum conversation length");
    synth->add_option("--window", synth_window, "transition-map order w");
    synth->add_option("--dim-audio", synth_da, "audio feature dim");
    synth->add_option("--dim-video", synth_dv, "video feature dim");
    synth->add_option("--dim-text", synth_dt, "text feature dim");
    synth->add_option("--peak", synth_peak, "max transition-row probability");
    synth->add_option("--noise", synth_noise, "feature noise sigma");
    synth->add_option("--separation", synth_sep, "class-mean separation in noise sigmas");
    synth->add_option("--speaker-offset", synth_spk, "per-speaker feature offset sigma");
    synth->add_option("--id-prefix", synth_prefix, "conversation id prefix");

    // dk-extract
    auto* dk = app.add_subcommand("dk-extract", "build the DK probability table from a corpus");
    RunFlags dk_flags;
    dk_flags.attach(dk);
    std::string dk_out;
    dk->add_option("--out", dk_out, "output DK JSON path (alias for --dk)");

    // train
    auto* train = app.add_subcommand("train", "train the agent on a labeled corpus");
    RunFlags train_flags;
    train_flags.attach(train);

    // predict
    auto* predict = app.add_subcommand("predict", "predict emotions with DK revision");
    RunFlags predict_flags;
    predict_flags.attach(predict);
    bool predict_stdin = false;
    std::string predict_mode = "eval";
    predict->add_option("--mode", predict_mode, "corpus protocol: eval or stream");
    predict->add_flag("--stream", predict_stdin, "read utterance JSONL from stdin");

    // eval
    auto* eval = app.add_subcommand("eval", "score a checkpoint on a labeled corpus");
    RunFlags eval_flags;
    eval_flags.attach(eval);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "train/evaluate across window sizes");
    RunFlags sweep_flags;
    sweep_flags.attach(sweep);
    std::vector<int> sweep_windows_arg = {2, 3, 4, 5};
    std::vector<std::uint64_t> sweep_seeds = {0};
    std::string sweep_out;
    sweep->add_option("--windows", sweep_windows_arg, "window sizes to sweep");
    sweep->add_option("--seeds", sweep_seeds, "seeds (one full job per window x seed)");
    sweep->add_option("--out", sweep_out, "output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, synth_seed, synth_convs, synth_len_min, synth_len_max,
                             synth_window, synth_da, synth_dv, synth_dt, synth_peak, synth_noise,
                             synth_sep, synth_spk, synth_prefix);
        if (dk->parsed()) {
            RunConfig cfg = dk_flags.resolve();
            if (!dk_out.empty()) cfg.dk_path = dk_out;
            return cmd_dk_extract(cfg);
        }
        if (train->parsed()) return cmd_train(train_flags.resolve());
        if (predict->parsed()) {
            RunConfig cfg = predict_flags.resolve();
            if (predict_stdin) return cmd_predict_stream(cfg, std::cin, std::cout);
            if (predict_mode != "eval" && predict_mode != "stream")
                throw DataError("--mode must be eval or stream");
            return cmd_predict_corpus(cfg, predict_mode == "eval" ? EpisodeMode::Eval
                                                                  : EpisodeMode::Stream);
        }
        if (eval->parsed()) return cmd_eval(eval_flags.resolve());
        if (sweep->parsed())
            return cmd_sweep(sweep_flags.resolve(), sweep_windows_arg, sweep_seeds, sweep_out);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
