// Exercises the command-line binary end to end. The path to the binary is
// argv[1]; everything runs inside a scratch directory.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string g_cli;
std::string g_dir;

struct RunResult {
    int code = -1;
    std::string out;
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

RunResult run(const std::string& args, const std::string& stdin_file = "") {
    std::string out_path = g_dir + "/last_out.txt";
    std::string cmd = "cd " + g_dir + " && " + g_cli + " " + args;
    if (!stdin_file.empty()) cmd += " < " + stdin_file;
    cmd += " > " + out_path + " 2>&1";
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.code = rc == -1 ? -1 : WEXITSTATUS(rc);
    r.out = slurp(out_path);
    return r;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

const std::string kTinyDims =
    "--dim-audio 2 --dim-video 3 --dim-text 2 --unimodal-hidden 3 --fusion-hidden 3 "
    "--fusion-layers 1 --graph-heads 2 --head-hidden 5";

void make_corpus() {
    auto r = run("synth --out c.jsonl --seed 5 --conversations 25 --len-min 7 --len-max 9 "
                 "--window 2 --dim-audio 2 --dim-video 3 --dim-text 2");
    REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("--help enumerates the subcommands and exits 0") {
    auto r = run("--help");
    CHECK(r.code == 0);
    for (const char* sub : {"synth", "dk-extract", "train", "predict", "eval", "sweep"})
        CHECK(r.out.find(sub) != std::string::npos);
    auto tr = run("train --help");
    CHECK(tr.code == 0);
    for (const char* flag : {"--config", "--seed", "--lr", "--gamma", "--episodes", "--window"})
        CHECK(tr.out.find(flag) != std::string::npos);
}

TEST_CASE("usage errors exit 1, data errors exit 2") {
    CHECK(run("no-such-command").code == 1);
    CHECK(run("synth").code == 1);                   // missing required --out
    CHECK(run("train --no-such-flag").code == 1);
    CHECK(run("dk-extract --corpus missing.jsonl --out dk.json --window 2").code == 2);
}

TEST_CASE("synth writes a corpus plus manifest") {
    make_corpus();
    CHECK(!slurp(g_dir + "/c.jsonl").empty());
    CHECK(slurp(g_dir + "/c.jsonl.manifest.json").find("\"dim_video\"") != std::string::npos);
    // same seed, same bytes
    auto r = run("synth --out c2.jsonl --seed 5 --conversations 25 --len-min 7 --len-max 9 "
                 "--window 2 --dim-audio 2 --dim-video 3 --dim-text 2");
    REQUIRE(r.code == 0);
    CHECK(slurp(g_dir + "/c.jsonl") == slurp(g_dir + "/c2.jsonl"));
}

TEST_CASE("dk-extract reports row counts and writes the table") {
    make_corpus();
    auto r = run("dk-extract --corpus c.jsonl --window 2 --out dk.json");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("DK rows") != std::string::npos);
    CHECK(slurp(g_dir + "/dk.json").find("\"window\"") != std::string::npos);
}

TEST_CASE("train twice with one seed gives byte-identical checkpoints and logs") {
    make_corpus();
    std::string train = "train --corpus c.jsonl --window 2 --episodes 4 --batch-size 4 --seed 9 " +
                        kTinyDims;
    REQUIRE(run(train + " --checkpoint a.ckpt --log a.csv").code == 0);
    REQUIRE(run(train + " --checkpoint b.ckpt --log b.csv").code == 0);
    CHECK(slurp(g_dir + "/a.ckpt") == slurp(g_dir + "/b.ckpt"));
    CHECK(slurp(g_dir + "/a.ckpt.bin") == slurp(g_dir + "/b.ckpt.bin"));
    CHECK(!slurp(g_dir + "/a.ckpt.bin").empty());
    CHECK(slurp(g_dir + "/a.csv") == slurp(g_dir + "/b.csv"));
    // a different seed changes the weights
    REQUIRE(run("train --corpus c.jsonl --window 2 --episodes 4 --batch-size 4 --seed 10 " +
                kTinyDims + " --checkpoint d.ckpt")
                .code == 0);
    CHECK(slurp(g_dir + "/a.ckpt.bin") != slurp(g_dir + "/d.ckpt.bin"));
}

TEST_CASE("predict on a corpus emits one JSON line per scorable utterance") {
    make_corpus();
    REQUIRE(run("dk-extract --corpus c.jsonl --window 2 --out dk.json").code == 0);
    REQUIRE(run("train --corpus c.jsonl --window 2 --episodes 2 --batch-size 4 --seed 1 " +
                kTinyDims + " --checkpoint m.ckpt")
                .code == 0);
    auto r = run("predict --corpus c.jsonl --checkpoint m.ckpt --dk dk.json --report preds.jsonl");
    REQUIRE(r.code == 0);
    std::string preds = slurp(g_dir + "/preds.jsonl");
    // 25 conversations of length 7..9, w = 2: one line per utterance past the window
    std::string corpus = slurp(g_dir + "/c.jsonl");
    CHECK(count_lines(preds) == count_lines(corpus) - 25 * 2);
    CHECK(preds.find("\"revised\"") != std::string::npos);

    // streaming over stdin: labeled init rows are silent, so n-w lines again
    std::ofstream head(g_dir + "/head.jsonl", std::ios::binary);
    std::istringstream all(corpus);
    std::string line;
    int taken = 0;
    while (taken < 8 && std::getline(all, line)) {  // all of conversation synth-0
        if (line.find("\"synth-0\"") == std::string::npos) break;
        head << line << "\n";
        ++taken;
    }
    head.close();
    auto s = run("predict --checkpoint m.ckpt --dk dk.json --stream", g_dir + "/head.jsonl");
    REQUIRE(s.code == 0);
    CHECK(count_lines(s.out) == taken - 2);
}

TEST_CASE("config file binds hyperparameters and flags take precedence") {
    make_corpus();
    {
        std::ofstream f(g_dir + "/run.conf");
        f << "[run]\npreset = desk\nseed = 4\nwindow = 2\n"
          << "[model]\ndim_audio = 2\ndim_video = 3\ndim_text = 2\nunimodal_hidden = 3\n"
          << "fusion_hidden = 3\nfusion_layers = 1\ngraph_heads = 2\nhead_hidden = 5\n"
          << "[trainer]\nepisodes = 4\nbatch_size = 4\nlr = 0.01\n"
          << "[paths]\ncorpus = c.jsonl\ncheckpoint = conf.ckpt\n";
    }
    REQUIRE(run("train --config run.conf").code == 0);
    // same settings spelled out as flags reproduce the config-file run
    REQUIRE(run("train --corpus c.jsonl --window 2 --episodes 4 --batch-size 4 --lr 0.01 "
                "--seed 4 " + kTinyDims + " --checkpoint flags.ckpt")
                .code == 0);
    CHECK(slurp(g_dir + "/conf.ckpt.bin") == slurp(g_dir + "/flags.ckpt.bin"));
    // an explicit flag overrides the file: a different seed must change weights
    REQUIRE(run("train --config run.conf --seed 5 --checkpoint over.ckpt").code == 0);
    CHECK(slurp(g_dir + "/conf.ckpt.bin") != slurp(g_dir + "/over.ckpt.bin"));

    std::ofstream bad(g_dir + "/bad.conf");
    bad << "[trainer]\nno_such_key = 1\n";
    bad.close();
    CHECK(run("train --config bad.conf").code == 2);
}

TEST_CASE("sweep writes the per-window CSV") {
    make_corpus();
    auto r = run("sweep --corpus c.jsonl --windows 2 3 --seeds 3 --episodes 2 --batch-size 4 "
                 "--log-every 0 " + kTinyDims + " --out sweep.csv");
    REQUIRE(r.code == 0);
    std::string csv = slurp(g_dir + "/sweep.csv");
    CHECK(csv.rfind("w,overall,happy,sad,neutral,angry,excited,frustrated\n", 0) == 0);
    CHECK(count_lines(csv) == 3);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-coner-binary> [doctest args]\n", argv[0]);
        return 1;
    }
    g_cli = argv[1];
    char tmpl[] = "/tmp/coner-cli-XXXXXX";
    if (!mkdtemp(tmpl)) return 1;
    g_dir = tmpl;
    doctest::Context ctx(argc - 1, argv + 1);
    int rc = ctx.run();
    if (std::system(("rm -rf " + g_dir).c_str()) != 0)
        std::fprintf(stderr, "warning: failed to remove %s\n", g_dir.c_str());
    return rc;
}
