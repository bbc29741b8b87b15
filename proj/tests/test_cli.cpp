#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "carl/artifacts.hpp"
#include "support.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out, err;
};

CliResult run_cli(const std::string& args, const ts::TmpDir& tmp, const std::string& tag) {
    auto out_path = tmp.file("out_" + tag);
    auto err_path = tmp.file("err_" + tag);
    std::string cmd = std::string(CARL_BIN_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    int rc = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = carl::read_text_file(out_path);
    r.err = carl::read_text_file(err_path);
    return r;
}

std::string tiny_flags() {
    return " --latent 3 --filters 3 --window 2 --embed-dim 5 --fm-factors 2 --epochs 2 --batch-size 32"
           " --dropout 0 --workers 1";
}

}  // namespace

TEST_CASE("cli end-to-end") {
    ts::TmpDir tmp("cli");
    ts::SyntheticOptions so;
    so.users = 10;
    so.items = 8;
    so.interactions = 90;
    so.words_per_review = 10;
    ts::synthetic_jsonl(tmp.file("data.json"), so);

    SECTION("missing input path fails with a usage hint") {
        auto r = run_cli("preprocess --out " + tmp.file("c"), tmp, "usage");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("--input") != std::string::npos);
    }

    SECTION("unreadable input is a data error (exit 2)") {
        auto r = run_cli("preprocess --input " + tmp.file("absent.json") + " --out " + tmp.file("c"), tmp, "absent");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("carl:") != std::string::npos);
    }

    // build a corpus used by the remaining sections
    auto pre = run_cli("preprocess --input " + tmp.file("data.json") + " --out " + tmp.file("corpus") +
                           " --seed 7 --doc-len 24",
                       tmp, "pre");
    REQUIRE(pre.exit_code == 0);

    SECTION("preprocess is deterministic for a fixed seed") {
        auto again = run_cli("preprocess --input " + tmp.file("data.json") + " --out " + tmp.file("corpus2") +
                                 " --seed 7 --doc-len 24",
                             tmp, "pre2");
        REQUIRE(again.exit_code == 0);
        CHECK(carl::read_text_file(tmp.file("corpus/stats.json")) ==
              carl::read_text_file(tmp.file("corpus2/stats.json")));
        CHECK(carl::read_text_file(tmp.file("corpus/splits.csv")) ==
              carl::read_text_file(tmp.file("corpus2/splits.csv")));
    }

    SECTION("explain before training reports a missing checkpoint") {
        auto r = run_cli("explain --run " + tmp.file("norun") + " --corpus " + tmp.file("corpus") +
                             " --user u1 --item i1",
                         tmp, "nockpt");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("checkpoint not found") != std::string::npos);
    }

    SECTION("train, eval, explain, and artifact idempotence") {
        auto t1 = run_cli("train --corpus " + tmp.file("corpus") + " --out " + tmp.file("run1") + tiny_flags() +
                              " --seed 5",
                          tmp, "t1");
        REQUIRE(t1.exit_code == 0);
        CHECK(t1.out.find("test-mse") != std::string::npos);

        // identical config + seed: byte-identical artifacts (timings live in the manifest)
        auto t2 = run_cli("train --corpus " + tmp.file("corpus") + " --out " + tmp.file("run2") + tiny_flags() +
                              " --seed 5",
                          tmp, "t2");
        REQUIRE(t2.exit_code == 0);
        CHECK(carl::read_text_file(tmp.file("run1/checkpoint.bin")) ==
              carl::read_text_file(tmp.file("run2/checkpoint.bin")));
        CHECK(carl::read_text_file(tmp.file("run1/report.json")) ==
              carl::read_text_file(tmp.file("run2/report.json")));
        CHECK(carl::read_text_file(tmp.file("run1/curve.csv")) == carl::read_text_file(tmp.file("run2/curve.csv")));

        // manifest replay reproduces the MSE exactly
        auto t3 = run_cli("train --replay " + tmp.file("run1/manifest.json") + " --out " + tmp.file("run3"), tmp,
                          "t3");
        REQUIRE(t3.exit_code == 0);
        CHECK(carl::read_text_file(tmp.file("run1/checkpoint.bin")) ==
              carl::read_text_file(tmp.file("run3/checkpoint.bin")));
        CHECK(t3.out == t1.out);

        auto ev = run_cli("eval --run " + tmp.file("run1") + " --corpus " + tmp.file("corpus") + " --split test",
                          tmp, "ev");
        REQUIRE(ev.exit_code == 0);
        CHECK(ev.out.find("test mse") != std::string::npos);
        auto ej = nlohmann::json::parse(carl::read_text_file(tmp.file("run1/eval_test.json")));
        CHECK(ej["mse"].is_number());
        CHECK(ej["split"] == "test");

        auto ex = run_cli("explain --run " + tmp.file("run1") + " --corpus " + tmp.file("corpus") +
                              " --user u1 --item i1",
                          tmp, "ex");
        REQUIRE(ex.exit_code == 0);
        CHECK(ex.out.find("pair (u1, i1)") != std::string::npos);
        CHECK(carl::read_text_file(tmp.file("run1/heatmap_u1_i1.html")).find("<!doctype html") == 0);

        auto exbad = run_cli("explain --run " + tmp.file("run1") + " --corpus " + tmp.file("corpus") +
                                 " --user ghost --item i1",
                             tmp, "exbad");
        CHECK(exbad.exit_code == 2);
        CHECK(exbad.err.find("ghost") != std::string::npos);
    }

    SECTION("grid over two variants emits a two-row table") {
        auto g = run_cli("grid --corpus " + tmp.file("corpus") + " --out " + tmp.file("grid") +
                             " --variants Review,Rating --seeds 1,2" + tiny_flags(),
                         tmp, "grid");
        REQUIRE(g.exit_code == 0);
        auto md = carl::read_text_file(tmp.file("grid/table.md"));
        CHECK(md.find("| Review |") != std::string::npos);
        CHECK(md.find("| Rating |") != std::string::npos);
        CHECK(std::count(md.begin(), md.end(), '\n') == 4);  // header + separator + 2 rows
        auto csv = carl::read_text_file(tmp.file("grid/table.csv"));
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    }

    SECTION("invalid configuration exits 1 and enumerates violations") {
        auto r = run_cli("train --corpus " + tmp.file("corpus") + " --out " + tmp.file("bad") + tiny_flags() +
                             " --dropout 1.5 --lambda -1",
                         tmp, "badcfg");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("dropout") != std::string::npos);
    }

    SECTION("unknown variant exits 1 listing valid names") {
        auto r = run_cli("train --corpus " + tmp.file("corpus") + " --out " + tmp.file("bad2") + tiny_flags() +
                             " --variant Reivew",
                         tmp, "badvar");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("valid variants") != std::string::npos);
    }

    SECTION("divergent training exits 3") {
        // full-batch so epoch 0 measures the pre-explosion loss
        auto r = run_cli("train --corpus " + tmp.file("corpus") + " --out " + tmp.file("div") +
                             " --latent 3 --filters 3 --window 2 --embed-dim 5 --fm-factors 2 --dropout 0"
                             " --workers 1 --variant Rating --lr 50 --lambda 0 --epochs 10 --batch-size 1000",
                         tmp, "div");
        CHECK(r.exit_code == 3);
        CHECK(r.err.find("diverged") != std::string::npos);
    }

    SECTION("options load from a config file with unknown keys rejected") {
        {
            std::ofstream cfg(tmp.file("run.toml"));
            cfg << "[train]\ncorpus = \"" << tmp.file("corpus") << "\"\nout = \"" << tmp.file("cfgrun")
                << "\"\nlatent = 3\nfilters = 3\nwindow = 2\nembed-dim = 5\nfm-factors = 2\nepochs = 1\n"
                << "batch-size = 32\ndropout = 0\nworkers = 1\n";
        }
        auto ok = run_cli("--config " + tmp.file("run.toml") + " train", tmp, "cfgok");
        CHECK(ok.exit_code == 0);
        {
            std::ofstream cfg(tmp.file("bad.toml"));
            cfg << "[train]\ncorpus = \"" << tmp.file("corpus") << "\"\nout = \"" << tmp.file("cfgrun2")
                << "\"\nnot-a-real-option = 7\n";
        }
        auto bad = run_cli("--config " + tmp.file("bad.toml") + " train", tmp, "cfgbad");
        CHECK(bad.exit_code == 1);
    }
}
