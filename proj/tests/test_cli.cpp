#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "s2m/cli.hpp"
#include "s2m/config.hpp"
#include "s2m/io.hpp"

using namespace s2m;
namespace fs = std::filesystem;

static std::string tmp_dir(const std::string& name) {
    const std::string d = (fs::temp_directory_path() / name).string();
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

static std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

TEST_CASE("unknown subcommands and flags exit with usage errors") {
    CHECK(run_cli({"frobnicate"}) == 1);
    CHECK(run_cli({"ablate", "--bogus-flag", "1"}) == 1);
    CHECK(run_cli({}) == 1);
}

TEST_CASE("ablate reports the reference parameter column") {
    const std::string d = tmp_dir("cli_ablate");
    const std::string csv = d + "/ablate.csv";
    CHECK(run_cli({"ablate", "--depths", "2,3,4,5", "--out", csv}) == 0);

    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "depth,pe,gsd,params,macs,params_M,macs_M");
    const long long expect_params[] = {304528, 501904, 699280, 896656};
    const char* expect_m[] = {"0.30", "0.50", "0.70", "0.90"};
    for (int i = 0; i < 4; ++i) {
        std::string line;
        REQUIRE(std::getline(in, line));
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ls, tok, ',')) cols.push_back(tok);
        CHECK(std::stoll(cols[3]) == expect_params[i]);
        CHECK(cols[5] == expect_m[i]);
    }
    fs::remove_all(d);
}

TEST_CASE("gen-data is deterministic and parallelism independent") {
    const std::string d1 = tmp_dir("cli_ds1");
    const std::string d2 = tmp_dir("cli_ds2");
    const std::vector<std::string> common = {"gen-data", "--count", "6",
                                             "--mode",   "pairs",   "--seed", "5"};
    std::vector<std::string> a = common;
    a.push_back("--out");
    a.push_back(d1);
    std::vector<std::string> b = common;
    b.push_back("--out");
    b.push_back(d2);

    setenv("S2M_THREADS", "1", 1);
    CHECK(run_cli(a) == 0);
    setenv("S2M_THREADS", "3", 1);
    CHECK(run_cli(b) == 0);
    unsetenv("S2M_THREADS");

    CHECK(slurp(d1 + "/manifest.txt") == slurp(d2 + "/manifest.txt"));
    for (int i = 0; i < 6; ++i)
        CHECK(slurp(d1 + "/" + sample_file_name(i)) == slurp(d2 + "/" + sample_file_name(i)));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("infer writes an OBJ with the template vertex and face counts") {
    const std::string d = tmp_dir("cli_infer");
    const std::string weights = d + "/model.s2mw";
    // an untrained model is enough for the format contract
    {
        RunConfig cfg;
        cfg.model.depth = 2;
        cfg.model.hidden = 16;
        const HandTemplate tmpl = builtin_template();
        const DecompositionSpec spec = build_decomposition(tmpl, cfg.dup_threshold);
        save_s2m(make_s2m_model(cfg.model, KinematicTree::standard(), spec, 1), weights);
    }
    const std::string obj = d + "/mesh.obj";
    const std::string json = d + "/kp.json";
    CHECK(run_cli({"infer", "--weights", weights, "--sample-seed", "9", "--out-obj", obj,
                   "--out-json", json, "--set", "synth.channels=8", "--set",
                   "model.depth=2", "--set", "model.hidden=16"}) == 0);

    const HandTemplate tmpl = builtin_template();
    std::ifstream in(obj);
    std::string line;
    int v_lines = 0, f_lines = 0;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) ++v_lines;
        if (line.rfind("f ", 0) == 0) ++f_lines;
    }
    CHECK(v_lines == tmpl.vertex_count());
    CHECK(f_lines == static_cast<int>(tmpl.faces.size()));
    CHECK(fs::exists(json));
    fs::remove_all(d);
}

TEST_CASE("bench subcommand emits a csv") {
    const std::string d = tmp_dir("cli_bench");
    const std::string csv = d + "/bench.csv";
    CHECK(run_cli({"bench", "--iterations", "3", "--out", csv, "--set", "model.hidden=32",
                   "--set", "synth.channels=8"}) == 0);
    std::ifstream in(csv);
    std::string header, row1, row2;
    std::getline(in, header);
    CHECK(std::getline(in, row1));
    CHECK(std::getline(in, row2));
    CHECK(row1.rfind("s2m_forward", 0) == 0);
    CHECK(row2.rfind("reconstruct", 0) == 0);
    fs::remove_all(d);
}
