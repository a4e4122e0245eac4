#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "s2m/config.hpp"
#include "s2m/io.hpp"

using namespace s2m;
namespace fs = std::filesystem;

static std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

static std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

TEST_CASE("weight container round trip is bitwise stable") {
    S2MConfig cfg;
    cfg.depth = 2;
    cfg.hidden = 16;
    const KinematicTree tree = KinematicTree::standard();
    const DecompositionSpec spec = build_decomposition(builtin_template(), 0.3);
    const S2MModel m = make_s2m_model(cfg, tree, spec, 77);

    const std::string p1 = tmp_path("w1.s2mw"), p2 = tmp_path("w2.s2mw");
    save_s2m(m, p1);
    const S2MModel loaded = load_s2m(p1);
    save_s2m(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));

    // loaded values are the f32 quantization of the originals
    for (size_t j = 0; j < m.axis[0].layers.size(); ++j)
        for (size_t i = 0; i < m.axis[0].layers[j].W.a.size(); ++i)
            CHECK(loaded.axis[0].layers[j].W.a[i] ==
                  static_cast<double>(static_cast<float>(m.axis[0].layers[j].W.a[i])));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("bad magic and truncation produce structured errors") {
    const std::string p = tmp_path("bad.s2mw");
    {
        std::ofstream out(p, std::ios::binary);
        out << "NOPE, not a weight file";
    }
    CHECK_THROWS_AS(Container::read(p), IoError);

    // valid header, truncated payload: the tensor read must name the tensor
    Container c;
    c.add_meta("kind", "raw");
    Mat m(4, 4, 1.5);
    c.add_tensor("big.tensor", m);
    c.write(p);
    auto bytes = slurp(p);
    bytes.resize(bytes.size() - 8);
    {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_WITH_AS(Container::read(p),
                         doctest::Contains("tensor 'big.tensor' out of payload bounds"), IoError);
    std::remove(p.c_str());
}

TEST_CASE("architecture mismatch on load is rejected with the field name") {
    S2MConfig cfg;
    cfg.depth = 3;
    cfg.hidden = 16;
    const KinematicTree tree = KinematicTree::standard();
    const DecompositionSpec spec = build_decomposition(builtin_template(), 0.3);
    const S2MModel m = make_s2m_model(cfg, tree, spec, 5);
    const std::string p = tmp_path("depth3.s2mw");
    save_s2m(m, p);

    S2MConfig want = cfg;
    want.depth = 4;
    CHECK_THROWS_WITH_AS(load_s2m(p, &want), doctest::Contains("depth"), IoError);
    std::remove(p.c_str());
}

TEST_CASE("mgfp weights round trip") {
    S2MConfig cfg;
    cfg.depth = 2;
    cfg.hidden = 8;
    const KinematicTree tree = KinematicTree::standard();
    const DecompositionSpec spec = build_decomposition(builtin_template(), 0.3);
    const S2MModel locked = make_s2m_model(cfg, tree, spec, 5);
    MGFPModel m = make_mgfp(locked, 2, 4);
    Rng rng(9);
    for (int i = 0; i < 3; ++i)
        for (auto& l : m.mfi.zero[i])
            for (auto& v : l.W.a) v = rng.uniform(-0.1, 0.1);

    const std::string p1 = tmp_path("m1.s2mw"), p2 = tmp_path("m2.s2mw");
    save_mgfp(m, p1);
    const MGFPModel loaded = load_mgfp(p1);
    CHECK(loaded.n_views == 2);
    CHECK(loaded.channels == 4);
    save_mgfp(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("obj export writes the documented format") {
    Mat mesh(3, 3, 0.0);
    mesh(1, 0) = 1.0;
    mesh(2, 1) = 1.0;
    const std::string p = tmp_path("tri.obj");
    export_obj(mesh, {{0, 1, 2}}, p);

    std::ifstream in(p);
    std::string l1, l2, l3, l4;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    std::getline(in, l4);
    CHECK(l1 == "v 0.000000 0.000000 0.000000");
    CHECK(l2 == "v 1.000000 0.000000 0.000000");
    CHECK(l3 == "v 0.000000 1.000000 0.000000");
    CHECK(l4 == "f 1 2 3");
    std::remove(p.c_str());

    // reparse vertices within 1e-6
    Mat fine(2, 3);
    fine(0, 0) = 1.2345678;
    fine(1, 2) = -9.87654321;
    const std::string p2 = tmp_path("fine.obj");
    export_obj(fine, {}, p2);
    std::ifstream in2(p2);
    std::string tag;
    double x, y, z;
    in2 >> tag >> x >> y >> z;
    CHECK(x == doctest::Approx(1.2345678).epsilon(1e-6));
    in2 >> tag >> x >> y >> z;
    CHECK(z == doctest::Approx(-9.87654321).epsilon(1e-6));
    std::remove(p2.c_str());

    CHECK_THROWS_AS(export_obj(mesh, {{0, 1, 3}}, tmp_path("oops.obj")), DimensionError);
}

TEST_CASE("template container round trip") {
    const HandTemplate t = builtin_template();
    const std::string p = tmp_path("tmpl.s2mw");
    save_template(t, p);
    const HandTemplate u = load_template(p);
    CHECK(u.vertex_count() == t.vertex_count());
    CHECK(u.faces.size() == t.faces.size());
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c)
            CHECK(u.rest_skeleton[j][c] ==
                  static_cast<double>(static_cast<float>(t.rest_skeleton[j][c])));
    std::remove(p.c_str());
}

TEST_CASE("dataset manifest round trip") {
    const std::string dir = tmp_path("ds_test");
    fs::create_directories(dir);
    DatasetManifest m;
    m.mode = DatasetMode::Stage2;
    m.config_hash = "cafebabe";
    m.seeds = {7, 8, 9};
    write_dataset_manifest(dir, m);
    const DatasetManifest r = read_dataset_manifest(dir);
    CHECK(r.mode == DatasetMode::Stage2);
    CHECK(r.config_hash == "cafebabe");
    CHECK(r.seeds == m.seeds);
    fs::remove_all(dir);
}

TEST_CASE("config parsing, overrides, and unknown keys") {
    const std::string p = tmp_path("cfg.txt");
    {
        std::ofstream out(p);
        out << "# comment\n";
        out << "seed = 99\n";
        out << "model.depth = 4\n";
        out << "train.lambda_vertex2d = 0.25\n";
    }
    RunConfig cfg = parse_config_file(p);
    CHECK(cfg.seed == 99);
    CHECK(cfg.model.depth == 4);
    CHECK(cfg.weights.vertex2d == doctest::Approx(0.25));

    {
        std::ofstream out(p);
        out << "definitely.not.a.key = 1\n";
    }
    CHECK_THROWS_AS(parse_config_file(p), ConfigError);
    std::remove(p.c_str());

    RunConfig c2;
    CHECK_THROWS_AS(apply_config_kv(c2, "model.per_bone_shared", "off"), ConfigError);
    CHECK_THROWS_AS(apply_config_kv(c2, "model.depth", "three"), ConfigError);

    // hash changes with values
    RunConfig a, b;
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a) == config_hash(RunConfig{}));
}

TEST_CASE("fusion and pair sample containers round trip") {
    const HandTemplate t = builtin_template();
    const KinematicTree tree = KinematicTree::standard();
    SynthConfig cfg;
    cfg.channels = 4;
    cfg.n_views = 2;
    const SyntheticSample s = synthesize_sample(t, tree, cfg, 41);

    const std::string pp = tmp_path("pair.s2mw");
    PairSample pair;
    pair.skeleton = s.skeleton;
    pair.mesh = s.mesh;
    save_pair_sample(pair, 41, pp);
    const PairSample lp = load_pair_sample(pp);
    CHECK(lp.mesh.rows == s.mesh.rows);
    std::remove(pp.c_str());

    const FusionSample f = prepare_fusion_sample(s, cfg);
    const std::string fp = tmp_path("fus.s2mw");
    save_fusion_sample(f, 41, fp);
    const FusionSample lf = load_fusion_sample(fp);
    CHECK(lf.gk.rows == 21);
    CHECK(lf.gk.cols == f.gk.cols);
    CHECK(lf.rig.size() == 2);
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c)
            CHECK(lf.xbar[j][c] == static_cast<double>(static_cast<float>(f.xbar[j][c])));
    std::remove(fp.c_str());

    const std::string sp = tmp_path("full.s2mw");
    save_full_sample(s, sp);
    const SyntheticSample ls = load_full_sample(sp);
    CHECK(ls.seed == 41);
    CHECK(ls.heatmaps.size() == 2);
    CHECK(ls.features[0].channels == 4);
    std::remove(sp.c_str());
}
