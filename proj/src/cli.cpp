#include "s2m/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "s2m/bench.hpp"
#include "s2m/config.hpp"
#include "s2m/io.hpp"
#include "s2m/metrics.hpp"
#include "s2m/parallel.hpp"

namespace s2m {

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    int64_t seed = -1;
};

RunConfig resolve_config(const CommonOpts& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : parse_config_file(c.config_path);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_config_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.seed >= 0) cfg.seed = static_cast<uint64_t>(c.seed);
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path, "Config file (key = value lines)");
    cmd->add_option("--set", c.sets, "Override a config key (key=value, repeatable)");
    cmd->add_option("--seed", c.seed, "Override the config seed");
}

uint64_t sample_seed(const RunConfig& cfg, size_t index) {
    return Rng::derive(cfg.seed, 0x64617461u + index);  // "data" stream
}

std::vector<PairSample> make_pairs(const RunConfig& cfg, const HandTemplate& tmpl,
                                   const KinematicTree& tree, int count) {
    std::vector<PairSample> out(count);
    parallel_for(count, [&](int i) {
        synthesize_pose_pair(tmpl, tree, cfg.synth, sample_seed(cfg, i), out[i].skeleton,
                             out[i].mesh);
    });
    return out;
}

std::vector<FusionSample> make_fusion_set(const RunConfig& cfg, const HandTemplate& tmpl,
                                          const KinematicTree& tree, int count) {
    std::vector<FusionSample> out(count);
    parallel_for(count, [&](int i) {
        const SyntheticSample s = synthesize_sample(tmpl, tree, cfg.synth, sample_seed(cfg, i));
        out[i] = prepare_fusion_sample(s, cfg.synth);
    });
    return out;
}

std::string fmt(double v, int prec = 4) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

S2MModel build_model(const RunConfig& cfg, const HandTemplate& tmpl) {
    const KinematicTree tree = KinematicTree::standard();
    const DecompositionSpec spec = build_decomposition(tmpl, cfg.dup_threshold);
    return make_s2m_model(cfg.model, tree, spec, Rng::derive(cfg.seed, 0x696e69u));  // "ini"
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir, int count,
                 const std::string& mode_name) {
    DatasetMode mode;
    if (mode_name == "pairs") mode = DatasetMode::Pairs;
    else if (mode_name == "stage2") mode = DatasetMode::Stage2;
    else if (mode_name == "full") mode = DatasetMode::Full;
    else throw ConfigError("gen-data: unknown mode '" + mode_name + "'");

    const HandTemplate tmpl = resolve_template(cfg);
    const KinematicTree tree = KinematicTree::standard();
    fs::create_directories(out_dir);

    DatasetManifest manifest;
    manifest.mode = mode;
    manifest.config_hash = config_hash(cfg);
    manifest.seeds.resize(count);
    for (int i = 0; i < count; ++i) manifest.seeds[i] = sample_seed(cfg, i);

    parallel_for(count, [&](int i) {
        const std::string path = out_dir + "/" + sample_file_name(i);
        if (mode == DatasetMode::Pairs) {
            PairSample p;
            synthesize_pose_pair(tmpl, tree, cfg.synth, manifest.seeds[i], p.skeleton, p.mesh);
            save_pair_sample(p, manifest.seeds[i], path);
        } else {
            const SyntheticSample s = synthesize_sample(tmpl, tree, cfg.synth, manifest.seeds[i]);
            if (mode == DatasetMode::Full) {
                save_full_sample(s, path);
            } else {
                save_fusion_sample(prepare_fusion_sample(s, cfg.synth), manifest.seeds[i], path);
            }
        }
    });
    write_dataset_manifest(out_dir, manifest);
    std::printf("wrote %d %s samples to %s\n", count, dataset_mode_name(mode), out_dir.c_str());
    return 0;
}

std::vector<PairSample> load_pairs_dir(const std::string& dir) {
    const DatasetManifest m = read_dataset_manifest(dir);
    if (m.mode != DatasetMode::Pairs)
        throw IoError("dataset '" + dir + "' is not a pairs dataset");
    std::vector<PairSample> out(m.seeds.size());
    parallel_for(static_cast<int>(m.seeds.size()), [&](int i) {
        out[i] = load_pair_sample(dir + "/" + sample_file_name(i));
    });
    return out;
}

std::vector<FusionSample> load_fusion_dir(const std::string& dir) {
    const DatasetManifest m = read_dataset_manifest(dir);
    if (m.mode != DatasetMode::Stage2)
        throw IoError("dataset '" + dir + "' is not a stage2 dataset");
    std::vector<FusionSample> out(m.seeds.size());
    parallel_for(static_cast<int>(m.seeds.size()), [&](int i) {
        out[i] = load_fusion_sample(dir + "/" + sample_file_name(i));
    });
    return out;
}

int cmd_train_s2m(const RunConfig& cfg, const std::string& data_dir, int count,
                  const std::string& out_path, const std::string& curve_path) {
    const HandTemplate tmpl = resolve_template(cfg);
    const KinematicTree tree = KinematicTree::standard();
    S2MModel model = build_model(cfg, tmpl);

    std::vector<PairSample> data =
        data_dir.empty() ? make_pairs(cfg, tmpl, tree, count) : load_pairs_dir(data_dir);
    Stage1Config tc = cfg.stage1();
    tc.verbose = true;
    const TrainCurve curve = train_stage1(model, data, tc);
    save_s2m(model, out_path);
    std::printf("trained %d epochs, final val MPVPE %.4f mm, saved %s\n", curve.epochs_run,
                curve.val_mpvpe.empty() ? 0.0 : curve.val_mpvpe.back(), out_path.c_str());

    if (!curve_path.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (int e = 0; e < curve.epochs_run; ++e)
            rows.push_back({std::to_string(e), fmt(curve.train_loss[e], 6),
                            fmt(curve.val_loss[e], 6), fmt(curve.val_mpvpe[e], 6)});
        write_csv(curve_path, {"epoch", "train_loss", "val_loss", "val_mpvpe"}, rows);
    }
    return 0;
}

int cmd_train_full(const RunConfig& cfg, const std::string& s2m_path,
                   const std::string& data_dir, int count, const std::string& out_path) {
    const S2MModel locked = load_s2m(s2m_path);
    MGFPModel model = make_mgfp(locked, cfg.synth.n_views, cfg.synth.channels);

    const HandTemplate tmpl = resolve_template(cfg);
    const KinematicTree tree = KinematicTree::standard();
    std::vector<FusionSample> data =
        data_dir.empty() ? make_fusion_set(cfg, tmpl, tree, count) : load_fusion_dir(data_dir);

    Stage2Config tc = cfg.stage2();
    tc.verbose = true;
    const TrainCurve curve = train_stage2(model, data, tc);
    save_mgfp(model, out_path);
    std::printf("trained %d epochs, val MPVPE %.4f -> %.4f mm, saved %s\n", curve.epochs_run,
                curve.val_mpvpe.front(), curve.val_mpvpe.back(), out_path.c_str());
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& weights, const std::string& data_dir,
             int count, const std::string& out_csv) {
    const Container c = Container::read(weights);
    const std::string kind = c.get_meta("kind");
    const HandTemplate tmpl = resolve_template(cfg);
    const KinematicTree tree = KinematicTree::standard();

    std::vector<MetricReport> rows;
    if (kind == "s2m") {
        const S2MModel model = load_s2m(weights);
        const std::vector<PairSample> data =
            data_dir.empty() ? make_pairs(cfg, tmpl, tree, count) : load_pairs_dir(data_dir);
        rows.resize(data.size());
        parallel_for(static_cast<int>(data.size()), [&](int i) {
            const S2MOut out = s2m_forward(model, data[i].skeleton);
            rows[i] = sample_metrics(data[i].skeleton, out.mesh, data[i].skeleton, data[i].mesh);
        });
    } else if (kind == "mgfp") {
        MGFPModel model = load_mgfp(weights);
        const std::vector<FusionSample> data = data_dir.empty()
                                                   ? make_fusion_set(cfg, tmpl, tree, count)
                                                   : load_fusion_dir(data_dir);
        rows.resize(data.size());
        parallel_for(static_cast<int>(data.size()), [&](int i) {
            const Mat gb = bone_concat(data[i].gk, model.locked.tree);
            const S2MOut out = mfi_forward(model, data[i].xbar, gb, nullptr);
            rows[i] = sample_metrics(data[i].xbar, out.mesh, data[i].gt_skeleton,
                                     data[i].gt_mesh);
        });
    } else {
        throw IoError("eval: unsupported weight kind '" + kind + "'");
    }

    const MetricReport agg = aggregate(rows);
    std::vector<std::vector<std::string>> csv;
    for (size_t i = 0; i < rows.size(); ++i)
        csv.push_back({std::to_string(i), fmt(rows[i].mpjpe), fmt(rows[i].mpvpe),
                       fmt(rows[i].rr_j), fmt(rows[i].rr_v), fmt(rows[i].pa_j),
                       fmt(rows[i].pa_v)});
    csv.push_back({"aggregate", fmt(agg.mpjpe), fmt(agg.mpvpe), fmt(agg.rr_j), fmt(agg.rr_v),
                   fmt(agg.pa_j), fmt(agg.pa_v)});
    write_csv(out_csv, {"sample", "mpjpe", "mpvpe", "rr_j", "rr_v", "pa_j", "pa_v"}, csv);
    std::printf("eval over %zu samples: MPJPE %.4f MPVPE %.4f (RR %.4f/%.4f, PA %.4f/%.4f)\n",
                rows.size(), agg.mpjpe, agg.mpvpe, agg.rr_j, agg.rr_v, agg.pa_j, agg.pa_v);
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& weights, int count,
              const std::string& sigmas_csv, const std::string& out_csv) {
    const S2MModel model = load_s2m(weights);
    const HandTemplate tmpl = resolve_template(cfg);
    const KinematicTree tree = KinematicTree::standard();
    const std::vector<PairSample> data = make_pairs(cfg, tmpl, tree, count);

    std::vector<double> sigmas;
    std::istringstream is(sigmas_csv);
    std::string tok;
    while (std::getline(is, tok, ',')) sigmas.push_back(std::stod(tok));

    const auto rows = robustness_sweep(model, data, sigmas, Rng::derive(cfg.seed, 0x7377u));
    std::vector<std::vector<std::string>> csv;
    for (const auto& r : rows) {
        csv.push_back({fmt(r.sigma_sq, 2), fmt(r.ref_mpjpe), fmt(r.mpvpe)});
        std::printf("sigma^2 %5.1f  ref-MPJPE %7.3f mm  MPVPE %7.3f mm\n", r.sigma_sq,
                    r.ref_mpjpe, r.mpvpe);
    }
    write_csv(out_csv, {"sigma_sq", "ref_mpjpe", "mpvpe"}, csv);
    return 0;
}

int cmd_bench(const RunConfig& cfg, const std::string& weights, int iterations,
              const std::string& out_csv) {
    const HandTemplate tmpl = resolve_template(cfg);
    const KinematicTree tree = KinematicTree::standard();
    S2MModel model = weights.empty() ? build_model(cfg, tmpl) : load_s2m(weights);
    MGFPModel mgfp = make_mgfp(model, cfg.synth.n_views, cfg.synth.channels);
    const SyntheticSample sample =
        synthesize_sample(tmpl, tree, cfg.synth, sample_seed(cfg, 0));

    const BenchResult a = bench_s2m_forward(model, iterations);
    const BenchResult b = bench_reconstruct(mgfp, sample, cfg.synth, iterations);
    std::vector<std::vector<std::string>> csv;
    for (const auto& r : {a, b}) {
        csv.push_back({r.name, std::to_string(r.batch), std::to_string(r.iterations),
                       fmt(r.median_ms, 3), fmt(r.fps, 1), std::to_string(r.macs),
                       std::to_string(r.params)});
        std::printf("%-12s median %8.3f ms  (%7.1f fps)  %lld MACs  %lld params\n",
                    r.name.c_str(), r.median_ms, r.fps, r.macs, r.params);
    }
    write_csv(out_csv, {"name", "batch", "iterations", "median_ms", "fps", "macs", "params"},
              csv);
    return 0;
}

int cmd_infer(const RunConfig& cfg, const std::string& weights, int64_t sample_seed_opt,
              const std::string& sample_path, const std::string& out_obj,
              const std::string& out_json) {
    const HandTemplate tmpl = resolve_template(cfg);
    const KinematicTree tree = KinematicTree::standard();

    SyntheticSample sample;
    if (!sample_path.empty()) {
        sample = load_full_sample(sample_path);
    } else {
        const uint64_t s = sample_seed_opt >= 0 ? static_cast<uint64_t>(sample_seed_opt)
                                                : sample_seed(cfg, 0);
        sample = synthesize_sample(tmpl, tree, cfg.synth, s);
    }

    const Container c = Container::read(weights);
    MGFPModel model = c.get_meta("kind") == "mgfp"
                          ? load_mgfp(weights)
                          : make_mgfp(load_s2m(weights), cfg.synth.n_views, cfg.synth.channels);

    const ReconResult res = reconstruct(model, sample.rig, sample.heatmaps, sample.features,
                                        cfg.synth.softargmax_temp, cfg.synth.heatmap_down, true);
    export_obj(res.mesh, tmpl.faces, out_obj);

    if (!out_json.empty()) {
        nlohmann::json j;
        j["seed"] = sample.seed;
        auto& kp = j["keypoints_mm"];
        for (int k = 0; k < kNumJoints; ++k)
            kp.push_back({res.xbar[k][0], res.xbar[k][1], res.xbar[k][2]});
        auto& views = j["keypoints_2d_px"];
        for (const auto& m : res.kp2d) {
            nlohmann::json v;
            for (int k = 0; k < kNumJoints; ++k) v.push_back({m(k, 0), m(k, 1)});
            views.push_back(v);
        }
        write_text_atomic(out_json, j.dump(2) + "\n");
    }
    std::printf("wrote %s (%d vertices, %zu faces)\n", out_obj.c_str(), res.mesh.rows,
                tmpl.faces.size());
    return 0;
}

int cmd_ablate(const std::string& depths_csv, bool pe, bool gsd, const std::string& out_csv) {
    std::vector<int> depths;
    std::istringstream is(depths_csv);
    std::string tok;
    while (std::getline(is, tok, ',')) depths.push_back(std::stoi(tok));

    std::vector<std::vector<std::string>> csv;
    std::printf("%-6s %-4s %-4s %12s %14s %10s %10s\n", "depth", "pe", "gsd", "params",
                "macs", "params_M", "macs_M");
    for (int d : depths) {
        CountConfig c;
        c.depth = d;
        c.pe = pe;
        c.gsd = gsd;
        const long long p = count_params_for(c);
        const long long m = count_macs_for(c);
        std::printf("%-6d %-4d %-4d %12lld %14lld %10.2f %10.2f\n", d, pe ? 1 : 0, gsd ? 1 : 0,
                    p, m, p / 1e6, m / 1e6);
        csv.push_back({std::to_string(d), std::to_string(pe ? 1 : 0), std::to_string(gsd ? 1 : 0),
                       std::to_string(p), std::to_string(m), fmt(p / 1e6, 2), fmt(m / 1e6, 2)});
    }
    if (!out_csv.empty())
        write_csv(out_csv, {"depth", "pe", "gsd", "params", "macs", "params_M", "macs_M"}, csv);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Multi-view hand mesh reconstruction toolkit"};
    app.require_subcommand(1);

    // gen-data
    CommonOpts gd_common;
    std::string gd_out, gd_mode = "pairs";
    int gd_count = 100;
    CLI::App* gd = app.add_subcommand("gen-data", "Synthesize a dataset directory");
    add_common(gd, gd_common);
    gd->add_option("--out", gd_out, "Output directory")->required();
    gd->add_option("--count", gd_count, "Number of samples");
    gd->add_option("--mode", gd_mode, "pairs | stage2 | full");

    // train-s2m
    CommonOpts t1_common;
    std::string t1_data, t1_out, t1_curve;
    int t1_count = 2000;
    CLI::App* t1 = app.add_subcommand("train-s2m", "Train the skeleton-to-mesh model (stage 1)");
    add_common(t1, t1_common);
    t1->add_option("--data", t1_data, "Pairs dataset directory (else synthesized)");
    t1->add_option("--count", t1_count, "Samples to synthesize when --data is absent");
    t1->add_option("--out", t1_out, "Output weight file")->required();
    t1->add_option("--curve", t1_curve, "Optional loss-curve CSV");

    // train-full
    CommonOpts t2_common;
    std::string t2_data, t2_out, t2_s2m;
    int t2_count = 1000;
    CLI::App* t2 = app.add_subcommand("train-full", "Train the fusion pipeline (stage 2)");
    add_common(t2, t2_common);
    t2->add_option("--s2m", t2_s2m, "Trained stage-1 weight file")->required();
    t2->add_option("--data", t2_data, "Stage2 dataset directory (else synthesized)");
    t2->add_option("--count", t2_count, "Samples to synthesize when --data is absent");
    t2->add_option("--out", t2_out, "Output weight file")->required();

    // eval
    CommonOpts ev_common;
    std::string ev_weights, ev_data, ev_out = "metrics.csv";
    int ev_count = 200;
    CLI::App* ev = app.add_subcommand("eval", "Evaluate a model, write metrics.csv");
    add_common(ev, ev_common);
    ev->add_option("--weights", ev_weights, "Weight file (s2m or mgfp)")->required();
    ev->add_option("--data", ev_data, "Dataset directory (else synthesized)");
    ev->add_option("--count", ev_count, "Samples to synthesize when --data is absent");
    ev->add_option("--out", ev_out, "Output CSV");

    // sweep
    CommonOpts sw_common;
    std::string sw_weights, sw_sigmas = "0,5,10,15,20", sw_out = "sweep.csv";
    int sw_count = 500;
    CLI::App* sw = app.add_subcommand("sweep", "Noise robustness sweep");
    add_common(sw, sw_common);
    sw->add_option("--weights", sw_weights, "Trained stage-1 weight file")->required();
    sw->add_option("--count", sw_count, "Evaluation samples");
    sw->add_option("--sigmas", sw_sigmas, "Comma-separated variances (mm^2)");
    sw->add_option("--out", sw_out, "Output CSV");

    // bench
    CommonOpts be_common;
    std::string be_weights, be_out = "bench.csv";
    int be_iters = 50;
    CLI::App* be = app.add_subcommand("bench", "Latency / MAC / parameter report");
    add_common(be, be_common);
    be->add_option("--weights", be_weights, "Optional stage-1 weight file");
    be->add_option("--iterations", be_iters, "Timing iterations");
    be->add_option("--out", be_out, "Output CSV");

    // infer
    CommonOpts in_common;
    std::string in_weights, in_sample, in_obj = "mesh.obj", in_json;
    int64_t in_seed = -1;
    CLI::App* inf = app.add_subcommand("infer", "Reconstruct one multi-view sample");
    add_common(inf, in_common);
    inf->add_option("--weights", in_weights, "Weight file (s2m or mgfp)")->required();
    inf->add_option("--sample", in_sample, "Full-sample container (else synthesized)");
    inf->add_option("--sample-seed", in_seed, "Seed for the synthesized sample");
    inf->add_option("--out-obj", in_obj, "Output OBJ path");
    inf->add_option("--out-json", in_json, "Optional keypoint JSON path");

    // ablate
    std::string ab_depths = "2,3,4,5", ab_out;
    bool ab_pe = true, ab_gsd = true;
    CLI::App* ab = app.add_subcommand("ablate", "Parameter/MAC table over depths");
    ab->add_option("--depths", ab_depths, "Comma-separated depths");
    ab->add_option("--pe", ab_pe, "Positional encoding on/off (counts only)");
    ab->add_option("--gsd", ab_gsd, "Global spatial descriptor on/off (counts only)");
    ab->add_option("--out", ab_out, "Optional CSV path");

    std::vector<const char*> argv;
    argv.push_back("s2m");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            std::puts(app.help().c_str());
            return 0;
        }
        std::fprintf(stderr, "%s\n%s\n", e.what(), app.help().c_str());
        return 1;
    }

    try {
        if (gd->parsed()) return cmd_gen_data(resolve_config(gd_common), gd_out, gd_count, gd_mode);
        if (t1->parsed())
            return cmd_train_s2m(resolve_config(t1_common), t1_data, t1_count, t1_out, t1_curve);
        if (t2->parsed())
            return cmd_train_full(resolve_config(t2_common), t2_s2m, t2_data, t2_count, t2_out);
        if (ev->parsed())
            return cmd_eval(resolve_config(ev_common), ev_weights, ev_data, ev_count, ev_out);
        if (sw->parsed())
            return cmd_sweep(resolve_config(sw_common), sw_weights, sw_count, sw_sigmas, sw_out);
        if (be->parsed()) return cmd_bench(resolve_config(be_common), be_weights, be_iters, be_out);
        if (inf->parsed())
            return cmd_infer(resolve_config(in_common), in_weights, in_seed, in_sample, in_obj,
                             in_json);
        if (ab->parsed()) return cmd_ablate(ab_depths, ab_pe, ab_gsd, ab_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}

}  // namespace s2m
