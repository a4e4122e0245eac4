#include "s2m/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "s2m/io.hpp"

namespace s2m {

Stage1Config RunConfig::stage1() const {
    Stage1Config c;
    c.epochs = epochs_s2m;
    c.lr0 = lr_s2m;
    c.batch = train_batch;
    c.val_fraction = val_fraction;
    c.seed = Rng::derive(seed, 0x747231u);  // "tr1"
    c.target_mpvpe = target_mpvpe;
    return c;
}

Stage2Config RunConfig::stage2() const {
    Stage2Config c;
    c.epochs = epochs_full;
    c.lr0 = lr_full;
    c.batch = train_batch;
    c.val_fraction = std::max(val_fraction, 0.05);
    c.seed = Rng::derive(seed, 0x747232u);  // "tr2"
    c.weights = weights;
    c.target_rel_improve = target_rel_improve;
    return c;
}

static bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError("config: boolean expected for '" + key + "', got '" + v + "'");
}

void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto to_int = [&](const std::string& v) {
        try {
            return std::stoll(v);
        } catch (...) {
            throw ConfigError("config: integer expected for '" + key + "', got '" + v + "'");
        }
    };
    auto to_dbl = [&](const std::string& v) {
        try {
            return std::stod(v);
        } catch (...) {
            throw ConfigError("config: number expected for '" + key + "', got '" + v + "'");
        }
    };

    if (key == "seed") cfg.seed = static_cast<uint64_t>(to_int(value));
    else if (key == "template") cfg.template_path = value;
    else if (key == "template.dup_threshold") cfg.dup_threshold = to_dbl(value);
    else if (key == "rig.n_views") cfg.synth.n_views = static_cast<int>(to_int(value));
    else if (key == "rig.radius_mm") cfg.synth.radius_mm = to_dbl(value);
    else if (key == "rig.focal_px") cfg.synth.focal_px = to_dbl(value);
    else if (key == "rig.image_size") cfg.synth.image_size = static_cast<int>(to_int(value));
    else if (key == "synth.heatmap_sigma") cfg.synth.heatmap_sigma = to_dbl(value);
    else if (key == "synth.jitter_px") cfg.synth.jitter_px = to_dbl(value);
    else if (key == "synth.value_noise") cfg.synth.value_noise = to_dbl(value);
    else if (key == "synth.channels") cfg.synth.channels = static_cast<int>(to_int(value));
    else if (key == "synth.feature_sigma") cfg.synth.feature_sigma = to_dbl(value);
    else if (key == "synth.feature_scale_min") cfg.synth.feature_scale_min = to_dbl(value);
    else if (key == "synth.feature_scale_max") cfg.synth.feature_scale_max = to_dbl(value);
    else if (key == "synth.softargmax_temp") cfg.synth.softargmax_temp = to_dbl(value);
    else if (key == "synth.root_trans_mm") cfg.synth.root_trans_mm = to_dbl(value);
    else if (key == "pose.flexion_min_deg") cfg.synth.limits.flexion_min = to_dbl(value) * M_PI / 180.0;
    else if (key == "pose.flexion_max_deg") cfg.synth.limits.flexion_max = to_dbl(value) * M_PI / 180.0;
    else if (key == "pose.abduction_deg") cfg.synth.limits.abduction = to_dbl(value) * M_PI / 180.0;
    else if (key == "pose.free_root") cfg.synth.limits.free_root = parse_bool(value, key);
    else if (key == "model.depth") cfg.model.depth = static_cast<int>(to_int(value));
    else if (key == "model.hidden") cfg.model.hidden = static_cast<int>(to_int(value));
    else if (key == "model.pe_bone_bands") cfg.model.pe.bone_bands = static_cast<int>(to_int(value));
    else if (key == "model.pe_order_bands") cfg.model.pe.order_bands = static_cast<int>(to_int(value));
    else if (key == "model.pre_scale") cfg.model.pe.pre_scale = to_dbl(value);
    else if (key == "model.gsd") cfg.model.gsd = parse_bool(value, key);
    else if (key == "model.per_bone_shared") {
        cfg.per_bone_shared = parse_bool(value, key);
        if (!cfg.per_bone_shared)
            throw ConfigError("config: per-bone unshared networks are not supported");
    }
    else if (key == "train.batch") cfg.train_batch = static_cast<int>(to_int(value));
    else if (key == "train.epochs_s2m") cfg.epochs_s2m = static_cast<int>(to_int(value));
    else if (key == "train.epochs_full") cfg.epochs_full = static_cast<int>(to_int(value));
    else if (key == "train.lr_s2m") cfg.lr_s2m = to_dbl(value);
    else if (key == "train.lr_full") cfg.lr_full = to_dbl(value);
    else if (key == "train.val_fraction") cfg.val_fraction = to_dbl(value);
    else if (key == "train.lambda_heatmap") cfg.weights.heatmap = to_dbl(value);
    else if (key == "train.lambda_skeleton2d") cfg.weights.skeleton2d = to_dbl(value);
    else if (key == "train.lambda_vertex2d") cfg.weights.vertex2d = to_dbl(value);
    else if (key == "train.lambda_skeleton3d") cfg.weights.skeleton3d = to_dbl(value);
    else if (key == "train.lambda_vertex3d") cfg.weights.vertex3d = to_dbl(value);
    else if (key == "train.target_mpvpe") cfg.target_mpvpe = to_dbl(value);
    else if (key == "train.target_rel_improve") cfg.target_rel_improve = to_dbl(value);
    else throw ConfigError("config: unknown key '" + key + "'");
}

static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        apply_config_kv(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "seed = " << c.seed << "\n";
    os << "template = " << c.template_path << "\n";
    os << "template.dup_threshold = " << c.dup_threshold << "\n";
    os << "rig.n_views = " << c.synth.n_views << "\n";
    os << "rig.radius_mm = " << c.synth.radius_mm << "\n";
    os << "rig.focal_px = " << c.synth.focal_px << "\n";
    os << "rig.image_size = " << c.synth.image_size << "\n";
    os << "synth.heatmap_sigma = " << c.synth.heatmap_sigma << "\n";
    os << "synth.jitter_px = " << c.synth.jitter_px << "\n";
    os << "synth.value_noise = " << c.synth.value_noise << "\n";
    os << "synth.channels = " << c.synth.channels << "\n";
    os << "synth.feature_sigma = " << c.synth.feature_sigma << "\n";
    os << "synth.feature_scale_min = " << c.synth.feature_scale_min << "\n";
    os << "synth.feature_scale_max = " << c.synth.feature_scale_max << "\n";
    os << "synth.softargmax_temp = " << c.synth.softargmax_temp << "\n";
    os << "synth.root_trans_mm = " << c.synth.root_trans_mm << "\n";
    os << "pose.flexion_min_deg = " << c.synth.limits.flexion_min * 180.0 / M_PI << "\n";
    os << "pose.flexion_max_deg = " << c.synth.limits.flexion_max * 180.0 / M_PI << "\n";
    os << "pose.abduction_deg = " << c.synth.limits.abduction * 180.0 / M_PI << "\n";
    os << "pose.free_root = " << (c.synth.limits.free_root ? 1 : 0) << "\n";
    os << "model.depth = " << c.model.depth << "\n";
    os << "model.hidden = " << c.model.hidden << "\n";
    os << "model.pe_bone_bands = " << c.model.pe.bone_bands << "\n";
    os << "model.pe_order_bands = " << c.model.pe.order_bands << "\n";
    os << "model.pre_scale = " << c.model.pe.pre_scale << "\n";
    os << "model.gsd = " << (c.model.gsd ? 1 : 0) << "\n";
    os << "model.per_bone_shared = " << (c.per_bone_shared ? 1 : 0) << "\n";
    os << "train.batch = " << c.train_batch << "\n";
    os << "train.epochs_s2m = " << c.epochs_s2m << "\n";
    os << "train.epochs_full = " << c.epochs_full << "\n";
    os << "train.lr_s2m = " << c.lr_s2m << "\n";
    os << "train.lr_full = " << c.lr_full << "\n";
    os << "train.val_fraction = " << c.val_fraction << "\n";
    os << "train.lambda_heatmap = " << c.weights.heatmap << "\n";
    os << "train.lambda_skeleton2d = " << c.weights.skeleton2d << "\n";
    os << "train.lambda_vertex2d = " << c.weights.vertex2d << "\n";
    os << "train.lambda_skeleton3d = " << c.weights.skeleton3d << "\n";
    os << "train.lambda_vertex3d = " << c.weights.vertex3d << "\n";
    os << "train.target_mpvpe = " << c.target_mpvpe << "\n";
    os << "train.target_rel_improve = " << c.target_rel_improve << "\n";
    return os.str();
}

std::string config_hash(const RunConfig& cfg) {
    // FNV-1a over the canonical serialization
    const std::string s = serialize_config(cfg);
    uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

HandTemplate resolve_template(const RunConfig& cfg) {
    if (cfg.template_path == "builtin") return builtin_template();
    return load_template(cfg.template_path);
}

}  // namespace s2m
