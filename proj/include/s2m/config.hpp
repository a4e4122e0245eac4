#pragma once

#include <string>

#include "s2m/model.hpp"
#include "s2m/synth.hpp"
#include "s2m/train.hpp"

namespace s2m {

/// Flat run configuration. Every field has a default; files are plain
/// "key = value" text (see README for the full key list), CLI flags
/// override file values, unknown keys are rejected.
struct RunConfig {
    uint64_t seed = 1;
    std::string template_path = "builtin";
    double dup_threshold = 0.3;

    SynthConfig synth;   // rig + corruption + feature settings
    S2MConfig model;
    bool per_bone_shared = true;  // the unshared variant is not supported

    int train_batch = 32;
    int epochs_s2m = 300;
    int epochs_full = 100;
    double lr_s2m = 1e-4;
    double lr_full = 1e-4;
    double val_fraction = 0.05;
    LossWeights weights;
    double target_mpvpe = -1.0;
    double target_rel_improve = -1.0;

    Stage1Config stage1() const;
    Stage2Config stage2() const;
};

/// Applies one key=value setting; throws ConfigError for unknown keys or
/// unparsable values.
void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig parse_config_file(const std::string& path);

/// Canonical text form (also the hash input).
std::string serialize_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

/// Resolves the template (builtin or container file) and its decomposition.
HandTemplate resolve_template(const RunConfig& cfg);

}  // namespace s2m
