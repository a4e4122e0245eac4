#pragma once

#include <string>
#include <utility>
#include <vector>

#include "s2m/train.hpp"

namespace s2m {

/// Binary container: magic "S2MW", u32 version, u32 manifest length, UTF-8
/// manifest text, then a payload of little-endian 32-bit floats. The
/// manifest lists metadata lines ("meta <key> <value>") and tensor entries
/// ("tensor <name> <rows> <cols> <float offset>") in a deterministic order;
/// save(load(x)) is byte-identical and load(save(m)) equals m after f32
/// quantization of the stored values.
struct Container {
    static constexpr uint32_t kVersion = 1;

    std::vector<std::pair<std::string, std::string>> meta;
    struct TensorEntry {
        std::string name;
        int rows = 0, cols = 0;
        size_t offset = 0;  // floats from payload start
    };
    std::vector<TensorEntry> tensors;
    std::vector<float> payload;

    void add_meta(const std::string& key, const std::string& value);
    bool has_meta(const std::string& key) const;
    std::string get_meta(const std::string& key) const;  // IoError naming the key
    long long get_meta_int(const std::string& key) const;
    double get_meta_double(const std::string& key) const;

    void add_tensor(const std::string& name, const Mat& m);
    void add_tensor(const std::string& name, const double* data, int rows, int cols);
    bool has_tensor(const std::string& name) const;
    Mat get_mat(const std::string& name) const;        // IoError naming the tensor
    Vec get_vec(const std::string& name) const;        // any shape, flattened

    void write(const std::string& path) const;
    static Container read(const std::string& path);
};

/// Atomic text write (temp file + rename), used for dataset manifests.
void write_text_atomic(const std::string& path, const std::string& content);

// ---- model persistence ----

void save_s2m(const S2MModel& model, const std::string& path);
/// Rebuilds the model from the manifest; if `expect` is given, architecture
/// fields must match (IoError naming the mismatched field otherwise).
S2MModel load_s2m(const std::string& path, const S2MConfig* expect = nullptr);

void save_mgfp(const MGFPModel& model, const std::string& path);
MGFPModel load_mgfp(const std::string& path);

void save_template(const HandTemplate& tmpl, const std::string& path);
HandTemplate load_template(const std::string& path);

// ---- meshes & reports ----

/// ASCII OBJ: "v x y z" lines (6 decimals, millimeters) then 1-indexed
/// "f a b c" lines. Throws on out-of-range face indices.
void export_obj(const Mat& mesh, const std::vector<std::array<int, 3>>& faces,
                const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// ---- datasets ----

enum class DatasetMode { Pairs, Stage2, Full };
const char* dataset_mode_name(DatasetMode m);

void save_pair_sample(const PairSample& s, uint64_t seed, const std::string& path);
PairSample load_pair_sample(const std::string& path);

void save_fusion_sample(const FusionSample& s, uint64_t seed, const std::string& path);
FusionSample load_fusion_sample(const std::string& path);

void save_full_sample(const SyntheticSample& s, const std::string& path);
SyntheticSample load_full_sample(const std::string& path);

struct DatasetManifest {
    DatasetMode mode = DatasetMode::Pairs;
    std::string config_hash;
    std::vector<uint64_t> seeds;
};
void write_dataset_manifest(const std::string& dir, const DatasetManifest& m);
DatasetManifest read_dataset_manifest(const std::string& dir);
std::string sample_file_name(size_t index);

}  // namespace s2m
