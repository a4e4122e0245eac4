#include "s2m/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace s2m {

void Container::add_meta(const std::string& key, const std::string& value) {
    meta.emplace_back(key, value);
}

bool Container::has_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return true;
    return false;
}

std::string Container::get_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return v;
    throw IoError("container: missing metadata field '" + key + "'");
}

long long Container::get_meta_int(const std::string& key) const {
    return std::stoll(get_meta(key));
}

double Container::get_meta_double(const std::string& key) const {
    return std::stod(get_meta(key));
}

void Container::add_tensor(const std::string& name, const double* data, int rows, int cols) {
    TensorEntry e;
    e.name = name;
    e.rows = rows;
    e.cols = cols;
    e.offset = payload.size();
    tensors.push_back(e);
    const size_t n = static_cast<size_t>(rows) * cols;
    payload.reserve(payload.size() + n);
    for (size_t i = 0; i < n; ++i) payload.push_back(static_cast<float>(data[i]));
}

void Container::add_tensor(const std::string& name, const Mat& m) {
    add_tensor(name, m.a.data(), m.rows, m.cols);
}

bool Container::has_tensor(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return true;
    return false;
}

static const Container::TensorEntry& find_tensor(const Container& c, const std::string& name) {
    for (const auto& t : c.tensors)
        if (t.name == name) return t;
    throw IoError("container: missing tensor '" + name + "'");
}

Mat Container::get_mat(const std::string& name) const {
    const TensorEntry& t = find_tensor(*this, name);
    Mat m(t.rows, t.cols);
    const size_t n = static_cast<size_t>(t.rows) * t.cols;
    if (t.offset + n > payload.size())
        throw IoError("container: tensor '" + name + "' extends past payload end");
    for (size_t i = 0; i < n; ++i) m.a[i] = static_cast<double>(payload[t.offset + i]);
    return m;
}

Vec Container::get_vec(const std::string& name) const {
    const Mat m = get_mat(name);
    return m.a;
}

void Container::write(const std::string& path) const {
    std::ostringstream manifest;
    for (const auto& [k, v] : meta) manifest << "meta " << k << " " << v << "\n";
    for (const auto& t : tensors)
        manifest << "tensor " << t.name << " " << t.rows << " " << t.cols << " " << t.offset
                 << "\n";
    const std::string mtext = manifest.str();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write("S2MW", 4);
    const uint32_t version = kVersion;
    const uint32_t mlen = static_cast<uint32_t>(mtext.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&mlen), 4);
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) throw IoError("write failed for '" + path + "'");
}

Container Container::read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "S2MW", 4) != 0)
        throw IoError("'" + path + "': bad magic (expected S2MW)");
    uint32_t version = 0, mlen = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&mlen), 4);
    if (!in) throw IoError("'" + path + "': truncated header");
    if (version != kVersion)
        throw IoError("'" + path + "': unsupported version " + std::to_string(version));

    std::string mtext(mlen, '\0');
    in.read(mtext.data(), mlen);
    if (!in) throw IoError("'" + path + "': truncated manifest");

    Container c;
    std::istringstream ms(mtext);
    std::string line;
    while (std::getline(ms, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "meta") {
            std::string key, value;
            ls >> key;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            c.meta.emplace_back(key, value);
        } else if (kind == "tensor") {
            TensorEntry t;
            ls >> t.name >> t.rows >> t.cols >> t.offset;
            if (!ls) throw IoError("'" + path + "': malformed tensor line: " + line);
            c.tensors.push_back(t);
        } else {
            throw IoError("'" + path + "': unknown manifest entry: " + line);
        }
    }

    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() % sizeof(float) != 0)
        throw IoError("'" + path + "': payload size not a multiple of 4");
    c.payload.resize(raw.size() / sizeof(float));
    if (!raw.empty()) std::memcpy(c.payload.data(), raw.data(), raw.size());

    for (const auto& t : c.tensors) {
        const size_t n = static_cast<size_t>(t.rows) * t.cols;
        if (t.offset + n > c.payload.size())
            throw IoError("'" + path + "': tensor '" + t.name + "' out of payload bounds");
    }
    return c;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

// ---- model persistence ----

static std::string bone_order_string(const KinematicTree& tree) {
    std::ostringstream os;
    for (int k = 0; k < kNumBones; ++k) {
        if (k) os << ",";
        os << tree.bones[k].first << "-" << tree.bones[k].second;
    }
    return os.str();
}

static KinematicTree tree_from_string(const std::string& s) {
    KinematicTree t;
    t.parent.fill(-1);
    std::istringstream is(s);
    std::string tok;
    int k = 0;
    while (std::getline(is, tok, ',')) {
        if (k >= kNumBones) throw IoError("bone_order: too many bones");
        const size_t dash = tok.find('-');
        if (dash == std::string::npos) throw IoError("bone_order: malformed pair '" + tok + "'");
        const int p = std::stoi(tok.substr(0, dash));
        const int c = std::stoi(tok.substr(dash + 1));
        t.bones[k] = {p, c};
        t.parent[c] = p;
        ++k;
    }
    if (k != kNumBones) throw IoError("bone_order: expected 20 bones");
    return t;
}

static void add_spec(Container& c, const DecompositionSpec& spec) {
    c.add_meta("v_count", std::to_string(spec.v_count));
    Mat rows(spec.p_count, 1);
    for (int r = 0; r < spec.p_count; ++r) rows(r, 0) = spec.patch_to_vertex[r];
    c.add_tensor("spec.patch_to_vertex", rows);
    Mat counts(kNumBones, 1);
    for (int k = 0; k < kNumBones; ++k) counts(k, 0) = spec.per_bone_counts[k];
    c.add_tensor("spec.per_bone_counts", counts);
}

static DecompositionSpec spec_from_container(const Container& c) {
    DecompositionSpec spec;
    spec.v_count = static_cast<int>(c.get_meta_int("v_count"));
    const Mat rows = c.get_mat("spec.patch_to_vertex");
    const Mat counts = c.get_mat("spec.per_bone_counts");
    spec.p_count = rows.rows;
    spec.patch_to_vertex.resize(spec.p_count);
    spec.vertex_rows.assign(spec.v_count, {});
    for (int r = 0; r < spec.p_count; ++r) {
        const int v = static_cast<int>(rows(r, 0));
        if (v < 0 || v >= spec.v_count)
            throw IoError("spec.patch_to_vertex: index out of range at row " + std::to_string(r));
        spec.patch_to_vertex[r] = v;
        spec.vertex_rows[v].push_back(r);
    }
    int off = 0;
    for (int k = 0; k < kNumBones; ++k) {
        spec.per_bone_counts[k] = static_cast<int>(counts(k, 0));
        spec.bone_row_offset[k] = off;
        off += spec.per_bone_counts[k];
    }
    spec.bone_row_offset[kNumBones] = off;
    if (off != spec.p_count) throw IoError("spec.per_bone_counts: counts do not sum to patch rows");
    for (int v = 0; v < spec.v_count; ++v)
        if (spec.vertex_rows[v].empty())
            throw IoError("spec.patch_to_vertex: vertex " + std::to_string(v) + " uncovered");
    return spec;
}

// Tensor names: gsd stacks use the short form (gsd.w0, gsd.b0, ...), axis
// and fusion stacks the layered form (axis_x.layer0.w, mfi.copy_x.layer0.b).
static std::string weight_name(const std::string& prefix, size_t j, const char* kind,
                               bool short_form) {
    if (short_form) return prefix + "." + kind + std::to_string(j);
    return prefix + ".layer" + std::to_string(j) + "." + kind;
}

static void add_stack(Container& c, const MLPStack& s, const std::string& prefix,
                      bool short_form = false) {
    for (size_t j = 0; j < s.layers.size(); ++j) {
        const Layer& l = s.layers[j];
        c.add_tensor(weight_name(prefix, j, "w", short_form), l.W);
        c.add_tensor(weight_name(prefix, j, "b", short_form), l.b.data(), 1,
                     static_cast<int>(l.b.size()));
        if (l.act == Act::PReLU)
            c.add_tensor(weight_name(prefix, j, "slopes", short_form), l.slopes.data(), 1,
                         static_cast<int>(l.slopes.size()));
    }
}

static void load_stack(const Container& c, MLPStack& s, const std::string& prefix,
                       bool short_form = false) {
    for (size_t j = 0; j < s.layers.size(); ++j) {
        Layer& l = s.layers[j];
        const std::string wn = weight_name(prefix, j, "w", short_form);
        const Mat w = c.get_mat(wn);
        if (w.rows != l.out() || w.cols != l.in())
            throw IoError("tensor '" + wn + "' has shape " + std::to_string(w.rows) + "x" +
                          std::to_string(w.cols) + ", expected " + std::to_string(l.out()) + "x" +
                          std::to_string(l.in()));
        l.W = w;
        const std::string bn = weight_name(prefix, j, "b", short_form);
        const Vec b = c.get_vec(bn);
        if (b.size() != l.b.size()) throw IoError("tensor '" + bn + "' has wrong length");
        l.b = b;
        if (l.act == Act::PReLU) {
            const std::string sn = weight_name(prefix, j, "slopes", short_form);
            const Vec sl = c.get_vec(sn);
            if (sl.size() != l.slopes.size()) throw IoError("tensor '" + sn + "' has wrong length");
            l.slopes = sl;
        }
    }
}

static void add_s2m_meta(Container& c, const S2MModel& m) {
    c.add_meta("kind", "s2m");
    c.add_meta("depth", std::to_string(m.cfg.depth));
    c.add_meta("hidden", std::to_string(m.cfg.hidden));
    c.add_meta("out_width", std::to_string(m.cfg.out_width));
    c.add_meta("pe_bone_bands", std::to_string(m.cfg.pe.bone_bands));
    c.add_meta("pe_order_bands", std::to_string(m.cfg.pe.order_bands));
    c.add_meta("pre_scale", std::to_string(m.cfg.pe.pre_scale));
    c.add_meta("gsd", m.cfg.gsd ? "1" : "0");
    c.add_meta("leaky_slope", std::to_string(m.cfg.leaky_slope));
    c.add_meta("bone_order", bone_order_string(m.tree));
}

static S2MConfig cfg_from_container(const Container& c) {
    S2MConfig cfg;
    cfg.depth = static_cast<int>(c.get_meta_int("depth"));
    cfg.hidden = static_cast<int>(c.get_meta_int("hidden"));
    cfg.out_width = static_cast<int>(c.get_meta_int("out_width"));
    cfg.pe.bone_bands = static_cast<int>(c.get_meta_int("pe_bone_bands"));
    cfg.pe.order_bands = static_cast<int>(c.get_meta_int("pe_order_bands"));
    cfg.pe.pre_scale = c.get_meta_double("pre_scale");
    cfg.gsd = c.get_meta_int("gsd") != 0;
    cfg.leaky_slope = c.get_meta_double("leaky_slope");
    return cfg;
}

void save_s2m(const S2MModel& model, const std::string& path) {
    Container c;
    add_s2m_meta(c, model);
    add_spec(c, model.spec);
    add_stack(c, model.gsd, "gsd", /*short_form=*/true);
    add_stack(c, model.axis[0], "axis_x");
    add_stack(c, model.axis[1], "axis_y");
    add_stack(c, model.axis[2], "axis_z");
    c.write(path);
}

static void check_expected(const S2MConfig& got, const S2MConfig& want) {
    auto fail = [](const std::string& field, auto got_v, auto want_v) {
        throw IoError("weight file " + field + " " + std::to_string(got_v) +
                      " does not match requested " + std::to_string(want_v));
    };
    if (got.depth != want.depth) fail("depth", got.depth, want.depth);
    if (got.hidden != want.hidden) fail("hidden", got.hidden, want.hidden);
    if (got.out_width != want.out_width) fail("out_width", got.out_width, want.out_width);
    if (got.pe.bone_bands != want.pe.bone_bands)
        fail("pe_bone_bands", got.pe.bone_bands, want.pe.bone_bands);
    if (got.pe.order_bands != want.pe.order_bands)
        fail("pe_order_bands", got.pe.order_bands, want.pe.order_bands);
    if (got.pe.pre_scale != want.pe.pre_scale)
        fail("pre_scale", got.pe.pre_scale, want.pe.pre_scale);
    if (got.gsd != want.gsd) fail("gsd", static_cast<int>(got.gsd), static_cast<int>(want.gsd));
}

static S2MModel s2m_from_container(const Container& c, const S2MConfig* expect) {
    if (c.get_meta("kind") != "s2m" && c.get_meta("kind") != "mgfp")
        throw IoError("weight file kind '" + c.get_meta("kind") + "' is not a model");
    const S2MConfig cfg = cfg_from_container(c);
    if (expect) check_expected(cfg, *expect);
    const KinematicTree tree = tree_from_string(c.get_meta("bone_order"));
    const DecompositionSpec spec = spec_from_container(c);
    S2MModel m = make_s2m_model(cfg, tree, spec, 0);
    load_stack(c, m.gsd, "gsd", /*short_form=*/true);
    load_stack(c, m.axis[0], "axis_x");
    load_stack(c, m.axis[1], "axis_y");
    load_stack(c, m.axis[2], "axis_z");
    return m;
}

S2MModel load_s2m(const std::string& path, const S2MConfig* expect) {
    return s2m_from_container(Container::read(path), expect);
}

void save_mgfp(const MGFPModel& model, const std::string& path) {
    Container c;
    add_s2m_meta(c, model.locked);
    // overwrite kind
    for (auto& [k, v] : c.meta)
        if (k == "kind") v = "mgfp";
    c.add_meta("n_views", std::to_string(model.n_views));
    c.add_meta("channels", std::to_string(model.channels));
    add_spec(c, model.locked.spec);
    add_stack(c, model.locked.gsd, "gsd", /*short_form=*/true);
    add_stack(c, model.locked.axis[0], "axis_x");
    add_stack(c, model.locked.axis[1], "axis_y");
    add_stack(c, model.locked.axis[2], "axis_z");
    const char* ax = "xyz";
    for (int i = 0; i < 3; ++i) {
        add_stack(c, model.mfi.copy[i], std::string("mfi.copy_") + ax[i]);
        for (size_t j = 0; j < model.mfi.zero[i].size(); ++j) {
            const std::string base = std::string("mfi.zero_") + ax[i] + "." + std::to_string(j);
            c.add_tensor(base + ".w", model.mfi.zero[i][j].W);
            c.add_tensor(base + ".b", model.mfi.zero[i][j].b.data(), 1,
                         static_cast<int>(model.mfi.zero[i][j].b.size()));
        }
    }
    c.write(path);
}

MGFPModel load_mgfp(const std::string& path) {
    const Container c = Container::read(path);
    if (c.get_meta("kind") != "mgfp")
        throw IoError("weight file kind '" + c.get_meta("kind") + "' is not mgfp");
    S2MModel locked = s2m_from_container(c, nullptr);
    MGFPModel m = make_mgfp(locked, static_cast<int>(c.get_meta_int("n_views")),
                            static_cast<int>(c.get_meta_int("channels")));
    const char* ax = "xyz";
    for (int i = 0; i < 3; ++i) {
        load_stack(c, m.mfi.copy[i], std::string("mfi.copy_") + ax[i]);
        for (size_t j = 0; j < m.mfi.zero[i].size(); ++j) {
            const std::string base = std::string("mfi.zero_") + ax[i] + "." + std::to_string(j);
            Layer& l = m.mfi.zero[i][j];
            const Mat w = c.get_mat(base + ".w");
            if (w.rows != l.out() || w.cols != l.in())
                throw IoError("tensor '" + base + ".w' has unexpected shape");
            l.W = w;
            const Vec b = c.get_vec(base + ".b");
            if (b.size() != l.b.size()) throw IoError("tensor '" + base + ".b' has wrong length");
            l.b = b;
        }
    }
    return m;
}

void save_template(const HandTemplate& tmpl, const std::string& path) {
    Container c;
    c.add_meta("kind", "template");
    Mat rest(kNumJoints, 3);
    for (int j = 0; j < kNumJoints; ++j)
        for (int k = 0; k < 3; ++k) rest(j, k) = tmpl.rest_skeleton[j][k];
    c.add_tensor("rest_skeleton", rest);
    c.add_tensor("vertices", tmpl.vertices);
    Mat faces(static_cast<int>(tmpl.faces.size()), 3);
    for (size_t f = 0; f < tmpl.faces.size(); ++f)
        for (int k = 0; k < 3; ++k) faces(static_cast<int>(f), k) = tmpl.faces[f][k];
    c.add_tensor("faces", faces);
    c.add_tensor("skin_weights", tmpl.skin_weights);
    c.write(path);
}

HandTemplate load_template(const std::string& path) {
    const Container c = Container::read(path);
    if (c.get_meta("kind") != "template")
        throw IoError("'" + path + "' is not a template container");
    HandTemplate t;
    const Mat rest = c.get_mat("rest_skeleton");
    if (rest.rows != kNumJoints || rest.cols != 3)
        throw IoError("rest_skeleton must be 21x3");
    for (int j = 0; j < kNumJoints; ++j)
        for (int k = 0; k < 3; ++k) t.rest_skeleton[j][k] = rest(j, k);
    t.vertices = c.get_mat("vertices");
    const Mat faces = c.get_mat("faces");
    for (int f = 0; f < faces.rows; ++f)
        t.faces.push_back({static_cast<int>(faces(f, 0)), static_cast<int>(faces(f, 1)),
                           static_cast<int>(faces(f, 2))});
    t.skin_weights = c.get_mat("skin_weights");
    if (t.skin_weights.rows != t.vertices.rows || t.skin_weights.cols != kNumBones)
        throw IoError("skin_weights must be V x 20");
    return t;
}

// ---- meshes & reports ----

void export_obj(const Mat& mesh, const std::vector<std::array<int, 3>>& faces,
                const std::string& path) {
    if (mesh.cols != 3) throw DimensionError("export_obj: mesh must be V x 3");
    for (const auto& f : faces)
        for (int idx : f)
            if (idx < 0 || idx >= mesh.rows)
                throw DimensionError("export_obj: face index " + std::to_string(idx) +
                                     " out of range");
    std::ostringstream os;
    char buf[96];
    for (int v = 0; v < mesh.rows; ++v) {
        std::snprintf(buf, sizeof(buf), "v %.6f %.6f %.6f\n", mesh(v, 0), mesh(v, 1), mesh(v, 2));
        os << buf;
    }
    for (const auto& f : faces) {
        std::snprintf(buf, sizeof(buf), "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
        os << buf;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << os.str();
    if (!out) throw IoError("write failed for '" + path + "'");
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << os.str();
}

// ---- datasets ----

const char* dataset_mode_name(DatasetMode m) {
    switch (m) {
        case DatasetMode::Pairs: return "pairs";
        case DatasetMode::Stage2: return "stage2";
        case DatasetMode::Full: return "full";
    }
    return "?";
}

static Mat skel_mat(const Skeleton& s) {
    Mat m(kNumJoints, 3);
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) m(j, c) = s[j][c];
    return m;
}

static Skeleton mat_skel(const Mat& m) {
    if (m.rows != kNumJoints || m.cols != 3) throw IoError("skeleton tensor must be 21x3");
    Skeleton s;
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) s[j][c] = m(j, c);
    return s;
}

static void add_rig(Container& c, const CameraRig& rig) {
    c.add_meta("n_views", std::to_string(rig.size()));
    for (int n = 0; n < rig.size(); ++n) {
        c.add_tensor("rig.k_" + std::to_string(n), rig.views[n].K);
        c.add_tensor("rig.t_" + std::to_string(n), rig.views[n].T);
        Mat wh(1, 2);
        wh(0, 0) = rig.views[n].width;
        wh(0, 1) = rig.views[n].height;
        c.add_tensor("rig.wh_" + std::to_string(n), wh);
    }
}

static CameraRig rig_from(const Container& c) {
    CameraRig rig;
    const int N = static_cast<int>(c.get_meta_int("n_views"));
    for (int n = 0; n < N; ++n) {
        CameraView v;
        v.K = c.get_mat("rig.k_" + std::to_string(n));
        v.T = c.get_mat("rig.t_" + std::to_string(n));
        const Mat wh = c.get_mat("rig.wh_" + std::to_string(n));
        v.width = static_cast<int>(wh(0, 0));
        v.height = static_cast<int>(wh(0, 1));
        rig.views.push_back(std::move(v));
    }
    return rig;
}

void save_pair_sample(const PairSample& s, uint64_t seed, const std::string& path) {
    Container c;
    c.add_meta("kind", "sample-pair");
    c.add_meta("seed", std::to_string(seed));
    c.add_tensor("skeleton", skel_mat(s.skeleton));
    c.add_tensor("mesh", s.mesh);
    c.write(path);
}

PairSample load_pair_sample(const std::string& path) {
    const Container c = Container::read(path);
    if (c.get_meta("kind") != "sample-pair") throw IoError("'" + path + "' is not a pair sample");
    PairSample s;
    s.skeleton = mat_skel(c.get_mat("skeleton"));
    s.mesh = c.get_mat("mesh");
    return s;
}

void save_fusion_sample(const FusionSample& s, uint64_t seed, const std::string& path) {
    Container c;
    c.add_meta("kind", "sample-stage2");
    c.add_meta("seed", std::to_string(seed));
    c.add_tensor("skeleton", skel_mat(s.gt_skeleton));
    c.add_tensor("mesh", s.gt_mesh);
    c.add_tensor("xbar", skel_mat(s.xbar));
    c.add_tensor("gk", s.gk);
    add_rig(c, s.rig);
    c.write(path);
}

FusionSample load_fusion_sample(const std::string& path) {
    const Container c = Container::read(path);
    if (c.get_meta("kind") != "sample-stage2")
        throw IoError("'" + path + "' is not a stage-2 sample");
    FusionSample s;
    s.gt_skeleton = mat_skel(c.get_mat("skeleton"));
    s.gt_mesh = c.get_mat("mesh");
    s.xbar = mat_skel(c.get_mat("xbar"));
    s.gk = c.get_mat("gk");
    s.rig = rig_from(c);
    return s;
}

static void add_stack_map(Container& c, const HeatmapStack& h, const std::string& name) {
    c.add_tensor(name, h.v.data(), h.channels * h.height, h.width);
}

void save_full_sample(const SyntheticSample& s, const std::string& path) {
    Container c;
    c.add_meta("kind", "sample-full");
    c.add_meta("seed", std::to_string(s.seed));
    c.add_tensor("skeleton", skel_mat(s.skeleton));
    c.add_tensor("mesh", s.mesh);
    add_rig(c, s.rig);
    c.add_meta("hm_h", std::to_string(s.heatmaps.empty() ? 0 : s.heatmaps[0].height));
    c.add_meta("feat_channels", std::to_string(s.features.empty() ? 0 : s.features[0].channels));
    for (size_t n = 0; n < s.heatmaps.size(); ++n)
        add_stack_map(c, s.heatmaps[n], "heatmap_" + std::to_string(n));
    for (size_t n = 0; n < s.features.size(); ++n)
        add_stack_map(c, s.features[n], "features_" + std::to_string(n));
    c.write(path);
}

SyntheticSample load_full_sample(const std::string& path) {
    const Container c = Container::read(path);
    if (c.get_meta("kind") != "sample-full") throw IoError("'" + path + "' is not a full sample");
    SyntheticSample s;
    s.seed = static_cast<uint64_t>(c.get_meta_int("seed"));
    s.skeleton = mat_skel(c.get_mat("skeleton"));
    s.mesh = c.get_mat("mesh");
    s.rig = rig_from(c);
    const int H = static_cast<int>(c.get_meta_int("hm_h"));
    const int C = static_cast<int>(c.get_meta_int("feat_channels"));
    for (int n = 0; n < s.rig.size(); ++n) {
        const Mat hm = c.get_mat("heatmap_" + std::to_string(n));
        HeatmapStack h;
        h.resize(kNumJoints, H, hm.cols);
        std::copy(hm.a.begin(), hm.a.end(), h.v.begin());
        s.heatmaps.push_back(std::move(h));
        const Mat fm = c.get_mat("features_" + std::to_string(n));
        FeatureMap f;
        f.resize(C, H, fm.cols);
        std::copy(fm.a.begin(), fm.a.end(), f.v.begin());
        s.features.push_back(std::move(f));
    }
    return s;
}

std::string sample_file_name(size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%06zu.s2mw", index);
    return buf;
}

void write_dataset_manifest(const std::string& dir, const DatasetManifest& m) {
    std::ostringstream os;
    os << "s2m-dataset v1\n";
    os << "mode " << dataset_mode_name(m.mode) << "\n";
    os << "config_hash " << m.config_hash << "\n";
    os << "count " << m.seeds.size() << "\n";
    for (uint64_t s : m.seeds) os << "seed " << s << "\n";
    write_text_atomic(dir + "/manifest.txt", os.str());
}

DatasetManifest read_dataset_manifest(const std::string& dir) {
    std::ifstream in(dir + "/manifest.txt");
    if (!in) throw IoError("cannot open dataset manifest in '" + dir + "'");
    DatasetManifest m;
    std::string line;
    if (!std::getline(in, line) || line != "s2m-dataset v1")
        throw IoError("dataset manifest: bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "mode") {
            std::string v;
            ls >> v;
            if (v == "pairs")
                m.mode = DatasetMode::Pairs;
            else if (v == "stage2")
                m.mode = DatasetMode::Stage2;
            else if (v == "full")
                m.mode = DatasetMode::Full;
            else
                throw IoError("dataset manifest: unknown mode '" + v + "'");
        } else if (key == "config_hash") {
            ls >> m.config_hash;
        } else if (key == "count") {
            // informational; seeds below are authoritative
        } else if (key == "seed") {
            uint64_t s;
            ls >> s;
            m.seeds.push_back(s);
        } else {
            throw IoError("dataset manifest: unknown key '" + key + "'");
        }
    }
    return m;
}

}  // namespace s2m
