#include "relmatch/corpus.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "relmatch/errors.hpp"
#include "relmatch/rng.hpp"
#include "relmatch/tensor_io.hpp"

namespace relmatch {

using nlohmann::json;

namespace {

constexpr const char* kManifestFormat = "relmatch-corpus-v1";
constexpr const char* kPrngName = "splitmix64+xoshiro256++";

json spec_to_json(const CorpusSpec& s) {
    return json{{"z", s.z},
                {"M", s.M},
                {"N", s.N},
                {"d_in", s.d_in},
                {"n_train", s.n_train},
                {"n_val", s.n_val},
                {"n_test", s.n_test},
                {"noise_sigma", s.noise_sigma},
                {"hard_negative", s.hard_negative},
                {"seed", s.seed}};
}

CorpusSpec spec_from_json(const json& j) {
    CorpusSpec s;
    s.z = j.at("z").get<int>();
    s.M = j.at("M").get<int>();
    s.N = j.at("N").get<int>();
    s.d_in = j.at("d_in").get<int>();
    s.n_train = j.at("n_train").get<int>();
    s.n_val = j.at("n_val").get<int>();
    s.n_test = j.at("n_test").get<int>();
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.hard_negative = j.at("hard_negative").get<bool>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

json entry_to_json(const ManifestEntry& e) {
    json meta{{"class", e.meta.class_index},
              {"location", e.meta.location},
              {"disease_keyword", e.meta.disease_keyword},
              {"location_keyword", e.meta.location_keyword}};
    json j{{"type", e.split == "prompt" ? "prompt" : "pair"},
           {"id", e.id},
           {"split", e.split},
           {"label", e.label},
           {"image_file", e.image_file},
           {"text_file", e.text_file},
           {"signal_patches", e.signal_patches},
           {"meta", meta}};
    if (e.prompt_variant >= 0) j["variant"] = e.prompt_variant;
    return j;
}

ManifestEntry entry_from_json(const json& j) {
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.split = j.at("split").get<std::string>();
    e.label = j.at("label").get<std::vector<int>>();
    e.image_file = j.at("image_file").get<std::string>();
    e.text_file = j.at("text_file").get<std::string>();
    e.signal_patches = j.at("signal_patches").get<std::vector<int>>();
    const json& meta = j.at("meta");
    e.meta.class_index = meta.at("class").get<int>();
    e.meta.location = meta.at("location").get<std::string>();
    e.meta.disease_keyword = meta.at("disease_keyword").get<int>();
    e.meta.location_keyword = meta.at("location_keyword").get<int>();
    if (j.contains("variant")) e.prompt_variant = j.at("variant").get<int>();
    return e;
}

/// Disease latents first, then v_left, v_right; orthonormalized in that order.
std::vector<std::vector<double>> make_latents(const CorpusSpec& spec) {
    const int count = spec.diseases() + 2;
    Xoshiro256pp rng(stream_seed(spec.seed, "latents"));
    std::vector<std::vector<double>> lat(count, std::vector<double>(spec.d_in));
    for (auto& v : lat) {
        for (double& x : v) x = rng.gauss();
    }
    // modified Gram-Schmidt
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < i; ++j) {
            double dot = 0.0;
            for (int r = 0; r < spec.d_in; ++r) dot += lat[i][r] * lat[j][r];
            for (int r = 0; r < spec.d_in; ++r) lat[i][r] -= dot * lat[j][r];
        }
        double norm = 0.0;
        for (double x : lat[i]) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-9) {
            throw ContractError("generate_corpus: degenerate latent draw, change the seed");
        }
        for (double& x : lat[i]) x /= norm;
    }
    return lat;
}

struct LatentView {
    const std::vector<double>* disease = nullptr;  // null for class 0
    const std::vector<double>* location = nullptr;
    int location_index = 0;  // 0 = left, 1 = right
};

/// Which latents class c uses. In hard-negative mode the class identity fixes
/// the location; otherwise the pair's own draw decides it.
LatentView class_latents(const CorpusSpec& spec, const std::vector<std::vector<double>>& lat,
                         int c, int drawn_location) {
    LatentView v;
    const int n_dis = spec.diseases();
    if (c >= 1) {
        const int disease = spec.hard_negative ? (c - 1) / 2 : c - 1;
        v.disease = &lat[disease];
        v.location_index = spec.hard_negative ? (c - 1) % 2 : drawn_location;
    } else {
        v.location_index = drawn_location;
    }
    v.location = &lat[n_dis + v.location_index];
    return v;
}

void fill_noise(Matrix& m, double sigma, Xoshiro256pp& rng) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = sigma * rng.gauss();
}

void add_to_col(Matrix& m, int col, const std::vector<double>& v) {
    for (int r = 0; r < m.rows(); ++r) m(r, col) += v[r];
}

}  // namespace

void CorpusSpec::validate() const {
    if (z < 2) throw ConfigError("CorpusSpec: z must be >= 2 (class 0 is reserved)");
    if (M < 1) throw ConfigError("CorpusSpec: M must be >= 1");
    if (N < 2) throw ConfigError("CorpusSpec: N must be >= 2 (disease + location keyword slots)");
    if (d_in < 1) throw ConfigError("CorpusSpec: d_in must be >= 1");
    if (n_train < 1 || n_val < 1 || n_test < 1) {
        throw ConfigError("CorpusSpec: split sizes must be >= 1");
    }
    if (noise_sigma < 0.0) throw ConfigError("CorpusSpec: noise_sigma must be >= 0");
    if (hard_negative && (z - 1) % 2 != 0) {
        throw ConfigError("CorpusSpec: hard_negative requires an even number of twin classes");
    }
    if (d_in < diseases() + 2) {
        throw ConfigError("CorpusSpec: d_in too small to orthonormalize " +
                          std::to_string(diseases() + 2) + " latents");
    }
}

CorpusSpec CorpusSpec::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("CorpusSpec: cannot open " + path.string());
    json j = json::parse(in);
    CorpusSpec s = spec_from_json(j);
    s.validate();
    return s;
}

std::string CorpusSpec::to_json() const { return spec_to_json(*this).dump(2); }

void generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "tensors", ec);
    std::filesystem::create_directories(out_dir / "prompts", ec);
    if (!std::filesystem::is_directory(out_dir / "tensors") ||
        !std::filesystem::is_directory(out_dir / "prompts")) {
        throw IoError("generate_corpus: cannot create output directory " + out_dir.string());
    }

    const auto latents = make_latents(spec);

    std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::trunc);
    if (!manifest) throw IoError("generate_corpus: cannot write manifest in " + out_dir.string());
    json header{{"type", "header"},
                {"format", kManifestFormat},
                {"prng", kPrngName},
                {"spec", spec_to_json(spec)},
                {"prompt_variants", kPromptVariants}};
    manifest << header.dump() << "\n";

    const struct {
        const char* name;
        int count;
    } splits[] = {{"train", spec.n_train}, {"val", spec.n_val}, {"test", spec.n_test}};

    for (const auto& split : splits) {
        const bool balanced_test = std::string(split.name) == "test";
        for (int i = 0; i < split.count; ++i) {
            char idbuf[32];
            std::snprintf(idbuf, sizeof(idbuf), "%s_%06d", split.name, i);
            const std::string id = idbuf;
            Xoshiro256pp rng(stream_seed(spec.seed, "pair/" + id));

            // Test pairs cycle the signal classes so every class gets an equal share
            // (the 5x200 protocol); train/val draw uniformly over all classes.
            const int c = balanced_test ? 1 + i % (spec.z - 1)
                                        : static_cast<int>(rng.uniform_int(spec.z));
            const int drawn_loc = static_cast<int>(rng.uniform_int(2));
            const LatentView lv = class_latents(spec, latents, c, drawn_loc);

            ManifestEntry e;
            e.id = id;
            e.split = split.name;
            e.label.assign(spec.z, 0);
            e.label[c] = 1;
            e.meta.class_index = c;
            e.meta.location = lv.location_index == 0 ? "left" : "right";

            if (c >= 1) {
                e.signal_patches = {static_cast<int>(rng.uniform_int(spec.M))};
            }
            e.meta.disease_keyword = static_cast<int>(rng.uniform_int(spec.N));
            int loc_kw = static_cast<int>(rng.uniform_int(spec.N - 1));
            if (loc_kw >= e.meta.disease_keyword) ++loc_kw;
            e.meta.location_keyword = loc_kw;

            Matrix img(spec.d_in, spec.M);
            fill_noise(img, spec.noise_sigma, rng);
            if (lv.disease) {
                for (int p : e.signal_patches) {
                    add_to_col(img, p, *lv.disease);
                    add_to_col(img, p, *lv.location);
                }
            }

            Matrix txt(spec.d_in, spec.N);
            fill_noise(txt, spec.noise_sigma, rng);
            if (lv.disease) add_to_col(txt, e.meta.disease_keyword, *lv.disease);
            add_to_col(txt, e.meta.location_keyword, *lv.location);

            e.image_file = "tensors/" + id + ".img.rmt";
            e.text_file = "tensors/" + id + ".txt.rmt";
            write_tensor(img, out_dir / e.image_file);
            write_tensor(txt, out_dir / e.text_file);
            manifest << entry_to_json(e).dump() << "\n";
        }
    }
    manifest.close();
    if (!manifest) throw IoError("generate_corpus: short write to manifest");

    // Class prompts: keyword tokens only, one text token per keyword. The image
    // side is a zero placeholder. In hard-negative mode the class identity
    // includes the location, so its keyword joins the prompt.
    std::ofstream pmanifest(out_dir / "prompts" / "manifest.jsonl", std::ios::trunc);
    if (!pmanifest) throw IoError("generate_corpus: cannot write prompt manifest");
    for (int c = 1; c < spec.z; ++c) {
        for (int v = 0; v < kPromptVariants; ++v) {
            char idbuf[32];
            std::snprintf(idbuf, sizeof(idbuf), "prompt_c%d_v%d", c, v);
            const std::string id = idbuf;
            Xoshiro256pp rng(stream_seed(spec.seed, "prompt/" + id));
            const LatentView lv = class_latents(spec, latents, c, 0);

            const int n_tokens = spec.hard_negative ? 2 : 1;
            Matrix txt(spec.d_in, n_tokens);
            fill_noise(txt, spec.noise_sigma, rng);
            add_to_col(txt, 0, *lv.disease);
            if (spec.hard_negative) add_to_col(txt, 1, *lv.location);

            ManifestEntry e;
            e.id = id;
            e.split = "prompt";
            e.prompt_variant = v;
            e.label.assign(spec.z, 0);
            e.label[c] = 1;
            e.meta.class_index = c;
            e.meta.location = spec.hard_negative ? (lv.location_index == 0 ? "left" : "right") : "";
            e.meta.disease_keyword = 0;
            e.meta.location_keyword = spec.hard_negative ? 1 : -1;
            e.image_file = "prompts/" + id + ".img.rmt";
            e.text_file = "prompts/" + id + ".txt.rmt";
            write_tensor(Matrix(spec.d_in, 1), out_dir / e.image_file);
            write_tensor(txt, out_dir / e.text_file);
            pmanifest << entry_to_json(e).dump() << "\n";
        }
    }
    pmanifest.close();
    if (!pmanifest) throw IoError("generate_corpus: short write to prompt manifest");
}

Corpus Corpus::open(const std::filesystem::path& dir) {
    Corpus c;
    c.dir_ = dir;

    std::ifstream manifest(dir / "manifest.jsonl");
    if (!manifest) throw IoError("Corpus: cannot open manifest in " + dir.string());
    std::string line;
    bool have_header = false;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "header") {
            if (j.at("format").get<std::string>() != kManifestFormat) {
                throw FormatError("Corpus: unknown manifest format", 0);
            }
            c.spec_ = spec_from_json(j.at("spec"));
            have_header = true;
        } else {
            c.entries_.push_back(entry_from_json(j));
        }
    }
    if (!have_header) throw FormatError("Corpus: manifest has no header line", 0);

    std::ifstream pmanifest(dir / "prompts" / "manifest.jsonl");
    if (pmanifest) {
        while (std::getline(pmanifest, line)) {
            if (line.empty()) continue;
            c.prompts_.push_back(entry_from_json(json::parse(line)));
        }
    }
    return c;
}

std::vector<int> Corpus::split_indices(const std::string& split) const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(entries_.size()); ++i) {
        if (entries_[i].split == split) idx.push_back(i);
    }
    return idx;
}

const ManifestEntry& Corpus::find(const std::string& id) const {
    for (const auto& e : entries_) {
        if (e.id == id) return e;
    }
    for (const auto& e : prompts_) {
        if (e.id == id) return e;
    }
    throw LookupError("Corpus: unknown id '" + id + "'");
}

TokenPair Corpus::load(const ManifestEntry& entry) const {
    TokenPair p;
    p.id = entry.id;
    p.label = entry.label;
    p.signal_patches = entry.signal_patches;
    p.meta = entry.meta;
    try {
        p.image_tokens = read_tensor(dir_ / entry.image_file);
        p.text_tokens = read_tensor(dir_ / entry.text_file);
    } catch (const IoError& e) {
        throw IoError("Corpus: missing tensor for pair '" + entry.id + "': " + e.what());
    }
    if (p.image_tokens.cols() < 1 || p.text_tokens.cols() < 1) {
        throw ContractError("Corpus: pair '" + entry.id + "' has empty token matrix");
    }
    if (std::count(p.label.begin(), p.label.end(), 1) == 0) {
        throw ContractError("Corpus: pair '" + entry.id + "' has an all-zero label");
    }
    for (int sp : p.signal_patches) {
        if (sp < 0 || sp >= p.image_tokens.cols()) {
            throw ContractError("Corpus: pair '" + entry.id + "' has signal patch out of range");
        }
    }
    return p;
}

TokenPair Corpus::load(int index) const {
    if (index < 0 || index >= static_cast<int>(entries_.size())) {
        throw UsageError("Corpus::load: index " + std::to_string(index) + " out of range");
    }
    return load(entries_[index]);
}

std::vector<TokenPair> Corpus::load_batch(std::span<const int> indices) const {
    std::vector<TokenPair> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(load(i));
    return out;
}

std::map<int, std::vector<TokenPair>> Corpus::load_prompts() const {
    std::map<int, std::vector<TokenPair>> out;
    for (const auto& e : prompts_) out[e.meta.class_index].push_back(load(e));
    return out;
}

}  // namespace relmatch
