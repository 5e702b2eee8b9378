#include "spdet/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "spdet/errors.hpp"

namespace spdet {

using nlohmann::json;

namespace {

json encode_double(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double decode_double(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "-inf") return -INFINITY;
        if (s == "inf") return INFINITY;
        if (s == "nan") return NAN;
    }
    throw InvalidInput("model: bad number");
}

}  // namespace

json model_to_json(const ModelFile& mf) {
    const BoostedModel& m = mf.model;
    json j;
    j["format_version"] = BoostedModel::kFormatVersion;
    j["window"] = {m.window_w, m.window_h};
    j["channels"] = std::string(channel_config_name(m.channels));
    j["luv_scaling"] = {kLuvScaling.l_scale, kLuvScaling.u_offset, kLuvScaling.u_scale, kLuvScaling.v_offset,
                        kLuvScaling.v_scale};
    j["quant_lo"] = m.quant.lo;
    j["quant_hi"] = m.quant.hi;
    j["shrinkage"] = m.shrinkage;
    json cascade = json::array();
    for (double c : m.cascade) cascade.push_back(encode_double(c));
    j["cascade"] = cascade;
    j["omega"] = m.omega;
    json trees = json::array();
    for (const auto& t : m.trees) {
        trees.push_back({{"depth", t.depth}, {"feature", t.feature}, {"threshold", t.threshold}, {"leaf", t.leaf}});
    }
    j["trees"] = trees;
    if (mf.pauc) {
        const PaucModel& p = *mf.pauc;
        j["pauc"] = {{"w", p.w},         {"alpha", p.alpha},           {"beta", p.beta},
                     {"C", p.C},         {"eps", p.eps},               {"xi", p.xi},
                     {"iterations", p.iterations}, {"converged", p.converged},
                     {"dual_objective", p.dual_objective}};
    }
    j["run_config"] = mf.run_config;
    j["negative_cache"] = mf.negative_cache;
    return j;
}

ModelFile model_from_json(const json& j) {
    try {
        if (j.at("format_version").get<int>() != BoostedModel::kFormatVersion) {
            throw InvalidInput("model: unsupported format version");
        }
        ModelFile mf;
        BoostedModel& m = mf.model;
        m.window_w = j.at("window").at(0).get<int>();
        m.window_h = j.at("window").at(1).get<int>();
        m.channels = parse_channel_config(j.at("channels").get<std::string>());
        m.quant.lo = j.at("quant_lo").get<std::vector<float>>();
        m.quant.hi = j.at("quant_hi").get<std::vector<float>>();
        m.shrinkage = j.at("shrinkage").get<double>();
        for (const auto& c : j.at("cascade")) m.cascade.push_back(decode_double(c));
        m.omega = j.at("omega").get<std::vector<double>>();
        for (const auto& t : j.at("trees")) {
            DecisionTree tree;
            tree.depth = t.at("depth").get<int>();
            tree.feature = t.at("feature").get<std::vector<std::uint32_t>>();
            tree.threshold = t.at("threshold").get<std::vector<std::uint8_t>>();
            tree.leaf = t.at("leaf").get<std::vector<std::int8_t>>();
            const std::size_t internal = (std::size_t{1} << tree.depth) - 1;
            if (tree.depth < 1 || tree.depth > kMaxTreeDepth || tree.feature.size() != internal ||
                tree.threshold.size() != internal || tree.leaf.size() != internal + 1) {
                throw InvalidInput("model: malformed tree");
            }
            for (auto f : tree.feature) {
                if (f >= m.quant.dim()) throw InvalidInput("model: tree feature out of range");
            }
            m.trees.push_back(std::move(tree));
        }
        if (m.quant.lo.size() != m.quant.hi.size() || m.omega.size() != m.trees.size() ||
            m.cascade.size() != m.trees.size()) {
            throw InvalidInput("model: inconsistent array lengths");
        }
        if (j.contains("pauc") && !j.at("pauc").is_null()) {
            const json& p = j.at("pauc");
            PaucModel pm;
            pm.w = p.at("w").get<std::vector<double>>();
            pm.alpha = p.at("alpha").get<double>();
            pm.beta = p.at("beta").get<double>();
            pm.C = p.at("C").get<double>();
            pm.eps = p.at("eps").get<double>();
            pm.xi = p.at("xi").get<double>();
            pm.iterations = p.at("iterations").get<int>();
            pm.converged = p.at("converged").get<bool>();
            if (p.contains("dual_objective")) pm.dual_objective = p.at("dual_objective").get<std::vector<double>>();
            if (pm.w.size() != m.trees.size()) throw InvalidInput("model: pAUC weight count differs from tree count");
            mf.pauc = std::move(pm);
        }
        if (j.contains("run_config")) mf.run_config = j.at("run_config");
        if (j.contains("negative_cache")) mf.negative_cache = j.at("negative_cache").get<std::string>();
        return mf;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("model: ") + e.what());
    }
}

std::string serialize_model(const ModelFile& mf) { return model_to_json(mf).dump(1) + "\n"; }

ModelFile parse_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("model: ") + e.what());
    }
    return model_from_json(j);
}

void save_model(const std::filesystem::path& path, const ModelFile& mf) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write model " + path.string());
    os << serialize_model(mf);
    if (!os) throw IoError("write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_model(ss.str());
}

void save_negative_cache(const std::filesystem::path& path, const NegativeCache& cache) {
    if (cache.image_ids.size() != cache.responses.count()) throw InvalidInput("negative cache: id count mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    std::string line;
    for (std::size_t i = 0; i < cache.image_ids.size(); ++i) {
        line = std::to_string(cache.image_ids[i]) + ' ';
        for (auto h : cache.responses.row(i)) line += h > 0 ? '+' : '-';
        os << line << '\n';
    }
    if (!os) throw IoError("write failed: " + path.string());
}

NegativeCache load_negative_cache(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open negative cache " + path.string());
    NegativeCache out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        int id = 0;
        std::string s;
        if (!(ls >> id >> s)) throw IoError(path.string() + ": malformed line");
        if (out.responses.dim == 0) out.responses = ResponseMatrix(s.size());
        if (s.size() != out.responses.dim) throw IoError(path.string() + ": inconsistent response length");
        std::vector<std::int8_t> h(s.size());
        for (std::size_t t = 0; t < s.size(); ++t) {
            if (s[t] != '+' && s[t] != '-') throw IoError(path.string() + ": bad response character");
            h[t] = s[t] == '+' ? 1 : -1;
        }
        out.image_ids.push_back(id);
        out.responses.push(h);
    }
    return out;
}

}  // namespace spdet
