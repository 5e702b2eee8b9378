#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spdet/bootstrap.hpp"
#include "spdet/errors.hpp"
#include "spdet/io.hpp"
#include "spdet/model_io.hpp"
#include "spdet/synth.hpp"

using namespace spdet;
using nlohmann::json;

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw InvalidInput("bad list value: " + tok);
        out.push_back(v);
    }
    return out;
}

std::pair<int, int> parse_window(const std::string& s) {
    int w = 0, h = 0;
    char x = 0;
    std::istringstream is(s);
    if (!(is >> w >> x >> h) || x != 'x' || w < 8 || h < 8 || w % 4 || h % 4) {
        throw InvalidInput("window must look like 64x128 with multiples of 4");
    }
    return {w, h};
}

std::vector<RasterImage> read_dir(const fs::path& dir, std::vector<std::string>* ids = nullptr) {
    std::vector<RasterImage> out;
    for (const auto& p : list_images(dir)) {
        try {
            out.push_back(read_pnm(p));
            if (ids) ids->push_back(p.stem().string());
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << p.string() << ": " << e.what() << "\n";
        }
    }
    return out;
}

std::vector<std::string> echo_lines(const json& cfg) {
    std::vector<std::string> out;
    for (auto it = cfg.begin(); it != cfg.end(); ++it) out.push_back(it.key() + "=" + it.value().dump());
    return out;
}

fs::path resolve_near(const fs::path& anchor, const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : anchor.parent_path() / q;
}

// Positive crops are centred on the window.
RawSamples load_positives(const fs::path& dir, int ww, int wh, ChannelConfig ch) {
    auto crops = read_dir(dir);
    std::vector<RasterImage> ok;
    for (auto& c : crops) {
        if (c.width() < ww || c.height() < wh) {
            std::cerr << "warning: positive crop smaller than the window skipped\n";
            continue;
        }
        ok.push_back(std::move(c));
    }
    RawSamples out(static_cast<std::size_t>(channel_count(ch)) * (ww / 4) * (wh / 4));
    for (const auto& c : ok) {
        const int x0 = (c.width() - ww) / 2, y0 = (c.height() - wh) / 2;
        out.push(window_channels(c, x0, y0, ww, wh, ch));
    }
    return out;
}

struct TrainArgs {
    std::string pos, neg, out;
    std::string channels = "sp-Cov+sp-LBP+M+O+LUV";
    std::string window = "64x128";
    int trees = 2048;
    double shrinkage = 0.1;
    int depth = 3;
    double cascade = -10.0;
    int stages = 3;
    std::size_t n0 = 5000, ns = 5000, per_image = 25;
    std::string stage_trees;
    int spo = 8;
    double upscale = 2.0;
    std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& a) {
    BootstrapConfig cfg;
    cfg.channels = parse_channel_config(a.channels);
    std::tie(cfg.window_w, cfg.window_h) = parse_window(a.window);
    cfg.boost.trees = a.trees;
    cfg.boost.shrinkage = a.shrinkage;
    cfg.boost.depth = a.depth;
    cfg.boost.cascade_threshold = a.cascade;
    for (double t : parse_list(a.stage_trees)) cfg.stage_trees.push_back(static_cast<int>(t));
    cfg.stages = a.stages;
    cfg.initial_negatives = a.n0;
    cfg.stage_negatives = a.ns;
    cfg.max_per_image = a.per_image;
    cfg.pyramid = {a.spo, a.upscale};
    cfg.seed = a.seed;
    if (a.trees < 1 || a.depth < 1 || a.depth > kMaxTreeDepth) throw InvalidInput("trees >= 1 and depth in [1, 4]");

    json run = {{"channels", a.channels}, {"window", a.window},     {"trees", a.trees},
                {"shrinkage", a.shrinkage}, {"depth", a.depth},     {"cascade_threshold", a.cascade},
                {"stages", a.stages},     {"initial_negatives", a.n0}, {"stage_negatives", a.ns},
                {"max_per_image", a.per_image}, {"stage_trees", a.stage_trees}, {"scales_per_octave", a.spo},
                {"max_upscale", a.upscale}, {"seed", a.seed}};

    const RawSamples pos = load_positives(a.pos, cfg.window_w, cfg.window_h, cfg.channels);
    const auto negs = read_dir(a.neg);
    if (pos.count() == 0) throw InvalidInput("no usable positive crops in " + a.pos);
    if (negs.empty()) throw InvalidInput("no usable negative images in " + a.neg);
    std::cout << "positives " << pos.count() << ", negative images " << negs.size() << "\n";

    auto res = bootstrap_train(pos, negs, cfg, [](const StageSummary& s) {
        std::printf("stage %d: +%zu negatives (total %zu), %d trees, loss %.6g%s\n", s.stage, s.negatives_added,
                    s.negatives_total, s.trees, s.final_loss, s.early_stopped ? " (early stop)" : "");
        std::fflush(stdout);
    });
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

    NegativeCache cache;
    cache.image_ids = res.negative_image_ids;
    cache.responses = weak_responses(res.model, res.negatives);
    const fs::path out(a.out);
    const fs::path cache_path = out.string() + ".negcache";
    save_negative_cache(cache_path, cache);

    ModelFile mf;
    mf.model = std::move(res.model);
    mf.run_config = run;
    mf.negative_cache = cache_path.filename().string();
    save_model(out, mf);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

struct CalibArgs {
    std::string model, pos, neg_cache, out, cv_csv;
    double C = 16.0, beta = 0.7, alpha = 0.0, eps = 1e-3;
    int max_iter = 1000;
    bool cv = false;
    std::string grid_C, grid_beta;
    int folds = 3;
    std::uint64_t seed = 1;
};

int cmd_calibrate(const CalibArgs& a) {
    ModelFile mf = load_model(a.model);
    std::string cache_file = a.neg_cache;
    if (cache_file.empty()) {
        if (mf.negative_cache.empty()) throw InvalidInput("model has no negative cache; pass --neg-cache");
        cache_file = resolve_near(a.model, mf.negative_cache).string();
    }
    const NegativeCache cache = load_negative_cache(cache_file);
    if (cache.responses.dim != mf.model.trees.size()) throw InvalidInput("negative cache does not match the model");
    const RawSamples pos_raw = load_positives(a.pos, mf.model.window_w, mf.model.window_h, mf.model.channels);
    if (pos_raw.count() == 0) throw InvalidInput("no usable positive crops in " + a.pos);
    const ResponseMatrix pos = weak_responses(mf.model, pos_raw);

    PaucParams p;
    p.alpha = a.alpha;
    p.beta = a.beta;
    p.C = a.C;
    p.eps = a.eps;
    p.max_iter = a.max_iter;
    json echo = {{"alpha", a.alpha}, {"eps", a.eps}, {"max_iter", a.max_iter}};
    if (a.cv) {
        auto gc = a.grid_C.empty() ? default_grid_C() : parse_list(a.grid_C);
        auto gb = a.grid_beta.empty() ? default_grid_beta() : parse_list(a.grid_beta);
        const CvResult cv = cross_validate(train_pauc_svm, pos, cache.responses, cache.image_ids, gc, gb, a.folds, p,
                                           a.seed);
        if (!a.cv_csv.empty()) {
            std::ofstream os(a.cv_csv);
            if (!os) throw IoError("cannot write " + a.cv_csv);
            os << cv_csv(cv);
        }
        std::printf("cross-validation: C=%g beta=%g mean LAMR %.6f\n", cv.best_C, cv.best_beta, cv.best_lamr);
        p.C = cv.best_C;
        p.beta = cv.best_beta;
        echo["grid_C"] = gc;
        echo["grid_beta"] = gb;
        echo["folds"] = a.folds;
        echo["cv_seed"] = a.seed;
    }
    echo["C"] = p.C;
    echo["beta"] = p.beta;
    PaucModel pm = train_pauc_svm(pos, cache.responses, p);
    std::printf("pAUC: %d iterations, xi %.6g%s\n", pm.iterations, pm.xi, pm.converged ? "" : " (not converged)");
    mf.pauc = std::move(pm);
    mf.run_config["calibration"] = echo;
    const fs::path out(a.out);
    if (!mf.negative_cache.empty()) {
        // keep the cache reachable from the new location
        mf.negative_cache = fs::absolute(resolve_near(a.model, mf.negative_cache)).lexically_normal().string();
    }
    save_model(out, mf);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

struct DetectArgs {
    std::string model, images, out;
    int spo = 8;
    double upscale = 2.0;
    double nms = 0.65;
    bool no_pauc = false;
};

int cmd_detect(const DetectArgs& a) {
    const ModelFile mf = load_model(a.model);
    DetectOptions opt;
    opt.pyramid = {a.spo, a.upscale};
    opt.nms_overlap = a.nms;
    const PaucModel* pm = (!a.no_pauc && mf.pauc) ? &*mf.pauc : nullptr;

    std::vector<std::string> ids;
    const auto images = read_dir(a.images, &ids);
    std::vector<std::pair<std::string, std::vector<Detection>>> per_image;
    for (std::size_t i = 0; i < images.size(); ++i) per_image.emplace_back(ids[i], detect(images[i], mf.model, pm, opt));

    json echo = {{"model", a.model}, {"scales_per_octave", a.spo}, {"max_upscale", a.upscale},
                 {"nms_overlap", a.nms}, {"pauc", pm != nullptr}, {"run_config", mf.run_config}};
    std::ofstream os(a.out);
    if (!os) throw IoError("cannot write " + a.out);
    write_detections(os, echo_lines(echo), per_image);
    std::size_t n = 0;
    for (const auto& [id, d] : per_image) n += d.size();
    std::cout << images.size() << " images, " << n << " detections\n";
    return 0;
}

struct EvalArgs {
    std::string detections, annotations, roc, report;
    double iou = 0.5;
};

int cmd_eval(const EvalArgs& a) {
    const DetectionFile df = read_detections(a.detections);
    std::vector<FrameMatch> frames;
    for (const auto& id : df.images) {
        const fs::path ann = fs::path(a.annotations) / (id + ".txt");
        if (!fs::exists(ann)) throw IoError("missing annotation for image " + id);
        const auto gt = filter_reasonable(read_annotations(ann));
        const auto& dets = df.boxes.at(id);
        frames.push_back(match_frame(dets, gt, a.iou));
    }
    const RocCurve curve = roc(frames);
    const LamrResult lr = lamr(curve);

    std::vector<std::string> head = {"detections=" + a.detections, "annotations=" + a.annotations,
                                     "iou=" + format_double(a.iou), "images=" + std::to_string(curve.images),
                                     "ground_truth=" + std::to_string(curve.gt_count)};
    for (const auto& h : df.header) head.push_back("detect." + h);
    if (!a.roc.empty()) {
        std::ofstream os(a.roc);
        if (!os) throw IoError("cannot write " + a.roc);
        for (const auto& h : head) os << "# " << h << "\n";
        os << "threshold,fppi,miss_rate\n";
        for (const auto& p : curve.points) {
            os << format_double(p.threshold) << ',' << format_double(p.fppi) << ',' << format_double(p.miss_rate) << '\n';
        }
    }
    std::ostringstream rep;
    for (const auto& h : head) rep << "# " << h << "\n";
    rep << "lamr " << format_double(lr.value) << "\n";
    for (const auto& [f, mr] : lr.samples) rep << "fppi " << format_double(f) << " miss_rate " << format_double(mr) << "\n";
    if (!a.report.empty()) {
        std::ofstream os(a.report);
        if (!os) throw IoError("cannot write " + a.report);
        os << rep.str();
    }
    std::cout << rep.str();
    return 0;
}

int cmd_info(const std::string& path) {
    const ModelFile mf = load_model(path);
    const auto& m = mf.model;
    std::cout << "window " << m.window_w << "x" << m.window_h << "\n"
              << "channels " << channel_config_name(m.channels) << " (" << channel_count(m.channels) << ")\n"
              << "features " << m.dim() << "\n"
              << "trees " << m.trees.size() << ", depth " << (m.trees.empty() ? 0 : m.trees.front().depth) << "\n"
              << "shrinkage " << format_double(m.shrinkage) << "\n"
              << "cascade " << (m.cascade.empty() ? "none" : format_double(m.cascade.front())) << "\n";
    if (mf.pauc) {
        std::cout << "pauc alpha " << format_double(mf.pauc->alpha) << " beta " << format_double(mf.pauc->beta) << " C "
                  << format_double(mf.pauc->C) << (mf.pauc->converged ? "" : " (not converged)") << "\n";
    } else {
        std::cout << "pauc none\n";
    }
    if (!mf.negative_cache.empty()) std::cout << "negative cache " << mf.negative_cache << "\n";
    std::cout << "run_config " << mf.run_config.dump() << "\n";
    return 0;
}

struct SynthArgs {
    std::string out;
    SynthSpec spec;
};

int cmd_synth(const SynthArgs& a) {
    const auto data = make_synth_dataset(a.spec);
    write_synth_dataset(a.out, data);
    std::cout << data.positives.size() << " positives, " << data.negatives.size() << " negative images, "
              << data.test.size() << " test images in " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-window pedestrian detector with pooled channel features"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "bootstrap-train a boosted detector");
    train->set_config("--config", "", "key=value file; flags override it");
    train->add_option("--pos", ta.pos, "directory of positive crops (window centred)")->required();
    train->add_option("--neg", ta.neg, "directory of negative images")->required();
    train->add_option("--out", ta.out, "model file")->required();
    train->add_option("--channels", ta.channels, "channel configuration")->capture_default_str();
    train->add_option("--window", ta.window, "window size WxH")->capture_default_str();
    train->add_option("--trees", ta.trees, "weak learners")->capture_default_str();
    train->add_option("--shrinkage", ta.shrinkage, "learning rate")->capture_default_str();
    train->add_option("--depth", ta.depth, "tree depth")->capture_default_str();
    train->add_option("--cascade", ta.cascade, "soft-cascade threshold before shrinkage")->capture_default_str();
    train->add_option("--stages", ta.stages, "hard-negative mining rounds")->capture_default_str();
    train->add_option("--n0", ta.n0, "random negatives of stage 0")->capture_default_str();
    train->add_option("--ns", ta.ns, "hard negatives added per round")->capture_default_str();
    train->add_option("--max-per-image", ta.per_image, "hard negatives per image")->capture_default_str();
    train->add_option("--stage-trees", ta.stage_trees, "comma list of trees per stage");
    train->add_option("--scales-per-octave", ta.spo)->capture_default_str();
    train->add_option("--max-upscale", ta.upscale)->capture_default_str();
    train->add_option("--seed", ta.seed)->capture_default_str();

    CalibArgs ca;
    auto* calib = app.add_subcommand("calibrate", "fit pAUC weights over the weak learners");
    calib->set_config("--config", "", "key=value file; flags override it");
    calib->add_option("--model", ca.model)->required();
    calib->add_option("--pos", ca.pos, "directory of positive crops")->required();
    calib->add_option("--neg-cache", ca.neg_cache, "negative responses (default: the model's cache)");
    calib->add_option("--out", ca.out)->required();
    calib->add_option("--C", ca.C)->capture_default_str();
    calib->add_option("--beta", ca.beta)->capture_default_str();
    calib->add_option("--alpha", ca.alpha)->capture_default_str();
    calib->add_option("--eps", ca.eps, "cutting-plane tolerance")->capture_default_str();
    calib->add_option("--max-iter", ca.max_iter)->capture_default_str();
    calib->add_flag("--cv", ca.cv, "cross-validate C and beta");
    calib->add_option("--grid-C", ca.grid_C, "comma list");
    calib->add_option("--grid-beta", ca.grid_beta, "comma list");
    calib->add_option("--folds", ca.folds)->capture_default_str();
    calib->add_option("--cv-csv", ca.cv_csv, "cross-validation table");
    calib->add_option("--seed", ca.seed)->capture_default_str();

    DetectArgs da;
    auto* det = app.add_subcommand("detect", "run the detector over a directory");
    det->set_config("--config", "", "key=value file; flags override it");
    det->add_option("--model", da.model)->required();
    det->add_option("--images", da.images)->required();
    det->add_option("--out", da.out)->required();
    det->add_option("--scales-per-octave", da.spo)->capture_default_str();
    det->add_option("--max-upscale", da.upscale)->capture_default_str();
    det->add_option("--nms", da.nms, "NMS overlap")->capture_default_str();
    det->add_flag("--no-pauc", da.no_pauc, "ignore embedded pAUC weights");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "miss rate against FPPI");
    ev->add_option("--detections", ea.detections)->required();
    ev->add_option("--annotations", ea.annotations)->required();
    ev->add_option("--roc", ea.roc, "ROC CSV output");
    ev->add_option("--report", ea.report, "LAMR report output");
    ev->add_option("--iou", ea.iou)->capture_default_str();

    std::string info_path;
    auto* info = app.add_subcommand("info", "describe a model file");
    info->add_option("model", info_path)->required();

    SynthArgs sa;
    auto* syn = app.add_subcommand("synth", "write a synthetic dataset");
    syn->add_option("--out", sa.out)->required();
    syn->add_option("--train-pos", sa.spec.train_positives)->capture_default_str();
    syn->add_option("--train-neg", sa.spec.train_negatives)->capture_default_str();
    syn->add_option("--test", sa.spec.test_images)->capture_default_str();
    syn->add_option("--seed", sa.spec.seed)->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*train) return cmd_train(ta);
        if (*calib) return cmd_calibrate(ca);
        if (*det) return cmd_detect(da);
        if (*ev) return cmd_eval(ea);
        if (*info) return cmd_info(info_path);
        if (*syn) return cmd_synth(sa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
