#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spdet/detect.hpp"
#include "spdet/errors.hpp"
#include "spdet/io.hpp"
#include "spdet/model_io.hpp"
#include "spdet/pauc.hpp"
#include "spdet/pooling.hpp"

namespace py = pybind11;
using namespace spdet;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

// (H, W, 3) or (H, W) array in [0, 255] to a planar image.
RasterImage to_image(const FloatArray& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw InvalidInput("image must be HxW or HxWxC");
    const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    if (c != 1 && c != 3) throw InvalidInput("image must have 1 or 3 channels");
    RasterImage img(w, h, 3);
    const float* src = a.data();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int p = 0; p < 3; ++p) img.at(p, x, y) = src[(static_cast<std::size_t>(y) * w + x) * c + (c == 3 ? p : 0)];
    return img;
}

py::array_t<float> to_array(const RasterImage& img) {
    py::array_t<float> out({img.height(), img.width(), img.planes()});
    auto m = out.mutable_unchecked<3>();
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int p = 0; p < img.planes(); ++p) m(y, x, p) = img.at(p, x, y);
    return out;
}

py::dict detection_dict(const Detection& d) {
    py::dict o;
    o["x"] = d.box.x;
    o["y"] = d.box.y;
    o["w"] = d.box.w;
    o["h"] = d.box.h;
    o["score"] = d.score;
    o["level"] = d.level;
    return o;
}

}  // namespace

PYBIND11_MODULE(_spdet, m) {
    m.doc() = "Spatially pooled channel features and a boosted pedestrian detector";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("read_pnm", [](const std::filesystem::path& p) { return to_array(read_pnm(p)); });

    m.def("channel_count", [](const std::string& cfg) { return channel_count(parse_channel_config(cfg)); });

    m.def(
        "channels",
        [](const FloatArray& image, const std::string& cfg) {
            const ChannelStack s = assemble(to_image(image), parse_channel_config(cfg));
            py::array_t<float> out({s.count(), s.grid_h(), s.grid_w()});
            std::copy(s.data().begin(), s.data().end(), out.mutable_data());
            return py::make_tuple(out, s.names());
        },
        py::arg("image"), py::arg("config") = "sp-Cov+sp-LBP+M+O+LUV",
        "Channel stack (C, H/4, W/4) and plane names.");

    m.def(
        "window_features",
        [](const FloatArray& image, int x0, int y0, int w, int h, const std::string& cfg) {
            const auto f = window_channels(to_image(image), x0, y0, w, h, parse_channel_config(cfg));
            return py::array_t<float>(static_cast<py::ssize_t>(f.size()), f.data());
        },
        py::arg("image"), py::arg("x0"), py::arg("y0"), py::arg("width") = 64, py::arg("height") = 128,
        py::arg("config") = "sp-Cov+sp-LBP+M+O+LUV");

    py::class_<ModelFile>(m, "Model")
        .def_static("load", &load_model)
        .def("save", [](const ModelFile& mf, const std::filesystem::path& p) { save_model(p, mf); })
        .def_property_readonly("trees", [](const ModelFile& mf) { return mf.model.trees.size(); })
        .def_property_readonly("window", [](const ModelFile& mf) { return py::make_tuple(mf.model.window_w, mf.model.window_h); })
        .def_property_readonly("channels", [](const ModelFile& mf) { return std::string(channel_config_name(mf.model.channels)); })
        .def_property_readonly("has_pauc", [](const ModelFile& mf) { return mf.pauc.has_value(); })
        .def(
            "score",
            [](const ModelFile& mf, const FloatArray& features, bool cascade) {
                if (static_cast<std::size_t>(features.size()) != mf.model.dim()) throw InvalidInput("feature length mismatch");
                std::span<const float> f(features.data(), static_cast<std::size_t>(features.size()));
                if (cascade) return score_raw_window(mf.model, f).score;
                BoostedModel open = mf.model;
                open.disable_cascade();
                return score_raw_window(open, f).score;
            },
            py::arg("features"), py::arg("cascade") = true)
        .def(
            "detect",
            [](const ModelFile& mf, const FloatArray& image, int scales_per_octave, double max_upscale, double nms,
               bool use_pauc) {
                DetectOptions o;
                o.pyramid = {scales_per_octave, max_upscale};
                o.nms_overlap = nms;
                const RasterImage img = to_image(image);
                std::vector<Detection> dets;
                {
                    py::gil_scoped_release nogil;
                    dets = detect(img, mf.model, use_pauc && mf.pauc ? &*mf.pauc : nullptr, o);
                }
                py::list out;
                for (const auto& d : dets) out.append(detection_dict(d));
                return out;
            },
            py::arg("image"), py::arg("scales_per_octave") = 8, py::arg("max_upscale") = 2.0, py::arg("nms") = 0.65,
            py::arg("use_pauc") = true);

    m.def(
        "pauc_risk",
        [](const std::vector<double>& pos, const std::vector<double>& neg, double alpha, double beta) {
            return pauc_risk(pos, neg, alpha, beta);
        },
        py::arg("pos"), py::arg("neg"), py::arg("alpha") = 0.0, py::arg("beta") = 1.0,
        "Pairs (pos, neg) with pos < neg among the negatives in the [alpha, beta] FPR band.");

    m.def(
        "lamr",
        [](const std::vector<double>& pos, const std::vector<double>& neg, int images) {
            return lamr(roc_from_scores(pos, neg, images)).value;
        },
        py::arg("pos"), py::arg("neg"), py::arg("images"),
        "Log-average miss rate when each positive is one ground truth and each negative a false positive.");

    m.def(
        "iou", [](std::array<double, 4> a, std::array<double, 4> b) {
            return iou({a[0], a[1], a[2], a[3]}, {b[0], b[1], b[2], b[3]});
        });
}
