#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spdet/errors.hpp"
#include "spdet/io.hpp"

namespace spdet {

namespace {

int read_header_int(std::istream& is) {
    int c = is.peek();
    while (is && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            std::string skip;
            std::getline(is, skip);
        } else {
            is.get();
        }
        c = is.peek();
    }
    int v = -1;
    if (!(is >> v)) throw IoError("pnm: malformed header");
    return v;
}

}  // namespace

RasterImage read_pnm(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    char magic[2] = {0, 0};
    is.read(magic, 2);
    if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) throw IoError(path.string() + ": not a binary PPM/PGM");
    const int channels = magic[1] == '6' ? 3 : 1;
    const int w = read_header_int(is);
    const int h = read_header_int(is);
    const int maxval = read_header_int(is);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw IoError(path.string() + ": unsupported dimensions or maxval");
    is.get();
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * channels);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() != static_cast<std::streamsize>(buf.size())) throw IoError(path.string() + ": truncated pixel data");

    RasterImage img(w, h, 3);
    const float scale = 255.0f / static_cast<float>(maxval);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * w + x) * channels;
            for (int p = 0; p < 3; ++p) img.at(p, x, y) = buf[i + (channels == 3 ? p : 0)] * scale;
        }
    }
    return img;
}

void write_pnm(const fs::path& path, const RasterImage& img) {
    if (img.empty() || (img.planes() != 1 && img.planes() != 3)) throw InvalidInput("write_pnm: need 1 or 3 planes");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    const int ch = img.planes();
    os << (ch == 3 ? "P6" : "P5") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> buf(static_cast<std::size_t>(img.width()) * img.height() * ch);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int p = 0; p < ch; ++p) {
                const float v = std::clamp(std::round(img.at(p, x, y)), 0.0f, 255.0f);
                buf[(static_cast<std::size_t>(y) * img.width() + x) * ch + p] = static_cast<unsigned char>(v);
            }
        }
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext == ".ppm" || ext == ".pgm") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<GtBox> read_annotations(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open annotation " + path.string());
    std::vector<GtBox> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        GtBox g;
        if (!(ls >> g.label)) continue;
        if (!(ls >> g.box.x >> g.box.y >> g.box.w >> g.box.h >> g.visible)) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected label x y w h visible");
        }
        out.push_back(g);
    }
    return out;
}

void write_annotations(const fs::path& path, const std::vector<GtBox>& boxes) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    for (const auto& g : boxes) {
        os << g.label << ' ' << format_double(g.box.x) << ' ' << format_double(g.box.y) << ' '
           << format_double(g.box.w) << ' ' << format_double(g.box.h) << ' ' << format_double(g.visible) << '\n';
    }
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_detections(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::pair<std::string, std::vector<Detection>>>& per_image) {
    for (const auto& h : header) os << "# " << h << '\n';
    for (const auto& [id, dets] : per_image) os << "# image " << id << '\n';
    for (const auto& [id, dets] : per_image) {
        for (const auto& d : dets) {
            os << id << ' ' << format_double(d.box.x) << ' ' << format_double(d.box.y) << ' '
               << format_double(d.box.w) << ' ' << format_double(d.box.h) << ' ' << format_double(d.score) << '\n';
        }
    }
}

DetectionFile read_detections(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open detections " + path.string());
    DetectionFile out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string rest = line.size() > 2 ? line.substr(2) : "";
            if (rest.rfind("image ", 0) == 0) {
                out.images.push_back(rest.substr(6));
                out.boxes[out.images.back()];
            } else {
                out.header.push_back(rest);
            }
            continue;
        }
        std::istringstream ls(line);
        std::string id;
        ScoredBox b;
        if (!(ls >> id >> b.box.x >> b.box.y >> b.box.w >> b.box.h >> b.score)) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected id x y w h score");
        }
        if (!out.boxes.count(id)) {
            out.images.push_back(id);
        }
        out.boxes[id].push_back(b);
    }
    return out;
}

}  // namespace spdet
