#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spdet/detect.hpp"
#include "spdet/evalkit.hpp"
#include "spdet/imgcore.hpp"

namespace spdet {

namespace fs = std::filesystem;

/// Binary PPM (P6) or PGM (P5), maxval <= 255. Grey images are replicated to
/// three planes. Samples stay in [0, 255].
RasterImage read_pnm(const fs::path& path);
/// Writes a 3-plane image as P6 (a 1-plane image as P5), rounding and clamping.
void write_pnm(const fs::path& path, const RasterImage& img);

/// .ppm / .pgm files of a directory, sorted by name. A missing directory is an IoError.
std::vector<fs::path> list_images(const fs::path& dir);

/// Lines "label x y w h visible_fraction"; '#' starts a comment.
std::vector<GtBox> read_annotations(const fs::path& path);
void write_annotations(const fs::path& path, const std::vector<GtBox>& boxes);

struct DetectionFile {
    std::vector<std::string> header;  // lines without the leading "# "
    std::vector<std::string> images;  // processed image ids, in order
    std::map<std::string, std::vector<ScoredBox>> boxes;
};

/// "# key=value" header, "# image <id>" per processed image, then
/// "<id> x y w h score" lines.
void write_detections(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::pair<std::string, std::vector<Detection>>>& per_image);
DetectionFile read_detections(const fs::path& path);

std::string format_double(double v);

}  // namespace spdet
