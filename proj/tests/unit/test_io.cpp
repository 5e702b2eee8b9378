#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "spdet/errors.hpp"
#include "spdet/io.hpp"
#include "spdet/model_io.hpp"

using namespace spdet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("spdet_io_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("pnm round trip") {
    TempDir t;
    std::mt19937_64 rng(71);
    const auto rgb = oracle::random_rgb(13, 7, rng);
    write_pnm(t.path / "a.ppm", rgb);
    const auto a = read_pnm(t.path / "a.ppm");
    CHECK(std::equal(a.data().begin(), a.data().end(), rgb.data().begin(), rgb.data().end()));

    RasterImage grey(5, 4, 1);
    for (std::size_t i = 0; i < grey.data().size(); ++i) grey.data()[i] = static_cast<float>(i * 10);
    write_pnm(t.path / "g.pgm", grey);
    const auto back = read_pnm(t.path / "g.pgm");
    REQUIRE(back.planes() == 3);
    for (int p = 0; p < 3; ++p) CHECK(back.at(p, 2, 3) == grey.at(0, 2, 3));

    // Rounding and clamping on write.
    RasterImage odd(1, 1, 1);
    odd.data()[0] = 300.0f;
    write_pnm(t.path / "o.pgm", odd);
    CHECK(read_pnm(t.path / "o.pgm").at(0, 0, 0) == 255.0f);

    std::ofstream(t.path / "bad.ppm") << "P3\n1 1\n255\n0 0 0\n";
    CHECK_THROWS_AS(read_pnm(t.path / "bad.ppm"), IoError);
    std::ofstream(t.path / "short.ppm", std::ios::binary) << "P6\n4 4\n255\n" << std::string(10, 'x');
    CHECK_THROWS_AS(read_pnm(t.path / "short.ppm"), IoError);
    CHECK_THROWS_AS(read_pnm(t.path / "missing.ppm"), IoError);

    const auto listed = list_images(t.path);
    REQUIRE(listed.size() == 5);
    CHECK(listed.front().filename() == "a.ppm");
    CHECK_THROWS_AS(list_images(t.path / "nope"), IoError);
}

TEST_CASE("annotation round trip") {
    TempDir t;
    std::vector<GtBox> gt(2);
    gt[0].box = {1.5, 2, 30, 60};
    gt[0].visible = 0.8;
    gt[1].box = {10, 20, 40, 90};
    gt[1].label = "people";
    write_annotations(t.path / "a.txt", gt);
    const auto back = read_annotations(t.path / "a.txt");
    REQUIRE(back.size() == 2);
    CHECK(back[0].box == gt[0].box);
    CHECK(back[0].visible == 0.8);
    CHECK(back[1].label == "people");

    std::ofstream(t.path / "c.txt") << "# comment\n\nperson 0 0 10 20 1\n";
    CHECK(read_annotations(t.path / "c.txt").size() == 1);
    std::ofstream(t.path / "bad.txt") << "person 0 0 10\n";
    CHECK_THROWS_AS(read_annotations(t.path / "bad.txt"), IoError);
}

TEST_CASE("detections file") {
    TempDir t;
    const std::vector<std::pair<std::string, std::vector<Detection>>> per{
        {"img0", {{{1, 2, 64, 128}, 0.125, 0}, {{5, 6, 32, 64}, -1.0 / 3.0, 1}}}, {"img1", {}}};
    {
        std::ofstream os(t.path / "d.txt");
        write_detections(os, {"model=m.json", "channels=AcfLbp"}, per);
    }
    const auto df = read_detections(t.path / "d.txt");
    CHECK(df.header == std::vector<std::string>{"model=m.json", "channels=AcfLbp"});
    CHECK(df.images == std::vector<std::string>{"img0", "img1"});
    REQUIRE(df.boxes.at("img0").size() == 2);
    CHECK(df.boxes.at("img0")[1].score == -1.0 / 3.0);  // shortest round-trip formatting
    CHECK(df.boxes.at("img1").empty());
    CHECK(format_double(0.1) == "0.1");
    std::ofstream(t.path / "bad.txt") << "img0 1 2 3\n";
    CHECK_THROWS_AS(read_detections(t.path / "bad.txt"), IoError);
}

TEST_CASE("model round trip") {
    TempDir t;
    std::mt19937_64 rng(72);
    ModelFile mf;
    mf.model = oracle::random_model(20, 10, 2, rng);
    mf.model.window_w = 8;
    mf.model.window_h = 8;
    mf.model.quant.lo[3] = -0.3f;
    mf.model.quant.hi[3] = 1.0f / 3.0f;
    PaucModel pm;
    for (int k = 0; k < 10; ++k) pm.w.push_back(0.1 * k - 0.37);
    pm.beta = 0.7;
    pm.xi = 0.25;
    pm.dual_objective = {0.0, 0.125, 0.2};
    mf.pauc = pm;
    mf.run_config = {{"seed", 3}};
    save_model(t.path / "m.json", mf);
    const auto back = load_model(t.path / "m.json");
    CHECK(back.model == mf.model);
    REQUIRE(back.pauc.has_value());
    CHECK(*back.pauc == pm);
    CHECK(back.run_config["seed"] == 3);
    CHECK(serialize_model(back) == serialize_model(mf));

    auto j = model_to_json(mf);
    j["trees"][0]["feature"][0] = 1000;
    CHECK_THROWS_AS(model_from_json(j), InvalidInput);
    CHECK_THROWS_AS(parse_model("{not json"), InvalidInput);
    CHECK_THROWS_AS(load_model(t.path / "absent.json"), IoError);
}

TEST_CASE("negative cache round trip") {
    TempDir t;
    NegativeCache c;
    c.responses = ResponseMatrix(4);
    c.responses.push(std::vector<std::int8_t>{1, -1, -1, 1});
    c.responses.push(std::vector<std::int8_t>{-1, -1, 1, 1});
    c.image_ids = {3, 7};
    save_negative_cache(t.path / "n.txt", c);
    std::ifstream is(t.path / "n.txt");
    std::string first;
    std::getline(is, first);
    CHECK(first == "3 +--+");
    const auto back = load_negative_cache(t.path / "n.txt");
    CHECK(back.image_ids == c.image_ids);
    CHECK(back.responses.values == c.responses.values);
    c.image_ids.pop_back();
    CHECK_THROWS_AS(save_negative_cache(t.path / "x.txt", c), InvalidInput);
}
