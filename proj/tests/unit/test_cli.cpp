#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#ifdef SPDET_CLI_PATH

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + SPDET_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("spdet_cli_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST_CASE("command line pipeline") {
    TempDir t;
    REQUIRE(run("synth --out " + (t / "data") + " --train-pos 24 --train-neg 3 --test 2 --seed 3") == 0);
    REQUIRE(fs::exists(t.path / "data" / "test" / "annotations"));
    REQUIRE(run("train --pos " + (t / "data/train/pos") + " --neg " + (t / "data/train/neg") + " --out " +
                (t / "m.json") +
                " --channels M+O+LUV+LBP --trees 8 --depth 2 --stages 1 --n0 80 --ns 40 --scales-per-octave 2"
                " --max-upscale 1") == 0);
    REQUIRE(run("calibrate --model " + (t / "m.json") + " --pos " + (t / "data/train/pos") + " --out " +
                (t / "mp.json") + " --C 4 --beta 0.7") == 0);
    CHECK(run("info " + (t / "mp.json")) == 0);

    const std::string det = "detect --model " + (t / "mp.json") + " --images " + (t / "data/test/images") +
                            " --scales-per-octave 2 --max-upscale 1 --out ";
    REQUIRE(run(det + (t / "d1.txt")) == 0);
    REQUIRE(run(det + (t / "d2.txt")) == 0);
    CHECK(slurp(t.path / "d1.txt") == slurp(t.path / "d2.txt"));
    CHECK(slurp(t.path / "d1.txt").find("# image ") != std::string::npos);

    CHECK(run("eval --detections " + (t / "d1.txt") + " --annotations " + (t / "data/test/annotations") +
              " --roc " + (t / "roc.csv") + " --report " + (t / "report.txt")) == 0);
    CHECK(fs::file_size(t.path / "roc.csv") > 0);
    CHECK(slurp(t.path / "report.txt").find("lamr") != std::string::npos);

    // An empty image directory is not an error.
    fs::create_directories(t.path / "empty");
    CHECK(run("detect --model " + (t / "mp.json") + " --images " + (t / "empty") + " --out " + (t / "e.txt")) == 0);

    // A detection file naming an image without annotation aborts the evaluation.
    std::ofstream(t.path / "stray.txt") << "# image nosuch\nnosuch 0 0 64 128 1\n";
    CHECK(run("eval --detections " + (t / "stray.txt") + " --annotations " + (t / "data/test/annotations")) != 0);

    CHECK(run("info " + (t / "absent.json")) != 0);
    CHECK(run("train") != 0);
}

#endif
