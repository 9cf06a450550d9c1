#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "gapcurve/error.hpp"
#include "gapcurve/io.hpp"
#include "support.hpp"

using namespace gapcurve;
using namespace gapcurve::testing;

TEST_CASE("potential JSON round trip with exact field names") {
    auto g = rng(90);
    Potential q = random_bandlimited(g, 64, 2.5, 5, 0.8);
    std::string text = potential_to_json(q);
    CHECK(text.find("\"n\"") != std::string::npos);
    CHECK(text.find("\"T\"") != std::string::npos);
    CHECK(text.find("\"theta\"") != std::string::npos);
    CHECK(text.find("\"samples\"") != std::string::npos);

    Potential back = potential_from_json(text);
    CHECK(back.n() == q.n());
    CHECK(back.T() == q.T());
    CHECK(back.theta() == q.theta());
    for (int j = 0; j < q.n(); ++j) {
        CHECK(back.sample(j) == q.sample(j));  // bit-exact via shortest round trip
    }
}

TEST_CASE("potential JSON validation") {
    CHECK_THROWS_AS(potential_from_json("{"), Error);
    CHECK_THROWS_AS(potential_from_json("{\"n\":8,\"T\":1.0,\"theta\":0.0}"), Error);
    // n mismatch
    CHECK_THROWS_AS(potential_from_json(
                        "{\"n\":4,\"T\":1.0,\"theta\":0.0,\"samples\":[[0,0],[0,0]]}"),
                    Error);
}

TEST_CASE("spectrum JSON carries the schema fields") {
    Potential q = constant_potential(1.0, 128, two_pi);
    SpectralData sd = perturbed_fourier(q, 9);
    std::string text = spectrum_to_json(sd);
    for (const char* key : {"\"T\"", "\"theta\"", "\"K_central\"", "\"entries\"", "\"k\"",
                            "\"lambda\"", "\"mult\"", "\"z\""}) {
        CHECK(text.find(key) != std::string::npos);
    }
}

TEST_CASE("solver config JSON") {
    SolverConfig cfg = solver_config_from_json(
        "{\"N\":3,\"n_trunc\":10,\"tol\":1e-7,\"max_iter\":55,"
        "\"exact_jacobian_every\":4,\"damping_max\":6}");
    CHECK(cfg.N == 3);
    CHECK(cfg.n_trunc == 10);
    CHECK(cfg.tol == 1e-7);
    CHECK(cfg.max_iter == 55);
    CHECK(cfg.exact_jacobian_every == 4);
    CHECK(cfg.damping_max == 6);
    CHECK_THROWS_AS(solver_config_from_json("nonsense"), Error);
}

TEST_CASE("curve CSV round trip, R3 and S3") {
    CurveSamples circle = unit_circle(64);
    std::string csv = curve_to_csv(circle);
    CHECK(csv.rfind("t,x,y,z\n", 0) == 0);
    CurveSamples back = curve_from_csv(csv);
    CHECK(back.space == Space::R3);
    CHECK(back.n() == 64);
    CHECK(std::abs(back.T - circle.T) < 1e-12);
    for (int j = 0; j < 64; ++j) {
        CHECK(back.points_r3[static_cast<size_t>(j)].x1 ==
              circle.points_r3[static_cast<size_t>(j)].x1);
    }

    CurveSamples gc = great_circle_s3(64);
    std::string csv2 = curve_to_csv(gc);
    CHECK(csv2.rfind("t,q0,q1,q2,q3\n", 0) == 0);
    CurveSamples back2 = curve_from_csv(csv2);
    CHECK(back2.space == Space::S3);
}

TEST_CASE("curve CSV parse errors carry line info") {
    try {
        curve_from_csv("t,x,y,z\n0,0,0,zap\n");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(curve_from_csv("a,b\n1,2\n"), Error);
    // comments and blank lines are fine
    CurveSamples c = curve_from_csv("# comment\nt,x,y,z\n" + [] {
        std::string rows;
        for (int j = 0; j < 8; ++j) {
            rows += std::to_string(0.125 * j) + ",1,2,3\n";
        }
        return rows;
    }());
    CHECK(c.n() == 8);
}

TEST_CASE("atomic write leaves no partial file behind") {
    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "gapcurve_io_test.json").string();
    write_file_atomic(path, "{\"ok\":true}");
    CHECK(read_file(path) == "{\"ok\":true}");
    CHECK(!fs::exists(path + ".tmp"));
    fs::remove(path);
}
