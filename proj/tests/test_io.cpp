#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "qdetect/error.hpp"
#include "qdetect/io.hpp"

using namespace qdetect;

TEST_CASE("boundary CSV parsing") {
    const Boundary2D b = io::parse_boundary_csv("# qdetect-boundary-v1 phi_zero=2.5\nphi1,b\n0,2\n1,1\n2.5,0\n");
    CHECK(b.phi1_grid == std::vector<double>{0, 1, 2.5});
    CHECK(b.b_values == std::vector<double>{2, 1, 0});
    CHECK(b.phi_zero == 2.5);
    CHECK(b.std_error.size() == 3);

    // without the header value the zero comes from the curve
    const Boundary2D c = io::parse_boundary_csv("phi1,b\n0,2\n1,1\n2,0\n3,0\n");
    CHECK(c.phi_zero == doctest::Approx(2.0));

    CHECK_THROWS_AS(io::parse_boundary_csv("phi1,b\n0,2\n"), Error);
    CHECK_THROWS_AS(io::parse_boundary_csv("phi1,b\n0 2\n1 1\n"), Error);
    CHECK_THROWS_AS(io::parse_boundary_csv("phi1,b\n0,1\n1,2\n"), Error);
    CHECK_THROWS_AS(io::parse_boundary_csv("phi1,b\n1,1\n0,0\n"), Error);
    CHECK_THROWS_AS(io::parse_boundary_csv("phi1,b\n0,-1\n1,-2\n"), Error);
}

TEST_CASE("file round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "qdetect_io_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "x.txt").string();
    io::write_file(path, "abc\n1,2\n");
    CHECK(io::read_file(path) == "abc\n1,2\n");
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(io::read_file(path), Error);
    CHECK_THROWS_AS(io::write_file((dir / "missing" / "y.txt").string(), "z"), Error);
}
