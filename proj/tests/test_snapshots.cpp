#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "romkit/snapshots.hpp"
#include "test_support.hpp"

#include <filesystem>
#include <fstream>

using namespace romkit;
using test::random_matrix;

namespace {

namespace fs = std::filesystem;

fs::path scratch() {
    const fs::path dir = fs::current_path() / "scratch_snapshots";
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream os(path);
    os << body;
}

std::string read_text(const fs::path& path) {
    std::ifstream is(path);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("csv parse of a 2x2 snapshot set") {
    const fs::path p = scratch() / "two.csv";
    write_text(p, "1,0.5\n0,0\n");
    const SnapshotSet set = load_snapshots(p, SnapshotFormat::Csv);
    REQUIRE(set.n_dof() == 2);
    REQUIRE(set.m() == 2);
    CHECK(set.data(0, 0) == 1.0);
    CHECK(set.data(1, 0) == 0.0);
    CHECK(set.data(0, 1) == 0.5);
    CHECK(set.data(1, 1) == 0.0);
}

TEST_CASE("romk binary round trip is bit exact") {
    SnapshotSet set;
    set.data = random_matrix(10, 5, 42);
    set.times = Vector{0.0, 0.1, 0.2, 0.3, 0.4};
    set.params = random_matrix(2, 5, 43);
    const fs::path p = scratch() / "roundtrip.romk";
    save_snapshots(set, p, SnapshotFormat::RomkBinary);
    const SnapshotSet back = load_snapshots(p, SnapshotFormat::RomkBinary);
    CHECK(back.data == set.data);
    CHECK(*back.times == *set.times);
    CHECK(*back.params == *set.params);
}

TEST_CASE("csv round trip preserves values, times and params") {
    SnapshotSet set;
    set.data = random_matrix(4, 3, 77);
    set.times = Vector{0.5, 1.0, 1.5};
    set.params = random_matrix(2, 3, 78);
    const fs::path p = scratch() / "roundtrip.csv";
    save_snapshots(set, p, SnapshotFormat::Csv);
    const SnapshotSet back = load_snapshots(p, SnapshotFormat::Csv);
    CHECK(back.data == set.data);  // shortest round-trip formatting is exact
    CHECK(*back.times == *set.times);
    CHECK(*back.params == *set.params);
    CHECK(back.dt() == doctest::Approx(0.5));
}

TEST_CASE("csv with nan is rejected naming the coordinates") {
    const fs::path p = scratch() / "bad.csv";
    write_text(p, "1,2\n3,nan\n");
    try {
        load_snapshots(p, SnapshotFormat::Csv);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 1") != std::string::npos);
        CHECK(msg.find("col 1") != std::string::npos);
    }
}

TEST_CASE("csv format errors carry line information") {
    const fs::path ragged = scratch() / "ragged.csv";
    write_text(ragged, "1,2\n3\n");
    CHECK_THROWS_AS(load_snapshots(ragged, SnapshotFormat::Csv), DimensionError);

    const fs::path garbled = scratch() / "garbled.csv";
    write_text(garbled, "1,2\n3,abc\n");
    try {
        load_snapshots(garbled, SnapshotFormat::Csv);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("csv of a single value round trips as plain text") {
    SnapshotSet set;
    set.data = Matrix(1, 1);
    set.data(0, 0) = 3.25;
    const fs::path p = scratch() / "one.csv";
    save_snapshots(set, p, SnapshotFormat::Csv);
    CHECK(read_text(p) == "3.25\n");
}

TEST_CASE("save into a non-directory path raises an io error") {
    const fs::path blocker = scratch() / "blocker.txt";
    write_text(blocker, "x");
    SnapshotSet set;
    set.data = Matrix(1, 1, 1.0);
    CHECK_THROWS_AS(save_snapshots(set, blocker / "sub.csv", SnapshotFormat::Csv), IoError);
}

TEST_CASE("manifest checksum catches content corruption") {
    SnapshotSet set;
    set.data = random_matrix(3, 3, 9);
    const fs::path p = scratch() / "checked.csv";
    save_snapshots(set, p, SnapshotFormat::Csv);
    // tamper with the data but keep the manifest
    write_text(p, "9,9,9\n9,9,9\n9,9,9\n");
    CHECK_THROWS_AS(load_snapshots(p, SnapshotFormat::Csv), FormatError);
}

TEST_CASE("non-uniform times are rejected") {
    SnapshotSet set;
    set.data = random_matrix(2, 3, 10);
    set.times = Vector{0.0, 1.0, 2.5};
    CHECK_THROWS_AS(validate(set), ValidationError);
    set.times = Vector{0.0, 1.0, 1.0};
    CHECK_THROWS_AS(validate(set), ValidationError);
}

TEST_CASE("split_shifted produces the shifted pair") {
    SnapshotSet set;
    set.data = Matrix(2, 3);
    // columns a, b, c
    set.data(0, 0) = 1.0;
    set.data(1, 0) = 2.0;
    set.data(0, 1) = 3.0;
    set.data(1, 1) = 4.0;
    set.data(0, 2) = 5.0;
    set.data(1, 2) = 6.0;
    const auto [s, sdot] = split_shifted(set);
    REQUIRE(s.cols() == 2);
    REQUIRE(sdot.cols() == 2);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 1) == 3.0);
    CHECK(sdot(0, 0) == 3.0);
    CHECK(sdot(0, 1) == 5.0);
}

TEST_CASE("split_shifted minimal and error cases") {
    SnapshotSet two;
    two.data = random_matrix(4, 2, 11);
    const auto [s, sdot] = split_shifted(two);
    CHECK(s.cols() == 1);
    CHECK(sdot.cols() == 1);

    SnapshotSet one;
    one.data = random_matrix(4, 1, 12);
    CHECK_THROWS_AS(split_shifted(one), DimensionError);
}

TEST_CASE("split_shifted matches the index-shift oracle on a wide set") {
    SnapshotSet set;
    set.data = random_matrix(7, 100, 13);
    const auto [s, sdot] = split_shifted(set);
    for (std::size_t j = 0; j < 99; ++j)
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(s(i, j) == set.data(i, j));
            CHECK(sdot(i, j) == set.data(i, j + 1));
        }
    // overlap: S column j equals Sdot column j-1
    for (std::size_t j = 1; j < 99; ++j)
        for (std::size_t i = 0; i < 7; ++i) CHECK(s(i, j) == sdot(i, j - 1));
}

TEST_CASE("dt resolution order") {
    SnapshotSet set;
    set.data = random_matrix(2, 3, 14);
    CHECK(set.dt() == 1.0);
    set.times = Vector{0.0, 0.25, 0.5};
    CHECK(set.dt() == doctest::Approx(0.25));
    set.dt_explicit = 0.1;
    CHECK(set.dt() == 0.1);
}

TEST_CASE("manifest reports shape and checksum") {
    SnapshotSet set;
    set.data = random_matrix(3, 4, 15);
    set.params = random_matrix(2, 4, 16);
    const DatasetManifest m = manifest_for(set);
    CHECK(m.n_dof == 3);
    CHECK(m.m == 4);
    CHECK(m.param_names.size() == 2);
    CHECK(m.checksum == content_checksum(set));
}
