#include "krod/io.hpp"
#include "krod/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace krod;
namespace fs = std::filesystem;

namespace {

SnapshotSet tiny_snapshots()
{
    auto spec = preset_experiment("exp1");
    spec.nx   = 21;
    spec.nt   = 12;
    spec.quad_order = 40;
    return generate_snapshots(spec);
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("krod_io_" + name);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST(Io, DoublesRoundTripExactly)
{
    RandomStream s(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = s.normal() * std::pow(10.0, static_cast<int>(s.uniform() * 60) - 30);
        EXPECT_EQ(io::parse_double(io::format_double(v), "t"), v);
    }
    EXPECT_EQ(io::parse_double(" 1.5\r", "t"), 1.5);
    EXPECT_THROW(io::parse_double("1.5x", "t"), IoError);
    EXPECT_THROW(io::parse_double("", "t"), IoError);
}

TEST(Io, MatrixCsvRoundTrip)
{
    RandomStream s(4);
    const Matrix m   = s.normal_matrix(7, 5);
    const auto text  = io::matrix_to_csv(m, {"a", "b", "c", "d", "e"});
    EXPECT_EQ(text.substr(0, 10), "a,b,c,d,e\n");
    EXPECT_TRUE(io::matrix_from_csv(text, true) == m);
    EXPECT_TRUE(io::matrix_from_csv(io::matrix_to_csv(m), false) == m);
    EXPECT_THROW(io::matrix_from_csv("1,2\n3\n", false), IoError);
}

TEST(Io, SnapshotCsvRoundTrip)
{
    const auto s    = tiny_snapshots();
    const auto back = io::snapshots_from_csv(io::snapshots_to_csv(s));
    EXPECT_TRUE(back.values == s.values);
    EXPECT_EQ(back.x, s.x);
    EXPECT_DOUBLE_EQ(back.dt, s.dt);
    EXPECT_THROW(io::snapshots_from_csv("x,0\n"), IoError);
}

TEST(Io, SnapshotBlobRoundTrip)
{
    const auto s    = tiny_snapshots();
    const auto blob = io::snapshots_to_blob(s);
    EXPECT_EQ(blob.size(), 32u + 8u * static_cast<std::size_t>(s.values.size()));
    const auto back = io::snapshots_from_blob(blob);
    EXPECT_TRUE(back.values == s.values);
    EXPECT_EQ(back.dt, s.dt);
    EXPECT_EQ(back.length, s.length);
    EXPECT_THROW(io::snapshots_from_blob(blob.substr(0, blob.size() - 8)), IoError);
    std::string bad = blob;
    bad[0]          = 'X';
    EXPECT_THROW(io::snapshots_from_blob(bad), IoError);
}

TEST(Io, NlarxJsonRoundTrip)
{
    NlarxModel m;
    m.orders       = {2, 1, 1};
    m.hidden_width = 3;
    m.theta        = Vector::LinSpaced(NlarxModel::parameter_count(m.orders, 3), -1.0, 1.0 / 3.0);
    m.output_scaling = {0.1, 2.0};
    m.input_scaling  = {-0.3, 0.7};
    m.train_loss     = 1e-7;
    m.train_samples  = 200;
    const auto back  = io::nlarx_from_json(io::Json::parse(io::to_json(m).dump()));
    EXPECT_TRUE(back.theta == m.theta);
    EXPECT_EQ(back.orders, m.orders);
    EXPECT_EQ(back.input_scaling.scale, 0.7);

    auto broken          = io::to_json(m);
    broken["theta"]      = {1.0, 2.0};
    EXPECT_THROW(io::nlarx_from_json(broken), IoError);
    broken.erase("orders");
    EXPECT_THROW(io::nlarx_from_json(broken), IoError);
}

TEST(Io, FileHelpers)
{
    const auto dir = scratch("files");
    io::write_json(dir / "a.json", io::Json{{"x", 1.25}});
    EXPECT_EQ(io::read_json(dir / "a.json").at("x").get<double>(), 1.25);
    io::write_text(dir / "b.json", "{oops");
    EXPECT_THROW(io::read_json(dir / "b.json"), IoError);
    EXPECT_THROW(io::read_text(dir / "missing.txt"), IoError);
    fs::remove_all(dir);
}
