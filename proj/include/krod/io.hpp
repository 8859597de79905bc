#pragma once

// CSV / binary / JSON persistence. Doubles are written in shortest
// round-trip form so identical inputs give identical bytes.

#include "krod/burgers.hpp"
#include "krod/core.hpp"
#include "krod/krod.hpp"
#include "krod/nlarx.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace krod::io {

namespace fs = std::filesystem;
using Json   = nlohmann::json;

inline void append_double(std::string& out, double v)
{
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw IoError("format_double: conversion failed");
    out.append(buf.data(), end);
}

inline std::string format_double(double v)
{
    std::string s;
    append_double(s, v);
    return s;
}

inline double parse_double(std::string_view text, const std::string& where)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t')) text.remove_suffix(1);
    double v              = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw IoError(where + ": cannot parse '" + std::string(text) + "' as a number");
    return v;
}

inline void write_text(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

inline std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        auto line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        start = pos + 1;
    }
    return lines;
}

// --- plain matrices -------------------------------------------------------

/// One CSV row per matrix row; optional header line.
inline std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& header = {})
{
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 24);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    if (!header.empty()) out += '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            append_double(out, m(r, c));
        }
        out += '\n';
    }
    return out;
}

inline Matrix matrix_from_csv(std::string_view text, bool has_header, const std::string& name = "csv")
{
    auto lines = lines_of(text);
    if (has_header && !lines.empty()) lines.erase(lines.begin());
    if (lines.empty()) return Matrix(0, 0);
    const auto cols = split(lines.front()).size();
    Matrix m(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto fields = split(lines[r]);
        if (fields.size() != cols)
            throw IoError(name + ": row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                          " fields, expected " + std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(fields[c], name + " row " + std::to_string(r));
    }
    return m;
}

inline void write_matrix_csv(const fs::path& path, const Matrix& m, const std::vector<std::string>& header = {})
{
    write_text(path, matrix_to_csv(m, header));
}

inline Matrix read_matrix_csv(const fs::path& path, bool has_header)
{
    return matrix_from_csv(read_text(path), has_header, path.string());
}

// --- snapshots ------------------------------------------------------------

/// Header row "x,t_0,t_1,...", then one row per grid point.
inline std::string snapshots_to_csv(const SnapshotSet& s)
{
    std::string out = "x";
    for (Eigen::Index i = 0; i < s.columns(); ++i) {
        out += ',';
        append_double(out, s.time(i));
    }
    out += '\n';
    for (Eigen::Index r = 0; r < s.nx(); ++r) {
        append_double(out, s.x[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < s.columns(); ++c) {
            out += ',';
            append_double(out, s.values(r, c));
        }
        out += '\n';
    }
    return out;
}

inline SnapshotSet snapshots_from_csv(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.size() < 2) throw IoError("snapshot csv: need a header and at least one row");
    const auto header = split(lines.front());
    if (header.size() < 3) throw IoError("snapshot csv: need at least two time columns");
    SnapshotSet s;
    std::vector<double> times;
    for (std::size_t i = 1; i < header.size(); ++i) times.push_back(parse_double(header[i], "snapshot csv header"));
    s.t0 = times.front();
    s.dt = times[1] - times[0];
    const Matrix body = matrix_from_csv(text, true, "snapshot csv");
    if (body.cols() != static_cast<Eigen::Index>(header.size()))
        throw IoError("snapshot csv: body width does not match header");
    s.values = body.rightCols(body.cols() - 1);
    s.x.assign(body.col(0).data(), body.col(0).data() + body.rows());
    s.length = s.x.back() - s.x.front();
    return s;
}

inline constexpr std::array<char, 8> kBlobMagic = {'K', 'R', 'O', 'D', 'S', 'N', 'A', 'P'};

namespace detail {

template <class T>
void put_le(std::string& out, T value)
{
    static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

template <class T>
T get_le(std::string_view data, std::size_t offset)
{
    if (offset + sizeof(T) > data.size()) throw IoError("snapshot blob: truncated");
    T value;
    std::memcpy(&value, data.data() + offset, sizeof(T));
    return value;
}

} // namespace detail

/// 32-byte header (magic, u32 N_x, u32 columns, f64 dt, f64 L) then row-major f64.
inline std::string snapshots_to_blob(const SnapshotSet& s)
{
    std::string out(kBlobMagic.begin(), kBlobMagic.end());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.nx()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.columns()));
    detail::put_le<double>(out, s.dt);
    detail::put_le<double>(out, s.length);
    for (Eigen::Index r = 0; r < s.nx(); ++r)
        for (Eigen::Index c = 0; c < s.columns(); ++c) detail::put_le<double>(out, s.values(r, c));
    return out;
}

inline SnapshotSet snapshots_from_blob(std::string_view data)
{
    if (data.size() < 32 || !std::equal(kBlobMagic.begin(), kBlobMagic.end(), data.begin()))
        throw IoError("snapshot blob: bad magic");
    const auto nx   = detail::get_le<std::uint32_t>(data, 8);
    const auto cols = detail::get_le<std::uint32_t>(data, 12);
    SnapshotSet s;
    s.dt     = detail::get_le<double>(data, 16);
    s.length = detail::get_le<double>(data, 24);
    if (data.size() != 32 + std::size_t{nx} * cols * 8) throw IoError("snapshot blob: size does not match header");
    s.values.resize(nx, cols);
    std::size_t off = 32;
    for (std::uint32_t r = 0; r < nx; ++r)
        for (std::uint32_t c = 0; c < cols; ++c, off += 8) s.values(r, c) = detail::get_le<double>(data, off);
    s.x = uniform_grid(s.length, static_cast<int>(nx));
    return s;
}

// --- JSON -----------------------------------------------------------------

inline Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Vector vector_from_json(const Json& j)
{
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline Json triplet_sidecar(const KoopmanTriplet& t)
{
    return Json{{"k", t.rank},
                {"seed", t.seed},
                {"gram_eigenvalues", to_json(t.gram_eigenvalues)},
                {"min_gram_eigenvalue", t.min_gram_eigenvalue},
                {"n_x", t.modes.rows()},
                {"n_t", t.amplitudes.cols()}};
}

inline Json to_json(const NlarxModel& m)
{
    return Json{{"orders", {{"na", m.orders.na}, {"nb", m.orders.nb}, {"nk", m.orders.nk}}},
                {"hidden_width", m.hidden_width},
                {"output_scaling", {{"mean", m.output_scaling.mean}, {"scale", m.output_scaling.scale}}},
                {"input_scaling", {{"mean", m.input_scaling.mean}, {"scale", m.input_scaling.scale}}},
                {"theta", to_json(m.theta)},
                {"train_loss", m.train_loss},
                {"validation_rmse", m.validation_rmse},
                {"one_step_rmse", m.one_step_rmse},
                {"train_samples", m.train_samples},
                {"iterations", m.iterations}};
}

inline NlarxModel nlarx_from_json(const Json& j)
{
    try {
        NlarxModel m;
        m.orders.na              = j.at("orders").at("na").get<int>();
        m.orders.nb              = j.at("orders").at("nb").get<int>();
        m.orders.nk              = j.at("orders").at("nk").get<int>();
        m.hidden_width           = j.at("hidden_width").get<int>();
        m.output_scaling.mean    = j.at("output_scaling").at("mean").get<double>();
        m.output_scaling.scale   = j.at("output_scaling").at("scale").get<double>();
        m.input_scaling.mean     = j.at("input_scaling").at("mean").get<double>();
        m.input_scaling.scale    = j.at("input_scaling").at("scale").get<double>();
        m.theta                  = vector_from_json(j.at("theta"));
        m.train_loss             = j.at("train_loss").get<double>();
        m.validation_rmse        = j.at("validation_rmse").get<double>();
        m.one_step_rmse          = j.value("one_step_rmse", 0.0);
        m.train_samples          = j.at("train_samples").get<int>();
        m.iterations             = j.at("iterations").get<int>();
        if (m.theta.size() != NlarxModel::parameter_count(m.orders, m.hidden_width))
            throw IoError("nlarx model: theta length does not match orders and width");
        return m;
    } catch (const Json::exception& e) {
        throw IoError(std::string("nlarx model: ") + e.what());
    }
}

inline void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json read_json(const fs::path& path)
{
    try {
        return Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace krod::io
