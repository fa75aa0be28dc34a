#pragma once

#include "frim/errors.hpp"
#include "frim/format.hpp"
#include "frim/lyapunov_perron.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace frim {

/// Chart container format:
///   bytes 0..7   magic "FRIMCH01"
///   u64          header length in bytes (little-endian)
///   header       JSON (operator, sigma, grid, nonlinearity, tolerances)
///   payload      node_count * (M - N) doubles, row-major node order
///   metadata     node_count * { u32 iterations, f64 contraction, u8 converged }
inline constexpr char kChartMagic[8] = {'F', 'R', 'I', 'M', 'C', 'H', '0', '1'};

namespace detail {

inline nlohmann::ordered_json chart_header(const ManifoldChart& chart) {
    nlohmann::ordered_json h;
    h["format"] = "frim-chart";
    h["version"] = 1;
    h["alpha"] = chart.alpha;
    h["epsilon"] = chart.epsilon;
    h["modes"] = chart.modes;
    h["n"] = chart.N;
    h["sigma"] = chart.sigma;
    h["k1"] = chart.k1;
    h["k2"] = chart.k2;
    h["l_f"] = chart.l_f;
    h["lp"] = {{"horizon", chart.config.horizon},
               {"steps", chart.config.steps},
               {"tol", chart.config.tol},
               {"max_iter", chart.config.max_iter},
               {"tail", tail_mode_name(chart.config.tail)}};
    h["nonlinearity"] = chart.nonlinearity;
    h["forcing"] = chart.forcing;
    nlohmann::ordered_json axes = nlohmann::ordered_json::array();
    for (const auto& a : chart.grid.axes)
        axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
    h["grid"] = axes;
    h["lipschitz_estimate"] = chart.lipschitz_estimate;
    h["failed_nodes"] = chart.failed_nodes;
    return h;
}

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated chart file: " + path);
    return v;
}

} // namespace detail

inline void save_chart_binary(const ManifoldChart& chart, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open chart file for writing: " + path);
    os.write(kChartMagic, sizeof(kChartMagic));
    const std::string header = detail::chart_header(chart).dump();
    detail::write_raw<uint64_t>(os, header.size());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& row : chart.phi)
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row.size() * sizeof(double)));
    for (const auto& m : chart.meta) {
        detail::write_raw<uint32_t>(os, static_cast<uint32_t>(m.iterations));
        detail::write_raw<double>(os, m.contraction);
        detail::write_raw<uint8_t>(os, m.converged ? 1 : 0);
    }
    if (!os) throw IoError("failed writing chart file: " + path);
}

inline ManifoldChart load_chart_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open chart file: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kChartMagic, sizeof(magic)) != 0)
        throw IoError("not a frim chart file (bad magic): " + path);
    const auto header_len = detail::read_raw<uint64_t>(is, path);
    if (header_len > (uint64_t{1} << 30)) throw IoError("chart header too large: " + path);
    std::string header(header_len, '\0');
    is.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!is) throw IoError("truncated chart header: " + path);

    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("chart header is not valid JSON (" + std::string(e.what()) +
                      "): " + path);
    }
    auto require = [&](const char* key) -> const nlohmann::json& {
        if (!h.contains(key))
            throw IoError("chart header missing field '" + std::string(key) + "': " + path);
        return h.at(key);
    };
    if (require("format").get<std::string>() != "frim-chart" ||
        require("version").get<int>() != 1)
        throw IoError("unsupported chart format/version: " + path);

    ManifoldChart chart;
    chart.alpha = require("alpha").get<double>();
    chart.epsilon = require("epsilon").get<double>();
    chart.modes = require("modes").get<int>();
    chart.N = require("n").get<int>();
    chart.sigma = require("sigma").get<double>();
    chart.k1 = require("k1").get<double>();
    chart.k2 = require("k2").get<double>();
    chart.l_f = require("l_f").get<double>();
    const auto& lp = require("lp");
    chart.config.horizon = lp.at("horizon").get<double>();
    chart.config.steps = lp.at("steps").get<int>();
    chart.config.tol = lp.at("tol").get<double>();
    chart.config.max_iter = lp.at("max_iter").get<int>();
    const std::string tail = lp.at("tail").get<std::string>();
    if (tail == "zero")
        chart.config.tail = TailMode::zero;
    else if (tail == "frozen")
        chart.config.tail = TailMode::frozen;
    else
        throw IoError("chart header has unknown tail mode '" + tail + "': " + path);
    chart.nonlinearity = require("nonlinearity").get<std::string>();
    chart.forcing = require("forcing").get<std::vector<double>>();
    for (const auto& a : require("grid"))
        chart.grid.axes.push_back(
            {a.at("lo").get<double>(), a.at("hi").get<double>(), a.at("count").get<int>()});
    chart.lipschitz_estimate = require("lipschitz_estimate").get<double>();
    chart.failed_nodes = require("failed_nodes").get<std::vector<long long>>();

    if (chart.modes < 2 || chart.N < 1 || chart.N >= chart.modes)
        throw IoError("chart header has inconsistent modes/n fields: " + path);
    if (static_cast<int>(chart.grid.axes.size()) != chart.N)
        throw IoError("chart header grid dimension does not match n: " + path);
    if (static_cast<int>(chart.forcing.size()) != chart.modes)
        throw IoError("chart header forcing length does not match modes: " + path);

    const long long count = chart.grid.node_count();
    const size_t width = static_cast<size_t>(chart.modes - chart.N);
    chart.phi.resize(static_cast<size_t>(count));
    for (auto& row : chart.phi) {
        row.resize(width);
        is.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(width * sizeof(double)));
        if (!is) throw IoError("truncated chart payload: " + path);
    }
    chart.meta.resize(static_cast<size_t>(count));
    for (auto& m : chart.meta) {
        m.iterations = static_cast<int>(detail::read_raw<uint32_t>(is, path));
        m.contraction = detail::read_raw<double>(is, path);
        m.converged = detail::read_raw<uint8_t>(is, path) != 0;
    }
    return chart;
}

/// Human-readable debug form: '#'-prefixed header lines, then one CSV row per
/// node with 17-significant-digit floats.
inline void save_chart_csv(const ManifoldChart& chart, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open chart file for writing: " + path);
    os << "# frim-chart v1\n";
    os << "# alpha=" << format_g17(chart.alpha) << " epsilon=" << format_g17(chart.epsilon)
       << " modes=" << chart.modes << " n=" << chart.N
       << " sigma=" << format_g17(chart.sigma) << "\n";
    os << "# k1=" << format_g17(chart.k1) << " k2=" << format_g17(chart.k2)
       << " l_f=" << format_g17(chart.l_f) << "\n";
    os << "# lp.horizon=" << format_g17(chart.config.horizon)
       << " lp.steps=" << chart.config.steps << " lp.tol=" << format_g17(chart.config.tol)
       << " lp.max_iter=" << chart.config.max_iter
       << " lp.tail=" << tail_mode_name(chart.config.tail) << "\n";
    os << "# nonlinearity=" << chart.nonlinearity << "\n";
    os << "# forcing=";
    for (size_t i = 0; i < chart.forcing.size(); ++i)
        os << (i ? "," : "") << format_g17(chart.forcing[i]);
    os << "\n# grid=";
    for (size_t i = 0; i < chart.grid.axes.size(); ++i) {
        const auto& a = chart.grid.axes[i];
        os << (i ? ";" : "") << format_g17(a.lo) << ":" << format_g17(a.hi) << ":" << a.count;
    }
    os << "\n# lipschitz_estimate=" << format_g17(chart.lipschitz_estimate) << "\n";
    os << "node";
    for (int i = 1; i <= chart.N; ++i) os << ",p_" << i;
    for (int n = chart.N + 1; n <= chart.modes; ++n) os << ",phi_" << n;
    os << ",iterations,contraction,converged\n";
    const long long count = chart.grid.node_count();
    for (long long i = 0; i < count; ++i) {
        os << i;
        for (double c : chart.grid.node_coords(i)) os << "," << format_g17(c);
        for (double v : chart.phi[static_cast<size_t>(i)]) os << "," << format_g17(v);
        const auto& m = chart.meta[static_cast<size_t>(i)];
        os << "," << m.iterations << "," << format_g17(m.contraction) << ","
           << (m.converged ? 1 : 0) << "\n";
    }
    if (!os) throw IoError("failed writing chart file: " + path);
}

} // namespace frim
