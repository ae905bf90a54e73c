#include "ericson/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ericson/error.hpp"

namespace ericson {

namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
    const std::string t = trim(cell);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        fail(path, line, "cannot parse number '" + t + "'");
    return v;
}

std::vector<std::string> lines_of(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<std::string> lines;
    std::string l;
    while (std::getline(in, l)) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        lines.push_back(l);
    }
    return lines;
}

void check_increasing(const std::vector<double>& grid, const std::filesystem::path& path,
                      const std::vector<std::size_t>& line_numbers) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) fail(path, line_numbers[i], "abscissa is not strictly increasing");
}

std::string tag_cell(const std::string& tag) {
    for (char c : tag)
        if (c == ',' || c == '\n') throw DomainError("model tag must not contain commas or newlines");
    return tag;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_spectrum(const std::filesystem::path& path, const SMatrixSpectrum& s) {
    json channels = json::array();
    for (const auto& c : s.channels) channels.push_back({c.first, c.second});
    const auto& m = s.metadata;
    json header = {{"unit", to_string(s.unit)},
                   {"channel_count", s.channel_count},
                   {"channels", channels},
                   {"seed", m.seed},
                   {"realization", m.realization},
                   {"model", m.model},
                   {"window", {m.window_lo, m.window_hi}},
                   {"external", m.external},
                   {"skipped", m.skipped},
                   {"extra", m.extra}};
    std::string out = "# " + header.dump() + "\nabscissa";
    for (const auto& c : s.channels) {
        const auto l = channel_label(c);
        out += "," + l + "_re," + l + "_im";
    }
    out += '\n';
    const std::size_t k = s.channels.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += format_double(s.grid[i]);
        for (std::size_t c = 0; c < k; ++c) {
            const cdouble v = s.at(i, c);
            out += ',' + format_double(v.real()) + ',' + format_double(v.imag());
        }
        out += '\n';
    }
    write_text_file(path, out);
}

SMatrixSpectrum read_spectrum(const std::filesystem::path& path) {
    const auto lines = lines_of(path);
    if (lines.size() < 2 || lines[0].rfind("# ", 0) != 0) fail(path, 1, "missing spectrum header");
    SMatrixSpectrum s;
    try {
        const json h = json::parse(lines[0].substr(2));
        s.unit = abscissa_unit_from_string(h.at("unit").get<std::string>());
        s.channel_count = h.at("channel_count").get<int>();
        for (const auto& c : h.at("channels")) s.channels.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
        auto& m = s.metadata;
        m.seed = h.at("seed").get<std::uint64_t>();
        m.realization = h.at("realization").get<std::uint64_t>();
        m.model = h.at("model").get<std::string>();
        m.window_lo = h.at("window").at(0).get<double>();
        m.window_hi = h.at("window").at(1).get<double>();
        m.external = h.at("external").get<bool>();
        m.skipped = h.at("skipped").get<std::vector<double>>();
        m.extra = h.at("extra").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        fail(path, 1, std::string("bad spectrum header: ") + e.what());
    }
    const std::size_t k = s.channels.size();
    if (split(lines[1]).size() != 1 + 2 * k) fail(path, 2, "column header does not match channels");
    std::vector<std::size_t> numbers;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cells = split(lines[i]);
        if (cells.size() != 1 + 2 * k) fail(path, i + 1, "wrong number of columns");
        s.grid.push_back(parse_double(cells[0], path, i + 1));
        for (std::size_t c = 0; c < k; ++c)
            s.values.emplace_back(parse_double(cells[1 + 2 * c], path, i + 1),
                                  parse_double(cells[2 + 2 * c], path, i + 1));
        numbers.push_back(i + 1);
    }
    check_increasing(s.grid, path, numbers);
    return s;
}

ImportFormat import_format_from_string(const std::string& s) {
    if (s == "auto") return ImportFormat::automatic;
    if (s == "complex") return ImportFormat::complex;
    if (s == "abs2") return ImportFormat::abs2;
    throw ConfigError("unknown import format '" + s + "'");
}

SMatrixSpectrum import_spectrum(const std::filesystem::path& path, ImportFormat format) {
    const auto lines = lines_of(path);
    std::size_t first = 0;
    while (first < lines.size() && (trim(lines[first]).empty() || lines[first][0] == '#')) ++first;
    if (first >= lines.size()) fail(path, first + 1, "missing column header");
    std::vector<std::string> header = split(lines[first]);
    for (auto& h : header) h = trim(h);

    ImportFormat detected = ImportFormat::automatic;
    if (header == std::vector<std::string>{"abscissa", "s21_re", "s21_im"}) detected = ImportFormat::complex;
    else if (header == std::vector<std::string>{"abscissa", "s21_abs2"}) detected = ImportFormat::abs2;
    else fail(path, first + 1, "expected header abscissa,s21_re,s21_im or abscissa,s21_abs2");
    if (format != ImportFormat::automatic && format != detected)
        fail(path, first + 1, "column header does not match the requested format");

    SMatrixSpectrum s;
    s.channel_count = 2;
    s.channels = {{1, 0}};
    s.metadata.external = true;
    s.metadata.model = "external";
    s.metadata.extra["source"] = path.filename().string();
    s.metadata.extra["format"] = detected == ImportFormat::abs2 ? "abs2" : "complex";
    const std::size_t cols = header.size();
    std::vector<std::size_t> numbers;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cells = split(lines[i]);
        if (cells.size() != cols) fail(path, i + 1, "wrong number of columns");
        s.grid.push_back(parse_double(cells[0], path, i + 1));
        if (detected == ImportFormat::complex) {
            s.values.emplace_back(parse_double(cells[1], path, i + 1), parse_double(cells[2], path, i + 1));
        } else {
            const double a = parse_double(cells[1], path, i + 1);
            if (!(a >= 0.0)) fail(path, i + 1, "cross-section must be non-negative");
            s.values.emplace_back(std::sqrt(a), 0.0);
        }
        numbers.push_back(i + 1);
    }
    if (s.grid.empty()) fail(path, first + 2, "no data rows");
    check_increasing(s.grid, path, numbers);
    s.metadata.window_lo = s.grid.front();
    s.metadata.window_hi = s.grid.back();
    return s;
}

void write_curve(const std::filesystem::path& path, const CorrelationCurve& c) {
    std::string out = "lag,corr\n";
    for (std::size_t i = 0; i < c.lags.size(); ++i)
        out += format_double(c.lags[i]) + ',' + format_double(c.values[i]) + '\n';
    write_text_file(path, out);
}

void write_products(const std::filesystem::path& path, std::span<const ProductPoint> points) {
    std::string out = "gamma,product,stderr,model_tag\n";
    for (const auto& p : points)
        out += format_double(p.gamma) + ',' + format_double(p.product) + ',' +
               format_double(p.std_error) + ',' + tag_cell(p.model_tag) + '\n';
    write_text_file(path, out);
}

std::vector<ProductPoint> read_products(const std::filesystem::path& path) {
    const auto lines = lines_of(path);
    if (lines.empty()) fail(path, 1, "empty product table");
    auto header = split(lines[0]);
    for (auto& h : header) h = trim(h);
    if (header.size() < 3 || header[0] != "gamma" || header[1] != "product" || header[2] != "stderr")
        fail(path, 1, "expected header gamma,product,stderr,model_tag");
    std::vector<ProductPoint> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cells = split(lines[i]);
        if (cells.size() != header.size()) fail(path, i + 1, "wrong number of columns");
        ProductPoint p;
        p.gamma = parse_double(cells[0], path, i + 1);
        p.product = parse_double(cells[1], path, i + 1);
        p.std_error = parse_double(cells[2], path, i + 1);
        if (cells.size() > 3) p.model_tag = trim(cells[3]);
        out.push_back(p);
    }
    return out;
}

void write_windows(const std::filesystem::path& path, std::span<const WindowResult> windows) {
    std::string out = "window,realizations,n_max,span,density,density_stderr,width,width_stderr,"
                      "unresolved,dropped,reason\n";
    for (const auto& w : windows) {
        std::string reason = w.reason;
        for (char& c : reason)
            if (c == ',' || c == '\n') c = ';';
        out += std::to_string(w.window_id) + ',' + std::to_string(w.realizations) + ',' +
               std::to_string(w.n_max) + ',' + format_double(w.span) + ',' + format_double(w.density) +
               ',' + format_double(w.density_stderr) + ',' + format_double(w.width) + ',' +
               format_double(w.width_stderr) + ',' + std::to_string(w.unresolved) + ',' +
               (w.dropped ? "1" : "0") + ',' + reason + '\n';
    }
    write_text_file(path, out);
}

void write_chi(const std::filesystem::path& path, std::span<const std::pair<double, double>> chi) {
    std::string out = "gamma,chi\n";
    for (const auto& [g, c] : chi) out += format_double(g) + ',' + format_double(c) + '\n';
    write_text_file(path, out);
}

} // namespace ericson
