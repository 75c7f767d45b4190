#ifndef SFW_IO_HPP
#define SFW_IO_HPP

// File formats: time series (CSV `t,value` or float64 little-endian with a `{dt}` JSON sidecar),
// tabulated spectra (CSV `omega_rad_s,re[,im]`), filters (JSON and response CSV), FIR taps (CSV),
// tidy long-format CSV for plotting, and analytic spectral models from JSON.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sfw/errors.hpp"
#include "sfw/estimation.hpp"
#include "sfw/filter_design.hpp"
#include "sfw/precondition.hpp"
#include "sfw/spectral_model.hpp"

namespace sfw {

using json = nlohmann::json;

/// Thrown for unreadable, malformed or inconsistent files.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what, "io") {}
};

namespace detail {

/// Shortest representation that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double     v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        throw IoError("cannot parse number '" + std::string(s) + "' in " + where);
    }
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t                   start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

inline std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) {
        return {};
    }
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

/// Header names and numeric rows of a CSV file.
struct CsvTable {
    std::vector<std::string>         header;
    std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    CsvTable    t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_commas(line);
        if (t.header.empty()) {
            for (auto f : fields) {
                t.header.push_back(trim(f));
            }
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(t.header.size()) + " fields");
        }
        std::vector<double> row;
        row.reserve(fields.size());
        const std::string where = path.string() + ":" + std::to_string(lineno);
        for (auto f : fields) {
            row.push_back(parse_double(f, where));
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) {
        throw IoError(path.string() + " has no header");
    }
    return t;
}

inline std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

inline std::uint64_t swap_bytes(std::uint64_t v) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) {
        r = (r << 8) | ((v >> (8 * i)) & 0xff);
    }
    return r;
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

} // namespace detail

// ---------------------------------------------------------------------------------------------
// Time series

inline void write_series_csv(const std::filesystem::path& path, const TimeSeries& ts) {
    auto out = detail::open_out(path);
    out << "t,value\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out << detail::format_double(ts.dt * static_cast<double>(i)) << ',' << detail::format_double(ts.samples[i])
            << '\n';
    }
    detail::finish(out, path);
}

/// Reads `t,value`. The sample period comes from the time column, which must be uniform.
inline TimeSeries read_series_csv(const std::filesystem::path& path) {
    const auto tab = detail::read_csv(path);
    if (tab.header.size() != 2 || tab.header[0] != "t" || tab.header[1] != "value") {
        throw IoError(path.string() + ": expected header t,value");
    }
    if (tab.rows.size() < 2) {
        throw IoError(path.string() + ": need at least two samples");
    }
    TimeSeries ts;
    ts.dt = tab.rows[1][0] - tab.rows[0][0];
    if (!(ts.dt > 0.0)) {
        throw IoError(path.string() + ": time column must increase");
    }
    ts.samples.reserve(tab.rows.size());
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        const double expect = tab.rows[0][0] + ts.dt * static_cast<double>(i);
        if (std::abs(tab.rows[i][0] - expect) > 1e-6 * ts.dt + 1e-12 * std::abs(expect)) {
            throw IoError(path.string() + ": non-uniform sampling at row " + std::to_string(i));
        }
        ts.samples.push_back(tab.rows[i][1]);
    }
    return ts;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

/// Raw float64 little-endian samples plus `<path>.json` holding {"dt": ...}.
inline void write_series_bin(const std::filesystem::path& path, const TimeSeries& ts) {
    auto out = detail::open_out(path, std::ios::out | std::ios::binary);
    for (double v : ts.samples) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) {
            bits = detail::swap_bytes(bits);
        }
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    detail::finish(out, path);
    detail::write_json(sidecar_path(path), json{{"dt", ts.dt}});
}

inline TimeSeries read_series_bin(const std::filesystem::path& path) {
    const auto side = detail::read_json(sidecar_path(path));
    if (!side.contains("dt") || !side["dt"].is_number()) {
        throw IoError(sidecar_path(path).string() + ": missing numeric dt");
    }
    TimeSeries ts;
    ts.dt = side["dt"].get<double>();
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    const std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() % 8 != 0) {
        throw IoError(path.string() + ": size is not a multiple of 8 bytes");
    }
    ts.samples.resize(raw.size() / 8);
    for (std::size_t i = 0; i < ts.samples.size(); ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, raw.data() + 8 * i, 8);
        if constexpr (std::endian::native == std::endian::big) {
            bits = detail::swap_bytes(bits);
        }
        ts.samples[i] = std::bit_cast<double>(bits);
    }
    return ts;
}

inline bool is_binary_series(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return ext == ".bin" || ext == ".f64";
}

/// Format chosen by extension: .bin / .f64 are raw float64, anything else is CSV.
inline TimeSeries read_series(const std::filesystem::path& path) {
    auto ts = is_binary_series(path) ? read_series_bin(path) : read_series_csv(path);
    try {
        ts.validate();
    } catch (const ValidationError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return ts;
}

inline void write_series(const std::filesystem::path& path, const TimeSeries& ts) {
    if (is_binary_series(path)) {
        write_series_bin(path, ts);
    } else {
        write_series_csv(path, ts);
    }
}

// ---------------------------------------------------------------------------------------------
// Spectra and responses

/// `omega_rad_s,re` for auto-spectra, `omega_rad_s,re,im` for cross-spectra.
inline void write_spectrum_csv(const std::filesystem::path& path, const TabulatedSpectrum& s) {
    const bool cross = s.kind == SpectrumKind::Cross;
    auto       out   = detail::open_out(path);
    out << (cross ? "omega_rad_s,re,im\n" : "omega_rad_s,re\n");
    for (std::size_t i = 0; i < s.omega.size(); ++i) {
        out << detail::format_double(s.omega[i]) << ',' << detail::format_double(s.values[i].real());
        if (cross) {
            out << ',' << detail::format_double(s.values[i].imag());
        }
        out << '\n';
    }
    detail::finish(out, path);
}

inline TabulatedSpectrum read_spectrum_csv(const std::filesystem::path& path) {
    const auto tab = detail::read_csv(path);
    const bool auto_hdr  = tab.header == std::vector<std::string>{"omega_rad_s", "re"};
    const bool cross_hdr = tab.header == std::vector<std::string>{"omega_rad_s", "re", "im"};
    if (!auto_hdr && !cross_hdr) {
        throw IoError(path.string() + ": expected header omega_rad_s,re[,im]");
    }
    TabulatedSpectrum s;
    s.kind = cross_hdr ? SpectrumKind::Cross : SpectrumKind::Auto;
    for (const auto& r : tab.rows) {
        s.omega.push_back(r[0]);
        s.values.emplace_back(r[1], cross_hdr ? r[2] : 0.0);
    }
    try {
        s.validate();
    } catch (const std::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return s;
}

inline void write_response_csv(const std::filesystem::path& path, const FrequencyResponse& r) {
    auto out = detail::open_out(path);
    out << "omega_rad_s,re,im\n";
    for (std::size_t i = 0; i < r.omega.size(); ++i) {
        out << detail::format_double(r.omega[i]) << ',' << detail::format_double(r.h[i].real()) << ','
            << detail::format_double(r.h[i].imag()) << '\n';
    }
    detail::finish(out, path);
}

// ---------------------------------------------------------------------------------------------
// Filters

inline json scaling_to_json(const ScalingFunction& s) {
    return {{"alpha", s.alpha}, {"beta", s.beta}, {"omega0", s.omega_0}, {"phase_rad", s.phase_rad}};
}

inline ScalingFunction scaling_from_json(const json& j) {
    ScalingFunction s;
    s.alpha     = j.at("alpha").get<double>();
    s.beta      = j.at("beta").get<double>();
    s.omega_0   = j.at("omega0").get<double>();
    s.phase_rad = j.value("phase_rad", 0.0);
    return s;
}

/// {coeffs: {re, im}, scaling, basis, lead_time}: enough to evaluate the response anywhere.
inline json filter_to_json(const WienerFilter& f) {
    std::vector<double> re, im;
    for (const auto& c : f.coeffs) {
        re.push_back(c.real());
        im.push_back(c.imag());
    }
    return {{"coeffs", {{"re", re}, {"im", im}}},
            {"scaling", scaling_to_json(f.scaling)},
            {"basis", {{"omega0", f.basis_cfg.omega_0}, {"n_modes", f.basis_cfg.n_modes},
                       {"quad_points", f.basis_cfg.resolved_quad_points()}}},
            {"lead_time", f.lead_time}};
}

inline WienerFilter filter_from_json(const json& j) {
    WienerFilter f;
    try {
        const auto re = j.at("coeffs").at("re").get<std::vector<double>>();
        const auto im = j.at("coeffs").at("im").get<std::vector<double>>();
        if (re.size() != im.size() || re.empty()) {
            throw IoError("filter coefficients need matching, non-empty re and im arrays");
        }
        for (std::size_t k = 0; k < re.size(); ++k) {
            f.coeffs.emplace_back(re[k], im[k]);
        }
        f.scaling                 = scaling_from_json(j.at("scaling"));
        f.basis_cfg.omega_0       = j.at("basis").at("omega0").get<double>();
        f.basis_cfg.n_modes       = f.coeffs.size();
        f.basis_cfg.quad_points   = j.at("basis").value("quad_points", std::size_t{0});
        f.lead_time               = j.value("lead_time", 0.0);
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed filter JSON: ") + e.what());
    }
    if (!(f.basis_cfg.omega_0 > 0.0) || !(f.scaling.omega_0 > 0.0)) {
        throw IoError("filter JSON needs positive omega0");
    }
    return f;
}

inline void write_filter_json(const std::filesystem::path& path, const WienerFilter& f) {
    detail::write_json(path, filter_to_json(f));
}

inline WienerFilter read_filter_json(const std::filesystem::path& path) {
    return filter_from_json(detail::read_json(path));
}

/// `t,tap`: tap m sits at t = m dt.
inline void write_taps_csv(const std::filesystem::path& path, const FirFilter& fir) {
    auto out = detail::open_out(path);
    out << "t,tap\n";
    for (std::size_t m = 0; m < fir.taps.size(); ++m) {
        out << detail::format_double(fir.dt * static_cast<double>(m)) << ',' << detail::format_double(fir.taps[m])
            << '\n';
    }
    detail::finish(out, path);
}

/// A single-tap file carries no spacing; `fallback_dt` fills it in.
inline FirFilter read_taps_csv(const std::filesystem::path& path, double fallback_dt = 0.0) {
    const auto tab = detail::read_csv(path);
    if (tab.header != std::vector<std::string>{"t", "tap"}) {
        throw IoError(path.string() + ": expected header t,tap");
    }
    if (tab.rows.empty()) {
        throw IoError(path.string() + ": no taps");
    }
    FirFilter fir;
    fir.dt = tab.rows.size() > 1 ? tab.rows[1][0] - tab.rows[0][0] : fallback_dt;
    if (!(fir.dt > 0.0) || tab.rows[0][0] != 0.0) {
        throw IoError(path.string() + ": taps must start at t = 0 with positive spacing");
    }
    for (const auto& r : tab.rows) {
        fir.taps.push_back(r[1]);
    }
    return fir;
}

// ---------------------------------------------------------------------------------------------
// Tidy output

struct TidyRow {
    std::string series;
    double      omega = 0.0;
    double      value = 0.0;
};

/// Long format `series,omega,value`, one row per point.
inline void write_tidy_csv(const std::filesystem::path& path, const std::vector<TidyRow>& rows) {
    auto out = detail::open_out(path);
    out << "series,omega,value\n";
    for (const auto& r : rows) {
        if (r.series.find_first_of(",\n\"") != std::string::npos) {
            throw IoError("tidy series names may not contain commas, quotes or newlines");
        }
        out << r.series << ',' << detail::format_double(r.omega) << ',' << detail::format_double(r.value) << '\n';
    }
    detail::finish(out, path);
}

inline void append_tidy(std::vector<TidyRow>& rows, const std::string& series, std::span<const double> omega,
                        std::span<const double> values) {
    for (std::size_t i = 0; i < omega.size(); ++i) {
        rows.push_back({series, omega[i], values[i]});
    }
}

// ---------------------------------------------------------------------------------------------
// Analytic models

/// {"model": name, "params": {...}}. Models: constant{value}, lorentzian_peak{amplitude, gamma,
/// omega_c}, powerlaw_plus_white{amplitude, beta, white}, rational_lowpass{amplitude, a},
/// sum{terms: [model, ...]}.
inline SpectralFunction spectrum_from_json(const json& j) {
    try {
        const auto  name = j.at("model").get<std::string>();
        const json& p    = j.contains("params") ? j.at("params") : json::object();
        if (name == "constant") {
            return constant_spectrum(p.at("value").get<double>());
        }
        if (name == "lorentzian_peak") {
            return lorentzian_peak(p.at("amplitude").get<double>(), p.at("gamma").get<double>(),
                                   p.at("omega_c").get<double>());
        }
        if (name == "powerlaw_plus_white") {
            return powerlaw_plus_white(p.at("amplitude").get<double>(), p.at("beta").get<double>(),
                                       p.value("white", 0.0));
        }
        if (name == "rational_lowpass") {
            return rational_lowpass(p.at("amplitude").get<double>(), p.at("a").get<double>());
        }
        if (name == "sum") {
            const auto& terms = p.at("terms");
            if (!terms.is_array() || terms.empty()) {
                throw IoError("sum model needs a non-empty terms array");
            }
            SpectralFunction s = spectrum_from_json(terms[0]);
            for (std::size_t i = 1; i < terms.size(); ++i) {
                s = s + spectrum_from_json(terms[i]);
            }
            return s;
        }
        throw IoError("unknown spectral model '" + name + "'");
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed spectral model: ") + e.what());
    }
}

inline Asymptotics asymptotics_from_json(const json& j) {
    Asymptotics a;
    try {
        a.alpha_x = j.at("alpha_x").get<double>();
        a.alpha_y = j.at("alpha_y").get<double>();
        a.beta_x  = j.at("beta_x").get<double>();
        a.beta_y  = j.at("beta_y").get<double>();
        a.A_y     = j.value("A_y", 1.0);
        a.B_y     = j.value("B_y", 1.0);
        a.A_x_bar = j.value("A_x_bar", 0.0);
        a.B_x_bar = j.value("B_x_bar", 0.0);
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed asymptotics: ") + e.what());
    }
    return a;
}

inline json asymptotics_to_json(const Asymptotics& a) {
    return {{"alpha_x", a.alpha_x}, {"alpha_y", a.alpha_y}, {"beta_x", a.beta_x}, {"beta_y", a.beta_y},
            {"A_y", a.A_y},         {"B_y", a.B_y},         {"A_x_bar", a.A_x_bar}, {"B_x_bar", a.B_x_bar}};
}

inline json budget_to_json(const ErrorBudget& b) {
    return {{"omega_m", b.omega_m},
            {"omega_M", b.omega_M},
            {"omega_0", b.omega_0},
            {"delta_t_bound", b.delta_t_bound},
            {"delta_s_bound", b.delta_s_bound},
            {"rel_err_y", b.rel_err_y},
            {"rel_err_x", b.rel_err_x},
            {"dominant", b.dominant},
            {"kappa", b.kappa},
            {"n_max", b.n_max},
            {"n_used", b.n_used},
            {"scale_separated", b.scale_separated},
            {"A_x_bar", b.envelopes.A_x_bar},
            {"B_x_bar", b.envelopes.B_x_bar}};
}

inline json diagnostics_to_json(const WienerFilter& f) {
    const auto& d = f.diagnostics;
    json        j{{"dyadic_n", d.dyadic_n},
                  {"dyadic_deltas", d.dyadic_deltas},
                  {"rate_fit", d.rate_fit},
                  {"rate_fit_stderr", d.rate_fit_stderr},
                  {"explained_variance", d.explained_variance},
                  {"monotone_Veps", d.monotone_Veps},
                  {"quadrature_error", d.quadrature_error},
                  {"under_resolved", d.under_resolved},
                  {"inf_S_yy_prime", f.inf_S_yy},
                  {"sup_S_yy_prime", f.sup_S_yy},
                  {"kappa_lower", f.condition.kappa_lower},
                  {"kappa_upper", f.condition.kappa_upper},
                  {"warnings", f.warnings}};
    if (const auto k = f.condition.measured_kappa()) {
        j["kappa_measured"] = *k;
    }
    return j;
}

} // namespace sfw

#endif // SFW_IO_HPP
