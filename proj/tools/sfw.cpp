// sfw: command-line front end. Subcommands simulate, design, apply and verify; every run writes
// manifest.json next to its outputs. Exit codes: 0 ok, 2 usage or IO, 3 validation, 4 numerical.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfw/manifest.hpp"
#include "sfw/sfw.hpp"

namespace fs = std::filesystem;
using namespace sfw;

namespace {

constexpr int exit_ok         = 0;
constexpr int exit_usage      = 2;
constexpr int exit_validation = 3;
constexpr int exit_numerical  = 4;

/// Thrown for bad command-line combinations and config values.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------------------------
// Configuration

struct Config {
    json                            raw = json::object();
    std::optional<SpectralFunction> signal, noise, cross;
    std::optional<Asymptotics>      asym;
    double                          duration    = 0.0;
    double                          sample_rate = 0.0;
    std::uint64_t                   seed        = 0;
    DesignOptions                   design;
    FirOptions                      fir;
    std::size_t                     n_taps = 0;
    WelchConfig                     welch;
    StreamingConfig                 stream;
    bool                            stream_cross_from_reference = false;
    double                          skip_seconds                = 0.0;
    std::optional<Band>             signal_band;
    std::size_t                     log_bins = 250;

    bool has_model() const { return signal && noise; }
    SpectralFunction S_yy() const { return *signal + *noise; }
    SpectralFunction S_xy() const { return cross ? *cross : as_cross(*signal); }
    const Asymptotics& asymptotics() const {
        if (!asym) {
            throw UsageError("config needs an \"asymptotics\" section");
        }
        return *asym;
    }
};

Band band_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) {
        throw UsageError(what + " must be [lo, hi]");
    }
    const Band b{j[0].get<double>(), j[1].get<double>()};
    if (!(b.lo > 0.0) || !(b.hi > b.lo)) {
        throw UsageError(what + " must satisfy 0 < lo < hi");
    }
    return b;
}

Config load_config(const std::optional<std::string>& path) {
    Config c;
    if (!path) {
        return c;
    }
    c.raw = detail::read_json(*path);
    try {
        const json& j = c.raw;
        if (j.contains("signal")) {
            c.signal = spectrum_from_json(j["signal"]);
        }
        if (j.contains("noise")) {
            c.noise = spectrum_from_json(j["noise"]);
        }
        if (j.contains("cross")) {
            c.cross = as_cross(spectrum_from_json(j["cross"]));
        }
        if (j.contains("asymptotics")) {
            c.asym = asymptotics_from_json(j["asymptotics"]);
        }
        if (j.contains("simulate")) {
            const auto& s = j["simulate"];
            c.duration    = s.value("duration", 0.0);
            c.sample_rate = s.value("sample_rate", 0.0);
            c.seed        = s.value("seed", std::uint64_t{0});
        }
        if (j.contains("design")) {
            const auto& d         = j["design"];
            c.design.n_modes      = d.value("n_modes", c.design.n_modes);
            c.design.omega_0      = d.value("omega_0", 0.0);
            c.design.precondition = d.value("precondition", true);
            c.design.phase_rad    = d.value("phase_rad", 0.0);
            c.design.cap_n        = d.value("cap_n", false);
            c.design.lead_time    = d.value("lead_time", 0.0);
            c.design.quad_points  = d.value("quad_points", std::size_t{0});
            if (d.contains("band")) {
                c.design.band = band_from_json(d["band"], "design.band");
            }
        }
        if (j.contains("fir")) {
            const auto& f       = j["fir"];
            c.n_taps            = f.value("n_taps", std::size_t{0});
            c.fir.grid_points   = f.value("grid_points", c.fir.grid_points);
            c.fir.oversample    = f.value("oversample", c.fir.oversample);
            c.fir.max_leakage   = f.value("max_leakage", c.fir.max_leakage);
            c.fir.tail_energy   = f.value("tail_energy", c.fir.tail_energy);
        }
        if (j.contains("welch")) {
            const auto& w            = j["welch"];
            c.welch.segment_length   = w.value("segment_length", c.welch.segment_length);
            c.welch.overlap_fraction = w.value("overlap", c.welch.overlap_fraction);
            const auto win           = w.value("window", std::string("hann"));
            if (win == "slepian") {
                c.welch.window = WindowKind::Slepian;
            } else if (win != "hann") {
                throw UsageError("welch.window must be hann or slepian");
            }
            c.welch.slepian_nw = w.value("nw", c.welch.slepian_nw);
        }
        if (j.contains("stream")) {
            const auto& s             = j["stream"];
            c.stream.block            = s.value("block", c.stream.block);
            c.stream.smoothing        = s.value("smoothing", c.stream.smoothing);
            c.stream.redesign_every   = s.value("redesign_every", c.stream.redesign_every);
            c.stream.async            = s.value("async", false);
            c.stream.log_bins         = s.value("log_bins", c.stream.log_bins);
            c.stream.n_taps           = s.value("n_taps", std::size_t{0});
            const auto cross          = s.value("cross", std::string("model"));
            if (cross != "model" && cross != "reference") {
                throw UsageError("stream.cross must be model or reference");
            }
            c.stream_cross_from_reference = cross == "reference";
        }
        if (j.contains("evaluation")) {
            const auto& e  = j["evaluation"];
            c.skip_seconds = e.value("skip_seconds", 0.0);
            c.log_bins     = e.value("log_bins", c.log_bins);
            if (e.contains("signal_band")) {
                c.signal_band = band_from_json(e["signal_band"], "evaluation.signal_band");
            }
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed config: ") + e.what());
    }
    return c;
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) {
        throw IoError("cannot create output directory " + dir + ": " + ec.message());
    }
    return p;
}

json filter_summary(const WienerFilter& f) {
    return {{"alpha", f.scaling.alpha},
            {"beta", f.scaling.beta},
            {"omega0", f.basis_cfg.omega_0},
            {"n", f.coeffs.size()},
            {"phase_rad", f.scaling.phase_rad},
            {"lead_time", f.lead_time}};
}

double variance(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m += x;
    }
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return s / static_cast<double>(v.size());
}

TimeSeries tail_of(const TimeSeries& s, std::size_t skip) {
    return {s.dt, std::vector<double>(s.samples.begin() + static_cast<std::ptrdiff_t>(skip), s.samples.end())};
}

// ---------------------------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string                  config;
    std::string                  out;
    std::string                  format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<double>        duration, sample_rate;
};

int cmd_simulate(const SimulateArgs& a) {
    auto cfg = load_config(a.config);
    if (!cfg.has_model()) {
        throw UsageError("simulate needs signal and noise models in the config");
    }
    SimSpec spec;
    spec.duration    = a.duration.value_or(cfg.duration);
    spec.sample_rate = a.sample_rate.value_or(cfg.sample_rate);
    spec.seed        = a.seed.value_or(cfg.seed);
    spec.signal      = *cfg.signal;
    spec.noise       = *cfg.noise;
    try {
        spec.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    const auto  out = prepare_out(a.out);
    RunManifest m("simulate", cfg.raw);
    m["seed"]       = spec.seed;
    m["simulation"] = {{"duration", spec.duration}, {"sample_rate", spec.sample_rate}, {"samples", spec.samples()}};
    const auto r    = m.timed("synthesize", [&] { return synthesize(spec); });
    const std::string ext = a.format == "bin" ? ".bin" : ".csv";
    m.timed("write", [&] {
        for (const auto& [name, ts] : {std::pair{"x", &r.x}, std::pair{"n", &r.n}, std::pair{"y", &r.y}}) {
            const auto p = out / (std::string(name) + ext);
            write_series(p, *ts);
            m.add_output(p);
            if (a.format == "bin") {
                m.add_output(sidecar_path(p));
            }
        }
        return 0;
    });
    m.write(out / "manifest.json");
    return exit_ok;
}

// ---------------------------------------------------------------------------------------------
// design

struct DesignArgs {
    std::optional<std::string> config;
    std::string                out;
    std::optional<std::string> y, x, syy, sxy;
    std::optional<std::size_t> n;
    std::optional<double>      omega0, lead_time, sample_rate;
    bool                       no_precondition = false;
    bool                       cap_n           = false;
    bool                       no_fir          = false;
};

int cmd_design(const DesignArgs& a) {
    auto cfg  = load_config(a.config);
    auto opts = cfg.design;
    if (a.n) {
        opts.n_modes = *a.n;
    }
    if (a.omega0) {
        opts.omega_0 = *a.omega0;
    }
    if (a.lead_time) {
        opts.lead_time = *a.lead_time;
    }
    if (a.no_precondition) {
        opts.precondition = false;
    }
    if (a.cap_n) {
        opts.cap_n = true;
    }
    const auto& asym = cfg.asymptotics();
    const auto  out  = prepare_out(a.out);

    json echo           = cfg.raw;
    echo["cli"]         = {{"n", a.n ? json(*a.n) : json()},
                           {"omega0", a.omega0 ? json(*a.omega0) : json()},
                           {"lead_time", a.lead_time ? json(*a.lead_time) : json()},
                           {"no_precondition", a.no_precondition},
                           {"cap_n", a.cap_n}};
    RunManifest m("design", echo);
    m["precondition"] = opts.precondition;

    std::optional<WienerFilter> flt;
    double                      sample_rate = a.sample_rate.value_or(cfg.sample_rate);
    std::optional<SpectralFunction> S_xx, S_xy_model, S_yy_model;
    if (a.y || a.x) {
        if (!a.y || !a.x) {
            throw UsageError("design from series needs both --y and --x");
        }
        const auto y = read_series(*a.y);
        const auto x = read_series(*a.x);
        if (!a.sample_rate) {
            sample_rate = 1.0 / y.dt;
        }
        m["input"]     = "series";
        const auto syy = m.timed("estimate", [&] { return welch_psd(y, cfg.welch); });
        const auto sxy = welch_csd(x, y, cfg.welch);
        write_spectrum_csv(out / "S_yy.csv", syy);
        write_spectrum_csv(out / "S_xy.csv", sxy);
        m.add_output(out / "S_yy.csv");
        m.add_output(out / "S_xy.csv");
        flt = m.timed("design", [&] { return design_from_estimates(sxy, syy, asym, opts); });
    } else if (a.syy || a.sxy) {
        if (!a.syy || !a.sxy) {
            throw UsageError("design from tables needs both --syy and --sxy");
        }
        m["input"] = "tables";
        auto syy   = read_spectrum_csv(*a.syy);
        auto sxy   = read_spectrum_csv(*a.sxy);
        sxy.kind   = SpectrumKind::Cross;
        flt        = m.timed("design", [&] { return design_from_estimates(sxy, syy, asym, opts); });
    } else {
        if (!cfg.has_model()) {
            throw UsageError("design needs signal and noise models, --y/--x series or --syy/--sxy tables");
        }
        m["input"] = "models";
        S_xx       = *cfg.signal;
        S_xy_model = cfg.S_xy();
        S_yy_model = cfg.S_yy();
        flt        = m.timed("design", [&] { return design(*S_xy_model, *S_yy_model, asym, opts, &*S_xx); });
    }

    m["chosen"]      = filter_summary(*flt);
    m["budget"]      = budget_to_json(flt->budget);
    m["diagnostics"] = diagnostics_to_json(*flt);
    write_filter_json(out / "filter.json", *flt);
    m.add_output(out / "filter.json");

    const Band band = opts.band.value_or(Band{flt->budget.omega_m, flt->budget.omega_M});
    const auto grid = detail::log_grid(band.lo, band.hi, 1000);
    const auto resp = m.timed("response", [&] { return frequency_response(*flt, grid); });
    write_response_csv(out / "response.csv", resp);
    m.add_output(out / "response.csv");

    std::vector<TidyRow> rows;
    append_tidy(rows, "h_mag2", resp.omega, resp.mag2);
    append_tidy(rows, "h_phase", resp.omega, resp.phase);
    if (S_xy_model) {
        std::vector<double> nc;
        for (const auto& h : noncausal_filter(*S_xy_model, *S_yy_model, grid)) {
            nc.push_back(std::norm(h));
        }
        append_tidy(rows, "h_noncausal_mag2", grid, nc);
    }
    std::vector<double> k(flt->diagnostics.coeff_tail.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        k[i] = static_cast<double>(i);
    }
    append_tidy(rows, "coeff_abs", k, flt->diagnostics.coeff_tail);
    std::vector<double> dn(flt->diagnostics.dyadic_n.begin(), flt->diagnostics.dyadic_n.end());
    dn.resize(flt->diagnostics.dyadic_deltas.size());
    append_tidy(rows, "dyadic_delta", dn, flt->diagnostics.dyadic_deltas);
    write_tidy_csv(out / "plot.csv", rows);
    m.add_output(out / "plot.csv");

    if (sample_rate > 0.0 && !a.no_fir) {
        const auto fir = m.timed("fir", [&] { return to_fir(*flt, sample_rate, cfg.n_taps, cfg.fir); });
        write_taps_csv(out / "taps.csv", fir);
        m.add_output(out / "taps.csv");
        m["fir"] = {{"sample_rate", sample_rate},
                    {"taps", fir.taps.size()},
                    {"leakage", fir.leakage},
                    {"truncated_energy", fir.truncated_energy}};
    }
    m.write(out / "manifest.json");
    for (const auto& w : flt->warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------------------------
// apply

struct ApplyArgs {
    std::optional<std::string> filter;
    std::string                input;
    std::string                out;
    std::string                mode = "recorded";
    std::optional<std::string> reference;
    std::optional<std::string> config;
};

/// Residual statistics of x_hat against the reference x after the warm-up.
json evaluate(const Config& cfg, const TimeSeries& x, const TimeSeries& y, const TimeSeries& x_hat,
              const std::optional<WienerFilter>& ideal, std::vector<TidyRow>& rows) {
    const auto skip = static_cast<std::size_t>(std::llround(cfg.skip_seconds / y.dt));
    if (skip + cfg.welch.segment_length > y.size()) {
        throw UsageError("record too short for the evaluation skip and Welch segment length");
    }
    const auto xs = tail_of(x, skip), ys = tail_of(y, skip), hs = tail_of(x_hat, skip);
    std::vector<double> err(xs.size());
    for (std::size_t i = 0; i < err.size(); ++i) {
        err[i] = xs.samples[i] - hs.samples[i];
    }
    json ev{{"skip_samples", skip}, {"var_ratio", variance(err) / variance(xs.samples)}};

    const auto see = error_psd(xs, hs, cfg.welch);
    const auto syy = welch_psd(ys, cfg.welch);
    std::vector<double> e(see.omega.size()), s(see.omega.size()), r(see.omega.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = see.values[i].real();
        s[i] = syy.values[i].real();
        r[i] = e[i] / s[i];
    }
    const double lo = see.omega.front(), hi = see.omega.back();
    const auto   be = log_bin_average(see.omega, e, lo, hi, cfg.log_bins);
    const auto   bs = log_bin_average(see.omega, s, lo, hi, cfg.log_bins);
    const auto   br = log_bin_average(see.omega, r, lo, hi, cfg.log_bins);
    append_tidy(rows, "S_ee", be.omega, be.value);
    append_tidy(rows, "S_yy", bs.omega, bs.value);
    append_tidy(rows, "S_ee_over_S_yy", br.omega, br.value);

    if (cfg.signal_band) {
        double worst = 0.0, power = 0.0;
        for (std::size_t i = 0; i < br.omega.size(); ++i) {
            if (br.omega[i] >= cfg.signal_band->lo && br.omega[i] <= cfg.signal_band->hi) {
                worst = std::max(worst, br.value[i]);
            }
        }
        const double dw = see.omega[1] - see.omega[0];
        for (std::size_t i = 0; i < see.omega.size(); ++i) {
            if (see.omega[i] >= cfg.signal_band->lo && see.omega[i] <= cfg.signal_band->hi) {
                power += e[i] * dw / std::numbers::pi;
            }
        }
        ev["signal_band"]             = {cfg.signal_band->lo, cfg.signal_band->hi};
        ev["max_ratio_signal_band"]   = worst;
        ev["signal_band_error_power"] = power;
    }
    if (ideal && cfg.has_model()) {
        // Mean squared log deviation of the binned error PSD from the error spectrum of the
        // long-run optimal filter, over bins inside the trusted band.
        const auto   Sxx  = *cfg.signal;
        const auto   Sxy  = cfg.S_xy();
        const auto   Syy  = cfg.S_yy();
        const Band   band{ideal->budget.omega_m, ideal->budget.omega_M};
        std::vector<double> model(be.omega.size());
        double       acc = 0.0;
        std::size_t  cnt = 0;
        for (std::size_t i = 0; i < be.omega.size(); ++i) {
            const double w = be.omega[i];
            model[i]       = eval_error_spectrum(ideal->response(w), Sxx, Sxy, Syy, w);
            if (w >= band.lo && w <= band.hi && model[i] > 0.0 && be.value[i] > 0.0) {
                const double d = std::log(be.value[i] / model[i]);
                acc += d * d;
                ++cnt;
            }
        }
        append_tidy(rows, "S_ee_model", be.omega, model);
        if (cnt > 0) {
            ev["error_psd_dispersion"] = acc / static_cast<double>(cnt);
            ev["dispersion_bins"]      = cnt;
        }
    }
    return ev;
}

int cmd_apply(const ApplyArgs& a) {
    if (a.mode != "recorded" && a.mode != "stream") {
        throw UsageError("--mode must be recorded or stream");
    }
    const auto cfg = load_config(a.config);
    const auto y   = read_series(a.input);
    const auto out = prepare_out(a.out);
    std::optional<TimeSeries> x;
    if (a.reference) {
        x = read_series(*a.reference);
        if (x->size() != y.size() || x->dt != y.dt) {
            throw IoError("reference series must match the input in length and sample period");
        }
    }
    RunManifest m("apply", cfg.raw);
    m["mode"]  = a.mode;
    m["input"] = {{"samples", y.size()}, {"dt", y.dt}};

    TimeSeries x_hat;
    if (a.mode == "recorded") {
        if (!a.filter) {
            throw UsageError("recorded mode needs --filter (filter.json or taps CSV)");
        }
        FirFilter fir;
        if (fs::path(*a.filter).extension() == ".json") {
            const auto flt = read_filter_json(*a.filter);
            fir = m.timed("fir", [&] { return to_fir(flt, 1.0 / y.dt, cfg.n_taps, cfg.fir); });
        } else {
            fir = read_taps_csv(*a.filter, y.dt);
        }
        try {
            check_rate(fir, y.dt);
        } catch (const ValidationError& e) {
            throw IoError(e.what());
        }
        m["fir"] = {{"taps", fir.taps.size()}, {"leakage", fir.leakage}};
        x_hat    = m.timed("filter", [&] { return apply_recorded(fir, y); });
    } else {
        if (!a.config) {
            throw UsageError("stream mode needs --config for asymptotics and stream settings");
        }
        auto sc   = cfg.stream;
        sc.asym   = cfg.asymptotics();
        sc.design = cfg.design;
        if (cfg.stream_cross_from_reference) {
            if (!x) {
                throw UsageError("stream.cross = reference needs --reference");
            }
        } else {
            if (!cfg.has_model()) {
                throw UsageError("stream mode needs a signal model for the cross spectrum");
            }
            sc.S_xy_model = cfg.S_xy();
        }
        // Block handoff audit: each call returns exactly the samples of the block it was given.
        StreamingFilter sf(y.dt, sc);
        std::size_t     blocks = 0, max_lag = 0;
        x_hat.dt = y.dt;
        m.timed("filter", [&] {
            for (std::size_t start = 0; start < y.size(); start += sc.block) {
                const std::size_t len = std::min(sc.block, y.size() - start);
                const auto        yb  = std::span<const double>(y.samples).subspan(start, len);
                const auto xb = cfg.stream_cross_from_reference ? std::span<const double>(x->samples).subspan(start, len)
                                                                : std::span<const double>{};
                const auto o = sf.process(yb, xb);
                max_lag      = std::max(max_lag, start + len - (x_hat.samples.size() + o.size()));
                x_hat.samples.insert(x_hat.samples.end(), o.begin(), o.end());
                ++blocks;
            }
            return 0;
        });
        m["stream"] = {{"blocks", blocks},
                       {"block", sc.block},
                       {"max_latency_blocks", max_lag},
                       {"redesigns", sf.redesigns()},
                       {"failed_redesigns", sf.failed_redesigns()},
                       {"log", sf.log()}};
    }

    const std::string ext = is_binary_series(a.input) ? ".bin" : ".csv";
    const auto        xp  = out / ("x_hat" + ext);
    write_series(xp, x_hat);
    m.add_output(xp);
    if (ext == ".bin") {
        m.add_output(sidecar_path(xp));
    }

    if (x) {
        std::optional<WienerFilter> ideal;
        if (cfg.has_model() && cfg.asym) {
            ideal = m.timed("ideal_design", [&] { return design(cfg.S_xy(), cfg.S_yy(), *cfg.asym, cfg.design); });
        }
        std::vector<TidyRow> rows;
        m["evaluation"] = m.timed("evaluate", [&] { return evaluate(cfg, *x, y, x_hat, ideal, rows); });
        write_tidy_csv(out / "error_psd.csv", rows);
        m.add_output(out / "error_psd.csv");
    }
    m.write(out / "manifest.json");
    return exit_ok;
}

// ---------------------------------------------------------------------------------------------
// verify

int cmd_verify(const std::vector<std::string>& names, const std::optional<std::string>& out) {
    const auto           suites = verify_suites();
    std::vector<const VerifySuite*> run;
    if (names.empty() || (names.size() == 1 && names[0] == "all")) {
        for (const auto& s : suites) {
            run.push_back(&s);
        }
    } else {
        for (const auto& n : names) {
            const auto it = std::find_if(suites.begin(), suites.end(), [&](const auto& s) { return s.name == n; });
            if (it == suites.end()) {
                std::string known;
                for (const auto& s : suites) {
                    known += " " + s.name;
                }
                throw UsageError("unknown suite '" + n + "'; known:" + known);
            }
            run.push_back(&*it);
        }
    }
    json report{{"results", json::array()}};
    bool all = true;
    for (const auto* s : run) {
        const auto r = s->run();
        all          = all && r.passed;
        report["results"].push_back({{"name", r.name},
                                     {"passed", r.passed},
                                     {"metric", r.metric},
                                     {"tolerance", r.tolerance},
                                     {"info", r.info},
                                     {"seconds", r.seconds}});
    }
    report["passed"] = all;
    std::cout << report.dump(2) << '\n';
    if (out) {
        detail::write_json(*out, report);
    }
    return all ? exit_ok : exit_numerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Globally optimal causal Wiener filters for scale-free noise"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string);

    SimulateArgs sim;
    auto*        s = app.add_subcommand("simulate", "Synthesize signal, noise and measurement series");
    s->add_option("--config", sim.config, "Config JSON with signal/noise models and a simulate section")->required();
    s->add_option("--out", sim.out, "Output directory")->required();
    s->add_option("--format", sim.format, "csv or bin (float64 LE with a JSON sidecar)")
        ->check(CLI::IsMember({"csv", "bin"}));
    s->add_option("--seed", sim.seed, "Override the config seed");
    s->add_option("--duration", sim.duration, "Override the duration in seconds");
    s->add_option("--sample-rate", sim.sample_rate, "Override the sample rate in Hz");

    DesignArgs des;
    auto*      d = app.add_subcommand("design", "Design the causal Wiener filter");
    d->add_option("--config", des.config, "Config JSON (models, asymptotics, design options)");
    d->add_option("--out", des.out, "Output directory")->required();
    d->add_option("--y", des.y, "Measurement series for spectral estimation");
    d->add_option("--x", des.x, "Signal reference series for the cross spectrum");
    d->add_option("--syy", des.syy, "Tabulated S_yy CSV");
    d->add_option("--sxy", des.sxy, "Tabulated S_xy CSV");
    d->add_option("--n", des.n, "Number of basis modes");
    d->add_option("--omega0", des.omega0, "Basis scale in rad/s");
    d->add_option("--lead-time", des.lead_time, "Predict x(t + lead_time)");
    d->add_option("--sample-rate", des.sample_rate, "Sample rate for the FIR taps");
    d->add_flag("--no-precondition", des.no_precondition, "Skip the scaling transformation");
    d->add_flag("--cap-n", des.cap_n, "Limit n to n_max / 3");
    d->add_flag("--no-fir", des.no_fir, "Do not realise FIR taps");

    ApplyArgs ap;
    auto*     p = app.add_subcommand("apply", "Apply a filter to a series");
    p->add_option("--filter", ap.filter, "filter.json or taps CSV (recorded mode)");
    p->add_option("--input", ap.input, "Measurement series y")->required();
    p->add_option("--out", ap.out, "Output directory")->required();
    p->add_option("--mode", ap.mode, "recorded or stream");
    p->add_option("--reference", ap.reference, "True signal x for residual spectra");
    p->add_option("--config", ap.config, "Config JSON (required in stream mode)");

    std::vector<std::string>   suites;
    std::optional<std::string> verify_out;
    auto*                      v = app.add_subcommand("verify", "Run self-check suites");
    v->add_option("suites", suites, "Suite names, or all");
    v->add_option("--out", verify_out, "Also write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (s->parsed()) {
            return cmd_simulate(sim);
        }
        if (d->parsed()) {
            return cmd_design(des);
        }
        if (p->parsed()) {
            return cmd_apply(ap);
        }
        return cmd_verify(suites, verify_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ValidationError& e) {
        std::cerr << "validation failed";
        if (!e.stage().empty()) {
            std::cerr << " (" << e.stage() << ")";
        }
        std::cerr << ": " << e.what() << '\n';
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    }
}
