#pragma once

#include <json.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ddsplit/cg.hpp"
#include "ddsplit/decomposition.hpp"
#include "ddsplit/elliptic.hpp"
#include "ddsplit/grid.hpp"
#include "ddsplit/schemes.hpp"

namespace ddsplit {

struct GridSpec {
    int n1 = 0, n2 = 0;
    double l1 = 1.0, l2 = 1.0;
};

/// Coefficient kinds: "constant" {value} or "affine" {a0,a1,a2} meaning
/// a0 + a1 x1 + a2 x2.
struct CoefficientSpec {
    std::string kind = "constant";
    double value = 1.0;
    double a0 = 1.0, a1 = 0.0, a2 = 0.0;
};

struct ForcingBox {
    double x1_lo = 0.0, x1_hi = 0.0, x2_lo = 0.0, x2_hi = 0.0;
    double value = 0.0;
};

struct TimeSpec {
    double T = 0.0;
    int N = 0;
    std::optional<double> sigma;  // scheme default when absent
};

struct DecompositionSpec {
    int parts1 = 1, parts2 = 1;
    std::string flavor = "non_overlapping";
    int layers = 0;
    std::string coloring = "none";
};

struct SolverSpec {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_iter = 10000;
};

struct OutputSpec {
    std::string report = "report.csv";
    std::vector<double> checkpoints;
    bool dump_solution = false;
    bool dump_error = false;
    bool dump_decomposition = false;
    bool dump_operator = false;
};

struct StudySpec {
    std::vector<int> n_list;
    int oversample = 64;
};

struct RunConfig {
    GridSpec grid;
    CoefficientSpec k, c;
    std::vector<ForcingBox> forcing;
    TimeSpec time;
    std::string scheme = "implicit";
    std::optional<DecompositionSpec> decomposition;
    SolverSpec solver;
    OutputSpec outputs;
    std::string mode = "single_run";
    StudySpec study;
};

// ---------------------------------------------------------------------------
// json round trip
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CoefficientSpec& c) {
    if (c.kind == "affine")
        return {{"kind", "affine"}, {"a0", c.a0}, {"a1", c.a1}, {"a2", c.a2}};
    return {{"kind", "constant"}, {"value", c.value}};
}

inline CoefficientSpec coefficient_from_json(const nlohmann::json& j) {
    CoefficientSpec c;
    if (j.is_number()) {  // shorthand: bare number
        c.value = j.get<double>();
        return c;
    }
    c.kind = j.value("kind", "constant");
    c.value = j.value("value", 1.0);
    c.a0 = j.value("a0", 1.0);
    c.a1 = j.value("a1", 0.0);
    c.a2 = j.value("a2", 0.0);
    return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["grid"] = {{"n1", c.grid.n1}, {"n2", c.grid.n2}, {"l1", c.grid.l1}, {"l2", c.grid.l2}};
    j["coefficients"] = {{"k", to_json(c.k)}, {"c", to_json(c.c)}};
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : c.forcing)
        boxes.push_back({{"box", {b.x1_lo, b.x1_hi, b.x2_lo, b.x2_hi}}, {"value", b.value}});
    j["forcing"] = boxes;
    j["time"] = {{"T", c.time.T}, {"N", c.time.N}};
    if (c.time.sigma) j["time"]["sigma"] = *c.time.sigma;
    j["scheme"] = c.scheme;
    if (c.decomposition) {
        const auto& d = *c.decomposition;
        j["decomposition"] = {{"parts1", d.parts1},
                              {"parts2", d.parts2},
                              {"flavor", d.flavor},
                              {"layers", d.layers},
                              {"coloring", d.coloring}};
    }
    j["solver"] = {{"rel_tol", c.solver.rel_tol},
                   {"abs_tol", c.solver.abs_tol},
                   {"max_iter", c.solver.max_iter}};
    j["outputs"] = {{"report", c.outputs.report},
                    {"checkpoints", c.outputs.checkpoints},
                    {"dump_solution", c.outputs.dump_solution},
                    {"dump_error", c.outputs.dump_error},
                    {"dump_decomposition", c.outputs.dump_decomposition},
                    {"dump_operator", c.outputs.dump_operator}};
    j["mode"] = c.mode;
    if (!c.study.n_list.empty() || c.mode == "convergence_study")
        j["study"] = {{"n_list", c.study.n_list}, {"oversample", c.study.oversample}};
    else
        j["study"] = {{"oversample", c.study.oversample}};
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& root) {
    // a manifest re-ingested as a config: unwrap its embedded config object
    const nlohmann::json& j = root.contains("config") ? root.at("config") : root;
    RunConfig c;
    const auto& g = j.at("grid");
    c.grid.n1 = g.value("n1", 0);
    c.grid.n2 = g.value("n2", 0);
    c.grid.l1 = g.value("l1", 1.0);
    c.grid.l2 = g.value("l2", 1.0);
    if (j.contains("coefficients")) {
        c.k = coefficient_from_json(j.at("coefficients").value("k", nlohmann::json::object()));
        c.c = coefficient_from_json(j.at("coefficients").value("c", nlohmann::json::object()));
    }
    if (j.contains("forcing"))
        for (const auto& b : j.at("forcing")) {
            ForcingBox box;
            const auto& r = b.at("box");
            box.x1_lo = r.at(0).get<double>();
            box.x1_hi = r.at(1).get<double>();
            box.x2_lo = r.at(2).get<double>();
            box.x2_hi = r.at(3).get<double>();
            box.value = b.at("value").get<double>();
            c.forcing.push_back(box);
        }
    const auto& t = j.at("time");
    c.time.T = t.value("T", 0.0);
    c.time.N = t.value("N", 0);
    if (t.contains("sigma")) c.time.sigma = t.at("sigma").get<double>();
    c.scheme = j.value("scheme", "implicit");
    if (j.contains("decomposition")) {
        DecompositionSpec d;
        const auto& dj = j.at("decomposition");
        d.parts1 = dj.value("parts1", 1);
        d.parts2 = dj.value("parts2", 1);
        d.flavor = dj.value("flavor", "non_overlapping");
        d.layers = dj.value("layers", 0);
        d.coloring = dj.value("coloring", "none");
        c.decomposition = d;
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        c.solver.rel_tol = s.value("rel_tol", 1e-10);
        c.solver.abs_tol = s.value("abs_tol", 1e-14);
        c.solver.max_iter = s.value("max_iter", 10000);
    }
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        c.outputs.report = o.value("report", "report.csv");
        c.outputs.checkpoints = o.value("checkpoints", std::vector<double>{});
        c.outputs.dump_solution = o.value("dump_solution", false);
        c.outputs.dump_error = o.value("dump_error", false);
        c.outputs.dump_decomposition = o.value("dump_decomposition", false);
        c.outputs.dump_operator = o.value("dump_operator", false);
    }
    c.mode = j.value("mode", "single_run");
    if (j.contains("study")) {
        const auto& s = j.at("study");
        c.study.n_list = s.value("n_list", std::vector<int>{});
        c.study.oversample = s.value("oversample", 64);
    }
    return c;
}

// ---------------------------------------------------------------------------
// resolution and validation
// ---------------------------------------------------------------------------

inline bool scheme_id_known(const std::string& s) {
    return s == "implicit" || s == "cn" || s == "three_level" || s == "vector" || s == "ei_diag" ||
           s == "atm" || s == "three_level_diag";
}

inline SchemeKind scheme_kind_of(const std::string& s) {
    if (s == "implicit" || s == "cn") return SchemeKind::two_level_weighted;
    if (s == "three_level") return SchemeKind::three_level_weighted;
    if (s == "vector") return SchemeKind::vector_weighted;
    if (s == "ei_diag") return SchemeKind::ei_diag;
    if (s == "atm") return SchemeKind::atm;
    if (s == "three_level_diag") return SchemeKind::three_level_diag;
    throw std::invalid_argument("unknown scheme id: " + s);
}

inline int effective_subdomains(const DecompositionSpec& d) {
    return d.coloring == "red_black" ? 2 : d.parts1 * d.parts2;
}

/// Default sigma and the stability threshold of the governing theorem.
inline double default_sigma(const std::string& scheme, int p) {
    if (scheme == "implicit") return 1.0;
    if (scheme == "cn" || scheme == "vector") return 0.5;
    if (scheme == "three_level") return 0.25;
    if (scheme == "ei_diag") return 0.5 * p;
    if (scheme == "three_level_diag") return 0.25 * p;
    return 0.5;  // atm: unused
}

inline double sigma_threshold(const std::string& scheme, int p) {
    if (scheme == "implicit" || scheme == "cn" || scheme == "vector") return 0.5;
    if (scheme == "three_level") return 0.25;
    if (scheme == "ei_diag") return 0.5 * p;
    if (scheme == "three_level_diag") return 0.25 * p;
    return 0.0;  // atm: unconditional
}

inline double resolved_sigma(const RunConfig& c) {
    const int p = c.decomposition ? effective_subdomains(*c.decomposition) : 1;
    return c.time.sigma ? *c.time.sigma : default_sigma(c.scheme, p);
}

struct Finding {
    enum class Severity { error, warning };
    Severity severity;
    std::string message;
};

inline bool has_errors(const std::vector<Finding>& findings) {
    for (const auto& f : findings)
        if (f.severity == Finding::Severity::error) return true;
    return false;
}

inline std::vector<Finding> validate(const RunConfig& c) {
    std::vector<Finding> out;
    auto error = [&](std::string m) { out.push_back({Finding::Severity::error, std::move(m)}); };
    auto warn = [&](std::string m) { out.push_back({Finding::Severity::warning, std::move(m)}); };

    if (c.grid.n1 < 1 || c.grid.n2 < 1) error("grid: node counts must be >= 1");
    if (!(c.grid.l1 > 0.0) || !(c.grid.l2 > 0.0)) error("grid: side lengths must be > 0");
    if (c.time.N < 1) error("time: N must be >= 1");
    if (!(c.time.T > 0.0)) error("time: T must be > 0");
    if (!scheme_id_known(c.scheme)) error("scheme: unknown id '" + c.scheme + "'");
    if (c.mode != "single_run" && c.mode != "convergence_study" && c.mode != "theorem_check")
        error("mode: unknown mode '" + c.mode + "'");
    if (c.k.kind != "constant" && c.k.kind != "affine") error("coefficients: unknown kind for k");
    if (c.c.kind != "constant" && c.c.kind != "affine") error("coefficients: unknown kind for c");
    if (c.k.kind == "constant" && !(c.k.value > 0.0)) error("coefficients: k must be > 0");
    if (c.c.kind == "constant" && !(c.c.value > 0.0)) error("coefficients: c must be > 0");
    if (!(c.solver.rel_tol > 0.0) || !(c.solver.abs_tol > 0.0) || c.solver.max_iter < 1)
        error("solver: tolerances must be > 0 and max_iter >= 1");

    const bool block = scheme_id_known(c.scheme) && scheme_is_block(scheme_kind_of(c.scheme));
    if (block && !c.decomposition)
        error("scheme '" + c.scheme + "' needs a decomposition");
    if (c.decomposition) {
        const auto& d = *c.decomposition;
        if (d.flavor != "non_overlapping" && d.flavor != "overlapping")
            error("decomposition: unknown flavor '" + d.flavor + "'");
        if (d.coloring != "none" && d.coloring != "red_black")
            error("decomposition: unknown coloring '" + d.coloring + "'");
        if (c.grid.n1 >= 1 && c.grid.n2 >= 1 && d.flavor == "non_overlapping" &&
            d.coloring != "red_black" && d.coloring != "none") {
            // unreachable; kept for symmetry
        }
        if (c.grid.n1 >= 1 && c.grid.n2 >= 1) {
            try {
                Grid g = build_grid(c.grid.n1, c.grid.n2, c.grid.l1 > 0 ? c.grid.l1 : 1.0,
                                    c.grid.l2 > 0 ? c.grid.l2 : 1.0);
                decompose(g, d.parts1, d.parts2,
                          d.flavor == "overlapping" ? Flavor::overlapping : Flavor::non_overlapping,
                          d.layers, d.coloring == "red_black" ? Coloring::red_black : Coloring::none);
            } catch (const std::invalid_argument& e) {
                error(std::string("decomposition: ") + e.what());
            }
        }
    }

    if (c.time.N >= 1 && c.time.T > 0.0) {
        const double tau = c.time.T / c.time.N;
        for (double t : c.outputs.checkpoints) {
            const double s = t / tau;
            if (t < 0.0 || t > c.time.T + 1e-12 ||
                std::abs(s - std::lround(s)) > 1e-9 * std::max(1.0, std::abs(s)))
                error("outputs: checkpoint " + detail::fmt_double(t) +
                      " is not a multiple of tau within [0, T]");
        }
    }

    if (c.mode == "convergence_study") {
        if (c.study.n_list.empty()) error("study: convergence_study needs a doubling n_list");
        for (std::size_t i = 1; i < c.study.n_list.size(); ++i)
            if (c.study.n_list[i] != 2 * c.study.n_list[i - 1])
                error("study: n_list must double");
        if (c.study.oversample < 2) error("study: oversample must be >= 2");
    }

    // stability warnings: sigma below the governing theorem threshold
    if (scheme_id_known(c.scheme) && c.scheme != "atm") {
        const int p = c.decomposition ? effective_subdomains(*c.decomposition) : 1;
        const double sigma = resolved_sigma(c);
        const double threshold = sigma_threshold(c.scheme, p);
        const SchemeKind kind = scheme_kind_of(c.scheme);
        if (kind == SchemeKind::two_level_weighted && (sigma < 0.0 || sigma > 1.0))
            error("time: sigma must lie in [0,1] for the two-level scheme");
        else if (sigma < threshold)
            warn("sigma = " + detail::fmt_double(sigma) + " is below the stability threshold " +
                 detail::fmt_double(threshold) + " for scheme '" + c.scheme +
                 "' (p = " + std::to_string(p) + "); the energy estimate is not guaranteed");
    }
    return out;
}

// ---------------------------------------------------------------------------
// realized problem pieces
// ---------------------------------------------------------------------------

inline CoefficientField make_coefficients(const RunConfig& c) {
    auto realize = [](const CoefficientSpec& s) {
        if (s.kind == "affine") {
            const double a0 = s.a0, a1 = s.a1, a2 = s.a2;
            return std::function<double(double, double)>(
                [a0, a1, a2](double x1, double x2) { return a0 + a1 * x1 + a2 * x2; });
        }
        const double v = s.value;
        return std::function<double(double, double)>([v](double, double) { return v; });
    };
    auto bounds = [&](const CoefficientSpec& s) -> std::pair<double, double> {
        if (s.kind == "affine") {
            // extreme values over the rectangle corners
            double lo = s.a0, hi = s.a0;
            for (double x1 : {0.0, c.grid.l1})
                for (double x2 : {0.0, c.grid.l2}) {
                    const double v = s.a0 + s.a1 * x1 + s.a2 * x2;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            return {lo, hi};
        }
        return {s.value, s.value};
    };
    CoefficientField f;
    f.k = realize(c.k);
    f.c = realize(c.c);
    auto [k1, k2] = bounds(c.k);
    auto [c1, c2] = bounds(c.c);
    f.k1 = k1;
    f.k2 = k2;
    f.c1 = c1;
    f.c2 = c2;
    return f;
}

inline Forcing make_forcing(const Grid& g, const RunConfig& c) {
    const std::vector<ForcingBox> boxes = c.forcing;
    return Forcing(
        g,
        [boxes](double x1, double x2, double) {
            double v = 0.0;
            for (const auto& b : boxes)
                if (x1 >= b.x1_lo && x1 <= b.x1_hi && x2 >= b.x2_lo && x2 <= b.x2_hi) v += b.value;
            return v;
        },
        true);
}

inline Decomposition make_decomposition(const Grid& g, const DecompositionSpec& d) {
    return decompose(g, d.parts1, d.parts2,
                     d.flavor == "overlapping" ? Flavor::overlapping : Flavor::non_overlapping,
                     d.layers, d.coloring == "red_black" ? Coloring::red_black : Coloring::none);
}

inline CgConfig make_cg_config(const RunConfig& c) {
    return CgConfig{c.solver.rel_tol, c.solver.abs_tol, c.solver.max_iter};
}

}  // namespace ddsplit
