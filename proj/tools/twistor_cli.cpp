#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "twistor/twistor.hpp"

using json = nlohmann::json;
using namespace twistor;
namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigFailure = 2, kRuntimeFailure = 3, kFitImpossible = 4 };

// ---- config helpers -------------------------------------------------------

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
            throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
T get_or(const json& j, const char* key, T def) {
    return j.contains(key) ? j.at(key).get<T>() : def;
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key).get<T>();
}

cplx parse_complex(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError("complex value must be a number or [re, im]");
}

RealPoint4n parse_point(const json& j, int n, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != 4 * n)
        throw ConfigError(where + ": expected " + std::to_string(4 * n) + " coordinates");
    RealPoint4n x(n);
    for (int i = 0; i < 4 * n; ++i) x.x[i] = j[i].get<double>();
    return x;
}

SpherePoint parse_sphere(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected [a, b, c]");
    SpherePoint s{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    try {
        s.validate();
    } catch (const InvariantError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return s;
}

// "standard" | {"zeta0": c, "psi": x} | {"removed": [a,b,c], "psi": x}
RemovedFiberChart parse_chart(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() != "standard") throw ConfigError("chart: unknown chart '" + j.get<std::string>() + "'");
        return RemovedFiberChart::standard_chart();
    }
    allow_keys(j, {"zeta0", "removed", "psi", "name"}, "chart");
    const double psi = get_or(j, "psi", std::numbers::pi / 2);
    if (j.contains("zeta0") == j.contains("removed")) throw ConfigError("chart: give exactly one of zeta0, removed");
    if (j.contains("zeta0")) return RemovedFiberChart::from_zeta0(parse_complex(j.at("zeta0")), psi);
    return RemovedFiberChart::general(parse_sphere(j.at("removed"), "chart.removed"), psi);
}

json chart_json(const RemovedFiberChart& c) {
    if (c.standard) return "standard";
    return {{"zeta0", {c.zeta0.real(), c.zeta0.imag()}}, {"psi", c.psi}};
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

BumpFunction parse_bump(const json& j, int n, const std::string& where) {
    BumpFunction b;
    b.center = parse_point(require<json>(j, "center", where), n, where + ".center");
    b.radius = get_or(j, "radius", 1.0);
    if (!(b.radius > 0)) throw ConfigError(where + ": radius must be positive");
    return b;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---- run context ----------------------------------------------------------

struct Run {
    std::string command;
    fs::path config_path;
    json config;
    fs::path out;

    void write_json(const std::string& name, json body) const {
        fs::create_directories(out);
        body["schema_version"] = kSchemaVersion;
        body["command"] = command;
        body["config"] = config;
        body["version"] = kVersion;
        std::ofstream f(out / name);
        if (!f) throw Error("cannot write " + (out / name).string());
        f << body.dump(2) << "\n";
    }
    void write_text(const std::string& name, const std::string& text) const {
        fs::create_directories(out);
        std::ofstream f(out / name);
        if (!f) throw Error("cannot write " + (out / name).string());
        f << text;
    }
};

fs::path output_root() {
    const char* env = std::getenv("TWISTOR_OUT_ROOT");
    return env && *env ? fs::path(env) : fs::path("twistor_out");
}

json load_config(const fs::path& p, const std::string& command) {
    std::ifstream f(p);
    if (!f) throw ConfigError("cannot open config " + p.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (require<int>(j, "schema_version", "config") != kSchemaVersion) throw ConfigError("config: unsupported schema_version");
    if (j.contains("command") && j.at("command").get<std::string>() != command)
        throw ConfigError("config is for command '" + j.at("command").get<std::string>() + "'");
    return j;
}

// ---- charts-check ---------------------------------------------------------

struct Check {
    std::string name;
    double value = 0, tolerance = 0;
    bool pass() const { return value <= tolerance; }
};

std::mt19937_64 make_rng(const json& j) {
    allow_keys(j, {"name", "seed"}, "rng");
    if (get_or<std::string>(j, "name", "mt19937_64") != "mt19937_64") throw ConfigError("rng: only mt19937_64 is supported");
    return std::mt19937_64(require<std::uint64_t>(j, "seed", "rng"));
}

int cmd_charts_check(const Run& run) {
    const json& c = run.config;
    allow_keys(c, {"schema_version", "command", "name", "n", "samples", "rng", "charts", "probes", "tolerances"}, "config");
    const int n = get_or(c, "n", 1);
    if (n < 1 || 4 * n > 4 * kMaxN) throw ConfigError("n out of range");
    const int samples = get_or(c, "samples", 100);
    std::mt19937_64 rng = make_rng(require<json>(c, "rng", "config"));
    const json tol = get_or(c, "tolerances", json::object());
    allow_keys(tol, {"round_trip", "su2", "transition", "holomorphy"}, "tolerances");
    const double t_rt = get_or(tol, "round_trip", 1e-12), t_su2 = get_or(tol, "su2", 1e-13);
    const double t_tr = get_or(tol, "transition", 1e-12), t_hol = get_or(tol, "holomorphy", 1e-12);

    std::vector<std::pair<std::string, RemovedFiberChart>> charts;
    const json cj = get_or(c, "charts", json::array({"standard"}));
    for (size_t i = 0; i < cj.size(); ++i) {
        const std::string name = cj[i].is_object() ? get_or<std::string>(cj[i], "name", "chart" + std::to_string(i))
                                                   : cj[i].get<std::string>();
        charts.emplace_back(name, parse_chart(cj[i]));
    }

    std::normal_distribution<double> N;
    auto random_sphere = [&] {
        double a = N(rng), b = N(rng), s = N(rng);
        const double r = std::sqrt(a * a + b * b + s * s);
        return SpherePoint{a / r, b / r, s / r};
    };
    auto random_point = [&] {
        RealPoint4n x(n);
        for (int i = 0; i < 4 * n; ++i) x.x[i] = N(rng);
        return x;
    };
    auto coord_dist = [](const ChartCoords& a, const ChartCoords& b) {
        return std::max({(a.v - b.v).cwiseAbs().maxCoeff(), (a.xi - b.xi).cwiseAbs().maxCoeff(), std::abs(a.zeta - b.zeta)});
    };

    std::vector<Check> checks;
    std::vector<std::string> failures;
    for (const auto& [name, ch] : charts) {
        Check rt{name + ".round_trip", 0, t_rt}, su{name + ".su2", 0, t_su2}, hol{name + ".holomorphy", 0, t_hol};
        const Eigen::Matrix2cd g = su2_for_removed_point(ch).full();
        su.value = std::max(std::abs(g.determinant() - 1.0), (g * g.adjoint() - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff());
        for (int t = 0; t < samples; ++t) {
            const RealPoint4n x = random_point();
            SpherePoint s = random_sphere();
            // keep samples away from the removed fibre
            while (s.distance(ch.removed) < 1e-3) s = random_sphere();
            const ChartCoords cc = to_chart(x, s, ch);
            auto [y, sp] = from_chart(cc, ch);
            const ChartCoords c2 = to_chart(y, sp, ch);
            rt.value = std::max({rt.value, (y.x - x.x).cwiseAbs().maxCoeff(), sp.distance(s),
                                 coord_dist(cc, c2) / std::max(1.0, std::abs(cc.zeta))});
            hol.value = std::max(hol.value, holomorphy_residual(x, s, ch));
        }
        checks.push_back(rt);
        checks.push_back(su);
        checks.push_back(hol);
    }
    {
        Check tr{"transition", 0, t_tr};
        const auto std_chart = RemovedFiberChart::standard_chart();
        const auto tilde = RemovedFiberChart::from_zeta0(0.0);
        for (int t = 0; t < samples; ++t) {
            const RealPoint4n x = random_point();
            SpherePoint s = random_sphere();
            while (std::abs(s.a) > 0.999) s = random_sphere();
            const ChartCoords a = to_chart(x, s, std_chart);
            const ChartCoords b = to_chart(x, s, tilde);
            const double scale = std::max({1.0, std::abs(a.zeta), 1 / std::abs(a.zeta)});
            tr.value = std::max({tr.value, coord_dist(transition(transition(a)), a) / scale, coord_dist(transition(a), b) / scale});
        }
        checks.push_back(tr);
    }

    json probes = json::array();
    const json pj = get_or(c, "probes", json::array());
    for (size_t i = 0; i < pj.size(); ++i) {
        const std::string where = "probes[" + std::to_string(i) + "]";
        allow_keys(pj[i], {"x", "sphere", "chart"}, where);
        const RealPoint4n x = parse_point(require<json>(pj[i], "x", where), n, where + ".x");
        const SpherePoint s = parse_sphere(require<json>(pj[i], "sphere", where), where + ".sphere");
        const std::string cname = get_or<std::string>(pj[i], "chart", charts.front().first);
        auto it = std::find_if(charts.begin(), charts.end(), [&](const auto& p) { return p.first == cname; });
        if (it == charts.end()) throw ConfigError(where + ": unknown chart '" + cname + "'");
        json rec{{"index", i}, {"chart", cname}};
        try {
            const ChartCoords cc = to_chart(x, s, it->second);
            auto [y, sp] = from_chart(cc, it->second);
            rec["zeta"] = complex_json(cc.zeta);
            rec["round_trip_error"] = std::max((y.x - x.x).cwiseAbs().maxCoeff(), sp.distance(s));
            rec["status"] = "ok";
        } catch (const PoleError& e) {
            rec["status"] = "pole";
            rec["error"] = e.what();
            failures.push_back(where + ": pole: " + e.what());
        }
        probes.push_back(rec);
    }

    json cjs = json::array();
    for (const Check& k : checks) {
        cjs.push_back({{"name", k.name}, {"max_error", k.value}, {"tolerance", k.tolerance}, {"pass", k.pass()}});
        if (!k.pass()) failures.push_back(k.name + ": " + fmt(k.value) + " > " + fmt(k.tolerance));
    }
    json body{{"checks", cjs}, {"probes", probes}, {"pass", failures.empty()}};
    body["first_failure"] = failures.empty() ? json(nullptr) : json(failures.front());
    run.write_json("charts_check.json", body);
    for (const Check& k : checks)
        std::printf("%-28s %s  max_error=%.3e tol=%.0e\n", k.name.c_str(), k.pass() ? "ok  " : "FAIL", k.value, k.tolerance);
    if (!failures.empty()) {
        std::fprintf(stderr, "charts-check failed: %s\n", failures.front().c_str());
        return kCheckFailed;
    }
    return kOk;
}

// ---- reduce ---------------------------------------------------------------

struct FunctionSpec {
    std::string type;
    std::vector<double> coefficients;
    int power = 1;
    double value = 0;
    BumpFunction bump;

    RealFunction fn() const {
        if (type == "constant") return [v = value](const RealPoint4n&) { return cplx(v, 0); };
        if (type == "bump") return bump.as_function();
        return [c = coefficients, p = power](const RealPoint4n& x) {
            double s = 0;
            for (size_t i = 0; i < c.size(); ++i) s += c[i] * x.x[i];
            return cplx(ipow(s, p), 0);
        };
    }
    bool is_two_x1(int n) const {
        if (type != "linear_power" || n != 1) return false;
        return coefficients == std::vector<double>{2, 0, 0, 0};
    }
};

FunctionSpec parse_function(const json& j, int n) {
    FunctionSpec f;
    f.type = require<std::string>(j, "type", "function");
    if (f.type == "constant") {
        allow_keys(j, {"type", "value"}, "function");
        f.value = require<double>(j, "value", "function");
    } else if (f.type == "linear_power") {
        allow_keys(j, {"type", "coefficients", "power"}, "function");
        f.coefficients = require<std::vector<double>>(j, "coefficients", "function");
        if (static_cast<int>(f.coefficients.size()) != 4 * n) throw ConfigError("function: coefficients need 4n entries");
        f.power = get_or(j, "power", 1);
        if (f.power < 0) throw ConfigError("function: power must be >= 0");
    } else if (f.type == "bump") {
        allow_keys(j, {"type", "center", "radius"}, "function");
        f.bump = parse_bump(j, n, "function");
    } else {
        throw ConfigError("function: unknown type '" + f.type + "'");
    }
    return f;
}

int cmd_reduce(const Run& run) {
    const json& c = run.config;
    allow_keys(c, {"schema_version", "command", "name", "n", "chart", "function", "method", "quadrature", "grid", "reference",
                   "tolerance"},
               "config");
    const int n = get_or(c, "n", 1);
    if (n < 1 || n > kMaxN) throw ConfigError("n out of range");
    const RemovedFiberChart chart = parse_chart(get_or(c, "chart", json("standard")));
    const FunctionSpec fn = parse_function(require<json>(c, "function", "config"), n);
    const std::string method = get_or<std::string>(c, "method", "quadrature");
    const json q = get_or(c, "quadrature", json::object());
    allow_keys(q, {"fs_radial", "fs_angular", "gl_order"}, "quadrature");
    const json grid = get_or(c, "grid", json::object());
    allow_keys(grid, {"points_per_axis", "extent"}, "grid");
    const int m = get_or(grid, "points_per_axis", 5);
    const double extent = get_or(grid, "extent", 2.0);
    if (m < 1) throw ConfigError("grid: points_per_axis must be >= 1");
    const std::string reference = get_or<std::string>(c, "reference", "none");
    const double tol = get_or(c, "tolerance", 1e-8);

    Symbol red;
    if (method == "quadrature") {
        red = reduce(pull_back(fn.fn(), chart, n), fs_quadrature_build(get_or(q, "fs_radial", 64), get_or(q, "fs_angular", 64)));
    } else if (method == "radial") {
        if (fn.type != "bump") throw ConfigError("method radial requires a bump function");
        red = reduce_radial(fn.bump, chart, get_or(q, "gl_order", 64));
    } else {
        throw ConfigError("method must be quadrature or radial");
    }

    std::function<double(const ChartCoords&)> ref;
    if (reference == "re_v" || reference == "power_formula" || reference == "power_exact") {
        if (!chart.standard || !fn.is_two_x1(n)) throw ConfigError("reference " + reference + " needs n = 1, the standard chart and h = (2 x1)^m");
        const int pw = fn.power;
        if (reference == "re_v") {
            if (pw != 1) throw ConfigError("reference re_v needs power 1");
            ref = [](const ChartCoords& at) { return at.v[0].real(); };
        } else if (reference == "power_formula") {
            if (pw % 2) throw ConfigError("reference power_formula needs an even power 2p");
            const int p = pw / 2;
            ref = [p](const ChartCoords& at) { return std::pow(2.0, p) * ipow(at.v[0].real(), p) / (p + 1); };
        } else {
            ref = [pw](const ChartCoords& at) {
                const double a = at.v[0].real(), L = std::sqrt(a * a + std::norm(at.xi[0]));
                if (L == 0) return ipow(a, pw);
                return (ipow(a + L, pw + 1) - ipow(a - L, pw + 1)) / (2 * L * (pw + 1));
            };
        }
    } else if (reference == "constant") {
        if (fn.type != "constant") throw ConfigError("reference constant needs a constant function");
        ref = [v = fn.value](const ChartCoords&) { return v; };
    } else if (reference != "none") {
        throw ConfigError("unknown reference '" + reference + "'");
    }

    std::ostringstream csv;
    csv << "v_re,v_im,xi_re,xi_im,value_re,value_im" << (ref ? ",reference,abs_error" : "") << "\n";
    auto axis = [&](int i) { return m == 1 ? 0.0 : -extent + 2 * extent * i / (m - 1); };
    double max_err = 0;
    long points = 0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int d = 0; d < m; ++d)
                for (int e = 0; e < m; ++e) {
                    ChartCoords at(n);
                    at.v[0] = cplx(axis(a), axis(b));
                    at.xi[0] = cplx(axis(d), axis(e));
                    const cplx val = red(at);
                    csv << fmt(at.v[0].real()) << ',' << fmt(at.v[0].imag()) << ',' << fmt(at.xi[0].real()) << ','
                        << fmt(at.xi[0].imag()) << ',' << fmt(val.real()) << ',' << fmt(val.imag());
                    if (ref) {
                        const double r = ref(at), err = std::abs(val - r);
                        max_err = std::max(max_err, err);
                        csv << ',' << fmt(r) << ',' << fmt(err);
                    }
                    csv << "\n";
                    ++points;
                }
    run.write_text("reduce.csv", csv.str());
    json summary{{"points", points}, {"method", method}, {"reference", reference}};
    bool pass = true;
    if (ref) {
        pass = max_err <= tol;
        summary["max_abs_error"] = max_err;
        summary["tolerance"] = tol;
        summary["pass"] = pass;
    }
    run.write_json("reduce.json", {{"summary", summary}});
    std::printf("reduce: %ld points", points);
    if (ref) std::printf(", reference %s max_abs_error=%.3e tol=%.0e %s", reference.c_str(), max_err, tol, pass ? "ok" : "FAIL");
    std::printf("\n");
    return pass ? kOk : kCheckFailed;
}

// ---- toeplitz-build -------------------------------------------------------

int cmd_toeplitz_build(const Run& run) {
    const json& c = run.config;
    allow_keys(c, {"schema_version", "command", "name", "n", "k", "D", "chart", "symbol", "path", "quadrature", "output"}, "config");
    const int n = get_or(c, "n", 1);
    const double k = require<double>(c, "k", "config");
    const int D = require<int>(c, "D", "config");
    const RemovedFiberChart chart = parse_chart(get_or(c, "chart", json("standard")));
    const std::string path = get_or<std::string>(c, "path", "quadrature");
    const std::string output = get_or<std::string>(c, "output", "T");
    const json sj = require<json>(c, "symbol", "config");
    const std::string type = require<std::string>(sj, "type", "symbol");
    Symbol s;
    bool real_symbol = false;
    if (type == "polynomial") {
        allow_keys(sj, {"type", "polynomial"}, "symbol");
        const Polynomial p = polynomial_from_json(require<json>(sj, "polynomial", "symbol"));
        if (p.n() != n) throw ConfigError("symbol: polynomial n does not match");
        s = Symbol::polynomial(p);
        real_symbol = p.conj() == p;
    } else if (type == "constant") {
        allow_keys(sj, {"type", "value"}, "symbol");
        const cplx v = parse_complex(require<json>(sj, "value", "symbol"));
        s = Symbol::constant(n, v);
        real_symbol = v.imag() == 0;
    } else if (type == "bump") {
        allow_keys(sj, {"type", "center", "radius", "form"}, "symbol");
        const BumpFunction b = parse_bump(sj, n, "symbol");
        const std::string form = get_or<std::string>(sj, "form", "reduced");
        if (form == "reduced") s = reduce_radial(b, chart);
        else if (form == "pulled_back") s = pull_back(b.as_function(), chart, n);
        else throw ConfigError("symbol.form must be reduced or pulled_back");
        real_symbol = true;
    } else {
        throw ConfigError("symbol: unknown type '" + type + "'");
    }
    const FockBasis basis(n, k, D);
    QuadratureSpec q = QuadratureSpec::defaults(D);
    const json qj = get_or(c, "quadrature", json::object());
    allow_keys(qj, {"hermite_order", "fs_radial", "fs_angular"}, "quadrature");
    q.hermite_order = get_or(qj, "hermite_order", q.hermite_order);
    q.fs_radial = get_or(qj, "fs_radial", q.fs_radial);
    q.fs_angular = get_or(qj, "fs_angular", q.fs_angular);

    OperatorMatrix M{basis, {}};
    if (path == "exact") M = toeplitz_matrix_exact(s, basis);
    else if (path == "quadrature") M = toeplitz_matrix(s, basis, q);
    else throw ConfigError("path must be exact or quadrature");

    json meta{{"config", c}, {"path", path}, {"version", kVersion}};
    if (path == "quadrature") meta["quadrature"] = {{"hermite_order", q.hermite_order}, {"fs_radial", q.fs_radial}, {"fs_angular", q.fs_angular}};
    fs::create_directories(run.out);
    write_matrix(M, (run.out / output).string(), meta);
    const double norm = operator_norm(M);
    json summary{{"basis", basis_json(basis)}, {"matrix", output}, {"operator_norm", norm}};
    if (real_symbol) summary["hermitian_defect"] = (M.entries - M.entries.adjoint()).cwiseAbs().maxCoeff();
    run.write_json("toeplitz.json", {{"summary", summary}});
    std::printf("toeplitz-build: %d x %d, norm %.12g\n", basis.size(), basis.size(), norm);
    return kOk;
}

// ---- sweep ----------------------------------------------------------------

SymbolSpec parse_symbol_spec(const json& j, int n, const std::string& where) {
    SymbolSpec s;
    const std::string type = require<std::string>(j, "type", where);
    if (type == "bump") {
        allow_keys(j, {"type", "center", "radius"}, where);
        s.type = SymbolSpec::Type::Bump;
        s.bump = parse_bump(j, n, where);
    } else if (type == "polynomial") {
        allow_keys(j, {"type", "polynomial"}, where);
        s.type = SymbolSpec::Type::Polynomial;
        s.poly = polynomial_from_json(require<json>(j, "polynomial", where));
        if (s.poly.n() != n) throw ConfigError(where + ": polynomial n does not match");
    } else if (type == "constant") {
        allow_keys(j, {"type", "value"}, where);
        s.type = SymbolSpec::Type::Constant;
        s.constant = parse_complex(require<json>(j, "value", where));
    } else {
        throw ConfigError(where + ": unknown type '" + type + "'");
    }
    return s;
}

SweepConfig parse_sweep(const json& c) {
    allow_keys(c, {"schema_version", "command", "name", "n", "chart", "f", "g", "ks", "cutoff", "quadrature", "harness",
                   "record_timings"},
               "config");
    SweepConfig s;
    s.n = get_or(c, "n", 1);
    s.chart = parse_chart(get_or(c, "chart", json("standard")));
    s.f = parse_symbol_spec(require<json>(c, "f", "config"), s.n, "f");
    s.g = parse_symbol_spec(require<json>(c, "g", "config"), s.n, "g");
    s.ks = require<std::vector<double>>(c, "ks", "config");
    const json cut = get_or(c, "cutoff", json::object());
    allow_keys(cut, {"offset", "fixed", "r_sup"}, "cutoff");
    s.d_offset = get_or(cut, "offset", s.d_offset);
    s.d_fixed = get_or(cut, "fixed", s.d_fixed);
    s.r_sup = get_or(cut, "r_sup", s.r_sup);
    const json q = get_or(c, "quadrature", json::object());
    allow_keys(q, {"hermite_extra", "fs_radial", "fs_angular", "gl_order"}, "quadrature");
    s.hermite_extra = get_or(q, "hermite_extra", s.hermite_extra);
    s.fs_radial = get_or(q, "fs_radial", s.fs_radial);
    s.fs_angular = get_or(q, "fs_angular", s.fs_angular);
    s.gl_order = get_or(q, "gl_order", s.gl_order);
    const json h = get_or(c, "harness", json::object());
    allow_keys(h, {"interior_margin", "fd_step"}, "harness");
    s.harness.interior_margin = get_or(h, "interior_margin", s.harness.interior_margin);
    s.harness.fd_step = get_or(h, "fd_step", s.harness.fd_step);
    s.validate();
    return s;
}

std::string quote_free(std::string s) {
    std::replace(s.begin(), s.end(), '"', '\'');
    return s;
}

json fit_json(const std::optional<FitResult>& f, const std::string& err) {
    if (!f) return {{"fitted", false}, {"error", err}};
    return {{"fitted", true}, {"slope", f->slope}, {"intercept", f->intercept}, {"stderr", f->stderr_slope}, {"points", f->points}};
}

int cmd_sweep(const Run& run) {
    const SweepConfig cfg = parse_sweep(run.config);
    const bool timings = get_or(run.config, "record_timings", false);
    const SweepResult res = run_sweep(cfg);

    std::ostringstream csv;
    csv << "k,D,basis_size,res_first_order,res_first_order_full,res_commutator,wall_ms,"
           "res_commutator_full,res_commutator_swapped,interior_size,hermite_order,truncation_leak,error\n";
    json recs = json::array();
    for (const SweepRecord& r : res.records) {
        const double ms = timings ? r.wall_ms : 0.0;
        csv << fmt(r.k) << ',' << r.D << ',' << r.basis_size << ',' << fmt(r.res_first_order) << ','
            << fmt(r.res_first_order_full) << ',' << fmt(r.res_commutator) << ',' << fmt(ms) << ','
            << fmt(r.res_commutator_full) << ',' << fmt(r.res_commutator_swapped) << ',' << r.interior_size << ','
            << r.hermite_order << ',' << fmt(r.truncation_leak) << ',' << '"' << quote_free(r.error) << '"' << "\n";
        recs.push_back({{"k", r.k}, {"D", r.D}, {"basis_size", r.basis_size}, {"interior_size", r.interior_size},
                        {"hermite_order", r.hermite_order}, {"res_first_order", r.res_first_order},
                        {"res_first_order_full", r.res_first_order_full}, {"res_commutator", r.res_commutator},
                        {"res_commutator_full", r.res_commutator_full}, {"res_commutator_swapped", r.res_commutator_swapped},
                        {"truncation_leak", r.truncation_leak}, {"wall_ms", ms}, {"error", r.error}});
        std::printf("k=%-6g D=%-3d N=%-5d first_order=%.6e commutator=%.6e%s%s\n", r.k, r.D, r.basis_size,
                    r.res_first_order, r.res_commutator, r.ok() ? "" : "  error: ", r.error.c_str());
    }
    run.write_text("sweep.csv", csv.str());
    json body{{"records", recs},
              {"fit_first_order", fit_json(res.fit_first_order, res.fit_first_order_error)},
              {"fit_commutator", fit_json(res.fit_commutator, res.fit_commutator_error)},
              {"degenerate", res.degenerate},
              {"exact_cancellation", res.exact_cancellation},
              {"first_order_monotone", res.first_order_monotone},
              {"chart", chart_json(cfg.chart)},
              {"support_radius", cfg.support_radius()},
              {"timings_recorded", timings}};
    run.write_json("sweep.json", body);
    if (res.fit_first_order)
        std::printf("slope first_order %.4f +- %.4f\n", res.fit_first_order->slope, res.fit_first_order->stderr_slope);
    if (res.fit_commutator)
        std::printf("slope commutator  %.4f +- %.4f\n", res.fit_commutator->slope, res.fit_commutator->stderr_slope);
    if (res.degenerate) std::printf("degenerate: residuals vanish, no fit\n");
    if (res.exact_cancellation) std::printf("exact-cancellation regime\n");
    if ((!res.fit_first_order || !res.fit_commutator) && !res.degenerate && !res.exact_cancellation) {
        std::fprintf(stderr, "sweep: fit impossible: %s %s\n", res.fit_first_order_error.c_str(), res.fit_commutator_error.c_str());
        return kFitImpossible;
    }
    return kOk;
}

// ---- report ---------------------------------------------------------------

int cmd_report(const Run& run) {
    const json& c = run.config;
    allow_keys(c, {"schema_version", "command", "name", "sweeps", "bands"}, "config");
    const json bands = get_or(c, "bands", json::object());
    allow_keys(bands, {"first_order_slope", "commutator_slope", "max_stderr"}, "bands");
    const double b1 = get_or(bands, "first_order_slope", -1.7), bc = get_or(bands, "commutator_slope", -0.8);
    const double bs = get_or(bands, "max_stderr", 0.25);
    const auto inputs = require<std::vector<std::string>>(c, "sweeps", "config");
    const fs::path root = output_root();

    json rows = json::array();
    std::ostringstream md;
    md << "| sweep | slope first order | stderr | slope commutator | stderr | monotone | first-order band | commutator band |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const std::string& in : inputs) {
        const fs::path p = fs::path(in).is_absolute() ? fs::path(in) : root / in;
        std::ifstream f(p);
        if (!f) throw Error("report: cannot open " + p.string());
        const json s = json::parse(f);
        if (s.at("schema_version").get<int>() != kSchemaVersion || s.at("command") != "sweep")
            throw Error("report: " + in + " is not a sweep summary");
        const json& f1 = s.at("fit_first_order");
        const json& fc = s.at("fit_commutator");
        auto band = [&](const json& fit, double limit) {
            return fit.at("fitted").get<bool>() && fit.at("slope").get<double>() <= limit && fit.at("stderr").get<double>() <= bs;
        };
        const bool p1 = band(f1, b1) && s.at("first_order_monotone").get<bool>();
        const bool pc = band(fc, bc);
        json row{{"sweep", in}, {"fit_first_order", f1}, {"fit_commutator", fc},
                 {"first_order_monotone", s.at("first_order_monotone")}, {"first_order_in_band", p1}, {"commutator_in_band", pc}};
        rows.push_back(row);
        auto num = [](const json& fit, const char* key) { return fit.at("fitted").get<bool>() ? fmt(fit.at(key).get<double>()) : std::string("-"); };
        md << "| " << in << " | " << num(f1, "slope") << " | " << num(f1, "stderr") << " | " << num(fc, "slope") << " | "
           << num(fc, "stderr") << " | " << (s.at("first_order_monotone").get<bool>() ? "yes" : "no") << " | "
           << (p1 ? "pass" : "fail") << " | " << (pc ? "pass" : "fail") << " |\n";
    }
    run.write_json("report.json", {{"rows", rows}, {"bands", {{"first_order_slope", b1}, {"commutator_slope", bc}, {"max_stderr", bs}}}});
    run.write_text("report.md", md.str());
    std::cout << md.str();
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"twistor: charts, reductions, Toeplitz assembly and semiclassical sweeps"};
    app.require_subcommand(1);
    std::string config, out;
    const std::vector<std::pair<std::string, std::string>> cmds{
        {"charts-check", "verify chart round trips, SU(2) data, transitions and holomorphy"},
        {"reduce", "tabulate the fibre reduction of a pulled-back function"},
        {"toeplitz-build", "assemble a truncated Toeplitz matrix"},
        {"sweep", "residual norms over a k-list with decay fits"},
        {"report", "summarise sweep artifacts against slope bands"}};
    for (const auto& [name, desc] : cmds) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config,-c", config, "JSON config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out,-o", out, "output directory (default $TWISTOR_OUT_ROOT/<config name>)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kConfigFailure;
    }
    Run run;
    run.command = app.get_subcommands().front()->get_name();
    run.config_path = config;
    try {
        run.config = load_config(config, run.command);
        const std::string name = get_or<std::string>(run.config, "name", run.config_path.stem().string());
        run.out = out.empty() ? output_root() / name : fs::path(out);
        if (run.command == "charts-check") return cmd_charts_check(run);
        if (run.command == "reduce") return cmd_reduce(run);
        if (run.command == "toeplitz-build") return cmd_toeplitz_build(run);
        if (run.command == "sweep") return cmd_sweep(run);
        return cmd_report(run);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigFailure;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s failed: %s\n", run.command.c_str(), e.what());
        return kRuntimeFailure;
    }
}
