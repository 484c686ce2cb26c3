#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fock.hpp"
#include "symbol.hpp"

namespace twistor {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kMatrixLayout = "column-major complex128 little-endian, (re, im) interleaved";

inline nlohmann::json basis_json(const FockBasis& b) {
    return {{"n", b.n()}, {"k", b.k()}, {"D", b.cutoff()}, {"size", b.size()}, {"ordering", kBasisOrdering}};
}

inline nlohmann::json matrix_header(const OperatorMatrix& M) {
    nlohmann::json h;
    h["schema_version"] = kSchemaVersion;
    h["kind"] = "operator_matrix";
    h["basis"] = basis_json(M.basis);
    h["rows"] = M.entries.rows();
    h["cols"] = M.entries.cols();
    h["layout"] = kMatrixLayout;
    return h;
}

// Writes <base>.bin and <base>.json.
inline void write_matrix(const OperatorMatrix& M, const std::string& base, const nlohmann::json& extra = {}) {
    static_assert(std::endian::native == std::endian::little, "binary layout assumes a little-endian host");
    std::ofstream bin(base + ".bin", std::ios::binary);
    if (!bin) throw Error("write_matrix: cannot open " + base + ".bin");
    for (Eigen::Index j = 0; j < M.entries.cols(); ++j)
        for (Eigen::Index i = 0; i < M.entries.rows(); ++i) {
            const double re = M.entries(i, j).real(), im = M.entries(i, j).imag();
            bin.write(reinterpret_cast<const char*>(&re), sizeof re);
            bin.write(reinterpret_cast<const char*>(&im), sizeof im);
        }
    nlohmann::json h = matrix_header(M);
    if (!extra.is_null()) h["meta"] = extra;
    std::ofstream js(base + ".json");
    if (!js) throw Error("write_matrix: cannot open " + base + ".json");
    js << h.dump(2) << "\n";
}

inline OperatorMatrix read_matrix(const std::string& base) {
    std::ifstream js(base + ".json");
    if (!js) throw Error("read_matrix: cannot open " + base + ".json");
    const nlohmann::json h = nlohmann::json::parse(js);
    if (h.at("schema_version").get<int>() != kSchemaVersion) throw Error("read_matrix: unsupported schema_version");
    const auto& b = h.at("basis");
    if (b.at("ordering").get<std::string>() != kBasisOrdering) throw Error("read_matrix: unknown basis ordering");
    FockBasis basis(b.at("n").get<int>(), b.at("k").get<double>(), b.at("D").get<int>());
    const Eigen::Index rows = h.at("rows").get<Eigen::Index>(), cols = h.at("cols").get<Eigen::Index>();
    if (rows != basis.size() || cols != basis.size()) throw Error("read_matrix: dimensions do not match basis");
    std::ifstream bin(base + ".bin", std::ios::binary);
    if (!bin) throw Error("read_matrix: cannot open " + base + ".bin");
    Eigen::MatrixXcd M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            double re = 0, im = 0;
            bin.read(reinterpret_cast<char*>(&re), sizeof re);
            bin.read(reinterpret_cast<char*>(&im), sizeof im);
            if (!bin) throw Error("read_matrix: truncated binary");
            M(i, j) = cplx(re, im);
        }
    return {basis, M};
}

// {"schema_version", "n", "terms": [{"exponents": [[v, vbar, xi, xibar] per l], "re", "im"}]}
inline nlohmann::json polynomial_to_json(const Polynomial& p) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [e, c] : p.terms()) {
        nlohmann::json ex = nlohmann::json::array();
        for (int l = 0; l < p.n(); ++l) ex.push_back({e[4 * l], e[4 * l + 1], e[4 * l + 2], e[4 * l + 3]});
        terms.push_back({{"exponents", ex}, {"re", c.real()}, {"im", c.imag()}});
    }
    return {{"schema_version", kSchemaVersion}, {"n", p.n()}, {"terms", terms}};
}

inline Polynomial polynomial_from_json(const nlohmann::json& j) {
    for (const auto& [key, val] : j.items())
        if (key != "schema_version" && key != "n" && key != "terms")
            throw ConfigError("polynomial: unknown key '" + key + "'");
    const int n = j.at("n").get<int>();
    Polynomial p(n);
    for (const auto& t : j.at("terms")) {
        for (const auto& [key, val] : t.items())
            if (key != "exponents" && key != "re" && key != "im") throw ConfigError("polynomial term: unknown key '" + key + "'");
        const auto& ex = t.at("exponents");
        if (static_cast<int>(ex.size()) != n) throw ConfigError("polynomial term: expected one exponent 4-tuple per variable block");
        Polynomial::Exponents e(4 * n);
        for (int l = 0; l < n; ++l) {
            if (ex[l].size() != 4) throw ConfigError("polynomial term: exponent tuples have 4 entries");
            for (int s = 0; s < 4; ++s) e[4 * l + s] = ex[l][s].get<int>();
        }
        p.add_term(e, cplx(t.value("re", 0.0), t.value("im", 0.0)));
    }
    return p;
}

} // namespace twistor
