#include "jqfsim/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "jqfsim/errors.hpp"

namespace jqfsim {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17e", v);
    return buf;
}

bool CsvTable::has(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidArgument("csv: no column " + name);
    const auto k = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(k));
    return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    for (std::size_t k = 0; k < table.columns.size(); ++k) out << (k ? "," : "") << table.columns[k];
    out << '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) throw InvalidArgument("csv: row width does not match header");
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
        out << '\n';
    }
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument(path.string() + ": empty csv");
    std::stringstream header(line);
    for (std::string cell; std::getline(header, cell, ',');) t.columns.push_back(cell);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> row;
        for (std::string cell; std::getline(ss, cell, ',');) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": not a number: " + cell);
            }
        }
        if (row.size() != t.columns.size()) {
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(t.columns.size()) + " values");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

nlohmann::json fit_to_json(const FitResult& fit) {
    nlohmann::json j;
    j["model"] = fit.model;
    j["names"] = fit.names;
    j["values"] = fit.values;
    j["stderr"] = fit.errors;
    j["residual_norm"] = fit.residual_norm;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["message"] = fit.message;
    return j;
}

}  // namespace jqfsim
