#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jqfsim/fitting.hpp"

namespace jqfsim {

/// Full double precision in scientific notation; nan and inf spelled out.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const;
    bool has(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Pretty-printed with a trailing newline; NaN values become null.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// names, values, stderr, residual norm and convergence details.
nlohmann::json fit_to_json(const FitResult& fit);

}  // namespace jqfsim
