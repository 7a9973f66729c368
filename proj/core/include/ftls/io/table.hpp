#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ftls::io {

/// Ordered rows of named numeric columns. Values are written in the shortest
/// form that reads back to the same double, so equal inputs give equal bytes.
class ResultTable {
public:
    explicit ResultTable(std::vector<std::string> columns);

    void add_row(std::vector<double> row);
    void add_row(std::initializer_list<double> row) { add_row(std::vector<double>(row)); }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;

    /// Reads a CSV written by to_csv.
    static ResultTable read_csv(const std::filesystem::path& path);

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

std::string format_number(double v);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

std::string tool_version();

struct Manifest {
    std::string name;
    std::string kind;
    std::string spec_digest;
    double wall_seconds = 0.0;
    int exit_code = 0;
    std::vector<std::string> artifacts;  ///< paths relative to the output directory
    nlohmann::json summary = nlohmann::json::object();

    nlohmann::json to_json() const;
    void write(const std::filesystem::path& path) const;
};

/// Pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace ftls::io
