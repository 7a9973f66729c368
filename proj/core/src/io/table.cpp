#include "ftls/io/table.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "ftls/io/spec.hpp"

#ifndef FTLS_VERSION
#define FTLS_VERSION "0.0.0"
#endif

namespace ftls::io {

ResultTable::ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw std::invalid_argument("ResultTable: no columns");
}

void ResultTable::add_row(std::vector<double> row) {
    if (row.size() != columns_.size()) {
        throw std::invalid_argument(fmt::format("ResultTable: row has {} values, expected {}", row.size(),
                                                columns_.size()));
    }
    rows_.push_back(std::move(row));
}

std::string format_number(double v) { return fmt::format("{}", v); }

std::string ResultTable::to_csv() const {
    fmt::memory_buffer out;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (c) out.push_back(',');
        fmt::format_to(std::back_inserter(out), "{}", columns_[c]);
    }
    out.push_back('\n');
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out.push_back(',');
            fmt::format_to(std::back_inserter(out), "{}", row[c]);
        }
        out.push_back('\n');
    }
    return fmt::to_string(out);
}

void ResultTable::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    const std::string s = to_csv();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

ResultTable ResultTable::read_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(f, line);
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
    }
    ResultTable t(cols);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            auto v = parse_number(nlohmann::json(cell));
            if (!v && cell == "nan") v = std::numeric_limits<double>::quiet_NaN();
            if (!v) throw std::runtime_error("bad CSV cell '" + cell + "' in " + path.string());
            row.push_back(*v);
        }
        t.add_row(std::move(row));
    }
    return t;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) fmt::format_to(std::back_inserter(hex), "{:02x}", md[i]);
    return hex;
}

std::string tool_version() { return FTLS_VERSION; }

nlohmann::json Manifest::to_json() const {
    return {{"name", name},
            {"kind", kind},
            {"spec_digest", spec_digest},
            {"tool_version", tool_version()},
            {"wall_seconds", wall_seconds},
            {"exit_code", exit_code},
            {"artifacts", artifacts},
            {"summary", summary}};
}

void Manifest::write(const std::filesystem::path& path) const { write_json(path, to_json()); }

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

}  // namespace ftls::io
