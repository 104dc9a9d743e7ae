// io.hpp: artifact writers: CSV tables whose header cells carry units, JSON reports and the
// per-run manifest (input hashes, seed, tool version, wall time). Data files are formatted
// deterministically; only the manifest records timing.

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "dtc/errors.hpp"

namespace dtc {

inline constexpr const char* kToolVersion = "1.0.0";

/// Lowercase hex SHA-256 of a byte string.
inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shortest round-trip decimal form; NaN and infinities spelled out.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

struct Column {
    std::string name;
    std::string unit;  // empty: dimensionless
};

/// Column-major numeric table with optional string columns in front.
struct Table {
    std::vector<Column> text_columns;
    std::vector<std::vector<std::string>> text;  // [column][row]
    std::vector<Column> columns;
    std::vector<std::vector<double>> data;       // [column][row]

    void add_text(Column c, std::vector<std::string> v) {
        text_columns.push_back(std::move(c));
        text.push_back(std::move(v));
    }
    void add(Column c, std::vector<double> v) {
        columns.push_back(std::move(c));
        data.push_back(std::move(v));
    }

    std::size_t rows() const {
        std::size_t n = 0;
        for (const auto& v : text) n = std::max(n, v.size());
        for (const auto& v : data) n = std::max(n, v.size());
        return n;
    }

    static std::string header(const Column& c) { return c.unit.empty() ? c.name : c.name + " [" + c.unit + "]"; }

    std::string csv() const {
        std::ostringstream os;
        bool first = true;
        for (const auto& c : text_columns) os << (std::exchange(first, false) ? "" : ",") << header(c);
        for (const auto& c : columns) os << (std::exchange(first, false) ? "" : ",") << header(c);
        os << '\n';
        const std::size_t n = rows();
        for (std::size_t r = 0; r < n; ++r) {
            first = true;
            for (const auto& v : text) os << (std::exchange(first, false) ? "" : ",") << (r < v.size() ? v[r] : "");
            for (const auto& v : data)
                os << (std::exchange(first, false) ? "" : ",") << (r < v.size() ? format_number(v[r]) : "");
            os << '\n';
        }
        return os.str();
    }

    nlohmann::ordered_json json() const {
        nlohmann::ordered_json j;
        j["columns"] = nlohmann::ordered_json::array();
        for (const auto& c : text_columns) j["columns"].push_back({{"name", c.name}, {"unit", c.unit}});
        for (const auto& c : columns) j["columns"].push_back({{"name", c.name}, {"unit", c.unit}});
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        const std::size_t n = this->rows();
        for (std::size_t r = 0; r < n; ++r) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (const auto& v : text) row.push_back(r < v.size() ? v[r] : "");
            for (const auto& v : data) row.push_back(r < v.size() && std::isfinite(v[r]) ? nlohmann::ordered_json(v[r]) : nullptr);
            rows.push_back(std::move(row));
        }
        j["rows"] = std::move(rows);
        return j;
    }
};

/// Collects the artifacts of one run and writes them with a manifest.
class ArtifactWriter {
public:
    ArtifactWriter(std::filesystem::path dir, std::string format) : dir_(std::move(dir)), format_(std::move(format)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            throw PreconditionError("output directory '" + dir_.string() + "' is not writable");
    }

    const std::filesystem::path& directory() const { return dir_; }

    /// Writes `stem`.csv or `stem`.json depending on the format flag.
    void table(const std::string& stem, const Table& t) {
        if (format_ == "json") {
            write(stem + ".json", t.json().dump(2) + "\n");
        } else {
            write(stem + ".csv", t.csv());
        }
    }

    void report(const std::string& stem, const nlohmann::ordered_json& j) { write(stem + ".json", j.dump(2) + "\n"); }

    void write(const std::string& name, const std::string& content) {
        const std::filesystem::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw PreconditionError("cannot write '" + path.string() + "'");
        out << content;
        if (!out) throw PreconditionError("write to '" + path.string() + "' failed");
        artifacts_.push_back({name, sha256_hex(content)});
    }

    /// manifest.json: tool version, command, seed, config hash, input file hashes, artifact
    /// hashes and wall time. The only file of a run that is not deterministic.
    void manifest(const std::string& command, const nlohmann::ordered_json& config, std::uint64_t seed,
                  const std::vector<std::string>& inputs, double wall_seconds) {
        nlohmann::ordered_json m;
        m["tool"] = "dtc";
        m["version"] = kToolVersion;
        m["command"] = command;
        m["seed"] = seed;
        m["config_sha256"] = sha256_hex(config.dump());
        m["inputs"] = nlohmann::ordered_json::array();
        for (const std::string& f : inputs) m["inputs"].push_back({{"path", f}, {"sha256", sha256_hex(read_file(f))}});
        m["artifacts"] = nlohmann::ordered_json::array();
        for (const auto& [name, hash] : artifacts_) m["artifacts"].push_back({{"file", name}, {"sha256", hash}});
        m["wall_time_s"] = wall_seconds;
        const std::filesystem::path path = dir_ / "manifest.json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw PreconditionError("cannot write '" + path.string() + "'");
        out << m.dump(2) << '\n';
    }

    const std::vector<std::pair<std::string, std::string>>& artifacts() const { return artifacts_; }

private:
    std::filesystem::path dir_;
    std::string format_;
    std::vector<std::pair<std::string, std::string>> artifacts_;
};

}  // namespace dtc
