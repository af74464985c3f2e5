#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sls/error.hpp"

namespace sls {

inline constexpr const char* version = "0.1.0";

/// Flat "key = value" report, one field per line, in insertion order.
class Report {
public:
    void add(std::string key, std::string value) { lines_.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }
    void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
    void add(std::string key, double value) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", value);
        add(std::move(key), std::string(buf));
    }
    void add(std::string key, int value) { add(std::move(key), std::to_string(value)); }
    void add(std::string key, long value) { add(std::move(key), std::to_string(value)); }
    void add(std::string key, long long value) { add(std::move(key), std::to_string(value)); }
    void add(std::string key, unsigned long value) { add(std::move(key), std::to_string(value)); }
    void add(std::string key, unsigned long long value) { add(std::move(key), std::to_string(value)); }
    void add(std::string key, const Eigen::Ref<const Eigen::VectorXd>& v) {
        std::string s;
        char buf[40];
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            if (i) s += ',';
            s += buf;
        }
        add(std::move(key), std::move(s));
    }

    void add_manifest(const char* command, std::uint64_t config_hash, std::uint64_t seed) {
        char hash[24];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
        add("manifest", std::string("command=") + command + " config_hash=fnv1a64:" + hash +
                            " master_seed=" + std::to_string(seed) + " version=" + version);
    }

    const std::vector<std::pair<std::string, std::string>>& lines() const { return lines_; }

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : lines_)
            if (k == key) return &v;
        return nullptr;
    }

    void write(std::ostream& out) const {
        for (const auto& [k, v] : lines_) out << k << " = " << v << '\n';
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path + "' for writing");
        write(out);
        out.flush();
        if (!out) throw IoError("failed writing '" + path + "'");
    }

private:
    std::vector<std::pair<std::string, std::string>> lines_;
};

}  // namespace sls
