#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qctrl {

// key=value configuration with '#' comments. Environment variables override
// file values: key "manager.port" maps to QCTRL_MANAGER_PORT.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);   // throws if unreadable
    static Config from_text(const std::string& text);

    void apply_env_overrides();  // called by from_file/from_text

    bool has(const std::string& key) const;
    std::string str(const std::string& key, const std::string& fallback = "") const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    double real(const std::string& key, double fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::vector<std::string> list(const std::string& key) const;  // comma-separated

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace qctrl
