#include "qctrl/config.hpp"

#include "qctrl/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

extern char** environ;

namespace qctrl {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string env_name_for(const std::string& key) {
    std::string out = "QCTRL_";
    for (char c : key) {
        if (c == '.' || c == '-') {
            out.push_back('_');
        } else {
            out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

std::string key_for_env(const std::string& env) {
    // QCTRL_MANAGER_PORT -> manager.port
    std::string out;
    for (char c : env.substr(6)) {
        if (c == '_') {
            out.push_back('.');
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

}  // namespace

Config Config::from_text(const std::string& text) {
    Config cfg;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(line_no) + " is not key=value");
        cfg.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    cfg.apply_env_overrides();
    return cfg;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

void Config::apply_env_overrides() {
    // Override known keys in place and pick up QCTRL_* variables for keys the
    // file never mentioned.
    for (auto& [key, value] : values_) {
        if (const char* env = std::getenv(env_name_for(key).c_str())) value = env;
    }
    for (char** e = environ; e && *e; ++e) {
        std::string entry(*e);
        if (entry.rfind("QCTRL_", 0) != 0) continue;
        auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = key_for_env(entry.substr(0, eq));
        if (!values_.count(key)) values_[key] = entry.substr(eq + 1);
    }
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw Error("config key '" + key + "' is not an integer: " + it->second);
    }
}

double Config::real(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw Error("config key '" + key + "' is not a number: " + it->second);
    }
}

bool Config::boolean(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw Error("config key '" + key + "' is not a boolean: " + it->second);
}

std::vector<std::string> Config::list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream stream(str(key));
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace qctrl
