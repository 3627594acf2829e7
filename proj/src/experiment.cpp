#include "conewidth/experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conewidth/errors.hpp"
#include "conewidth/format.hpp"

namespace cw {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ArgumentError("config line " + std::to_string(lineno) + ": empty key");
        c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::merge(const Config& over) {
    for (const auto& [k, v] : over.values_) values_[k] = v;
}

std::string Config::str(const std::string& key, const std::string& def) const {
    auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
}

double Config::num(const std::string& key, double def) const {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ArgumentError("config key " + key + ": not a number: " + it->second);
    }
}

int Config::integer(const std::string& key, int def) const {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
        std::size_t pos = 0;
        int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ArgumentError("config key " + key + ": not an integer: " + it->second);
    }
}

bool Config::flag(const std::string& key, bool def) const {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    const auto& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ArgumentError("config key " + key + ": not a boolean: " + v);
}

Vec Config::vec(const std::string& key, const Vec& def) const {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    return parse_vec(it->second);
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

std::string Config::hash() const { return sha256_hex(canonical()); }

Vec parse_vec(const std::string& s) {
    std::vector<double> xs;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) throw ArgumentError("empty component in vector: " + s);
        try {
            std::size_t pos = 0;
            xs.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ArgumentError("bad vector component: " + tok);
        }
    }
    if (xs.empty()) throw ArgumentError("empty vector");
    Vec v(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
    return v;
}

Manifest::Manifest(std::string command, Config config, unsigned long long seed)
    : command_(std::move(command)), config_(std::move(config)), seed_(seed), started_(utc_now()) {}

void Manifest::job(const std::string& name, const std::string& status, double seconds) {
    jobs_.push_back({{"name", name}, {"status", status}, {"seconds", seconds}});
}

void Manifest::output(const std::string& dir, const std::string& file) {
    outputs_.push_back({file, sha256_file((fs::path(dir) / file).string())});
}

void Manifest::write(const std::string& dir) const {
    nlohmann::json j;
    j["tool"] = "conewidth";
    j["command"] = command_;
    j["seed"] = seed_;
    j["config"] = config_.values();
    j["config_hash"] = config_.hash();
    j["started"] = started_;
    j["finished"] = utc_now();
    j["jobs"] = jobs_;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& o : outputs_) outs.push_back({{"file", o.name}, {"sha256", o.sha256}});
    j["outputs"] = outs;
    write_text_file((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

void write_text_file(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot write " + path);
    out << text;
    if (!out) throw ResourceError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GridSet cached_cantor(int depth, int k0, int N) {
    const char* dir = std::getenv("CONEWIDTH_CACHE_DIR");
    if (!dir || !*dir) return four_corner_cantor(depth, k0, N);
    fs::path p = fs::path(dir) / ("cantor_d" + std::to_string(depth) + "_k" + std::to_string(k0) + "_N" +
                                  std::to_string(N) + ".set");
    if (fs::exists(p)) {
        try {
            GridSet s = load_grid_set(p.string());
            if ((N == 0 || s.N() == N) && s.dim() == 2) return s;
        } catch (const std::exception&) {
        }
    }
    GridSet s = four_corner_cantor(depth, k0, N);
    try {
        fs::create_directories(p.parent_path());
        save_grid_set(p.string(), s);
    } catch (const std::exception&) {
    }
    return s;
}

bool VerifySummary::all_passed() const {
    for (const auto& r : results)
        if (!r.passed) return false;
    return !results.empty();
}

bool VerifySummary::incomplete() const {
    for (const auto& r : results)
        if (r.incomplete) return true;
    return false;
}

}  // namespace cw
