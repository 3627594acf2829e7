#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "conewidth/grid_set.hpp"

namespace cw {

// Flat key=value configuration. Later layers override earlier ones.
class Config {
public:
    Config() = default;
    explicit Config(std::map<std::string, std::string> values) : values_(std::move(values)) {}

    static Config from_file(const std::string& path);
    static Config parse(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void merge(const Config& over);
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& def) const;
    double num(const std::string& key, double def) const;
    int integer(const std::string& key, int def) const;
    bool flag(const std::string& key, bool def) const;
    Vec vec(const std::string& key, const Vec& def) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    std::string canonical() const;
    std::string hash() const;

private:
    std::map<std::string, std::string> values_;
};

Vec parse_vec(const std::string& s);

struct OutputFile {
    std::string name;
    std::string sha256;
};

// Run record written next to the outputs.
class Manifest {
public:
    Manifest(std::string command, Config config, unsigned long long seed);

    void job(const std::string& name, const std::string& status, double seconds);
    void output(const std::string& dir, const std::string& file);
    void write(const std::string& dir) const;

private:
    std::string command_;
    Config config_;
    unsigned long long seed_;
    std::string started_;
    nlohmann::json jobs_ = nlohmann::json::array();
    std::vector<OutputFile> outputs_;
};

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Four-corner set, reused from the cache directory when one is configured.
GridSet cached_cantor(int depth, int k0, int N);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    bool incomplete = false;  // stopped by a resource cap
    double seconds = 0.0;
    double budget_seconds = 0.0;
    std::string detail;
    std::vector<std::string> files;
};

struct VerifyOptions {
    bool quick = false;
    std::string out_dir = "verify_out";
    unsigned long long seed = 20240601ULL;
    int workers = 1;
    std::vector<int> only;  // empty means all
    std::function<void(const CriterionResult&)> on_result;
};

struct VerifySummary {
    std::vector<CriterionResult> results;
    bool all_passed() const;
    bool incomplete() const;
};

VerifySummary verify_all(const VerifyOptions& opt);

}  // namespace cw
