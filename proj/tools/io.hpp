#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace quc::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Options shared by every subcommand.
struct RunConfig {
    std::string subcommand;
    std::filesystem::path out_dir = "quc-out";
    std::uint64_t seed = 1;
    std::string format = "json";  ///< stdout format: json | csv
    std::string config_path;
};

/// Collects outputs of one subcommand run and writes them plus the manifest.
class RunContext {
public:
    explicit RunContext(RunConfig cfg);

    const RunConfig& config() const { return cfg_; }
    json& inputs() { return inputs_; }

    /// Writes text to out_dir/name and records it in the manifest.
    void write_file(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const json& j);

    /// Writes <subcommand>.manifest.json; status is "pass" or "fail".
    void finish(bool pass);

private:
    RunConfig cfg_;
    json inputs_ = json::object();
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

/// Shortest round-trip formatting used for every CSV number.
std::string fmt(double v);

/// Simple CSV builder with a fixed header.
class Csv {
public:
    explicit Csv(std::vector<std::string> header);
    Csv& row(const std::vector<std::string>& cells);
    std::string str() const { return text_; }

private:
    std::size_t width_;
    std::string text_;
};

/// "a..b" (inclusive) or "a,b,c".
std::vector<int> parse_int_list(const std::string& s);
std::vector<double> parse_double_list(const std::string& s);

/// Throws InputError naming the first key of j not listed in allowed.
void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where);

json load_json_file(const std::string& path);

std::string tool_version();

}  // namespace quc::cli
