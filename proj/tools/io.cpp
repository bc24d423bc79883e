#include "io.hpp"

#include "quc/common.hpp"
#include "quc/parallel.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace quc::cli {

RunContext::RunContext(RunConfig cfg) : cfg_(std::move(cfg)), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg_.out_dir, ec);
    if (ec || !std::filesystem::is_directory(cfg_.out_dir))
        throw InputError("output directory '" + cfg_.out_dir.string() + "' is not writable");
}

void RunContext::write_file(const std::string& name, const std::string& content) {
    const auto path = cfg_.out_dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    f << content;
    if (!f) throw InputError("cannot write " + path.string());
    outputs_.push_back(name);
}

void RunContext::write_json(const std::string& name, const json& j) { write_file(name, j.dump(2) + "\n"); }

void RunContext::finish(bool pass) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {
        {"schema_version", kSchemaVersion},
        {"tool", "quc"},
        {"version", tool_version()},
        {"subcommand", cfg_.subcommand},
        {"inputs", inputs_},
        {"seed", cfg_.seed},
        {"threads", worker_count()},
        {"wall_time_s", wall},
        {"outputs", outputs_},
        {"status", pass ? "pass" : "fail"},
    };
    const auto path = cfg_.out_dir / (cfg_.subcommand + ".manifest.json");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    f << m.dump(2) << "\n";
}

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }

Csv& Csv::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        text_ += cells[i];
    }
    text_ += '\n';
    return *this;
}

namespace {

int to_int(const std::string& s) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw InputError("not an integer: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    const auto dots = s.find("..");
    if (dots != std::string::npos) {
        const int a = to_int(s.substr(0, dots));
        const int b = to_int(s.substr(dots + 2));
        if (b < a) throw InputError("empty range '" + s + "'");
        for (int i = a; i <= b; ++i) out.push_back(i);
        return out;
    }
    for (const auto& item : split(s, ',')) out.push_back(to_int(item));
    if (out.empty()) throw InputError("empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split(s, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (...) {
            used = 0;
        }
        if (used != item.size()) throw InputError("not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw InputError("empty list");
    return out;
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw InputError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw InputError(where + ": unknown key '" + it.key() + "'");
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot read config '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw InputError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

std::string tool_version() { return QUC_VERSION; }

}  // namespace quc::cli
