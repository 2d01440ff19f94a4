#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "inpars/error.hpp"
#include "inpars/text.hpp"

namespace inpars::cli {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kEnvApiKey = "INPARS_API_KEY";
inline constexpr const char* kEnvEndpointUrl = "INPARS_ENDPOINT_URL";

/// "10_000" -> "10000", so numeric flags can be written with digit separators.
inline std::string strip_underscores(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
    return s;
}

/// Options of one subcommand, remembered so the resolved configuration can be
/// dumped next to every output.
class Stage {
public:
    Stage(CLI::App& parent, const std::string& name, const std::string& description)
        : app_(parent.add_subcommand(name, description)), name_(name) {}

    CLI::App* app() const { return app_; }
    const std::string& name() const { return name_; }

    template <typename T>
    CLI::Option* opt(const std::string& key, T& var, const std::string& description) {
        auto* o = app_->add_option("--" + key, var, description)->capture_default_str();
        if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>) o->transform(strip_underscores);
        fields_.emplace_back(key, [&var] { return ojson(var); });
        return o;
    }

    CLI::Option* flag(const std::string& key, bool& var, const std::string& description) {
        auto* o = app_->add_flag("--" + key, var, description);
        fields_.emplace_back(key, [&var] { return ojson(var); });
        return o;
    }

    /// Option whose value is never written to provenance files.
    CLI::Option* secret(const std::string& key, std::string& var, const std::string& description) {
        auto* o = app_->add_option("--" + key, var, description);
        fields_.emplace_back(key, [&var] { return ojson(var.empty() ? "" : "<redacted>"); });
        return o;
    }

    ojson resolved() const {
        ojson j = ojson::object();
        for (const auto& [key, get] : fields_) j[key] = get();
        return j;
    }

private:
    CLI::App* app_;
    std::string name_;
    std::vector<std::pair<std::string, std::function<ojson()>>> fields_;
};

/// Reads "key = value" lines; blank lines and lines starting with '#' are
/// ignored. Keys may be written with dashes or underscores and an optional
/// leading "--".
inline std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::map<std::string, std::string> out;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(path.string(), lineno, raw, "expected 'key = value'");
        std::string key(text::trim(line.substr(0, eq)));
        std::string value(text::trim(line.substr(eq + 1)));
        if (key.rfind("--", 0) == 0) key.erase(0, 2);
        std::replace(key.begin(), key.end(), '-', '_');
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (key.empty()) throw ParseError(path.string(), lineno, raw, "empty key");
        out[key] = value;
    }
    return out;
}

inline std::optional<std::string> find_flag_value(const std::vector<std::string>& args, const std::string& flag) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind(flag + "=", 0) == 0) return args[i].substr(flag.size() + 1);
    }
    return std::nullopt;
}

inline bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

/// Appends "--key=value" for every config entry the subcommand knows, unless
/// the flag is already on the command line or its environment variable is
/// set. This gives flags > env > config file > defaults. Returns the keys
/// the subcommand does not recognize.
inline std::vector<std::string> apply_config(CLI::App& sub, const std::map<std::string, std::string>& config,
                                             std::vector<std::string>& args) {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : config) {
        const std::string flag = "--" + key;
        const CLI::Option* o = sub.get_option_no_throw(flag);
        if (!o) {
            unknown.push_back(key);
            continue;
        }
        if (has_flag(args, flag)) continue;
        const auto& env = o->get_envname();
        if (!env.empty()) {
            const char* v = std::getenv(env.c_str());
            if (v && *v) continue;
        }
        args.push_back(flag + "=" + value);
    }
    return unknown;
}

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string() + " for digest");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-256 unavailable");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

/// Writes <output>.provenance.json: the stage, its fully resolved options and
/// a digest of every input file. Enough to rerun the stage.
inline void write_provenance(const std::filesystem::path& output, const Stage& stage,
                             const std::vector<std::filesystem::path>& inputs,
                             const std::vector<std::filesystem::path>& outputs, const ojson& extra = ojson::object()) {
    ojson j;
    j["tool"] = "inpars";
    j["version"] = kVersion;
    j["stage"] = stage.name();
    j["config"] = stage.resolved();
    j["inputs"] = ojson::array();
    for (const auto& p : inputs) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(p, ec)) continue;
        j["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}, {"bytes", std::filesystem::file_size(p)}});
    }
    j["outputs"] = ojson::array();
    for (const auto& p : outputs) j["outputs"].push_back(p.string());
    if (!extra.empty()) j["details"] = extra;
    std::ofstream out(output.string() + ".provenance.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write provenance file for " + output.string());
    out << j.dump(2) << '\n';
}

}  // namespace inpars::cli
