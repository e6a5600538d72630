#include "gbcdc/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gbcdc/errors.hpp"

namespace gbcdc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

ConfigValue parse_scalar(const std::string& token, const std::string& where) {
    if (token.empty()) throw ConfigError(where + ": empty value");
    if (token.front() == '"') {
        if (token.size() < 2 || token.back() != '"') throw ConfigError(where + ": unterminated string");
        return token.substr(1, token.size() - 2);
    }
    if (token == "true") return true;
    if (token == "false") return false;
    // integer first, then float
    {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec == std::errc() && ptr == token.data() + token.size()) return v;
    }
    {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec == std::errc() && ptr == token.data() + token.size()) return v;
    }
    throw ConfigError(where + ": cannot parse value '" + token + "'");
}

ConfigValue parse_value(const std::string& raw, const std::string& where) {
    const std::string token = trim(raw);
    if (!token.empty() && token.front() == '[') {
        if (token.back() != ']') throw ConfigError(where + ": unterminated array");
        const std::string inner = token.substr(1, token.size() - 2);
        std::vector<ConfigValue> items;
        std::string cur;
        bool in_string = false;
        for (char c : inner) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                items.push_back(parse_scalar(trim(cur), where));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!trim(cur).empty()) items.push_back(parse_scalar(trim(cur), where));
        if (items.empty()) return std::vector<std::int64_t>{};
        if (std::holds_alternative<std::int64_t>(items.front())) {
            std::vector<std::int64_t> out;
            for (const auto& it : items) {
                if (auto* v = std::get_if<std::int64_t>(&it)) out.push_back(*v);
                else if (auto* d = std::get_if<double>(&it)) out.push_back(static_cast<std::int64_t>(*d));
                else throw ConfigError(where + ": mixed array element types");
            }
            return out;
        }
        if (std::holds_alternative<double>(items.front())) {
            std::vector<double> out;
            for (const auto& it : items) {
                if (auto* v = std::get_if<double>(&it)) out.push_back(*v);
                else if (auto* iv = std::get_if<std::int64_t>(&it)) out.push_back(static_cast<double>(*iv));
                else throw ConfigError(where + ": mixed array element types");
            }
            return out;
        }
        if (std::holds_alternative<std::string>(items.front())) {
            std::vector<std::string> out;
            for (const auto& it : items) {
                if (auto* v = std::get_if<std::string>(&it)) out.push_back(*v);
                else throw ConfigError(where + ": mixed array element types");
            }
            return out;
        }
        throw ConfigError(where + ": unsupported array element type");
    }
    return parse_scalar(token, where);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

}  // namespace

ConfigMap parse_toml(const std::string& text, const std::string& origin) {
    ConfigMap map;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        const std::string content = trim(strip_comment(line));
        if (content.empty()) continue;
        if (content.front() == '[') {
            throw ConfigError(where + ": table headers are not supported; the schema uses flat keys");
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(content.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (map.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        map[key] = parse_value(content.substr(eq + 1), where + " (key '" + key + "')");
    }
    return map;
}

ConfigMap parse_json_config(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(origin + ": top-level JSON value must be an object");
    ConfigMap map;
    for (const auto& [key, value] : j.items()) {
        if (value.is_boolean()) map[key] = value.get<bool>();
        else if (value.is_number_integer() || value.is_number_unsigned()) map[key] = value.get<std::int64_t>();
        else if (value.is_number_float()) map[key] = value.get<double>();
        else if (value.is_string()) map[key] = value.get<std::string>();
        else if (value.is_array()) {
            if (value.empty()) map[key] = std::vector<std::int64_t>{};
            else if (value[0].is_string()) map[key] = value.get<std::vector<std::string>>();
            else if (value[0].is_number_float()) map[key] = value.get<std::vector<double>>();
            else map[key] = value.get<std::vector<std::int64_t>>();
        } else {
            throw ConfigError(origin + ": key '" + key + "' has an unsupported value type");
        }
    }
    return map;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '{') return parse_json_config(text, path);
        break;
    }
    return parse_toml(text, path);
}

void apply_overrides(ConfigMap& map, const std::vector<std::string>& overrides) {
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + item + "': expected key=value");
        const std::string key = trim(item.substr(0, eq));
        if (key.empty()) throw ConfigError("override '" + item + "': empty key");
        map[key] = parse_value(item.substr(eq + 1), "override '" + item + "'");
    }
}

namespace {

class ConfigReader {
public:
    explicit ConfigReader(const ConfigMap& map) : map_(map) {}

    bool has(const std::string& key) {
        used_.insert(key);
        return map_.count(key) > 0;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) {
        if (!has(key)) return fallback;
        const ConfigValue& v = map_.at(key);
        if (auto* i = std::get_if<std::int64_t>(&v)) return *i;
        throw ConfigError("config: key '" + key + "' must be an integer");
    }

    double get_double(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const ConfigValue& v = map_.at(key);
        if (auto* d = std::get_if<double>(&v)) return *d;
        if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
        throw ConfigError("config: key '" + key + "' must be a number");
    }

    bool get_bool(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const ConfigValue& v = map_.at(key);
        if (auto* b = std::get_if<bool>(&v)) return *b;
        throw ConfigError("config: key '" + key + "' must be a boolean");
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const ConfigValue& v = map_.at(key);
        if (auto* s = std::get_if<std::string>(&v)) return *s;
        throw ConfigError("config: key '" + key + "' must be a string");
    }

    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) {
        if (!has(key)) return fallback;
        const ConfigValue& v = map_.at(key);
        if (auto* a = std::get_if<std::vector<std::int64_t>>(&v)) {
            std::vector<int> out;
            for (std::int64_t x : *a) out.push_back(static_cast<int>(x));
            return out;
        }
        if (auto* i = std::get_if<std::int64_t>(&v)) return {static_cast<int>(*i)};
        throw ConfigError("config: key '" + key + "' must be an integer array");
    }

    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        const ConfigValue& v = map_.at(key);
        if (auto* a = std::get_if<std::vector<double>>(&v)) return *a;
        if (auto* ai = std::get_if<std::vector<std::int64_t>>(&v)) {
            std::vector<double> out;
            for (std::int64_t x : *ai) out.push_back(static_cast<double>(x));
            return out;
        }
        throw ConfigError("config: key '" + key + "' must be a numeric array");
    }

    void reject_unknown() const {
        for (const auto& [key, value] : map_) {
            if (!used_.count(key)) throw ConfigError("config: unknown key '" + key + "'");
        }
    }

private:
    const ConfigMap& map_;
    std::set<std::string> used_;
};

}  // namespace

ExperimentConfig experiment_config_from_map(const ConfigMap& map) {
    ConfigReader reader(map);
    const auto version = reader.get_int("schema_version", 1);
    if (version != 1) throw ConfigError("config: unsupported schema_version " + std::to_string(version));

    ExperimentConfig cfg;
    cfg.experiment = reader.get_string("experiment", cfg.experiment);
    cfg.n = static_cast<int>(reader.get_int("n", cfg.n));
    cfg.N_grid = reader.get_int_list("N_grid", cfg.N_grid);
    cfg.replicates = static_cast<int>(reader.get_int("replicates", cfg.replicates));
    cfg.seed = static_cast<std::uint64_t>(reader.get_int("seed", static_cast<std::int64_t>(cfg.seed)));
    cfg.partition = reader.get_string("partition", cfg.partition);
    cfg.threads = static_cast<int>(reader.get_int("threads", cfg.threads));
    cfg.estimator = reader.get_string("estimator", cfg.estimator);
    const std::string mode = reader.get_string("lambda_mode", "rate");
    if (mode == "fixed") cfg.lambda_mode = LambdaMode::fixed;
    else if (mode == "rate") cfg.lambda_mode = LambdaMode::rate;
    else if (mode == "cv_first") cfg.lambda_mode = LambdaMode::cv_first;
    else if (mode == "cv_median") cfg.lambda_mode = LambdaMode::cv_median;
    else throw ConfigError("config: lambda_mode must be fixed, rate, cv_first or cv_median");
    cfg.lambda_fixed = reader.get_double("lambda", cfg.lambda_fixed);
    cfg.rate_exponent = reader.get_double("rate_exponent", cfg.rate_exponent);
    cfg.selection_lambda_scale = reader.get_double("selection_lambda_scale", cfg.selection_lambda_scale);
    cfg.cv_folds = static_cast<int>(reader.get_int("cv_folds", cfg.cv_folds));
    cfg.cv_grid_size = static_cast<int>(reader.get_int("cv_grid_size", cfg.cv_grid_size));
    cfg.vote_threshold = reader.get_double("vote_threshold", cfg.vote_threshold);
    cfg.mu_block = static_cast<int>(reader.get_int("mu_block", cfg.mu_block));
    cfg.p = static_cast<int>(reader.get_int("p", cfg.p));
    cfg.beta = reader.get_double_list("beta", cfg.beta);
    cfg.shared_design = reader.get_bool("shared_design", cfg.shared_design);
    cfg.homogenize = reader.get_bool("homogenize", cfg.homogenize);
    cfg.null_threshold = reader.get_double("null_threshold", cfg.null_threshold);
    cfg.kernel = reader.get_string("kernel", cfg.kernel);
    cfg.bandwidth_c = reader.get_double("bandwidth_c", cfg.bandwidth_c);
    cfg.bandwidth_exponent = reader.get_double("bandwidth_exponent", cfg.bandwidth_exponent);
    cfg.grid_points = static_cast<int>(reader.get_int("grid_points", cfg.grid_points));
    cfg.tilt = reader.get_double("tilt", cfg.tilt);
    reader.reject_unknown();
    validate(cfg);
    return cfg;
}

}  // namespace gbcdc
