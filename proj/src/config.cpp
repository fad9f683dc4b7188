#include "crosspred/config.hpp"

#include <fstream>
#include <map>
#include <set>

#include "crosspred/csv.hpp"
#include "crosspred/errors.hpp"

namespace crosspred {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

// Cuts an inline comment, respecting double-quoted strings.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string::npos ? pos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

using KeyValues = std::map<std::string, std::string>;

struct RawConfig {
    KeyValues top;
    KeyValues defaults;
    std::vector<KeyValues> scenarios;
};

RawConfig parse_raw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("cannot open config file " + path);
    RawConfig raw;
    enum class Section { Top, Defaults, Scenario } section = Section::Top;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string text = trim(strip_comment(line));
        if (text.empty()) continue;
        const std::string where = path + " line " + std::to_string(lineno);
        if (text == "[defaults]") {
            section = Section::Defaults;
            continue;
        }
        if (text == "[[scenario]]") {
            section = Section::Scenario;
            raw.scenarios.emplace_back();
            continue;
        }
        if (text.front() == '[') {
            throw InvalidConfigError(where + ": unknown section '" + text + "'");
        }
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            throw InvalidConfigError(where + ": expected key = value, got '" + text + "'");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw InvalidConfigError(where + ": empty key or value");
        }
        KeyValues* target = section == Section::Top       ? &raw.top
                            : section == Section::Defaults ? &raw.defaults
                                                           : &raw.scenarios.back();
        if (target->count(key)) {
            throw InvalidConfigError(where + ": duplicate key '" + key + "'");
        }
        (*target)[key] = value;
    }
    return raw;
}

std::string unquote(const std::string& value, const std::string& key) {
    if (value.size() < 2 || value.front() != '"' || value.back() != '"') {
        throw InvalidConfigError("key '" + key + "': expected a quoted string, got " + value);
    }
    return value.substr(1, value.size() - 2);
}

std::vector<std::string> parse_string_array(const std::string& value, const std::string& key) {
    if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
        throw InvalidConfigError("key '" + key + "': expected an array like [\"a\", \"b\"]");
    }
    std::vector<std::string> out;
    const std::string inner = trim(value.substr(1, value.size() - 2));
    if (inner.empty()) return out;
    for (const std::string& item : split(inner, ',')) {
        out.push_back(unquote(trim(item), key));
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw InvalidConfigError("key '" + key + "': expected true or false, got " + value);
}

const std::set<std::string> kScenarioKeys = {
    "name",      "dgp",   "mu",      "sigma2_y",  "r2",
    "r0",        "estimand", "n",    "N",         "pool_total",
    "K",         "B",     "alpha",   "trainer",   "ppi_train_fraction",
    "trials",    "base_seed", "methods", "boot_with_replacement"};

void apply_keys(ScenarioConfig& cfg, const KeyValues& kv, const std::string& context) {
    for (const auto& [key, value] : kv) {
        if (!kScenarioKeys.count(key)) {
            throw InvalidConfigError(context + ": unknown key '" + key + "'");
        }
        if (key == "name") {
            cfg.name = unquote(value, key);
        } else if (key == "dgp") {
            const std::string tag = unquote(value, key);
            if (tag == "mean_quantile") {
                cfg.dgp.kind = DgpKind::MeanQuantile;
            } else if (tag == "linear") {
                cfg.dgp.kind = DgpKind::LinearReg;
            } else {
                throw InvalidConfigError(context + ": unknown dgp '" + tag + "'");
            }
        } else if (key == "mu") {
            cfg.dgp.mu = parse_double(value, context + " key mu");
        } else if (key == "sigma2_y") {
            cfg.dgp.sigma2_y = parse_double(value, context + " key sigma2_y");
        } else if (key == "r2") {
            cfg.dgp.r2 = parse_double(value, context + " key r2");
        } else if (key == "r0") {
            cfg.dgp.r0 = parse_double(value, context + " key r0");
        } else if (key == "estimand") {
            cfg.estimand = parse_estimand_spec(unquote(value, key));
        } else if (key == "n") {
            cfg.n = static_cast<int>(parse_long(value, context + " key n"));
        } else if (key == "N") {
            cfg.N = static_cast<int>(parse_long(value, context + " key N"));
        } else if (key == "pool_total") {
            cfg.pool_total = static_cast<int>(parse_long(value, context + " key pool_total"));
        } else if (key == "K") {
            cfg.K = static_cast<int>(parse_long(value, context + " key K"));
        } else if (key == "B") {
            cfg.B = static_cast<int>(parse_long(value, context + " key B"));
        } else if (key == "alpha") {
            cfg.alpha = parse_double(value, context + " key alpha");
        } else if (key == "trainer") {
            cfg.trainer = parse_trainer_spec(unquote(value, key));
        } else if (key == "ppi_train_fraction") {
            cfg.ppi_train_fraction = parse_double(value, context + " key ppi_train_fraction");
        } else if (key == "trials") {
            cfg.trials = static_cast<int>(parse_long(value, context + " key trials"));
        } else if (key == "base_seed") {
            cfg.base_seed = static_cast<std::uint64_t>(parse_long(value, context + " key base_seed"));
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const std::string& name : parse_string_array(value, key)) {
                cfg.methods.push_back(parse_method(name));
            }
        } else if (key == "boot_with_replacement") {
            cfg.boot_with_replacement = parse_bool(value, key);
        }
    }
}

}  // namespace

ConfigFile load_scenario_config(const std::string& path) {
    const RawConfig raw = parse_raw(path);
    ConfigFile file;
    for (const auto& [key, value] : raw.top) {
        if (key != "schema_version") {
            throw InvalidConfigError(path + ": unknown top-level key '" + key + "'");
        }
        file.schema_version = static_cast<int>(parse_long(value, "schema_version"));
    }
    if (file.schema_version != 1) {
        throw InvalidConfigError(path + ": schema_version = 1 is required");
    }
    if (raw.scenarios.empty()) {
        throw InvalidConfigError(path + ": no [[scenario]] tables");
    }
    for (const auto& [key, value] : raw.defaults) {
        if (key == "name") {
            throw InvalidConfigError(path + ": [defaults] cannot set 'name'");
        }
    }
    std::set<std::string> names;
    for (std::size_t s = 0; s < raw.scenarios.size(); ++s) {
        ScenarioConfig cfg;
        const std::string context = path + " scenario #" + std::to_string(s + 1);
        apply_keys(cfg, raw.defaults, path + " [defaults]");
        apply_keys(cfg, raw.scenarios[s], context);
        if (cfg.name.empty()) {
            throw InvalidConfigError(context + ": missing key 'name'");
        }
        if (!names.insert(cfg.name).second) {
            throw InvalidConfigError(path + ": duplicate scenario name '" + cfg.name + "'");
        }
        cfg.validate();
        file.scenarios.push_back(std::move(cfg));
    }
    return file;
}

TrainerSpec parse_trainer_spec(const std::string& text) {
    const std::vector<std::string> parts = split(text, ':');
    const std::string& kind = parts[0];
    // A bare kind keeps that trainer's default hyperparameters.
    const auto need = [&](std::size_t count) {
        if (parts.size() != 1 && parts.size() != count) {
            throw InvalidConfigError("trainer '" + text + "': expected " + std::to_string(count - 1) +
                                     " parameter(s) after '" + kind + "'");
        }
        return parts.size() == count;
    };
    if (kind == "ridge") {
        if (!need(2)) return make_ridge();
        return make_ridge(parse_double(parts[1], "trainer '" + text + "' lambda"));
    }
    if (kind == "stumps") {
        if (!need(4)) return make_stumps();
        return make_stumps(static_cast<int>(parse_long(parts[1], "trainer '" + text + "' rounds")),
                           parse_double(parts[2], "trainer '" + text + "' learning rate"),
                           static_cast<int>(parse_long(parts[3], "trainer '" + text + "' min_leaf")));
    }
    if (kind == "knn") {
        if (!need(2)) return make_knn();
        return make_knn(static_cast<int>(parse_long(parts[1], "trainer '" + text + "' k")));
    }
    if (kind == "biased") {
        if (parts.size() < 3) {
            throw InvalidConfigError("trainer '" + text + "': biased needs an offset and an inner trainer");
        }
        const double offset = parse_double(parts[1], "trainer '" + text + "' offset");
        std::string inner = parts[2];
        for (std::size_t i = 3; i < parts.size(); ++i) inner += ":" + parts[i];
        return make_biased(parse_trainer_spec(inner), offset);
    }
    throw InvalidConfigError("unknown trainer kind '" + kind + "' in '" + text + "'");
}

namespace {

std::vector<int> parse_columns(const std::string& text, const std::string& context) {
    std::vector<int> cols;
    for (const std::string& part : split(text, '+')) {
        cols.push_back(static_cast<int>(parse_long(part, context)));
    }
    return cols;
}

}  // namespace

EstimandSpec parse_estimand_spec(const std::string& text) {
    const std::vector<std::string> parts = split(text, ':');
    EstimandSpec spec;
    if (parts[0] == "mean") {
        if (parts.size() != 1) throw InvalidConfigError("estimand 'mean' takes no parameters");
        spec.family = Family::Mean;
        return spec;
    }
    if (parts[0] == "quantile") {
        if (parts.size() != 2) {
            throw InvalidConfigError("estimand '" + text + "': expected quantile:<q>");
        }
        spec.family = Family::Quantile;
        spec.q = parse_double(parts[1], "estimand '" + text + "' q");
        return spec;
    }
    if (parts[0] == "ols" || parts[0] == "logit" || parts[0] == "glm-gaussian") {
        if (parts.size() != 3) {
            throw InvalidConfigError("estimand '" + text + "': expected " + parts[0] +
                                     ":<cols>:<coord>");
        }
        if (parts[0] == "ols") {
            spec.family = Family::LinearRegression;
        } else {
            spec.family = Family::Glm;
            spec.glm_family = parts[0] == "logit" ? GlmFamily::Logistic : GlmFamily::Gaussian;
        }
        spec.regressor_indices = parse_columns(parts[1], "estimand '" + text + "' columns");
        spec.report_coordinate =
            static_cast<int>(parse_long(parts[2], "estimand '" + text + "' coordinate"));
        return spec;
    }
    throw InvalidConfigError("unknown estimand '" + text + "'");
}

}  // namespace crosspred
