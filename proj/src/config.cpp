#include "bype/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace bype::cfg {
namespace {

struct KeyDefault {
    const char* key;
    const char* value;
};

// Registry of every configuration key and its default.
const KeyDefault kRegistry[] = {
    {"run.name", "run"},
    {"seed", "1"},
    {"dataset.kind", "pinwheel"}, // pinwheel | idx | cifar | uniform
    {"dataset.images", ""},
    {"dataset.labels", ""},
    {"dataset.cifar", ""},
    {"dataset.classes", "8"},
    {"dataset.per_class", "250"},
    {"dataset.noise", "0.25"},
    {"dataset.dim", "16"},     // uniform synthetic data only
    {"dataset.count", "2000"}, // uniform synthetic data only
    {"dataset.limit", "0"},
    {"split.train", "0.8"},
    {"split.val", "0.1"},
    {"split.test", "0.1"},
    {"model.d_z", "40"},
    {"model.hidden", "300"},
    {"model.layers", "2"},
    {"model.activation", "gated"},
    {"model.dec_out", "sigmoid"},
    {"prior.kind", "bype"},
    {"prior.components", "500"}, // Vamp pseudo-input count
    {"train.epochs", "200"},
    {"train.batch", "100"},
    {"train.lr", "5e-4"},
    {"train.warmup_epochs", "100"},
    {"train.patience", "50"},
    {"coreset.M", "500"},
    {"coreset.step", "0.1"},
    {"coreset.S", "16"},
    {"coreset.k", "10"},
    {"coreset.steps_per_update", "1"},
    {"coreset.step_decay", "false"},
    {"eval.iwae_k", "256"},
    {"eval.desk_scale", "true"},
    {"eval.checkpoint", ""},
    {"eval.knn", "false"},
    {"eval.knn_ks", "3,5,7,9,11,13,15"},
    {"eval.embeddings", "false"},
    {"generate.n", "64"},
    {"generate.grid", "8"},
    {"augment.lambda", "0.4"},
    {"augment.way", "posterior"},
    {"augment.epochs", "30"},
    {"augment.batch", "100"},
    {"augment.hidden", "1024"},
    {"augment.lr", "1e-3"},
    {"report.runs", ""},
    {"report.out", "report.csv"},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::defaults() {
    Config c;
    for (const auto& [key, value] : kRegistry) c.kv_[key] = value;
    return c;
}

Config Config::from_file(const std::string& path) {
    Config c = defaults();
    c.load_file(path);
    return c;
}

void Config::check_known(const std::string& key) const {
    for (const auto& [k, v] : kRegistry)
        if (key == k) return;
    throw UsageError("unknown config key: " + key);
}

void Config::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) +
                             ": expected `key = value`");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void Config::set(const std::string& key, const std::string& value) {
    check_known(key);
    kv_[key] = value;
}

void Config::apply_override(const std::string& key_eq_value) {
    const auto eq = key_eq_value.find('=');
    if (eq == std::string::npos)
        throw UsageError("--set expects key=value, got: " + key_eq_value);
    set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

const std::string& Config::get(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw UsageError("unknown config key: " + key);
    return it->second;
}

double Config::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::exception&) {
        throw UsageError("config key " + key + " is not a number: " + get(key));
    }
}

long Config::get_long(const std::string& key) const {
    try {
        return std::stol(get(key));
    } catch (const std::exception&) {
        throw UsageError("config key " + key + " is not an integer: " + get(key));
    }
}

std::uint64_t Config::get_u64(const std::string& key) const {
    try {
        return std::stoull(get(key));
    } catch (const std::exception&) {
        throw UsageError("config key " + key + " is not an integer: " + get(key));
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key " + key + " is not a boolean: " + v);
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream is(get(key));
    std::string item;
    while (std::getline(is, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::string Config::resolved_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
    return os.str();
}

void Config::write_resolved(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw UsageError("cannot write resolved config: " + path);
    os << resolved_text();
}

} // namespace bype::cfg
