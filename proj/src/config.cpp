#include "kathleen/config.hpp"

#include <fstream>
#include <sstream>

namespace kathleen {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected integer, got '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class F>
void for_each_kv(const std::string& text, F&& fn) {
    std::stringstream ss(text);
    std::string line;
    int64_t line_no = 0;
    while (std::getline(ss, line)) {
        line_no++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value, got '" + line + "'");
        }
        fn(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& v) {
    // model
    if (key == "model.d") model.d = parse_int(key, v);
    else if (key == "model.freq_filters") model.freq_filters = parse_int(key, v);
    else if (key == "model.freq_kernel") model.freq_kernel = parse_int(key, v);
    else if (key == "model.window") model.window = parse_int(key, v);
    else if (key == "model.hop") model.hop = parse_int(key, v);
    else if (key == "model.basis") model.basis = parse_int(key, v);
    else if (key == "model.harmonics") model.harmonics = parse_int(key, v);
    else if (key == "model.shifts") model.shifts = parse_int(key, v);
    else if (key == "model.lmax") model.lmax = parse_int(key, v);
    else if (key == "model.chunk") model.chunk = parse_int(key, v);
    else if (key == "model.ch_reverb") model.ch_reverb = parse_bool(key, v);
    else if (key == "model.ch_conv") model.ch_conv = parse_bool(key, v);
    else if (key == "model.ch_cons") model.ch_cons = parse_bool(key, v);
    else if (key == "model.ch_diss") model.ch_diss = parse_bool(key, v);
    else if (key == "model.pool") model.pool = v;
    // train
    else if (key == "train.lr") train.lr = parse_double(key, v);
    else if (key == "train.weight_decay") train.weight_decay = parse_double(key, v);
    else if (key == "train.epochs") train.epochs = parse_int(key, v);
    else if (key == "train.dropout") train.dropout = parse_double(key, v);
    else if (key == "train.batch_size") train.batch_size = parse_int(key, v);
    else if (key == "train.seed") train.seed = static_cast<uint64_t>(parse_int(key, v));
    else if (key == "train.beta1") train.beta1 = parse_double(key, v);
    else if (key == "train.beta2") train.beta2 = parse_double(key, v);
    else if (key == "train.adam_eps") train.adam_eps = parse_double(key, v);
    else if (key == "train.clip_norm") train.clip_norm = parse_double(key, v);
    else if (key == "train.max_bytes") train.max_bytes = parse_int(key, v);
    // data
    else if (key == "data.format") data.format = v;
    else if (key == "data.train_path") data.path = v;
    else if (key == "data.test_path") test_path = v;
    else if (key == "data.text_field") data.text_field = v;
    else if (key == "data.label_field") data.label_field = v;
    else if (key == "data.classes") data.class_names = split_csv(v);
    else if (key == "data.limit_train") limit_train = parse_int(key, v);
    else if (key == "data.limit_test") limit_test = parse_int(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig cfg;
    for_each_kv(text, [&](const std::string& k, const std::string& v) { cfg.set(k, v); });
    if (!cfg.data.class_names.empty()) {
        cfg.model.num_classes = static_cast<int64_t>(cfg.data.class_names.size());
    }
    return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

std::string RunConfig::defaults_text() {
    RunConfig d;
    std::ostringstream os;
    os << "# architecture\n";
    os << "model.d = " << d.model.d << "\n";
    os << "model.freq_filters = " << d.model.freq_filters << "\n";
    os << "model.freq_kernel = " << d.model.freq_kernel << "\n";
    os << "model.window = " << d.model.window << "\n";
    os << "model.hop = " << d.model.hop << "\n";
    os << "model.basis = " << d.model.basis << "\n";
    os << "model.harmonics = " << d.model.harmonics << "\n";
    os << "model.shifts = " << d.model.shifts << "\n";
    os << "model.lmax = " << d.model.lmax << "\n";
    os << "model.chunk = " << d.model.chunk << "\n";
    os << "model.ch_reverb = true\nmodel.ch_conv = true\nmodel.ch_cons = true\nmodel.ch_diss = true\n";
    os << "model.pool = dual\n";
    os << "# training\n";
    os << "train.lr = 0.0003\n";
    os << "train.weight_decay = 0.01\n";
    os << "train.epochs = " << d.train.epochs << "\n";
    os << "train.dropout = 0.1\n";
    os << "train.batch_size = " << d.train.batch_size << "\n";
    os << "train.seed = " << d.train.seed << "\n";
    os << "train.beta1 = 0.9\ntrain.beta2 = 0.999\ntrain.adam_eps = 1e-08\n";
    os << "train.clip_norm = 0\n";
    os << "train.max_bytes = " << d.train.max_bytes << "\n";
    os << "# data\n";
    os << "data.format = csv\n";
    os << "data.train_path =\n";
    os << "data.test_path =\n";
    os << "data.text_field = text\n";
    os << "data.label_field = label\n";
    os << "data.classes =\n";
    os << "data.limit_train = 0\ndata.limit_test = 0\n";
    return os.str();
}

std::string model_config_to_text(const ModelConfig& cfg) {
    std::ostringstream os;
    os << "model.d = " << cfg.d << "\n";
    os << "model.freq_filters = " << cfg.freq_filters << "\n";
    os << "model.freq_kernel = " << cfg.freq_kernel << "\n";
    os << "model.window = " << cfg.window << "\n";
    os << "model.hop = " << cfg.hop << "\n";
    os << "model.basis = " << cfg.basis << "\n";
    os << "model.harmonics = " << cfg.harmonics << "\n";
    os << "model.shifts = " << cfg.shifts << "\n";
    os << "model.lmax = " << cfg.lmax << "\n";
    os << "model.chunk = " << cfg.chunk << "\n";
    os << "model.num_classes = " << cfg.num_classes << "\n";
    os << "model.ch_reverb = " << (cfg.ch_reverb ? "true" : "false") << "\n";
    os << "model.ch_conv = " << (cfg.ch_conv ? "true" : "false") << "\n";
    os << "model.ch_cons = " << (cfg.ch_cons ? "true" : "false") << "\n";
    os << "model.ch_diss = " << (cfg.ch_diss ? "true" : "false") << "\n";
    os << "model.pool = " << cfg.pool << "\n";
    return os.str();
}

ModelConfig model_config_from_text(const std::string& text) {
    ModelConfig cfg;
    for_each_kv(text, [&](const std::string& k, const std::string& v) {
        if (k == "model.num_classes") {
            cfg.num_classes = parse_int(k, v);
            return;
        }
        RunConfig tmp;
        tmp.model = cfg;
        tmp.set(k, v);
        cfg = tmp.model;
    });
    return cfg;
}

}  // namespace kathleen
