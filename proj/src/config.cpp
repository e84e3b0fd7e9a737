#include "spo2cam/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spo2cam/errors.hpp"

namespace spo2cam {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + value + "' is not an integer");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    // stoull wraps negative input around instead of rejecting it.
    if (value.empty() || value[0] == '-' || value[0] == '+')
        throw ConfigError("config key '" + key + "': '" + value +
                          "' is not a non-negative integer");
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + value +
                          "' is not a non-negative integer");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
    if (value == "off" || value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + key + "': '" + value + "' is not on/off");
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) +
                             ": expected key=value, got '" + trimmed + "'");
        const std::string key = trim(trimmed.substr(0, eq));
        if (key.empty())
            throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        kv[key] = trim(trimmed.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(std::map<std::string, std::string>& kv, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ParseError("override '" + assignment + "': expected key=value");
    kv[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

RunConfig run_config_from(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "method") cfg.method = parse_method(value);
        else if (key == "calibration") cfg.calibration = parse_calibration_mode(value);
        else if (key == "fixed_alpha") cfg.fixed_alpha = parse_double(key, value);
        else if (key == "window_mode") {
            if (value == "first_n") cfg.window_mode = WindowMode::first_n;
            else if (value == "intelligent_k") cfg.window_mode = WindowMode::intelligent_k;
            else throw ConfigError("config key 'window_mode': '" + value +
                                   "' is not first_n/intelligent_k");
        }
        else if (key == "window_n")
            cfg.window_n = static_cast<std::size_t>(parse_u64(key, value));
        else if (key == "color_check") cfg.color_check = parse_bool(key, value);
        else if (key == "frame_policy") cfg.frame_policy = parse_frame_policy(value);
        else if (key == "roi_w") cfg.roi_w = parse_int(key, value);
        else if (key == "roi_h") cfg.roi_h = parse_int(key, value);
        else if (key == "epochs") cfg.train.epochs = parse_int(key, value);
        else if (key == "learning_rate") cfg.train.learning_rate = parse_double(key, value);
        else if (key == "batch_size") cfg.train.batch_size = parse_int(key, value);
        else if (key == "weight_decay") cfg.train.weight_decay = parse_double(key, value);
        else if (key == "adam_beta1") cfg.train.adam_beta1 = parse_double(key, value);
        else if (key == "adam_beta2") cfg.train.adam_beta2 = parse_double(key, value);
        else if (key == "adam_eps") cfg.train.adam_eps = parse_double(key, value);
        else if (key == "train_seed") cfg.train.rng_seed = parse_u64(key, value);
        else if (key == "seed") cfg.seed = parse_u64(key, value);
        else if (key == "dataset") cfg.dataset = value;
        else if (key == "train_datasets") cfg.train_datasets = value;
        else if (key == "test_dataset") cfg.test_dataset = value;
        else if (key == "tissue_model") cfg.tissue_model = value;
        else if (key == "checkpoint") cfg.checkpoint = value;
        else throw ConfigError("unknown config key '" + key + "'");
    }
    if (cfg.roi_w < 1 || cfg.roi_h < 1) throw ConfigError("roi_w/roi_h must be positive");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from(load_config_file(path));
}

std::vector<std::string> run_config_echo(const RunConfig& cfg) {
    std::vector<std::string> lines;
    lines.push_back("method=" + method_name(cfg.method));
    lines.push_back("calibration=" + calibration_mode_name(cfg.calibration));
    lines.push_back("fixed_alpha=" + fmt_g(cfg.fixed_alpha));
    lines.push_back(std::string("window_mode=") +
                    (cfg.window_mode == WindowMode::first_n ? "first_n" : "intelligent_k"));
    lines.push_back("window_n=" + std::to_string(cfg.window_n));
    lines.push_back(std::string("color_check=") + (cfg.color_check ? "on" : "off"));
    lines.push_back("frame_policy=" + frame_policy_name(cfg.frame_policy));
    lines.push_back("roi_w=" + std::to_string(cfg.roi_w));
    lines.push_back("roi_h=" + std::to_string(cfg.roi_h));
    lines.push_back("epochs=" + std::to_string(cfg.train.epochs));
    lines.push_back("learning_rate=" + fmt_g(cfg.train.learning_rate));
    lines.push_back("batch_size=" + std::to_string(cfg.train.batch_size));
    lines.push_back("weight_decay=" + fmt_g(cfg.train.weight_decay));
    lines.push_back("adam_beta1=" + fmt_g(cfg.train.adam_beta1));
    lines.push_back("adam_beta2=" + fmt_g(cfg.train.adam_beta2));
    lines.push_back("adam_eps=" + fmt_g(cfg.train.adam_eps));
    lines.push_back("train_seed=" + std::to_string(cfg.train.rng_seed));
    lines.push_back("seed=" + std::to_string(cfg.seed));
    if (!cfg.dataset.empty()) lines.push_back("dataset=" + cfg.dataset);
    if (!cfg.train_datasets.empty()) lines.push_back("train_datasets=" + cfg.train_datasets);
    if (!cfg.test_dataset.empty()) lines.push_back("test_dataset=" + cfg.test_dataset);
    if (!cfg.tissue_model.empty()) lines.push_back("tissue_model=" + cfg.tissue_model);
    if (!cfg.checkpoint.empty()) lines.push_back("checkpoint=" + cfg.checkpoint);
    return lines;
}

EvalConfig to_eval_config(const RunConfig& cfg) {
    EvalConfig e;
    e.method = cfg.method;
    e.calibration = cfg.calibration;
    e.fixed_alpha = cfg.fixed_alpha;
    e.window_mode = cfg.window_mode;
    e.window_n = cfg.window_n;
    e.color_check = cfg.color_check;
    e.pre.policy = cfg.frame_policy;
    e.pre.roi_w = cfg.roi_w;
    e.pre.roi_h = cfg.roi_h;
    e.train = cfg.train;
    return e;
}

}  // namespace spo2cam
