#include "spo2cam/vc2s.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "spo2cam/dsp.hpp"
#include "spo2cam/errors.hpp"
#include "spo2cam/rng.hpp"

namespace spo2cam::vc2s {

namespace {

constexpr std::size_t kCheckerLen = std::size_t{3} * kCheckerPatches;

void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << j.dump(2) << '\n';
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void adamw_step(std::vector<float>& params, const std::vector<float>& grad, std::vector<float>& m,
                std::vector<float>& v, long step, double lr, const TrainConfig& cfg) {
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        const double mi = b1 * m[i] + (1.0 - b1) * g;
        const double vi = b2 * v[i] + (1.0 - b2) * g * g;
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg.adam_eps);
        params[i] = static_cast<float>(params[i] - lr * (update + cfg.weight_decay * params[i]));
    }
}

Vc2sModel train_vc2s(const std::vector<TrainSample>& samples, int in_h, int in_w,
                     const TrainConfig& cfg, bool use_colorcheck) {
    if (samples.empty()) throw LengthMismatch("train_vc2s: empty training set");
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw ConfigError("train_vc2s: epochs and batch_size must be positive");
    const Dims dims = Dims::from_input(in_h, in_w);
    const std::size_t roi_len = std::size_t{3} * in_h * in_w;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].roi.size() != roi_len)
            throw ShapeMismatch("train_vc2s: sample " + std::to_string(i) + " roi has " +
                                std::to_string(samples[i].roi.size()) + " values, expected " +
                                std::to_string(roi_len));
        if (samples[i].checker.size() != kCheckerLen)
            throw ShapeMismatch("train_vc2s: sample " + std::to_string(i) +
                                " checker has wrong size");
    }

    Rng rng(cfg.rng_seed);
    Vc2sModel model;
    model.in_h = in_h;
    model.in_w = in_w;
    model.use_colorcheck = use_colorcheck;
    model.config = cfg;
    model.params = init_params<float>(rng);

    const std::vector<float> zeros(kCheckerLen, 0.0f);
    std::vector<float> m(kParamCount, 0.0f), v(kParamCount, 0.0f);
    std::vector<float> grad(kParamCount, 0.0f);
    Work<float> work(dims);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    long step = 0;
    long batch_index = 0;  // global, 0-based; reported by NonFiniteLoss
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(cfg.learning_rate, epoch, cfg.epochs);
        rng.shuffle(order);
        double epoch_acc = 0.0;
        long epoch_batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t bs = end - start;
            std::fill(grad.begin(), grad.end(), 0.0f);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const TrainSample& s = samples[order[k]];
                const float* checker =
                    use_colorcheck ? s.checker.data() : zeros.data();
                const float out = forward_one(model.params, s.roi.data(), checker, work);
                const double diff = static_cast<double>(out) - s.label;
                batch_loss += diff * diff * (1.0 - s.label / 100.0) / static_cast<double>(bs);
                const float d_out = weighted_loss_grad(out, s.label, bs);
                backward_one(model.params, s.roi.data(), checker, work, d_out, grad);
            }
            if (!std::isfinite(batch_loss))
                throw NonFiniteLoss("train_vc2s: non-finite loss at batch " +
                                    std::to_string(batch_index) + " (epoch " +
                                    std::to_string(epoch) + ")");
            ++step;
            adamw_step(model.params, grad, m, v, step, lr, cfg);
            epoch_acc += batch_loss;
            ++epoch_batches;
            ++batch_index;
        }
        model.epoch_loss.push_back(epoch_acc / static_cast<double>(epoch_batches));
    }
    return model;
}

std::vector<float> roi_tensor(const Image& img) {
    if (img.channels != 3)
        throw ShapeMismatch("roi_tensor: expected 3 channels, got " +
                            std::to_string(img.channels));
    std::vector<float> t(std::size_t{3} * img.height * img.width);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t[(static_cast<std::size_t>(c) * img.height + y) * img.width + x] =
                    static_cast<float>(img.at(x, y, c)) / 255.0f;
    return t;
}

std::vector<float> checker_tensor(const ColorCheckerSet& checker) {
    if (checker.patches.size() != kCheckerPatches)
        throw ShapeMismatch("checker_tensor: expected " + std::to_string(kCheckerPatches) +
                            " patches, got " + std::to_string(checker.patches.size()));
    std::vector<float> t(kCheckerLen, 0.0f);
    for (int p = 0; p < kCheckerPatches; ++p) {
        const RgbTriple& rgb = checker.patches[static_cast<std::size_t>(p)].rgb;
        t[0 * kCheckerPatches + p] = static_cast<float>(rgb.r / 255.0);
        t[1 * kCheckerPatches + p] = static_cast<float>(rgb.g / 255.0);
        t[2 * kCheckerPatches + p] = static_cast<float>(rgb.b / 255.0);
    }
    return t;
}

std::vector<float> zero_checker_tensor() { return std::vector<float>(kCheckerLen, 0.0f); }

std::vector<double> predict_series(const Vc2sModel& model, const PreprocessedSession& pre,
                                   const std::optional<std::vector<float>>& checker) {
    if (model.params.size() != kParamCount)
        throw ShapeMismatch("predict_series: model has " + std::to_string(model.params.size()) +
                            " parameters, expected " + std::to_string(kParamCount));
    const std::vector<float>* ck = nullptr;
    std::vector<float> zeros;
    if (model.use_colorcheck) {
        if (!checker)
            throw MissingColorcheck(
                "predict_series: model uses the color branch but no checker reading is "
                "available for this session or its dataset");
        if (checker->size() != kCheckerLen)
            throw ShapeMismatch("predict_series: checker tensor has wrong size");
        ck = &*checker;
    } else {
        zeros.assign(kCheckerLen, 0.0f);
        ck = &zeros;
    }

    const Dims dims = Dims::from_input(model.in_h, model.in_w);
    Work<float> work(dims);
    std::vector<double> out;
    out.reserve(pre.rois.size());
    for (std::size_t i = 0; i < pre.rois.size(); ++i) {
        const Image& img = pre.rois[i];
        if (img.height != model.in_h || img.width != model.in_w)
            throw ShapeMismatch("predict_series: frame " + std::to_string(i) + " is " +
                                std::to_string(img.height) + "x" + std::to_string(img.width) +
                                ", model expects " + std::to_string(model.in_h) + "x" +
                                std::to_string(model.in_w));
        const std::vector<float> roi = roi_tensor(img);
        out.push_back(static_cast<double>(forward_one(model.params, roi.data(), ck->data(), work)));
    }
    return out;
}

std::vector<double> lowpass_series(const std::vector<double>& values, double rate_hz) {
    if (!(rate_hz > 0.05))
        throw RateTooLow("lowpass_series: rate " + std::to_string(rate_hz) + " Hz");
    return filtfilt(butter2_lowpass(0.025, rate_hz), values);
}

void save_checkpoint(const std::filesystem::path& path, const Vc2sModel& model) {
    nlohmann::json j;
    j["version"] = model.version;
    j["in_h"] = model.in_h;
    j["in_w"] = model.in_w;
    j["use_colorcheck"] = model.use_colorcheck;
    j["config"] = {{"epochs", model.config.epochs},
                   {"learning_rate", model.config.learning_rate},
                   {"batch_size", model.config.batch_size},
                   {"weight_decay", model.config.weight_decay},
                   {"adam_beta1", model.config.adam_beta1},
                   {"adam_beta2", model.config.adam_beta2},
                   {"adam_eps", model.config.adam_eps},
                   {"rng_seed", model.config.rng_seed}};
    j["epoch_loss"] = model.epoch_loss;
    nlohmann::json params = nlohmann::json::array();
    for (float p : model.params) params.push_back(static_cast<double>(p));
    j["params"] = std::move(params);
    write_json_atomic(path, j);
}

Vc2sModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path.string() + ": " + e.what());
    }
    if (!j.contains("version"))
        throw ParseError("checkpoint " + path.string() + ": missing version field");
    if (!j["version"].is_number_integer() || j["version"].get<int>() != 1)
        throw ParseError("checkpoint " + path.string() + ": unsupported version " +
                         j["version"].dump());
    try {
        Vc2sModel model;
        model.version = j.at("version").get<int>();
        model.in_h = j.at("in_h").get<int>();
        model.in_w = j.at("in_w").get<int>();
        model.use_colorcheck = j.at("use_colorcheck").get<bool>();
        const nlohmann::json& c = j.at("config");
        model.config.epochs = c.at("epochs").get<int>();
        model.config.learning_rate = c.at("learning_rate").get<double>();
        model.config.batch_size = c.at("batch_size").get<int>();
        model.config.weight_decay = c.at("weight_decay").get<double>();
        model.config.adam_beta1 = c.at("adam_beta1").get<double>();
        model.config.adam_beta2 = c.at("adam_beta2").get<double>();
        model.config.adam_eps = c.at("adam_eps").get<double>();
        model.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
        model.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
        const nlohmann::json& params = j.at("params");
        if (!params.is_array() || params.size() != kParamCount)
            throw ParseError("checkpoint " + path.string() + ": expected " +
                             std::to_string(kParamCount) + " parameters, found " +
                             std::to_string(params.size()));
        model.params.reserve(kParamCount);
        for (const auto& p : params) {
            const double value = p.get<double>();
            if (!std::isfinite(value))
                throw ParseError("checkpoint " + path.string() + ": non-finite parameter");
            model.params.push_back(static_cast<float>(value));
        }
        Dims::from_input(model.in_h, model.in_w);  // validates the stored shape
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path.string() + ": " + e.what());
    }
}

}  // namespace spo2cam::vc2s
