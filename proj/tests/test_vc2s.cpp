#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "spo2cam/dsp.hpp"
#include "spo2cam/errors.hpp"
#include "spo2cam/rng.hpp"
#include "spo2cam/vc2s.hpp"

using namespace spo2cam;
using namespace spo2cam::vc2s;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("spo2cam_vc2s_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

template <typename T>
std::vector<T> random_tensor(Rng& rng, std::size_t n) {
    std::vector<T> t(n);
    for (auto& v : t) v = static_cast<T>(rng.uniform());
    return t;
}

// Batch loss as a pure function of the parameter vector, for finite
// differences.
template <typename T>
T batch_loss(const std::vector<T>& params, const Dims& d,
             const std::vector<std::vector<T>>& rois, const std::vector<std::vector<T>>& checkers,
             const std::vector<T>& labels) {
    Work<T> w(d);
    std::vector<T> outs;
    for (std::size_t i = 0; i < rois.size(); ++i)
        outs.push_back(forward_one(params, rois[i].data(), checkers[i].data(), w));
    return weighted_loss(outs, labels);
}

TrainSample random_sample(Rng& rng, int h, int w, float label) {
    TrainSample s;
    s.roi = random_tensor<float>(rng, std::size_t{3} * h * w);
    s.checker = random_tensor<float>(rng, std::size_t{3} * kCheckerPatches);
    s.label = label;
    return s;
}

}  // namespace

TEST_CASE("vc2s: parameter layout is contiguous and totals 462273") {
    CHECK(kConvVideoB - kConvVideoW == 16 * 3 * 5 * 5);
    CHECK(kConvColorW - kConvVideoB == 16);
    CHECK(kConvColorB - kConvColorW == 16 * 3);
    CHECK(kConvFuseW - kConvColorB == 16);
    CHECK(kConvFuseB - kConvFuseW == 64 * 32 * 5 * 5);
    CHECK(kFc1W - kConvFuseB == 64);
    CHECK(kFc1B - kFc1W == std::size_t{64} * 64 * 10 * 10);
    CHECK(kFc2W - kFc1B == 64);
    CHECK(kFc2B - kFc2W == 64);
    CHECK(kParamCount == 462273);
}

TEST_CASE("vc2s: intermediate shapes for a 60x100 input") {
    const Dims d = Dims::from_input(60, 100);
    // video path: 5x5 valid conv then 2x2 pool
    CHECK(d.vc_h == 56);
    CHECK(d.vc_w == 96);
    CHECK(d.vp_h == 28);
    CHECK(d.vp_w == 48);
    // color path: 24x1 pooled to 12x1
    CHECK(d.cp_h == 12);
    CHECK(d.cp_w == 1);
    // fused path
    CHECK(d.fu_h == 24);
    CHECK(d.fu_w == 44);
    CHECK(d.fp_h == 12);
    CHECK(d.fp_w == 22);
}

TEST_CASE("vc2s: input below the 20px minimum is rejected") {
    CHECK_THROWS_AS(Dims::from_input(19, 40), ShapeMismatch);
    CHECK_THROWS_AS(Dims::from_input(40, 19), ShapeMismatch);
    CHECK_NOTHROW(Dims::from_input(20, 20));
}

TEST_CASE("vc2s: all-zero weights give exactly zero output") {
    Rng rng(7);
    const Dims d = Dims::from_input(24, 32);
    const std::vector<double> params(kParamCount, 0.0);
    const auto roi = random_tensor<double>(rng, std::size_t{3} * 24 * 32);
    const auto checker = random_tensor<double>(rng, std::size_t{3} * kCheckerPatches);
    Work<double> w(d);
    CHECK(forward_one(params, roi.data(), checker.data(), w) == 0.0);
}

TEST_CASE("vc2s: forward is a pure function of parameters and inputs") {
    Rng rng(8);
    Rng init(42);
    const Dims d = Dims::from_input(20, 20);
    const auto params = init_params<float>(init);
    const auto roi = random_tensor<float>(rng, std::size_t{3} * 20 * 20);
    const auto checker = random_tensor<float>(rng, std::size_t{3} * kCheckerPatches);
    Work<float> w1(d), w2(d);
    const float a = forward_one(params, roi.data(), checker.data(), w1);
    const float b = forward_one(params, roi.data(), checker.data(), w2);
    const float c = forward_one(params, roi.data(), checker.data(), w1);  // reused workspace
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    CHECK(std::memcmp(&a, &c, sizeof a) == 0);
}

TEST_CASE("vc2s: permuting checker patches changes the output") {
    Rng rng(9);
    Rng init(43);
    const Dims d = Dims::from_input(20, 20);
    const auto params = init_params<double>(init);
    const auto roi = random_tensor<double>(rng, std::size_t{3} * 20 * 20);
    auto checker = random_tensor<double>(rng, std::size_t{3} * kCheckerPatches);
    Work<double> w(d);
    const double before = forward_one(params, roi.data(), checker.data(), w);
    // swap patches 0 and 23 in every channel
    for (int c = 0; c < 3; ++c)
        std::swap(checker[c * kCheckerPatches + 0], checker[c * kCheckerPatches + 23]);
    const double after = forward_one(params, roi.data(), checker.data(), w);
    CHECK(std::abs(after - before) > 0.0);
}

TEST_CASE("vc2s: adaptive pooling fixes the head input for any ROI size") {
    Rng init(44);
    const auto params = init_params<float>(init);
    for (const auto [h, w] : {std::pair{60, 100}, std::pair{150, 300}, std::pair{480, 640}}) {
        Rng rng(100 + h);
        const Dims d = Dims::from_input(h, w);
        const auto roi = random_tensor<float>(rng, std::size_t{3} * h * w);
        const auto checker = random_tensor<float>(rng, std::size_t{3} * kCheckerPatches);
        Work<float> work(d);
        CHECK(work.f_adapt.size() == std::size_t{64} * 10 * 10);
        const float out = forward_one(params, roi.data(), checker.data(), work);
        CHECK(std::isfinite(out));
    }
}

TEST_CASE("vc2s: weighted loss matches hand-computed examples") {
    // perfect prediction
    CHECK(weighted_loss<double>({92.0, 85.0}, {92.0, 85.0}) == 0.0);
    // (90, 80): (90-80)^2 * (1 - 0.8) = 20
    CHECK(std::abs(weighted_loss<double>({90.0}, {80.0}) - 20.0) <= 1e-12);
    // {(95,90),(95,98)}: (25*0.10 + 9*0.02) / 2 = 1.34
    CHECK(std::abs(weighted_loss<double>({95.0, 95.0}, {90.0, 98.0}) - 1.34) <= 1e-12);
}

TEST_CASE("vc2s: loss weight stays within [0, 0.2] over the label range") {
    for (double y = 80.0; y <= 100.0; y += 0.5) {
        const double w = 1.0 - y / 100.0;
        CHECK(w >= 0.0);
        CHECK(w <= 0.2);
        CHECK(weighted_loss<double>({y + 3.0}, {y}) >= 0.0);
    }
}

TEST_CASE("vc2s: analytic gradients match central differences") {
    Rng rng(11);
    Rng init(45);
    const int h = 20, w = 20;
    const Dims d = Dims::from_input(h, w);
    auto params = init_params<double>(init);

    std::vector<std::vector<double>> rois, checkers;
    std::vector<double> labels = {92.0, 85.0, 97.0};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        rois.push_back(random_tensor<double>(rng, std::size_t{3} * h * w));
        checkers.push_back(random_tensor<double>(rng, std::size_t{3} * kCheckerPatches));
    }

    // analytic gradient of the batch loss
    std::vector<double> grad(kParamCount, 0.0);
    Work<double> work(d);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double out = forward_one(params, rois[i].data(), checkers[i].data(), work);
        const double d_out = weighted_loss_grad(out, labels[i], labels.size());
        backward_one(params, rois[i].data(), checkers[i].data(), work, d_out, grad);
    }

    const double step = 1e-4;
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t i = rng.uniform_index(kParamCount);
        const double saved = params[i];
        params[i] = saved + step;
        const double up = batch_loss(params, d, rois, checkers, labels);
        params[i] = saved - step;
        const double down = batch_loss(params, d, rois, checkers, labels);
        params[i] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double denom = std::max(std::abs(grad[i]), std::abs(fd));
        // a coordinate dead on both sides (ReLU-inactive path) trivially agrees
        if (denom < 1e-7) continue;
        CHECK(std::abs(grad[i] - fd) / denom <= 1e-3);
        ++checked;
    }
    CHECK(checked > 30);  // enough sampled coordinates must be live
}

TEST_CASE("vc2s: a batch with zero loss produces zero gradients") {
    Rng rng(12);
    const Dims d = Dims::from_input(20, 20);
    const std::vector<double> params(kParamCount, 0.0);
    const auto roi = random_tensor<double>(rng, std::size_t{3} * 20 * 20);
    const auto checker = random_tensor<double>(rng, std::size_t{3} * kCheckerPatches);
    Work<double> w(d);

    // weight is zero at a label of 100, so loss and gradient both vanish
    const double out = forward_one(params, roi.data(), checker.data(), w);
    CHECK(weighted_loss<double>({out}, {100.0}) == 0.0);
    std::vector<double> grad(kParamCount, 0.0);
    backward_one(params, roi.data(), checker.data(), w, weighted_loss_grad(out, 100.0, 1), grad);
    for (double g : grad) {
        if (g != 0.0) {
            CHECK(g == 0.0);
            break;
        }
    }
}

TEST_CASE("vc2s: duplicating a sample leaves the mean gradient unchanged") {
    Rng rng(13);
    Rng init(46);
    const Dims d = Dims::from_input(20, 20);
    const auto params = init_params<double>(init);
    const auto roi = random_tensor<double>(rng, std::size_t{3} * 20 * 20);
    const auto checker = random_tensor<double>(rng, std::size_t{3} * kCheckerPatches);
    Work<double> w(d);

    std::vector<double> g_single(kParamCount, 0.0);
    const double out1 = forward_one(params, roi.data(), checker.data(), w);
    backward_one(params, roi.data(), checker.data(), w, weighted_loss_grad(out1, 90.0, 1),
                 g_single);

    std::vector<double> g_double(kParamCount, 0.0);
    for (int rep = 0; rep < 2; ++rep) {
        const double out = forward_one(params, roi.data(), checker.data(), w);
        backward_one(params, roi.data(), checker.data(), w, weighted_loss_grad(out, 90.0, 2),
                     g_double);
    }

    // identical up to accumulation-order rounding: the duplicated batch sums
    // the same halved contributions twice, so the fold order differs by ulps
    double max_diff = 0.0, max_mag = 1.0;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        max_diff = std::max(max_diff, std::abs(g_single[i] - g_double[i]));
        max_mag = std::max(max_mag, std::abs(g_single[i]));
    }
    CHECK(max_diff <= 1e-12 * max_mag);
}

TEST_CASE("vc2s: cosine schedule endpoints and monotonicity") {
    CHECK(cosine_lr(1e-3, 0, 15) == 1e-3);
    CHECK(std::abs(cosine_lr(1e-3, 15, 15)) <= 1e-12 * 1e-3);
    double prev = cosine_lr(1e-3, 0, 15);
    for (int t = 1; t <= 15; ++t) {
        const double cur = cosine_lr(1e-3, t, 15);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("vc2s: AdamW with zero gradient and zero decay is a no-op") {
    Rng init(47);
    auto params = init_params<float>(init);
    const auto before = params;
    std::vector<float> grad(kParamCount, 0.0f), m(kParamCount, 0.0f), v(kParamCount, 0.0f);
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    adamw_step(params, grad, m, v, 1, 1e-3, cfg);
    CHECK(params == before);

    // with decay on, zero gradient still shrinks weights toward zero
    cfg.weight_decay = 0.01;
    adamw_step(params, grad, m, v, 2, 1e-3, cfg);
    CHECK(params != before);
}

TEST_CASE("vc2s: zero learning rate leaves parameters at their init") {
    Rng rng(14);
    std::vector<TrainSample> data;
    for (int i = 0; i < 8; ++i)
        data.push_back(random_sample(rng, 20, 20, static_cast<float>(85 + i)));
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.0;
    cfg.rng_seed = 5;
    const Vc2sModel model = train_vc2s(data, 20, 20, cfg);
    Rng init(5);
    const auto expected = init_params<float>(init);
    CHECK(model.params == expected);
}

TEST_CASE("vc2s: training is bit-identical under a fixed seed") {
    Rng rng(15);
    std::vector<TrainSample> data;
    for (int i = 0; i < 24; ++i)
        data.push_back(random_sample(rng, 20, 20, static_cast<float>(82 + (i * 7) % 18)));
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.rng_seed = 77;

    const Vc2sModel a = train_vc2s(data, 20, 20, cfg);
    const Vc2sModel b = train_vc2s(data, 20, 20, cfg);
    CHECK(a.params == b.params);
    CHECK(a.epoch_loss == b.epoch_loss);

    cfg.rng_seed = 78;
    const Vc2sModel c = train_vc2s(data, 20, 20, cfg);
    CHECK(a.params != c.params);
}

TEST_CASE("vc2s: constant labels are learned through the head bias") {
    Rng rng(16);
    std::vector<TrainSample> data;
    for (int i = 0; i < 30; ++i) data.push_back(random_sample(rng, 20, 20, 90.0f));
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.rng_seed = 3;
    const Vc2sModel model = train_vc2s(data, 20, 20, cfg);

    REQUIRE(model.epoch_loss.size() == 4);
    CHECK(model.epoch_loss[1] < model.epoch_loss[0]);
    CHECK(model.epoch_loss[2] < model.epoch_loss[1]);

    // predictions must have moved toward the constant target
    Rng init(3);
    const auto at_init = init_params<float>(init);
    const Dims d = Dims::from_input(20, 20);
    Work<float> w(d);
    double mean_before = 0.0, mean_after = 0.0;
    for (const auto& s : data) {
        mean_before += forward_one(at_init, s.roi.data(), s.checker.data(), w);
        mean_after += forward_one(model.params, s.roi.data(), s.checker.data(), w);
    }
    mean_before /= data.size();
    mean_after /= data.size();
    CHECK(std::abs(mean_after - 90.0) < std::abs(mean_before - 90.0));
}

TEST_CASE("vc2s: non-finite loss aborts with the batch index") {
    Rng rng(17);
    std::vector<TrainSample> data;
    for (int i = 0; i < 4; ++i) data.push_back(random_sample(rng, 20, 20, 90.0f));
    data[2].label = std::numeric_limits<float>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    CHECK_THROWS_WITH_AS(train_vc2s(data, 20, 20, cfg), doctest::Contains("batch"),
                         NonFiniteLoss);
}

TEST_CASE("vc2s: training rejects inconsistent sample shapes") {
    Rng rng(18);
    std::vector<TrainSample> data;
    data.push_back(random_sample(rng, 20, 20, 90.0f));
    data.push_back(random_sample(rng, 24, 20, 91.0f));
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(train_vc2s(data, 20, 20, cfg), ShapeMismatch);
    CHECK_THROWS_AS(train_vc2s({}, 20, 20, cfg), LengthMismatch);
}

TEST_CASE("vc2s: checkpoint round-trips the model exactly") {
    const auto dir = fresh_dir("ckpt");
    Rng rng(19);
    std::vector<TrainSample> data;
    for (int i = 0; i < 8; ++i)
        data.push_back(random_sample(rng, 20, 20, static_cast<float>(84 + i)));
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.rng_seed = 12;
    const Vc2sModel model = train_vc2s(data, 20, 20, cfg);

    const auto path = dir / "model.json";
    save_checkpoint(path, model);
    const Vc2sModel loaded = load_checkpoint(path);
    CHECK(loaded.version == 1);
    CHECK(loaded.in_h == model.in_h);
    CHECK(loaded.in_w == model.in_w);
    CHECK(loaded.use_colorcheck == model.use_colorcheck);
    CHECK(loaded.params == model.params);
    CHECK(loaded.epoch_loss == model.epoch_loss);
    CHECK(loaded.config.epochs == cfg.epochs);
    CHECK(loaded.config.learning_rate == cfg.learning_rate);
    CHECK(loaded.config.rng_seed == cfg.rng_seed);

    // saving twice produces identical bytes
    const auto path2 = dir / "model2.json";
    save_checkpoint(path2, model);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("vc2s: checkpoints without a version field are rejected") {
    const auto dir = fresh_dir("ckpt_bad");
    Rng rng(20);
    std::vector<TrainSample> data;
    for (int i = 0; i < 4; ++i)
        data.push_back(random_sample(rng, 20, 20, 90.0f));
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    const Vc2sModel model = train_vc2s(data, 20, 20, cfg);
    const auto path = dir / "model.json";
    save_checkpoint(path, model);

    nlohmann::json j;
    std::ifstream(path) >> j;

    j.erase("version");
    std::ofstream(dir / "noversion.json") << j.dump();
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "noversion.json"), doctest::Contains("version"),
                         ParseError);

    std::ifstream(path) >> j;
    j["params"].erase(j["params"].size() - 1);
    std::ofstream(dir / "short.json") << j.dump();
    CHECK_THROWS_AS(load_checkpoint(dir / "short.json"), ParseError);

    std::ifstream(path) >> j;
    j["params"][0] = "nan";
    std::ofstream(dir / "nan.json") << j.dump();
    CHECK_THROWS_AS(load_checkpoint(dir / "nan.json"), ParseError);

    std::ofstream(dir / "garbage.json") << "{not json";
    CHECK_THROWS_AS(load_checkpoint(dir / "garbage.json"), ParseError);
    CHECK_THROWS_AS(load_checkpoint(dir / "absent.json"), IoError);
}

TEST_CASE("vc2s: prediction on identical frames is constant") {
    Rng rng(21);
    Rng init(48);
    Vc2sModel model;
    model.in_h = 20;
    model.in_w = 20;
    model.use_colorcheck = true;
    model.params = init_params<float>(init);

    Image frame(20, 20, 3);
    for (auto& b : frame.data) b = static_cast<std::uint8_t>(rng.uniform_index(256));
    PreprocessedSession pre;
    for (int i = 0; i < 50; ++i) pre.rois.push_back(frame);

    const auto checker = random_tensor<float>(rng, std::size_t{3} * kCheckerPatches);
    const auto series = predict_series(model, pre, checker);
    REQUIRE(series.size() == 50);
    for (double v : series) CHECK(v == series.front());
}

TEST_CASE("vc2s: missing checker is fatal only when the branch is active") {
    Rng rng(22);
    Rng init(49);
    Vc2sModel model;
    model.in_h = 20;
    model.in_w = 20;
    model.use_colorcheck = true;
    model.params = init_params<float>(init);

    Image frame(20, 20, 3);
    for (auto& b : frame.data) b = static_cast<std::uint8_t>(rng.uniform_index(256));
    PreprocessedSession pre;
    pre.rois.push_back(frame);

    CHECK_THROWS_AS(predict_series(model, pre, std::nullopt), MissingColorcheck);

    model.use_colorcheck = false;
    const auto series = predict_series(model, pre, std::nullopt);
    CHECK(series.size() == 1);

    // ablated models also ignore a supplied checker: the branch input is zero
    const auto checker = random_tensor<float>(rng, std::size_t{3} * kCheckerPatches);
    const auto series2 = predict_series(model, pre, checker);
    CHECK(series2 == series);
}

TEST_CASE("vc2s: prediction rejects frames of the wrong size") {
    Rng init(50);
    Vc2sModel model;
    model.in_h = 20;
    model.in_w = 20;
    model.use_colorcheck = false;
    model.params = init_params<float>(init);
    PreprocessedSession pre;
    pre.rois.push_back(Image(24, 20, 3));
    CHECK_THROWS_AS(predict_series(model, pre, std::nullopt), ShapeMismatch);
}

TEST_CASE("vc2s: the ablated color branch changes training too") {
    Rng rng(23);
    std::vector<TrainSample> data;
    for (int i = 0; i < 12; ++i)
        data.push_back(random_sample(rng, 20, 20, static_cast<float>(84 + i)));
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.rng_seed = 9;
    const Vc2sModel with = train_vc2s(data, 20, 20, cfg, true);
    const Vc2sModel without = train_vc2s(data, 20, 20, cfg, false);
    CHECK(with.params != without.params);
    CHECK(without.use_colorcheck == false);
}

TEST_CASE("vc2s: prediction smoothing is the zero-phase low-pass, unclamped") {
    std::vector<double> raw;
    for (int i = 0; i < 200; ++i)
        raw.push_back(70.0 + 5.0 * std::sin(0.4 * i));  // below the 80 clamp floor on purpose
    const auto smoothed = lowpass_series(raw, 1.0);
    const auto expected = filtfilt(butter2_lowpass(0.025, 1.0), raw);
    REQUIRE(smoothed.size() == expected.size());
    for (std::size_t i = 0; i < smoothed.size(); ++i) CHECK(smoothed[i] == expected[i]);
    // values stay below 80: no clamping happened anywhere
    for (double v : smoothed) CHECK(v < 80.0);

    const std::vector<double> constant(100, 93.5);
    const auto flat = lowpass_series(constant, 1.0);
    for (double v : flat) CHECK(std::abs(v - 93.5) <= 1e-9);

    CHECK_THROWS_AS(lowpass_series(raw, 0.01), RateTooLow);
}
