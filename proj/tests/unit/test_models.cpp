#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "freqrise/datasets.hpp"
#include "freqrise/error.hpp"
#include "freqrise/external_model.hpp"
#include "freqrise/mlp.hpp"
#include "freqrise/models.hpp"
#include "../support/oracles.hpp"

using namespace freqrise;

namespace {

TimeSeries tones(std::size_t length, std::initializer_list<std::size_t> bins) {
  TimeSeries x{std::vector<double>(length, 0.0), 1.0};
  for (auto k : bins)
    for (std::size_t t = 0; t < length; ++t)
      x.samples[t] += std::sin(2.0 * std::numbers::pi * static_cast<double>((k * t) % length) / length + 0.3 * k);
  return x;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

const std::vector<std::size_t> kTargets = {5, 16, 32, 53};

std::string stub(const std::string& mode) { return std::string(FREQRISE_STUB_ENDPOINT) + " " + mode; }

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("softmax sums to one and matches the oracle") {
    const std::vector<double> z = {1.5, -2.0, 0.25, 700.0, 699.0};
    const auto p = softmax(z);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    const auto expected = oracle::softmax(z);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(p[i] - expected[i]) < 1e-12);
    const auto q = softmax(std::vector<double>{1.0, 0.0});
    CHECK(q[0] == doctest::Approx(std::numbers::e / (std::numbers::e + 1)));
  }

  TEST_CASE("oracle evidence for a clean three-tone signal") {
    const OracleModel oracle(2560, kTargets);
    CHECK(oracle.threshold() == 640.0);
    CHECK(oracle.scale() == 320.0);
    CHECK(oracle.num_classes() == 16);
    const auto x = tones(2560, {5, 16, 53});
    const auto e = oracle.evidence(x.samples);
    CHECK(e[0] == doctest::Approx(2.0));
    CHECK(e[1] == doctest::Approx(2.0));
    CHECK(e[2] == doctest::Approx(-2.0));
    CHECK(e[3] == doctest::Approx(2.0));
    const auto out = oracle.predict(x);
    CHECK(argmax(out.logits) == label_of(std::vector<std::size_t>{5, 16, 53}, kTargets));
    CHECK(out.logits[label_of(std::vector<std::size_t>{5, 16, 53}, kTargets)] == doctest::Approx(8.0));
  }

  TEST_CASE("oracle on the zero signal and with bin 5 removed") {
    const OracleModel oracle(2560, kTargets);
    CHECK(argmax(oracle.predict(TimeSeries{std::vector<double>(2560, 0.0), 1.0}).logits) == 0);
    auto x = tones(2560, {5});
    const auto five = label_of(std::vector<std::size_t>{5}, kTargets);
    CHECK(argmax(oracle.predict(x).logits) == five);
    auto s = dft_onesided(x);
    s.coeffs[5] = 0;
    const auto masked = idft_onesided(s);
    CHECK(argmax(oracle.predict(masked).logits) != five);
    CHECK(oracle.predict(masked).logits[five] < oracle.predict(x).logits[five]);
  }

  TEST_CASE("oracle rejects wrong lengths and bad targets") {
    const OracleModel oracle(2560, kTargets);
    CHECK_THROWS_AS(oracle.predict(TimeSeries{std::vector<double>(100, 0.0), 1.0}), ShapeError);
    CHECK_THROWS(OracleModel(2560, {5, 5}));
    CHECK_THROWS(OracleModel(64, {40}));
  }

  TEST_CASE("MLP with a zero final layer is uniform") {
    auto m = MlpModel::initialized({32, 8, 8, 8, 16}, 1);
    m.layers().back().weights.setZero();
    m.layers().back().bias.setZero();
    const auto x = oracle::random_signal(32, 3);
    for (double p : m.predict(TimeSeries{x, 1.0}).probabilities) CHECK(p == doctest::Approx(1.0 / 16));
  }

  TEST_CASE("MLP probabilities sum to one and forward is deterministic") {
    const auto m = MlpModel::initialized({64, 16, 16, 16, 5}, 9);
    const auto data = oracle::random_signal(64 * 7, 4);
    const SignalBatch batch{data, 7, 64};
    const auto a = m.predict(batch), b = m.predict(batch);
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(std::accumulate(a[i].probabilities.begin(), a[i].probabilities.end(), 0.0) ==
            doctest::Approx(1.0).epsilon(1e-9));
      CHECK(a[i].logits == b[i].logits);
    }
    CHECK_THROWS_AS(m.predict(TimeSeries{oracle::random_signal(10, 1), 1.0}), ShapeError);
  }

  TEST_CASE("MLP save and load round trip") {
    const auto m = MlpModel::initialized({20, 6, 6, 6, 4}, 5);
    const auto path = std::filesystem::temp_directory_path() / "freqrise_unit_model.bin";
    m.save(path);
    const auto loaded = MlpModel::load(path);
    CHECK(loaded.parameters() == m.parameters());
    CHECK(loaded.widths() == m.widths());
    std::filesystem::resize_file(path, 40);
    CHECK_THROWS_AS(MlpModel::load(path), FormatError);
    std::filesystem::remove(path);
  }

  TEST_CASE("training memorizes a single sample") {
    const auto x = oracle::random_signal(16, 8);
    const std::vector<std::uint16_t> labels = {2};
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.hidden = {8, 8, 8};
    cfg.learning_rate = 1e-2;
    const auto result = train_mlp(LabeledBatch{{x, 1, 16}, labels}, 4, cfg);
    CHECK(result.train_accuracy == 1.0);
    CHECK(result.epoch_loss.back() < result.epoch_loss.front());
  }

  TEST_CASE("zero epochs leaves the initialization") {
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.hidden = {4};
    const auto x = oracle::random_signal(8 * 3, 1);
    const std::vector<std::uint16_t> labels = {0, 1, 2};
    const auto result = train_mlp(LabeledBatch{{x, 3, 8}, labels}, 3, cfg);
    CHECK(result.epoch_loss.empty());
    CHECK(result.model.parameters() == MlpModel::initialized({8, 4, 3}, cfg.seed).parameters());
  }

  TEST_CASE("diverging training reports the epoch") {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.hidden = {4};
    cfg.learning_rate = 1e300;
    const auto x = oracle::random_signal(8 * 4, 1);
    const std::vector<std::uint16_t> labels = {0, 1, 0, 1};
    try {
      train_mlp(LabeledBatch{{x, 4, 8}, labels}, 2, cfg);
      FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
      CHECK(e.epoch() < 3);
    }
  }
}

TEST_SUITE("external") {
  TEST_CASE("fixed logits endpoint") {
    ExternalModel m(stub("fixed"));
    const auto data = oracle::random_signal(30, 1);
    const auto out = m.predict(SignalBatch{data, 3, 10});
    REQUIRE(out.size() == 3);
    CHECK(m.num_classes() == 2);
    const double e = std::numbers::e;
    for (const auto& o : out) {
      CHECK(o.probabilities[0] == doctest::Approx(e / (e + 1)));
      CHECK(o.probabilities[1] == doctest::Approx(1 / (e + 1)));
    }
  }

  TEST_CASE("rows come back in order") {
    ExternalModel m(stub("sum"));
    const std::vector<double> data = {1, 1, 2, 2, 3, 3};
    const auto logits = m.logits(SignalBatch{data, 3, 2});
    CHECK(logits == std::vector<double>{2, -2, 4, -4, 6, -6});
    CHECK(m.logits(SignalBatch{data, 3, 2}) == logits);
  }

  TEST_CASE("echo round-trips doubles exactly") {
    ExternalModel m(stub("echo"));
    const auto data = oracle::random_signal(10 * 50, 77);
    CHECK(m.logits(SignalBatch{data, 10, 50}) == data);
  }

  TEST_CASE("protocol violations") {
    const std::vector<double> data(8, 0.5);
    const SignalBatch batch{data, 2, 4};
    for (const char* mode : {"malformed", "wrong-id", "short"}) {
      CAPTURE(mode);
      ExternalModel m(stub(mode));
      CHECK_THROWS_AS(m.logits(batch), EndpointError);
    }
    ExternalModel slow(stub("sleep"), ExternalModelOptions{std::chrono::milliseconds(300), 0, 0});
    CHECK_THROWS_AS(slow.logits(batch), EndpointError);
    ExternalModel gone("exit 0");
    CHECK_THROWS_AS(gone.logits(batch), EndpointError);
  }

  TEST_CASE("wire encoders") {
    const std::vector<double> data = {0.5, -1.0};
    CHECK(nlohmann::json::parse(encode_request(3, SignalBatch{data, 1, 2})) ==
          nlohmann::json{{"id", 3}, {"signals", {{0.5, -1.0}}}});
    CHECK(nlohmann::json::parse(encode_response(4, {{1.0, 2.0}})) ==
          nlohmann::json{{"id", 4}, {"logits", {{1.0, 2.0}}}});
  }
}

TEST_SUITE("invariants") {
  TEST_CASE("softmax shift invariance") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto z = oracle::random_signal(16, seed);
      auto shifted = z;
      for (double& v : shifted) v += 37.25 * (static_cast<double>(seed) - 10.0);
      const auto a = softmax(z), b = softmax(shifted);
      for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
    }
  }

  TEST_CASE("MLP gradient matches central differences") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto model = MlpModel::initialized({6, 5, 4, 3}, seed);
      const auto x = oracle::random_signal(18, seed + 50);
      const std::vector<std::uint16_t> labels = {0, 2, 1};
      const LabeledBatch batch{{x, 3, 6}, labels};
      const auto analytic = loss_and_gradient(model, batch);
      const auto params = model.parameters();
      REQUIRE(analytic.gradient.size() == params.size());
      double worst = 0;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double h = 1e-6;
        auto p = params;
        p[i] = params[i] + h;
        model.set_parameters(p);
        const double up = loss_and_gradient(model, batch).loss;
        p[i] = params[i] - h;
        model.set_parameters(p);
        const double down = loss_and_gradient(model, batch).loss;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(numeric), std::abs(analytic.gradient[i]), 1e-4});
        worst = std::max(worst, std::abs(numeric - analytic.gradient[i]) / denom);
      }
      model.set_parameters(params);
      CAPTURE(seed);
      CHECK(worst <= 1e-5);
    }
  }
}
