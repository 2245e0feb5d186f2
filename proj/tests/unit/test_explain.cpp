#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "freqrise/datasets.hpp"
#include "freqrise/error.hpp"
#include "freqrise/explain.hpp"
#include "freqrise/metrics.hpp"
#include "../support/oracles.hpp"
#include "../support/table_model.hpp"

using namespace freqrise;
using testing_support::ConstantModel;
using testing_support::TableModel;

namespace {

// Logit 0 is x[0] / reference[0]: the time-domain mask bit of element 0.
class FirstElementModel final : public Model {
 public:
  explicit FirstElementModel(double reference) : reference_(reference) {}
  std::size_t input_length() const override { return 2; }
  std::size_t num_classes() const override { return 2; }
  std::vector<double> logits(const SignalBatch& batch) const override {
    std::vector<double> out;
    for (std::size_t i = 0; i < batch.rows; ++i) {
      out.push_back(batch.row(i)[0] / reference_);
      out.push_back(0.0);
    }
    return out;
  }

 private:
  double reference_;
};

class FailingModel final : public Model {
 public:
  std::size_t input_length() const override { return 0; }
  std::size_t num_classes() const override { return 2; }
  std::vector<double> logits(const SignalBatch& batch) const override {
    if (++calls_ > 1) throw std::runtime_error("boom");
    return std::vector<double>(batch.rows * 2, 0.0);
  }

 private:
  mutable int calls_ = 0;
};

LabeledSample single_tone() {
  SyntheticConfig cfg;
  cfg.forced_subset = std::vector<std::size_t>{5};
  cfg.j_range = {1, 1};
  return gen_synthetic_sample(cfg, 3, 0);
}

}  // namespace

TEST_SUITE("explain") {
  TEST_CASE("input-independent model yields a flat map") {
    const ConstantModel model({0.0, std::log(3.0)});
    const TimeSeries x{oracle::random_signal(64, 1), 1.0};
    ExplainConfig cfg;
    cfg.n_masks = 200;
    cfg.output = OutputKind::Probability;
    const auto r = explain(model, x, 1, cfg);
    CHECK(r.values.size() == 33);
    for (double v : r.values) CHECK(v == 0.75);
    cfg.output = OutputKind::Logit;
    for (double v : explain(model, x, 1, cfg).values) CHECK(v == std::log(3.0));
  }

  TEST_CASE("oracle single tone is most relevant at bin 5") {
    const auto s = single_tone();
    const OracleModel oracle(2560, {5, 16, 32, 53});
    ExplainConfig cfg;
    cfg.n_masks = 3000;
    cfg.output = OutputKind::Probability;
    cfg.seed = 4;
    const auto r = explain(oracle, s.signal, s.label, cfg);
    CHECK(std::max_element(r.values.begin(), r.values.end()) - r.values.begin() == 5);
    CHECK(r.shape == DomainShape{1, 1281});
    CHECK(r.class_index == 1);
    CHECK(r.n_masks == 3000);
  }

  TEST_CASE("Monte Carlo estimate converges to enumeration on T=8") {
    const auto x = testing_support::full_band_signal(8, 5);
    const TableModel model(x, 3, 6);
    ExplainConfig cfg;
    cfg.n_masks = 200000;
    cfg.output = OutputKind::Probability;
    cfg.batch_size = 512;
    cfg.seed = 7;
    const auto sampled = explain(model, TimeSeries{x, 1.0}, 2, cfg);
    const auto exact = exact_relevance(model, TimeSeries{x, 1.0}, 2, Domain::Frequency);
    const auto brute = model.conditional_expectation(2, 0.5);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::abs(exact.values[k] - brute[k]) < 1e-12);
      CHECK(std::abs(sampled.values[k] - brute[k]) <= 1e-2);
    }
  }

  TEST_CASE("exact relevance closed forms") {
    const ConstantModel constant({0.0, 1.0});
    const TimeSeries x{oracle::random_signal(16, 2), 1.0};
    const auto flat = exact_relevance(constant, x, 0, Domain::Frequency);
    for (double v : flat.values) CHECK(v == doctest::Approx(1.0 / (1.0 + std::numbers::e)));

    const FirstElementModel first(0.8);
    const auto r = exact_relevance(first, TimeSeries{{0.8, -1.3}, 1.0}, 0, Domain::Time, 0.5, OutputKind::Logit);
    CHECK(r.values[0] == doctest::Approx(1.0));
    CHECK(r.values[1] == doctest::Approx(0.5));

    CHECK_THROWS_AS(exact_relevance(constant, TimeSeries{oracle::random_signal(64, 2), 1.0}, 0, Domain::Frequency),
                    TooLargeToEnumerate);
  }

  TEST_CASE("result does not depend on worker count") {
    const auto s = single_tone();
    const OracleModel oracle(2560, {5, 16, 32, 53});
    ExplainConfig cfg;
    cfg.n_masks = 300;
    cfg.batch_size = 16;
    cfg.threads = 1;
    const auto a = explain(oracle, s.signal, s.label, cfg);
    cfg.threads = 4;
    const auto b = explain(oracle, s.signal, s.label, cfg);
    CHECK(a.values == b.values);
  }

  TEST_CASE("time-frequency grid masks") {
    const TimeSeries x{oracle::random_signal(8000, 3), 8000};
    const ConstantModel model({1.0, 2.0});
    ExplainConfig cfg;
    cfg.domain = Domain::TimeFrequency;
    cfg.window = WindowSpec{};
    cfg.grid = GridSpec{{25, 25}};
    cfg.n_masks = 8;
    const auto r = explain(model, x, 1, cfg);
    CHECK(r.shape == DomainShape{216, 228});
    for (double v : r.values) CHECK(v == doctest::Approx(2.0));
  }

  TEST_CASE("model failures carry the mask index") {
    const FailingModel model;
    ExplainConfig cfg;
    cfg.n_masks = 100;
    cfg.batch_size = 10;
    try {
      explain(model, TimeSeries{oracle::random_signal(32, 1), 1.0}, 0, cfg);
      FAIL("expected ExplainFailed");
    } catch (const ExplainFailed& e) {
      CHECK(e.mask_index() == 0);
    }
  }

  TEST_CASE("configuration errors") {
    const ConstantModel model({0.0, 1.0});
    const TimeSeries x{oracle::random_signal(32, 1), 1.0};
    ExplainConfig cfg;
    CHECK_THROWS_AS(explain(model, x, 2, cfg), InvalidArgument);
    cfg.n_masks = 0;
    CHECK_THROWS_AS(explain(model, x, 0, cfg), InvalidArgument);
    cfg = {};
    cfg.p = 1.0;
    CHECK_THROWS_AS(explain(model, x, 0, cfg), InvalidArgument);
  }

  TEST_CASE("nearest-rank quantile post-processing") {
    RelevanceMap r;
    r.shape = {1, 4};
    r.values = {1, 2, 3, 4};
    CHECK(nearest_rank_quantile(r.values, 0.5) == 3);
    CHECK(postprocess_quantile(r, {0.5}).values == std::vector<double>{0, 0, 3, 4});
    CHECK(postprocess_quantile(r, {0.0}).values == r.values);
    CHECK_THROWS(postprocess_quantile(r, {1.0}));
  }

  TEST_CASE("relevance map files round trip") {
    RelevanceMap r;
    r.domain = Domain::TimeFrequency;
    r.shape = {2, 3};
    r.values = {0.1, 1.0 / 3.0, 2.0, 0.0, 5e-300, 7.25};
    r.window = WindowSpec{WindowKind::Hann, 4, 2};
    r.origin_length = 8;
    r.seed = 0xffffffffffffffffULL;
    const auto path = std::filesystem::temp_directory_path() / "freqrise_unit_map.csv";
    write_relevance_map(r, path, nlohmann::json{{"config_hash", "h"}});
    nlohmann::json side;
    const auto back = read_relevance_map(path, &side);
    CHECK(back.values == r.values);
    CHECK(back.shape == r.shape);
    CHECK(back.window == r.window);
    CHECK(back.seed == r.seed);
    CHECK(side["config_hash"] == "h");
    for (const char* key : {"domain", "class", "N", "p", "grid", "seed", "output_kind"}) CHECK(side.contains(key));
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".json");
  }
}

TEST_SUITE("invariants") {
  TEST_CASE("quantile idempotence, retained-count monotonicity and top-K preservation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RelevanceMap r;
      const auto raw = oracle::random_signal(301, seed);
      r.shape = {1, raw.size()};
      for (double v : raw) r.values.push_back(std::round(std::abs(v) * 8) / 8);  // with ties
      std::size_t previous = r.values.size() + 1;
      const auto order = rank_order(r.values);
      for (double q : {0.0, 0.1, 0.5, 0.8, 0.9, 0.997}) {
        const auto once = postprocess_quantile(r, {q});
        CHECK(postprocess_quantile(once, {q}).values == once.values);
        const auto retained = static_cast<std::size_t>(
            std::count_if(once.values.begin(), once.values.end(), [](double v) { return v > 0; }));
        CHECK(retained <= previous);
        previous = retained;
        const auto k = static_cast<std::size_t>(std::ceil((1.0 - q) * r.values.size() - 1e-9));
        for (std::size_t i = 0; i < k; ++i) CHECK(once.values[order[i]] == r.values[order[i]]);
      }
    }
  }

  TEST_CASE("positive scaling of scores scales relevance") {
    const auto x = testing_support::full_band_signal(8, 1);
    const TableModel model(x, 2, 3);
    class Scaled final : public Model {
     public:
      Scaled(const Model& m, double a) : m_(m), a_(a) {}
      std::size_t input_length() const override { return m_.input_length(); }
      std::size_t num_classes() const override { return m_.num_classes(); }
      std::vector<double> logits(const SignalBatch& b) const override {
        auto z = m_.logits(b);
        for (double& v : z) v = a_ * (v + 10.0);
        return z;
      }

     private:
      const Model& m_;
      double a_;
    };
    ExplainConfig cfg;
    cfg.n_masks = 500;
    const auto base = explain(Scaled(model, 1.0), TimeSeries{x, 1.0}, 0, cfg);
    const auto scaled = explain(Scaled(model, 3.0), TimeSeries{x, 1.0}, 0, cfg);
    for (std::size_t k = 0; k < base.values.size(); ++k)
      CHECK(scaled.values[k] == doctest::Approx(3.0 * base.values[k]).epsilon(1e-12));
    CHECK(rank_order(base.values) == rank_order(scaled.values));
  }
}
