#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "catgen/checkpoint.hpp"
#include "catgen/trainer.hpp"
#include "support.hpp"

using namespace catgen;
using namespace catgen::train;

namespace {

corpus::SentenceRecord record(CategoryId c, std::vector<TokenId> content) {
  corpus::SentenceRecord r{c, {corpus::Vocabulary::kSos}};
  r.tokens.insert(r.tokens.end(), content.begin(), content.end());
  r.tokens.push_back(corpus::Vocabulary::kEos);
  return r;
}

std::vector<corpus::SentenceRecord> three_category_records() {
  return {record(0, {4, 5}), record(0, {5, 4}), record(1, {6}), record(2, {7, 7}),
          record(2, {7})};
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("uniform weights balance categories within three sigma") {
    const auto records = three_category_records();
    const TrainingSet set(records, 3, 4);
    const std::vector<double> w(3, 1.0 / 3);
    Rng rng(1);
    std::vector<std::size_t> counts(3, 0);
    for (const auto& ref : stratified_indices(set, w, 30000, rng)) ++counts[ref.category];
    const double sigma = std::sqrt(30000 * (1.0 / 3) * (2.0 / 3));
    for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - 10000.0) <= 3 * sigma);
  }

  TEST_CASE("long-run frequencies pass a chi-square test") {
    const auto records = three_category_records();
    const TrainingSet set(records, 3, 4);
    const std::vector<double> w{0.5, 0.2, 0.3};
    Rng rng(2);
    std::vector<double> counts(3, 0);
    constexpr double n = 100000;
    for (const auto& ref : stratified_indices(set, w, 100000, rng)) ++counts[ref.category];
    double chi2 = 0;
    for (std::size_t c = 0; c < 3; ++c) chi2 += std::pow(counts[c] - n * w[c], 2) / (n * w[c]);
    CHECK(chi2 < 13.816);  // 2 degrees of freedom, significance 0.001
  }

  TEST_CASE("degenerate weights and empty batches") {
    const auto records = three_category_records();
    const TrainingSet set(records, 3, 4);
    Rng rng(3);
    for (const auto& ex : stratified_batch(set, std::vector<double>{1, 0, 0}, 50, rng)) {
      CHECK(ex.category == 0);
    }
    CHECK(stratified_batch(set, std::vector<double>{1, 0, 0}, 0, rng).empty());
  }

  TEST_CASE("positive weight on an empty category throws") {
    const std::vector<corpus::SentenceRecord> records{record(0, {4})};
    const TrainingSet set(records, 2, 4);
    Rng rng(4);
    CHECK_THROWS_AS(stratified_indices(set, std::vector<double>{0.5, 0.5}, 1, rng),
                    std::invalid_argument);
  }

  TEST_CASE("weight validation") {
    TrainingConfig cfg;
    CHECK(cfg.resolved_weights(4) == std::vector<double>(4, 0.25));
    cfg.category_weights = {0.5, 0.6};
    CHECK_THROWS(cfg.resolved_weights(2));
    cfg.category_weights = {1.0};
    CHECK_THROWS(cfg.resolved_weights(2));
    cfg.category_weights = {1.5, -0.5};
    CHECK_THROWS(cfg.resolved_weights(2));
  }
}

TEST_SUITE("training") {
  TEST_CASE("epoch length rounds up") {
    const auto records = three_category_records();
    const TrainingSet set(records, 3, 4);
    CHECK(steps_per_epoch(set, 2) == 3);
    CHECK(steps_per_epoch(set, 5) == 1);
    CHECK_THROWS(steps_per_epoch(set, 0));
  }

  TEST_CASE("zero epochs returns the initialization") {
    const auto ds = testing::toy_dataset();
    const auto mcfg = testing::small_config(ds);
    const TrainingSet set(ds.records, mcfg.num_categories, mcfg.seq_len);
    const auto cfg = testing::small_training(0, 5);
    const auto r = train::train(set, cfg, mcfg);
    CHECK(r.reports.empty());
    Rng rng(cfg.rng_seed);
    CHECK(model::bitwise_equal(r.params, model::ModelParams::init(mcfg, rng)));
  }

  TEST_CASE("same seed gives bitwise identical runs and frozen vectors stay put") {
    const auto ds = testing::toy_dataset();
    auto mcfg = testing::small_config(ds);
    mcfg.dropout = 0.2;
    const TrainingSet set(ds.records, mcfg.num_categories, mcfg.seq_len);
    const auto cfg = testing::small_training(3, 6);
    const auto a = train::train(set, cfg, mcfg);
    const auto b = train::train(set, cfg, mcfg);
    CHECK(model::bitwise_equal(a.params, b.params));
    REQUIRE(a.reports.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.reports[i].mean_loss == b.reports[i].mean_loss);
      CHECK(a.reports[i].accuracy == b.reports[i].accuracy);
    }
    Rng rng(cfg.rng_seed);
    const auto init = model::ModelParams::init(mcfg, rng);
    CHECK(bitwise_equal(a.params.glove.table, init.glove.table));
    CHECK_FALSE(bitwise_equal(a.params.embed.table, init.embed.table));
  }

  TEST_CASE("loss falls below a tenth of its first epoch on the toy corpus") {
    const auto ds = testing::toy_dataset();
    const auto mcfg = testing::small_config(ds);
    const TrainingSet set(ds.records, mcfg.num_categories, mcfg.seq_len);
    const auto r = train::train(set, testing::small_training(300, 17), mcfg);
    REQUIRE(r.reports.size() == 300);
    CHECK(r.reports.back().mean_loss < 0.1 * r.reports.front().mean_loss);
    for (const auto& rep : r.reports) CHECK((rep.accuracy >= 0.0 && rep.accuracy <= 1.0));
  }

  TEST_CASE("single-category data still trains") {
    const auto ds = train::experiment_dataset(Experiment::JustJokes, testing::toy_dataset());
    CHECK(ds.num_categories == 1);
    const auto mcfg = testing::small_config(ds);
    const TrainingSet set(ds.records, 1, mcfg.seq_len);
    const auto r = train::train(set, testing::small_training(300, 3), mcfg);
    CHECK(r.reports.back().mean_loss < 0.5 * r.reports.front().mean_loss);
  }

  TEST_CASE("log lines and periodic checkpoints") {
    const auto dir = std::filesystem::temp_directory_path() / "catgen_test_trainlog";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto ds = testing::toy_dataset();
    const auto mcfg = testing::small_config(ds);
    const TrainingSet set(ds.records, mcfg.num_categories, mcfg.seq_len);
    auto cfg = testing::small_training(2, 8);
    cfg.checkpoint_every = 1;
    TrainOptions opt;
    opt.vocab = &ds.vocab;
    opt.checkpoint_path = dir / "m.ckpt";
    opt.log_path = dir / "train.log";
    std::size_t callbacks = 0;
    opt.on_epoch = [&](const EpochReport&) { ++callbacks; };
    const auto r = train::train(set, cfg, mcfg, opt);
    CHECK(callbacks == 2);
    const auto lines = corpus::read_lines(dir / "train.log");
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].rfind("1\t", 0) == 0);
    CHECK(std::count(lines[1].begin(), lines[1].end(), '\t') == 3);
    const auto ck = model::load_checkpoint(dir / "m.ckpt");
    CHECK(model::bitwise_equal(ck.params, r.params));
    REQUIRE(ck.optimizer.has_value());
    CHECK(ck.optimizer->step == r.optimizer.step);
  }

  TEST_CASE("resuming continues the same trajectory") {
    const auto ds = testing::toy_dataset();
    const auto mcfg = testing::small_config(ds);
    const TrainingSet set(ds.records, mcfg.num_categories, mcfg.seq_len);
    const auto first = train::train(set, testing::small_training(1, 9), mcfg);
    TrainOptions opt;
    opt.initial = first.params;
    opt.optimizer = first.optimizer;
    const auto resumed = train::train(set, testing::small_training(0, 9), mcfg, opt);
    CHECK(model::bitwise_equal(resumed.params, first.params));
    CHECK(resumed.optimizer.step == first.optimizer.step);
  }

  TEST_CASE("mismatched inputs are rejected") {
    const auto records = three_category_records();
    const TrainingSet set(records, 3, 4);
    auto mcfg = testing::tiny_config();
    CHECK_THROWS(train::train(set, {}, mcfg));
    const std::vector<corpus::SentenceRecord> none;
    const TrainingSet empty(none, 2, 3);
    CHECK_THROWS(train::train(empty, {}, mcfg));
  }

  TEST_CASE("a diverging run reports where it happened") {
    const auto ds = testing::toy_dataset();
    const auto mcfg = testing::small_config(ds);
    const TrainingSet set(ds.records, mcfg.num_categories, mcfg.seq_len);
    TrainOptions opt;
    Rng rng(1);
    opt.initial = model::ModelParams::init(mcfg, rng);
    opt.initial->output.bias[4] = std::numeric_limits<double>::infinity();
    try {
      train::train(set, testing::small_training(1, 1), mcfg, opt);
      FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("epoch 1 step 1") != std::string::npos);
      CHECK(msg.find("batch") != std::string::npos);
    }
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("names") {
    CHECK(parse_experiment("forward-reverse") == Experiment::ForwardReverse);
    CHECK(experiment_name(Experiment::ThreeCategory) == "three-category");
    CHECK_THROWS(parse_experiment("jokes"));
  }

  TEST_CASE("dataset reshaping") {
    const auto toy = testing::toy_dataset();
    const auto fr = experiment_dataset(Experiment::ForwardReverse, toy);
    CHECK(fr.num_categories == 2);
    CHECK(fr.records.size() == 14);
    CHECK(fr.records[7] == corpus::SentenceRecord{1, corpus::reverse_record(fr.records[0]).tokens});
    CHECK(experiment_dataset(Experiment::ThreeCategory, toy).records == toy.records);
    CHECK_THROWS(experiment_dataset(Experiment::ThreeCategory, fr));
  }

  TEST_CASE("run from a prepared directory") {
    const auto dir = std::filesystem::temp_directory_path() / "catgen_test_experiment";
    std::filesystem::remove_all(dir);
    corpus::save_dataset(testing::toy_dataset(), dir);
    auto mcfg = testing::small_config(testing::toy_dataset());
    mcfg.vocab_size = 1;  // overwritten from the dataset
    const auto r = run_experiment(Experiment::JustJokes, dir, testing::small_training(1, 2), mcfg);
    CHECK(r.model_config.num_categories == 1);
    CHECK(r.model_config.vocab_size == r.dataset.vocab.size());
    CHECK(r.training.reports.size() == 1);
    CHECK_THROWS(run_experiment(Experiment::JustJokes, dir / "nope", {}, mcfg));
  }
}
