#include <map>
#include <set>

#include "json.hpp"

#include "doctest.h"
#include "wavehdnn/errors.hpp"
#include "wavehdnn/synthetic.hpp"
#include "wavehdnn/trainer.hpp"

using namespace wavehdnn;
using trainer::TrainConfig;

namespace {

data::InteractionDataset small_dataset(std::uint64_t seed = 1) {
  return data::remap_and_split(synthetic::planted(30, 40, 8, seed), seed);
}

TrainConfig small_config() {
  TrainConfig c;
  c.dim = 8;
  c.layers = 2;
  c.batch_size = 64;
  c.max_epochs = 4;
  c.lr = 0.01;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("a single free item is always the negative") {
  const auto ds = data::make_dataset(1, 2, {{0, 0}}, {}, {});
  Rng rng(0);
  for (int k = 0; k < 20; ++k) {
    const auto t = trainer::sample_epoch(ds, rng);
    REQUIRE(t.size() == 1);
    CHECK(t[0] == trainer::Triple{0, 0, 1});
  }
}

TEST_CASE("one triple per train pair with valid negatives") {
  const auto ds = small_dataset();
  Rng rng(4);
  const auto triples = trainer::sample_epoch(ds, rng);
  CHECK(triples.size() == ds.train.size());
  std::multiset<data::Interaction> seen;
  for (const auto& t : triples) {
    seen.emplace(t.user, t.pos);
    const auto& owned = ds.train_items_of[t.user];
    CHECK_FALSE(std::binary_search(owned.begin(), owned.end(), t.neg));
  }
  CHECK(seen == std::multiset<data::Interaction>(ds.train.begin(), ds.train.end()));
}

TEST_CASE("negatives are uniform over the complement") {
  const auto ds = data::make_dataset(1, 10, {{0, 3}, {0, 7}}, {}, {});
  Rng rng(5);
  std::map<Index, int> counts;
  int total = 0;
  while (total < 10000) {
    for (const auto& t : trainer::sample_epoch(ds, rng)) {
      ++counts[t.neg];
      ++total;
    }
  }
  CHECK(counts.size() == 8);
  for (const auto& [item, n] : counts) {
    CHECK(item != 3);
    CHECK(item != 7);
    CHECK(std::abs(static_cast<double>(n) / total - 0.125) < 0.02);
  }
}

TEST_CASE("users owning every item are skipped") {
  const auto ds = data::make_dataset(2, 2, {{0, 0}, {0, 1}, {1, 0}}, {}, {});
  Rng rng(1);
  const auto t = trainer::sample_epoch(ds, rng);
  REQUIRE(t.size() == 1);
  CHECK(t[0] == trainer::Triple{1, 0, 1});
}

TEST_CASE("first Adam step moves each entry by about lr") {
  ad::Parameter p("p", Matrix::Constant(2, 2, 1.0));
  p.grad << 0.5, -3.0, 1e-3, 0.0;
  trainer::AdamState state;
  trainer::adam_step({&p}, state, 0.01);
  CHECK(p.value(0, 0) == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(p.value(0, 1) == doctest::Approx(1.01).epsilon(1e-6));
  CHECK(p.value(1, 0) == doctest::Approx(0.99).epsilon(1e-4));
  CHECK(p.value(1, 1) == 1.0);
  CHECK(state.step == 1);
  p.grad.setConstant(NAN);
  const Matrix before = p.value;
  CHECK_THROWS_AS(trainer::adam_step({&p}, state, 0.01), NumericError);
  CHECK(p.value == before);
}

TEST_CASE("zero gradients leave parameters unchanged") {
  ad::Parameter p("p", Matrix::Constant(3, 1, 2.0));
  trainer::AdamState state;
  for (int k = 0; k < 5; ++k) trainer::adam_step({&p}, state, 0.1);
  CHECK(p.value == Matrix::Constant(3, 1, 2.0));
}

TEST_CASE("batch loss gradients through every channel") {
  const auto ds = data::remap_and_split(synthetic::planted(6, 6, 3, 2), 2);
  for (auto ablation : {model::Ablation::full, model::Ablation::no_het, model::Ablation::no_wave}) {
    TrainConfig cfg = small_config();
    cfg.dim = 4;
    cfg.ablation = ablation;
    cfg.lambda_reg = 1e-2;
    auto m = model::make_model(ds, cfg.model_config());
    Rng rng(9);
    const auto batch = trainer::sample_epoch(ds, rng);
    const auto report = ad::check_gradients(
        [&](ad::Tape& t) { return trainer::batch_loss(t, *m, batch, cfg).total; }, m->parameters(), 1e-6, 20);
    CHECK(report.passed(1e-4));
    ad::Tape tape;
    const auto loss = trainer::batch_loss(tape, *m, batch, cfg);
    const bool both = ablation == model::Ablation::full;
    CHECK((loss.breakdown.contrastive_user > 0.0) == both);
    CHECK((loss.breakdown.contrastive_item > 0.0) == both);
  }
}

TEST_CASE("zero epochs return the initialized model") {
  const auto ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.max_epochs = 0;
  const auto result = trainer::fit(ds, cfg);
  CHECK(result.log.empty());
  CHECK(result.best_epoch == 0);
  auto m = model::make_model(ds, cfg.model_config());
  const auto [eu, ei] = m->infer();
  CHECK(result.best.fused_users() == eu);
  CHECK(result.best.fused_items() == ei);
}

TEST_CASE("identical configs train bit-identically") {
  const auto ds = small_dataset();
  const auto a = trainer::fit(ds, small_config());
  const auto b = trainer::fit(ds, small_config());
  CHECK(serialize(a.best) == serialize(b.best));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) CHECK(trainer::log_line(a.log[k]) == trainer::log_line(b.log[k]));
  TrainConfig other = small_config();
  other.seed = 4;
  CHECK(serialize(trainer::fit(ds, other).best) != serialize(a.best));
}

TEST_CASE("the kept checkpoint has the best validation recall") {
  const auto ds = small_dataset(6);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 12;
  cfg.patience = 3;
  const auto result = trainer::fit(ds, cfg);
  REQUIRE(result.best_val_recall20.has_value());
  double best = -1.0;
  Index best_epoch = 0;
  for (const auto& e : result.log) {
    REQUIRE(e.val_recall20.has_value());
    if (*e.val_recall20 > best) {
      best = *e.val_recall20;
      best_epoch = e.epoch;
    }
  }
  CHECK(*result.best_val_recall20 == best);
  CHECK(result.best_epoch == best_epoch);
  const auto report = metrics::evaluate(result.best.fused_users(), result.best.fused_items(), ds, metrics::Split::val, {20});
  CHECK(report.at_k.at(20).recall == best);
  // Stopping happens exactly `patience` evaluations after the best one.
  if (static_cast<Index>(result.log.size()) < cfg.max_epochs) {
    CHECK(static_cast<Index>(result.log.size()) == best_epoch + cfg.patience);
  }
}

TEST_CASE("log lines carry the loss breakdown") {
  const auto ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.max_epochs = 1;
  const auto full = trainer::fit(ds, cfg);
  REQUIRE(full.log.size() == 1);
  const auto j = nlohmann::json::parse(trainer::log_line(full.log[0]));
  for (const char* key : {"epoch", "bpr", "cl_u", "cl_i", "reg", "total", "val_recall@20", "grad_norms"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["grad_norms"].contains("wave_transform.0"));
  CHECK(j["grad_norms"].contains("mlp1.w1"));
  cfg.ablation = model::Ablation::no_wave;
  const auto nw = nlohmann::json::parse(trainer::log_line(trainer::fit(ds, cfg).log[0]));
  for (const auto& [name, v] : nw["grad_norms"].items()) {
    CHECK(name.find("wave") == std::string::npos);
  }
  CHECK(nw["cl_u"] == 0.0);
}

TEST_CASE("invalid configs are rejected") {
  TrainConfig c;
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.tau = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(TrainConfig{}.validate());
}
