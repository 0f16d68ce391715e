#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "wavehdnn/data.hpp"
#include "wavehdnn/errors.hpp"
#include "wavehdnn/synthetic.hpp"

using namespace wavehdnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wavehdnn_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

data::RawInteractions user_with(int n, const std::string& user = "alice") {
  data::RawInteractions raw;
  for (int i = 0; i < n; ++i) raw.pairs.emplace_back(user, "item" + std::to_string(i));
  return raw;
}

std::map<Index, std::size_t> per_user_counts(const std::vector<data::Interaction>& split) {
  std::map<Index, std::size_t> out;
  for (const auto& [u, i] : split) ++out[u];
  return out;
}

}  // namespace

TEST_CASE("parse_interactions reads tab separated pairs and drops duplicates") {
  const auto raw = data::parse_interactions("u1\ti1\nu1\ti2\t5.0\n\nu2\ti1\r\nu1\ti1\n");
  REQUIRE(raw.pairs.size() == 3);
  CHECK(raw.pairs[0] == std::pair<std::string, std::string>{"u1", "i1"});
  CHECK(raw.pairs[1] == std::pair<std::string, std::string>{"u1", "i2"});
  CHECK(raw.pairs[2] == std::pair<std::string, std::string>{"u2", "i1"});
}

TEST_CASE("parse_interactions reports the malformed line") {
  try {
    data::parse_interactions("u1\ti1\nbroken line\n", "x.tsv");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(data::parse_interactions("\n\n"), FormatError);
  CHECK_THROWS_AS(data::parse_interactions("u1\t\n"), FormatError);
}

TEST_CASE("load_interactions handles plain and gzip files") {
  const fs::path dir = scratch_dir("load");
  const std::string text = "a\tx\nb\ty\na\ty\n";
  {
    std::ofstream(dir / "plain.tsv") << text;
    gzFile f = gzopen((dir / "packed.tsv.gz").c_str(), "wb");
    REQUIRE(f != nullptr);
    gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    gzclose(f);
  }
  const auto plain = data::load_interactions(dir / "plain.tsv");
  const auto packed = data::load_interactions(dir / "packed.tsv.gz");
  CHECK(plain.pairs == packed.pairs);
  CHECK(plain.pairs.size() == 3);
  CHECK_THROWS_AS(data::load_interactions(dir / "missing.tsv"), IoError);
}

TEST_CASE("a user with 10 interactions splits 7/1/2") {
  const auto ds = data::remap_and_split(user_with(10), 3);
  CHECK(ds.train.size() == 7);
  CHECK(ds.val.size() == 1);
  CHECK(ds.test.size() == 2);
}

TEST_CASE("users with fewer than 3 interactions stay in train") {
  for (int n = 1; n <= 2; ++n) {
    const auto ds = data::remap_and_split(user_with(n), 0);
    CHECK(ds.train.size() == static_cast<std::size_t>(n));
    CHECK(ds.val.empty());
    CHECK(ds.test.empty());
  }
}

TEST_CASE("per-user split sizes follow the ceiling rule") {
  // Independent restatement: train = ceil(0.7 n), val = min(ceil(0.1 n), n - train).
  auto expected = [](std::size_t n) {
    if (n < 3) return std::tuple<std::size_t, std::size_t, std::size_t>{n, 0, 0};
    const auto tr = static_cast<std::size_t>(std::ceil(0.7 * static_cast<double>(n) - 1e-9));
    const auto va = std::min(static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n) - 1e-9)), n - tr);
    return std::tuple<std::size_t, std::size_t, std::size_t>{tr, va, n - tr - va};
  };
  data::RawInteractions raw;
  for (int u = 0; u < 40; ++u) {
    for (int i = 0; i <= u; ++i) raw.pairs.emplace_back("u" + std::to_string(u), "i" + std::to_string(i));
  }
  const auto ds = data::remap_and_split(raw, 11);
  const auto tr = per_user_counts(ds.train);
  const auto va = per_user_counts(ds.val);
  const auto te = per_user_counts(ds.test);
  for (Index u = 0; u < 40; ++u) {
    const auto [etr, eva, ete] = expected(static_cast<std::size_t>(u + 1));
    CHECK((tr.count(u) ? tr.at(u) : 0) == etr);
    CHECK((va.count(u) ? va.at(u) : 0) == eva);
    CHECK((te.count(u) ? te.at(u) : 0) == ete);
  }
}

TEST_CASE("splits are disjoint, every user trains, and the ratio holds") {
  synthetic::HeterophilicSpec spec;
  spec.seed = 5;
  const auto ds = data::remap_and_split(synthetic::heterophilic(spec), 9);
  std::set<data::Interaction> train(ds.train.begin(), ds.train.end());
  std::set<data::Interaction> val(ds.val.begin(), ds.val.end());
  std::set<data::Interaction> test(ds.test.begin(), ds.test.end());
  for (const auto& p : val) CHECK_FALSE(train.count(p));
  for (const auto& p : test) {
    CHECK_FALSE(train.count(p));
    CHECK_FALSE(val.count(p));
  }
  for (Index u = 0; u < ds.num_users; ++u) CHECK_FALSE(ds.train_items_of[u].empty());

  const auto tr = per_user_counts(ds.train);
  const auto va = per_user_counts(ds.val);
  const auto te = per_user_counts(ds.test);
  std::size_t big_train = 0, big_total = 0;
  for (const auto& [u, n] : tr) {
    const std::size_t total = n + (va.count(u) ? va.at(u) : 0) + (te.count(u) ? te.at(u) : 0);
    if (total >= 10) {
      big_train += n;
      big_total += total;
    }
  }
  REQUIRE(big_total > 0);
  const double ratio = static_cast<double>(big_train) / static_cast<double>(big_total);
  CHECK(ratio >= 0.65);
  CHECK(ratio <= 0.75);
}

TEST_CASE("ids follow first appearance and the split is seed deterministic") {
  const auto raw = data::parse_interactions("bob\tz\nann\ty\nbob\ty\nann\tx\n");
  const auto a = data::remap_and_split(raw, 4);
  const auto b = data::remap_and_split(raw, 4);
  CHECK(a.user_tokens == std::vector<std::string>{"bob", "ann"});
  CHECK(a.item_tokens == std::vector<std::string>{"z", "y", "x"});
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  CHECK(data::fingerprint(a) == data::fingerprint(b));
}

TEST_CASE("density and its display") {
  data::DatasetStats stats;
  const auto ds = data::make_dataset(4, 5, {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {0, 4}}, {}, {});
  stats = data::compute_stats(ds);
  CHECK(stats.num_interactions == 5);
  CHECK(stats.density == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(data::format_density(1.9567e-3) == "1.9e-3");
  CHECK(data::format_density(4.308e-3) == "4.3e-3");
  CHECK(data::format_density(2.2728e-3) == "2.2e-3");
  CHECK(data::format_density(1e-3) == "1.0e-3");
  CHECK(data::format_density(0.25) == "2.5e-1");
  CHECK(data::stats_row(stats) == "users=4 items=5 interactions=5 density=2.5e-1");
}

TEST_CASE("Table 1 sized datasets reproduce the reported densities") {
  struct Row {
    Index users, items, interactions;
    const char* shown;
  };
  // Amazon-Books, Steam, Yelp.
  const Row rows[] = {{11000, 9332, 200860, "1.9e-3"},
                      {23310, 5237, 525922, "4.3e-3"},
                      {11091, 11010, 277535, "2.2e-3"}};
  for (const auto& row : rows) {
    const auto raw = synthetic::with_counts(row.users, row.items, row.interactions, 1);
    const auto ds = data::remap_and_split(raw, 0);
    const auto stats = data::compute_stats(ds);
    CHECK(stats.num_users == row.users);
    CHECK(stats.num_items == row.items);
    CHECK(stats.num_interactions == row.interactions);
    const double oracle = static_cast<double>(row.interactions) /
                          (static_cast<double>(row.users) * static_cast<double>(row.items));
    CHECK(stats.density == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(data::format_density(stats.density) == row.shown);
  }
}

TEST_CASE("archive round trip preserves splits and tokens") {
  const fs::path dir = scratch_dir("archive");
  const auto ds = data::remap_and_split(data::parse_interactions(
                                            "a\t1\na\t2\na\t3\na\t4\nb\t1\nb\t5\nc\t2\nc\t3\nc\t5\n"),
                                        21);
  data::write_archive(ds, dir);
  for (const char* f : {"meta", "train.tsv", "val.tsv", "test.tsv", "id_map_users.tsv", "id_map_items.tsv"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto back = data::read_archive(dir);
  CHECK(back.num_users == ds.num_users);
  CHECK(back.num_items == ds.num_items);
  CHECK(back.train == ds.train);
  CHECK(back.val == ds.val);
  CHECK(back.test == ds.test);
  CHECK(back.split_seed == 21);
  CHECK(back.user_tokens == ds.user_tokens);
  CHECK(back.item_tokens == ds.item_tokens);
  CHECK(data::fingerprint(back) == data::fingerprint(ds));
}

TEST_CASE("make_dataset rejects out of range ids") {
  CHECK_THROWS_AS(data::make_dataset(2, 2, {{0, 2}}, {}, {}), ContractViolation);
}
