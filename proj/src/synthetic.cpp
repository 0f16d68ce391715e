#include "wavehdnn/synthetic.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "wavehdnn/errors.hpp"
#include "wavehdnn/rng.hpp"

namespace wavehdnn::synthetic {
namespace {

std::string user_token(Index u) { return "u" + std::to_string(u); }
std::string item_token(Index i) { return "i" + std::to_string(i); }

}  // namespace

data::RawInteractions heterophilic(const HeterophilicSpec& spec) {
  WAVEHDNN_REQUIRE(spec.categories >= 2 && spec.min_categories >= 1 &&
                       spec.min_categories <= spec.max_categories &&
                       spec.max_categories <= spec.categories,
                   "heterophilic: bad category counts");
  WAVEHDNN_REQUIRE(spec.num_items >= spec.categories * spec.styles, "heterophilic: too few items");
  Rng rng(spec.seed);
  data::RawInteractions raw;
  raw.source_path = "synthetic:heterophilic";
  const Index per_cat = spec.num_items / spec.categories;
  const Index per_style = per_cat / spec.styles;
  std::vector<Index> cats(static_cast<std::size_t>(spec.categories));
  for (Index c = 0; c < spec.categories; ++c) cats[c] = c;
  for (Index u = 0; u < spec.num_users; ++u) {
    const Index n_cats = spec.min_categories +
                         static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.max_categories - spec.min_categories + 1)));
    rng.shuffle(cats);
    std::unordered_set<Index> chosen;
    std::vector<Index> order;
    for (Index k = 0; k < n_cats; ++k) {
      const Index cat = cats[k];
      const Index cat_begin = cat * per_cat;
      const Index cat_end = cat == spec.categories - 1 ? spec.num_items : cat_begin + per_cat;
      const Index style = static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.styles)));
      const Index style_begin = cat_begin + style * per_style;
      const Index count = spec.per_category_min +
                          static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.per_category_max - spec.per_category_min + 1)));
      Index drawn = 0;
      for (int guard = 0; drawn < count && guard < 1000; ++guard) {
        Index item;
        if (rng.uniform() < spec.in_style) {
          item = style_begin + static_cast<Index>(rng.below(static_cast<std::uint64_t>(per_style)));
        } else {
          item = cat_begin + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cat_end - cat_begin)));
        }
        if (chosen.insert(item).second) {
          order.push_back(item);
          ++drawn;
        }
      }
    }
    for (Index item : order) raw.pairs.emplace_back(user_token(u), item_token(item));
  }
  return raw;
}

data::RawInteractions planted(Index num_users, Index num_items, Index per_user, std::uint64_t seed) {
  WAVEHDNN_REQUIRE(per_user <= num_items, "planted: more interactions than items");
  Rng rng(seed);
  data::RawInteractions raw;
  raw.source_path = "synthetic:planted";
  std::vector<Index> items(static_cast<std::size_t>(num_items));
  for (Index i = 0; i < num_items; ++i) items[i] = i;
  for (Index u = 0; u < num_users; ++u) {
    rng.shuffle(items);
    for (Index k = 0; k < per_user; ++k) raw.pairs.emplace_back(user_token(u), item_token(items[k]));
  }
  return raw;
}

data::RawInteractions with_counts(Index num_users, Index num_items, Index interactions,
                                  std::uint64_t seed) {
  WAVEHDNN_REQUIRE(interactions >= std::max(num_users, num_items) &&
                       interactions <= num_users * num_items,
                   "with_counts: interaction count cannot cover users and items");
  Rng rng(seed);
  data::RawInteractions raw;
  raw.source_path = "synthetic:counts";
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(interactions) * 2);
  auto add = [&](Index u, Index i) {
    if (seen.insert(static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(num_items) + static_cast<std::uint64_t>(i)).second) {
      raw.pairs.emplace_back(user_token(u), item_token(i));
    }
  };
  // k -> (k mod U, k mod I) is injective below max(U, I) and covers both sides.
  for (Index k = 0; k < std::max(num_users, num_items); ++k) add(k % num_users, k % num_items);
  while (static_cast<Index>(raw.pairs.size()) < interactions) {
    add(static_cast<Index>(rng.below(static_cast<std::uint64_t>(num_users))),
        static_cast<Index>(rng.below(static_cast<std::uint64_t>(num_items))));
  }
  return raw;
}

}  // namespace wavehdnn::synthetic
