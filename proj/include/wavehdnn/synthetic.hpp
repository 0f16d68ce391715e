#pragma once

#include <cstdint>

#include "wavehdnn/data.hpp"

namespace wavehdnn::synthetic {

/// Category-structured interactions where every user mixes items from several
/// categories, so a user's hyperedge groups dissimilar items. Items are split
/// into `categories` blocks, each block into `styles` sub-blocks. A user picks
/// between min_categories and max_categories categories and one preferred style
/// in each, then draws `per_category_min..max` items per category, taking
/// in-style items with probability `in_style`.
struct HeterophilicSpec {
  Index num_users = 500;
  Index num_items = 400;
  Index categories = 4;
  Index styles = 5;
  Index min_categories = 2;
  Index max_categories = 3;
  Index per_category_min = 5;
  Index per_category_max = 10;
  double in_style = 0.8;
  std::uint64_t seed = 0;
};

/// Tokens are "u<id>" / "i<id>". Category of item i is i * categories / num_items.
data::RawInteractions heterophilic(const HeterophilicSpec& spec);

/// `per_user` distinct random items for each of `num_users` users.
data::RawInteractions planted(Index num_users, Index num_items, Index per_user, std::uint64_t seed);

/// Exactly `interactions` distinct pairs touching every one of the users and items.
data::RawInteractions with_counts(Index num_users, Index num_items, Index interactions,
                                  std::uint64_t seed);

}  // namespace wavehdnn::synthetic
