#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wavehdnn/types.hpp"

namespace wavehdnn::data {

struct RawInteractions {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string source_path;
};

using Interaction = std::pair<Index, Index>;  // (user_id, item_id)

/// Remapped interactions with a per-user 7:1:2 train/val/test partition.
/// Immutable after construction.
struct InteractionDataset {
  Index num_users = 0;
  Index num_items = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> val;
  std::vector<Interaction> test;
  /// Sorted train item ids per user.
  std::vector<std::vector<Index>> train_items_of;
  std::uint64_t split_seed = 0;
  std::vector<std::string> user_tokens;  // id -> token; may be empty
  std::vector<std::string> item_tokens;

  /// Per-user sorted item lists of a split.
  std::vector<std::vector<Index>> items_of(const std::vector<Interaction>& split) const;
};

struct DatasetStats {
  Index num_users = 0;
  Index num_items = 0;
  Index num_interactions = 0;
  double density = 0.0;
};

/// Reads `user<TAB>item[<TAB>...]` lines. Files ending in ".gz" are gunzipped.
/// Throws IoError on read failure, FormatError on a malformed line or empty input.
RawInteractions load_interactions(const std::filesystem::path& path);

/// Parses the same format from memory; `source` is used in error messages.
RawInteractions parse_interactions(const std::string& text, const std::string& source = "<memory>");

InteractionDataset remap_and_split(const RawInteractions& raw, std::uint64_t seed);

/// Builds a dataset directly from remapped splits (synthetic benchmarks, tests).
/// Validates ranges and rebuilds train_items_of.
InteractionDataset make_dataset(Index num_users, Index num_items, std::vector<Interaction> train,
                                std::vector<Interaction> val, std::vector<Interaction> test,
                                std::uint64_t seed = 0);

DatasetStats compute_stats(const InteractionDataset& ds);

/// Density in Table-1 style, e.g. "1.9e-3": the mantissa is truncated (not rounded)
/// to `digits` significant digits.
std::string format_density(double density, int digits = 2);

/// One-line "users items interactions density" summary.
std::string stats_row(const DatasetStats& stats);

/// Split archive: meta, train.tsv, val.tsv, test.tsv, id_map_users.tsv, id_map_items.tsv.
void write_archive(const InteractionDataset& ds, const std::filesystem::path& dir);
InteractionDataset read_archive(const std::filesystem::path& dir);

/// 64-bit FNV-1a over the archive's split files; identifies a dataset.
std::uint64_t fingerprint(const InteractionDataset& ds);

}  // namespace wavehdnn::data
