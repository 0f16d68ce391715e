#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "wavehdnn/metrics.hpp"
#include "wavehdnn/trainer.hpp"

namespace wavehdnn::cli {

enum ExitCode : int { kOk = 0, kRuntime = 1, kUsage = 2, kCompatibility = 3 };

/// Entry point of the `wavehdnn` binary. Subcommands: ingest, train, evaluate,
/// sweep, report, synth.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Git blob hash ("blob <size>\0" + content, SHA-1) as lowercase hex.
std::string git_blob_sha1(const std::vector<std::uint8_t>& content);

/// Parses a sweep grid: one `key = values` line per axis, values given as
/// `a,b,c`, `[a,b,c]` or an integer range `lo..hi` (brackets optional).
/// Throws FormatError on malformed lines.
std::vector<std::pair<std::string, std::vector<std::string>>> parse_grid(const std::string& text);

/// Cartesian product of the axes, first axis varying slowest.
std::vector<std::map<std::string, std::string>> grid_cells(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes);

struct RunSummary {
  std::uint64_t seed = 0;
  bool completed = false;
  bool skipped = false;
  std::filesystem::path dir;
  metrics::MetricsReport val;
  metrics::MetricsReport test;
};

/// Trains one seed into `run_dir`, skipping when a matching complete manifest
/// exists and `force` is false.
RunSummary train_run(const data::InteractionDataset& ds, const trainer::TrainConfig& cfg,
                     const std::filesystem::path& run_dir, bool force);

/// Mean and population standard deviation of every metric over the reports.
std::string aggregate_json(const std::vector<metrics::MetricsReport>& reports,
                           const trainer::TrainConfig& cfg);

}  // namespace wavehdnn::cli
