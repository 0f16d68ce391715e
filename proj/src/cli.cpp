#include "wavehdnn/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wavehdnn/checkpoint.hpp"
#include "wavehdnn/config.hpp"
#include "wavehdnn/data.hpp"
#include "wavehdnn/errors.hpp"
#include "wavehdnn/log.hpp"
#include "wavehdnn/synthetic.hpp"

namespace wavehdnn::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kReportColumns = {"recall@10", "recall@20", "recall@40",
                                                 "ndcg@10",   "ndcg@20",   "ndcg@40"};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string s = read_text(path);
  return {s.begin(), s.end()};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

json config_json(const trainer::TrainConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : config::to_key_values(cfg)) j[k] = v;
  return j;
}

trainer::TrainConfig load_config(const std::string& path) {
  trainer::TrainConfig cfg = path.empty() ? trainer::TrainConfig{} : config::load(path);
  config::apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

void write_manifest(const fs::path& path, const json& manifest) {
  write_text(path, manifest.dump(2) + "\n");
}

// Axis names accepted in grid files besides the config keys themselves.
std::string canonical_axis(const std::string& key) {
  if (key == "dims" || key == "embedding_dim" || key == "d") return "dim";
  if (key == "layer" || key == "num_layers") return "layers";
  return key;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_metric(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

std::vector<metrics::MetricsReport> train_seeds(const data::InteractionDataset& ds,
                                                const trainer::TrainConfig& base, Index seeds,
                                                const fs::path& out, bool force,
                                                std::ostream& log_out, bool& any_failed) {
  std::vector<metrics::MetricsReport> reports;
  any_failed = false;
  for (Index s = 0; s < seeds; ++s) {
    trainer::TrainConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(s);
    const fs::path dir = out / "runs" / ("seed-" + std::to_string(cfg.seed));
    RunSummary run = train_run(ds, cfg, dir, force);
    if (!run.completed) {
      any_failed = true;
      log_out << "seed " << cfg.seed << ": aborted\n";
      continue;
    }
    const auto& at20 = run.test.at_k.count(20) ? run.test.at_k.at(20) : metrics::MetricValues{};
    log_out << "seed " << cfg.seed << (run.skipped ? " (cached)" : "")
            << ": test recall@20=" << format_metric(at20.recall)
            << " ndcg@20=" << format_metric(at20.ndcg) << "\n";
    reports.push_back(run.test);
  }
  return reports;
}

// ---- commands --------------------------------------------------------------

int cmd_ingest(const std::string& input, const std::string& out_dir, std::uint64_t seed,
               std::ostream& out) {
  const data::RawInteractions raw = data::load_interactions(input);
  const data::InteractionDataset ds = data::remap_and_split(raw, seed);
  fs::create_directories(out_dir);
  data::write_archive(ds, out_dir);
  const data::DatasetStats stats = data::compute_stats(ds);
  json j;
  j["num_users"] = stats.num_users;
  j["num_items"] = stats.num_items;
  j["num_interactions"] = stats.num_interactions;
  j["density"] = stats.density;
  j["density_display"] = data::format_density(stats.density);
  j["seed"] = seed;
  write_text(fs::path(out_dir) / "stats.json", j.dump(2) + "\n");
  out << data::stats_row(stats) << "\n";
  return kOk;
}

int cmd_train(const std::string& data_dir, const std::string& config_path, const std::string& out_dir,
              Index seeds, bool force, std::ostream& out) {
  const trainer::TrainConfig cfg = load_config(config_path);
  const data::InteractionDataset ds = data::read_archive(data_dir);
  fs::create_directories(out_dir);
  bool any_failed = false;
  const auto reports = train_seeds(ds, cfg, seeds, out_dir, force, out, any_failed);
  if (!reports.empty()) {
    write_text(fs::path(out_dir) / "aggregate.json", aggregate_json(reports, cfg) + "\n");
  }
  return any_failed ? kRuntime : kOk;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_dir, const std::string& split,
                 std::ostream& out) {
  const metrics::Split which = metrics::parse_split(split);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const data::InteractionDataset ds = data::read_archive(data_dir);
  const Matrix& eu = ckpt.fused_users();
  const Matrix& ei = ckpt.fused_items();
  if (static_cast<Index>(ckpt.num_users) != ds.num_users ||
      static_cast<Index>(ckpt.num_items) != ds.num_items || eu.rows() != ds.num_users ||
      ei.rows() != ds.num_items) {
    std::ostringstream os;
    os << "shape mismatch: checkpoint has " << ckpt.num_users << " users x " << ckpt.num_items
       << " items, dataset has " << ds.num_users << " users x " << ds.num_items << " items";
    throw CompatibilityError(os.str());
  }
  metrics::MetricsReport report = metrics::evaluate(eu, ei, ds, which);
  const fs::path manifest = fs::path(ckpt_path).parent_path() / "manifest.json";
  if (fs::exists(manifest)) {
    const json m = json::parse(read_text(manifest));
    if (m.contains("seed")) report.seed = m["seed"].get<std::uint64_t>();
  }
  out << metrics::to_json(report) << "\n";
  return kOk;
}

int cmd_sweep(const std::string& data_dir, const std::string& grid_path, const std::string& out_dir,
              const std::string& config_path, Index seeds, bool force, std::ostream& out) {
  const auto axes = parse_grid(read_text(grid_path));
  if (axes.empty()) throw ConfigError("grid file " + grid_path + " defines no axes");
  const trainer::TrainConfig base = load_config(config_path);
  const auto cells = grid_cells(axes);
  const data::InteractionDataset ds = data::read_archive(data_dir);
  fs::create_directories(out_dir);

  std::ostringstream csv;
  csv << "cell";
  for (const auto& [axis, values] : axes) csv << "," << csv_escape(axis);
  csv << ",seed,metric,value\n";
  json status = json::array();
  Index succeeded = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::ostringstream name;
    name << "cell-" << std::setw(3) << std::setfill('0') << c;
    json entry;
    entry["cell"] = name.str();
    entry["axes"] = cells[c];
    try {
      trainer::TrainConfig cfg = base;
      for (const auto& [k, v] : cells[c]) config::set_key(cfg, k, v);
      cfg.validate();
      const fs::path cell_dir = fs::path(out_dir) / name.str();
      fs::create_directories(cell_dir);
      out << name.str();
      for (const auto& [k, v] : cells[c]) out << " " << k << "=" << v;
      out << "\n";
      bool any_failed = false;
      const auto reports = train_seeds(ds, cfg, seeds, cell_dir, force, out, any_failed);
      if (reports.empty()) throw NumericError("every seed aborted");
      write_text(cell_dir / "aggregate.json", aggregate_json(reports, cfg) + "\n");
      for (const auto& r : reports) {
        for (const auto& [k, mv] : r.at_k) {
          for (const auto& [metric, value] :
               {std::pair{"recall@" + std::to_string(k), mv.recall},
                std::pair{"ndcg@" + std::to_string(k), mv.ndcg}}) {
            csv << name.str();
            for (const auto& [axis, values] : axes) csv << "," << csv_escape(cells[c].at(axis));
            std::ostringstream v;
            v << std::setprecision(17) << value;
            csv << "," << r.seed << "," << metric << "," << v.str() << "\n";
          }
        }
      }
      entry["status"] = any_failed ? "partial" : "complete";
      ++succeeded;
    } catch (const std::exception& e) {
      log::warn(name.str() + " failed: " + e.what());
      entry["status"] = "failed";
      entry["error"] = e.what();
    }
    status.push_back(entry);
  }
  write_text(fs::path(out_dir) / "sweep.csv", csv.str());
  write_text(fs::path(out_dir) / "cells.json", status.dump(2) + "\n");
  return succeeded == 0 ? kRuntime : kOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& format,
               std::ostream& out) {
  struct Row {
    std::string run;
    std::string model;
    std::string ablation;
    std::map<std::string, double> values;
  };
  std::vector<Row> rows;
  for (const auto& dir : run_dirs) {
    const fs::path agg = fs::path(dir) / "aggregate.json";
    if (!fs::exists(agg)) {
      log::warn("no aggregate.json in " + dir + ", skipped");
      continue;
    }
    const json j = json::parse(read_text(agg));
    Row row;
    row.run = fs::path(dir).lexically_normal().filename().string();
    if (row.run.empty()) row.run = fs::path(dir).lexically_normal().parent_path().filename().string();
    row.model = j.value("model", "");
    row.ablation = j.value("ablation", "");
    for (const auto& col : kReportColumns) {
      if (j["metrics"].contains(col)) row.values[col] = j["metrics"][col]["mean"].get<double>();
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("no run directory contained aggregate.json");

  if (format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      json o;
      o["run"] = r.run;
      o["model"] = r.model;
      o["ablation"] = r.ablation;
      for (const auto& col : kReportColumns) {
        if (r.values.count(col)) o[col] = r.values.at(col);
      }
      arr.push_back(o);
    }
    out << arr.dump(2) << "\n";
  } else if (format == "csv") {
    out << "run,model,ablation";
    for (const auto& col : kReportColumns) out << "," << col;
    out << "\n";
    for (const auto& r : rows) {
      out << csv_escape(r.run) << "," << r.model << "," << r.ablation;
      for (const auto& col : kReportColumns) {
        out << ",";
        if (r.values.count(col)) out << std::setprecision(17) << r.values.at(col);
      }
      out << "\n";
    }
  } else if (format == "md") {
    std::map<std::string, double> best;
    for (const auto& col : kReportColumns) {
      for (const auto& r : rows) {
        if (!r.values.count(col)) continue;
        const std::string shown = format_metric(r.values.at(col));
        if (!best.count(col) || std::stod(shown) > best[col]) best[col] = std::stod(shown);
      }
    }
    out << "| run | model | ablation |";
    for (const auto& col : kReportColumns) out << " " << col << " |";
    out << "\n|---|---|---|";
    for (std::size_t i = 0; i < kReportColumns.size(); ++i) out << "---:|";
    out << "\n";
    for (const auto& r : rows) {
      out << "| " << r.run << " | " << r.model << " | " << r.ablation << " |";
      for (const auto& col : kReportColumns) {
        if (!r.values.count(col)) {
          out << " - |";
          continue;
        }
        const std::string shown = format_metric(r.values.at(col));
        if (std::stod(shown) == best[col]) {
          out << " **" << shown << "** |";
        } else {
          out << " " << shown << " |";
        }
      }
      out << "\n";
    }
  } else {
    throw ConfigError("unknown report format: " + format + " (expected json, csv or md)");
  }
  return kOk;
}

int cmd_synth(const std::string& kind, const std::string& out_path, std::uint64_t seed, Index users,
              Index items, Index count) {
  data::RawInteractions raw;
  if (kind == "heterophilic") {
    synthetic::HeterophilicSpec spec;
    spec.seed = seed;
    if (users > 0) spec.num_users = users;
    if (items > 0) spec.num_items = items;
    raw = synthetic::heterophilic(spec);
  } else if (kind == "planted") {
    raw = synthetic::planted(users > 0 ? users : 50, items > 0 ? items : 50, count > 0 ? count : 5, seed);
  } else if (kind == "counts") {
    if (users <= 0 || items <= 0 || count <= 0) {
      throw ConfigError("synth counts needs --users, --items and --count");
    }
    raw = synthetic::with_counts(users, items, count, seed);
  } else {
    throw ConfigError("unknown synth kind: " + kind);
  }
  std::ostringstream os;
  for (const auto& [u, i] : raw.pairs) os << u << "\t" << i << "\n";
  write_text(out_path, os.str());
  return kOk;
}

}  // namespace

std::string git_blob_sha1(const std::vector<std::uint8_t>& content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

std::vector<std::pair<std::string, std::vector<std::string>>> parse_grid(const std::string& text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("grid: expected key = values", lineno);
    const std::string key = canonical_axis(trim(line.substr(0, eq)));
    std::string spec = trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError("grid: empty key", lineno);
    if (!spec.empty() && spec.front() == '[') {
      if (spec.back() != ']') throw FormatError("grid: unbalanced brackets", lineno);
      spec = trim(spec.substr(1, spec.size() - 2));
    }
    std::vector<std::string> values;
    if (const auto dots = spec.find(".."); dots != std::string::npos && spec.find(',') == std::string::npos) {
      long long lo = 0;
      long long hi = 0;
      try {
        std::size_t p1 = 0;
        std::size_t p2 = 0;
        const std::string a = trim(spec.substr(0, dots));
        const std::string b = trim(spec.substr(dots + 2));
        lo = std::stoll(a, &p1);
        hi = std::stoll(b, &p2);
        if (p1 != a.size() || p2 != b.size()) throw std::invalid_argument("range");
      } catch (const std::exception&) {
        throw FormatError("grid: bad integer range '" + spec + "'", lineno);
      }
      if (hi < lo) throw FormatError("grid: empty range '" + spec + "'", lineno);
      for (long long v = lo; v <= hi; ++v) values.push_back(std::to_string(v));
    } else {
      std::istringstream vs(spec);
      std::string v;
      while (std::getline(vs, v, ',')) {
        v = trim(v);
        if (v.empty()) throw FormatError("grid: empty value", lineno);
        values.push_back(v);
      }
    }
    if (values.empty()) throw FormatError("grid: axis '" + key + "' has no values", lineno);
    for (const auto& [existing, _] : axes) {
      if (existing == key) throw FormatError("grid: duplicate axis '" + key + "'", lineno);
    }
    axes.emplace_back(key, std::move(values));
  }
  return axes;
}

std::vector<std::map<std::string, std::string>> grid_cells(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes) {
  std::vector<std::map<std::string, std::string>> cells;
  if (axes.empty()) return cells;
  cells.emplace_back();
  for (const auto& [key, values] : axes) {
    std::vector<std::map<std::string, std::string>> next;
    next.reserve(cells.size() * values.size());
    for (const auto& cell : cells) {
      for (const auto& v : values) {
        auto c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

RunSummary train_run(const data::InteractionDataset& ds, const trainer::TrainConfig& cfg,
                     const fs::path& run_dir, bool force) {
  RunSummary summary;
  summary.seed = cfg.seed;
  summary.dir = run_dir;
  const fs::path manifest_path = run_dir / "manifest.json";
  const fs::path ckpt_path = run_dir / "best.ckpt";
  const fs::path val_path = run_dir / "val_report.json";
  const fs::path test_path = run_dir / "test_report.json";
  const std::string fp = hex64(data::fingerprint(ds));
  const json cfg_json = config_json(cfg);

  if (!force && fs::exists(manifest_path) && fs::exists(val_path) && fs::exists(test_path) &&
      fs::exists(ckpt_path)) {
    try {
      const json m = json::parse(read_text(manifest_path));
      if (m.value("status", "") == "complete" && m.value("dataset_fingerprint", "") == fp &&
          m["config"] == cfg_json &&
          m.value("checkpoint_sha1", "") == git_blob_sha1(read_bytes(ckpt_path))) {
        summary.completed = true;
        summary.skipped = true;
        summary.val = metrics::from_json(read_text(val_path));
        summary.test = metrics::from_json(read_text(test_path));
        return summary;
      }
    } catch (const std::exception& e) {
      log::warn("ignoring unreadable manifest in " + run_dir.string() + ": " + e.what());
    }
  }

  fs::create_directories(run_dir);
  for (const auto& stale : {ckpt_path, val_path, test_path, run_dir / "train_log.jsonl"}) {
    fs::remove(stale);
  }
  json manifest;
  manifest["run_id"] = run_dir.filename().string();
  manifest["status"] = "running";
  manifest["model"] = model::to_string(cfg.model);
  manifest["ablation"] = model::to_string(cfg.ablation);
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg_json;
  manifest["dataset_fingerprint"] = fp;
  manifest["dataset"] = {{"users", ds.num_users}, {"items", ds.num_items},
                         {"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}};
  manifest["started_at"] = utc_now();
  write_manifest(manifest_path, manifest);

  std::ofstream log_file(run_dir / "train_log.jsonl", std::ios::trunc);
  if (!log_file) throw IoError("cannot write " + (run_dir / "train_log.jsonl").string());
  const trainer::FitResult fit = trainer::fit(ds, cfg, [&](const trainer::EpochLog& e) {
    log_file << trainer::log_line(e) << "\n";
    log_file.flush();
  });

  const std::vector<std::uint8_t> bytes = serialize(fit.best);
  {
    std::ofstream ck(ckpt_path, std::ios::binary | std::ios::trunc);
    if (!ck) throw IoError("cannot write " + ckpt_path.string());
    ck.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  summary.val = metrics::evaluate(fit.best.fused_users(), fit.best.fused_items(), ds, metrics::Split::val);
  summary.test = metrics::evaluate(fit.best.fused_users(), fit.best.fused_items(), ds, metrics::Split::test);
  summary.val.seed = summary.test.seed = cfg.seed;
  write_text(val_path, metrics::to_json(summary.val) + "\n");
  write_text(test_path, metrics::to_json(summary.test) + "\n");

  manifest["status"] = fit.aborted ? "aborted" : "complete";
  if (fit.aborted) manifest["abort_reason"] = fit.abort_reason;
  manifest["epochs_run"] = fit.log.size();
  manifest["best_epoch"] = fit.best_epoch;
  if (fit.best_val_recall20) {
    manifest["best_val_recall@20"] = *fit.best_val_recall20;
  } else {
    manifest["best_val_recall@20"] = nullptr;
  }
  manifest["checkpoint_sha1"] = git_blob_sha1(bytes);
  manifest["finished_at"] = utc_now();
  write_manifest(manifest_path, manifest);
  summary.completed = !fit.aborted;
  return summary;
}

std::string aggregate_json(const std::vector<metrics::MetricsReport>& reports,
                           const trainer::TrainConfig& cfg) {
  json j;
  j["model"] = model::to_string(cfg.model);
  j["ablation"] = model::to_string(cfg.ablation);
  j["runs"] = reports.size();
  json seeds = json::array();
  for (const auto& r : reports) seeds.push_back(r.seed);
  j["seeds"] = seeds;
  std::map<std::string, std::vector<double>> samples;
  std::vector<std::string> order;
  for (const auto& r : reports) {
    for (const auto& [k, mv] : r.at_k) {
      for (const auto& [name, v] : {std::pair{"recall@" + std::to_string(k), mv.recall},
                                    std::pair{"ndcg@" + std::to_string(k), mv.ndcg}}) {
        if (!samples.count(name)) order.push_back(name);
        samples[name].push_back(v);
      }
    }
  }
  std::stable_sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) {
    return a.rfind("recall", 0) == 0 && b.rfind("ndcg", 0) == 0;
  });
  json m = json::object();
  for (const auto& name : order) {
    const auto& xs = samples[name];
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    m[name] = {{"mean", mean}, {"std", std::sqrt(var)}, {"n", xs.size()}};
  }
  j["metrics"] = m;
  return j.dump(2);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"WaveHDNN recommender: ingest, train, evaluate, sweep, report"};
  app.require_subcommand(1);
  std::string verbosity = "info";
  app.add_option("--log-level", verbosity, "debug|info|warn|error")->check(
      CLI::IsMember({"debug", "info", "warn", "error"}));

  std::string input, out_dir, data_dir, config_path, checkpoint, split = "test", grid,
                                                                   format = "md", kind;
  std::uint64_t seed = 0;
  Index seeds = 1;
  Index users = 0, items = 0, count = 0;
  bool force = false;
  std::vector<std::string> run_dirs;

  auto* ingest = app.add_subcommand("ingest", "Split raw interactions into an archive");
  ingest->add_option("--input", input, "user<TAB>item file (.gz accepted)")->required();
  ingest->add_option("--out", out_dir, "archive directory")->required();
  ingest->add_option("--seed", seed, "split seed");

  auto* train = app.add_subcommand("train", "Train one run per seed");
  train->add_option("--data", data_dir, "split archive")->required();
  train->add_option("--config", config_path, "key = value config file");
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seeds", seeds, "number of seeds, starting at the config seed")
      ->check(CLI::PositiveNumber);
  train->add_flag("--force", force, "retrain even when a matching manifest exists");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a split");
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--data", data_dir)->required();
  evaluate->add_option("--split", split)->check(CLI::IsMember({"val", "test"}));

  auto* sweep = app.add_subcommand("sweep", "Train every cell of a hyperparameter grid");
  sweep->add_option("--data", data_dir)->required();
  sweep->add_option("--grid", grid, "one `key = values` line per axis")->required();
  sweep->add_option("--out", out_dir)->required();
  sweep->add_option("--config", config_path, "base config");
  sweep->add_option("--seeds", seeds)->check(CLI::PositiveNumber);
  sweep->add_flag("--force", force);

  auto* report = app.add_subcommand("report", "Compare aggregate results of several runs");
  report->add_option("--runs", run_dirs, "directories holding aggregate.json")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"json", "csv", "md"}));

  auto* synth = app.add_subcommand("synth", "Write a synthetic interaction file");
  synth->add_option("--kind", kind, "heterophilic|planted|counts")->required();
  synth->add_option("--out", out_dir, "output file")->required();
  synth->add_option("--seed", seed);
  synth->add_option("--users", users);
  synth->add_option("--items", items);
  synth->add_option("--count", count, "per-user (planted) or total (counts) interactions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) {
      err << app.get_subcommands().front()->help();
    } else {
      err << app.help();
    }
    return kUsage;
  }

  if (verbosity == "debug") log::set_level(log::Level::debug);
  if (verbosity == "warn") log::set_level(log::Level::warn);
  if (verbosity == "error") log::set_level(log::Level::error);

  try {
    if (*ingest) return cmd_ingest(input, out_dir, seed, out);
    if (*train) return cmd_train(data_dir, config_path, out_dir, seeds, force, out);
    if (*evaluate) return cmd_evaluate(checkpoint, data_dir, split, out);
    if (*sweep) return cmd_sweep(data_dir, grid, out_dir, config_path, seeds, force, out);
    if (*report) return cmd_report(run_dirs, format, out);
    if (*synth) return cmd_synth(kind, out_dir, seed, users, items, count);
  } catch (const CompatibilityError& e) {
    err << "error: " << e.what() << "\n";
    return kCompatibility;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace wavehdnn::cli
