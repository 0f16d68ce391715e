#include "wavehdnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <zlib.h>

#include "wavehdnn/errors.hpp"
#include "wavehdnn/rng.hpp"

namespace wavehdnn::data {
namespace {

std::string read_plain(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

std::string read_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path.string());
  std::string out;
  char chunk[1 << 16];
  int n;
  while ((n = gzread(f, chunk, sizeof(chunk))) > 0) out.append(chunk, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw IoError("gzip decode failed: " + path.string());
  return out;
}

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    const std::size_t a = std::hash<std::string>{}(p.first);
    return a ^ (std::hash<std::string>{}(p.second) + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  }
};

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string split_text(const std::vector<Interaction>& split) {
  std::string out;
  for (const auto& [u, i] : split) {
    out += std::to_string(u);
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Interaction> read_split(const std::filesystem::path& path) {
  std::vector<Interaction> out;
  std::istringstream in(read_plain(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    long long u = 0, i = 0;
    if (std::sscanf(line.c_str(), "%lld\t%lld", &u, &i) != 2) {
      throw FormatError(path.string() + ": malformed line " + std::to_string(lineno), lineno);
    }
    out.emplace_back(u, i);
  }
  return out;
}

std::vector<std::string> read_tokens(const std::filesystem::path& path, Index count) {
  std::vector<std::string> tokens(static_cast<std::size_t>(count));
  if (!std::filesystem::exists(path)) return {};
  std::istringstream in(read_plain(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) continue;
    const Index id = std::stoll(line.substr(tab + 1));
    if (id >= 0 && id < count) tokens[static_cast<std::size_t>(id)] = line.substr(0, tab);
  }
  return tokens;
}

}  // namespace

std::vector<std::vector<Index>> InteractionDataset::items_of(
    const std::vector<Interaction>& split) const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(num_users));
  for (const auto& [u, i] : split) out[static_cast<std::size_t>(u)].push_back(i);
  for (auto& items : out) std::sort(items.begin(), items.end());
  return out;
}

RawInteractions parse_interactions(const std::string& text, const std::string& source) {
  RawInteractions raw;
  raw.source_path = source;
  std::unordered_set<std::pair<std::string, std::string>, PairHash> seen;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(source + ": malformed line " + std::to_string(lineno) +
                            " (expected user<TAB>item)",
                        lineno);
    }
    const auto tab2 = line.find('\t', tab + 1);
    std::string item = line.substr(tab + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab - 1);
    if (item.empty()) {
      throw FormatError(source + ": malformed line " + std::to_string(lineno) + " (empty item)",
                        lineno);
    }
    std::pair<std::string, std::string> p{line.substr(0, tab), std::move(item)};
    if (seen.insert(p).second) raw.pairs.push_back(std::move(p));
  }
  if (raw.pairs.empty()) throw FormatError(source + ": no interactions");
  return raw;
}

RawInteractions load_interactions(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("cannot open " + path.string());
  const bool gz = path.extension() == ".gz" || path.extension() == ".gzip";
  return parse_interactions(gz ? read_gzip(path) : read_plain(path), path.string());
}

InteractionDataset remap_and_split(const RawInteractions& raw, std::uint64_t seed) {
  WAVEHDNN_REQUIRE(!raw.pairs.empty(), "remap_and_split: empty input");
  InteractionDataset ds;
  ds.split_seed = seed;
  std::unordered_map<std::string, Index> user_ids, item_ids;
  std::vector<std::vector<Index>> per_user;
  for (const auto& [ut, it] : raw.pairs) {
    auto [uit, unew] = user_ids.try_emplace(ut, static_cast<Index>(user_ids.size()));
    if (unew) {
      ds.user_tokens.push_back(ut);
      per_user.emplace_back();
    }
    auto [iit, inew] = item_ids.try_emplace(it, static_cast<Index>(item_ids.size()));
    if (inew) ds.item_tokens.push_back(it);
    per_user[static_cast<std::size_t>(uit->second)].push_back(iit->second);
  }
  ds.num_users = static_cast<Index>(user_ids.size());
  ds.num_items = static_cast<Index>(item_ids.size());

  Rng rng(seed);
  for (Index u = 0; u < ds.num_users; ++u) {
    auto& items = per_user[static_cast<std::size_t>(u)];
    rng.shuffle(items);
    const std::size_t n = items.size();
    std::size_t n_train = n, n_val = 0;
    if (n >= 3) {
      n_train = (7 * n + 9) / 10;
      n_val = std::min((n + 9) / 10, n - n_train);
    }
    for (std::size_t k = 0; k < n; ++k) {
      auto& dst = k < n_train ? ds.train : (k < n_train + n_val ? ds.val : ds.test);
      dst.emplace_back(u, items[k]);
    }
  }
  ds.train_items_of = ds.items_of(ds.train);
  return ds;
}

InteractionDataset make_dataset(Index num_users, Index num_items, std::vector<Interaction> train,
                                std::vector<Interaction> val, std::vector<Interaction> test,
                                std::uint64_t seed) {
  InteractionDataset ds;
  ds.num_users = num_users;
  ds.num_items = num_items;
  ds.split_seed = seed;
  for (const auto* split : {&train, &val, &test}) {
    for (const auto& [u, i] : *split) {
      WAVEHDNN_REQUIRE(u >= 0 && u < num_users && i >= 0 && i < num_items,
                       "make_dataset: interaction id out of range");
    }
  }
  ds.train = std::move(train);
  ds.val = std::move(val);
  ds.test = std::move(test);
  ds.train_items_of = ds.items_of(ds.train);
  return ds;
}

DatasetStats compute_stats(const InteractionDataset& ds) {
  DatasetStats s;
  s.num_users = ds.num_users;
  s.num_items = ds.num_items;
  s.num_interactions = static_cast<Index>(ds.train.size() + ds.val.size() + ds.test.size());
  s.density = static_cast<double>(s.num_interactions) /
              (static_cast<double>(s.num_users) * static_cast<double>(s.num_items));
  return s;
}

std::string format_density(double density, int digits) {
  if (!(density > 0.0)) return "0";
  int exponent = static_cast<int>(std::floor(std::log10(density)));
  double mantissa = density / std::pow(10.0, exponent);
  // log10 can land one off at exact powers of ten.
  if (mantissa >= 10.0) {
    mantissa /= 10.0;
    ++exponent;
  } else if (mantissa < 1.0) {
    mantissa *= 10.0;
    --exponent;
  }
  const double scale = std::pow(10.0, digits - 1);
  const double truncated = std::floor(mantissa * scale + 1e-9) / scale;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*fe%d", digits - 1, truncated, exponent);
  return buf;
}

std::string stats_row(const DatasetStats& stats) {
  std::ostringstream os;
  os << "users=" << stats.num_users << " items=" << stats.num_items
     << " interactions=" << stats.num_interactions << " density=" << format_density(stats.density);
  return os.str();
}

void write_archive(const InteractionDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ostringstream meta;
  meta << "format = wavehdnn-split\n"
       << "version = 1\n"
       << "num_users = " << ds.num_users << "\n"
       << "num_items = " << ds.num_items << "\n"
       << "seed = " << ds.split_seed << "\n"
       << "train = " << ds.train.size() << "\n"
       << "val = " << ds.val.size() << "\n"
       << "test = " << ds.test.size() << "\n";
  write_file(dir / "meta", meta.str());
  write_file(dir / "train.tsv", split_text(ds.train));
  write_file(dir / "val.tsv", split_text(ds.val));
  write_file(dir / "test.tsv", split_text(ds.test));
  auto token_map = [](const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t id = 0; id < tokens.size(); ++id) {
      out += tokens[id];
      out += '\t';
      out += std::to_string(id);
      out += '\n';
    }
    return out;
  };
  write_file(dir / "id_map_users.tsv", token_map(ds.user_tokens));
  write_file(dir / "id_map_items.tsv", token_map(ds.item_tokens));
}

InteractionDataset read_archive(const std::filesystem::path& dir) {
  std::istringstream meta(read_plain(dir / "meta"));
  std::unordered_map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* key : {"num_users", "num_items", "seed"}) {
    if (!kv.count(key)) throw FormatError((dir / "meta").string() + ": missing key " + key);
  }
  auto ds = make_dataset(std::stoll(kv["num_users"]), std::stoll(kv["num_items"]),
                         read_split(dir / "train.tsv"), read_split(dir / "val.tsv"),
                         read_split(dir / "test.tsv"), std::stoull(kv["seed"]));
  ds.user_tokens = read_tokens(dir / "id_map_users.tsv", ds.num_users);
  ds.item_tokens = read_tokens(dir / "id_map_items.tsv", ds.num_items);
  return ds;
}

std::uint64_t fingerprint(const InteractionDataset& ds) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a(h, std::to_string(ds.num_users) + "," + std::to_string(ds.num_items) + "\n");
  h = fnv1a(h, split_text(ds.train));
  h = fnv1a(h, "--\n" + split_text(ds.val));
  h = fnv1a(h, "--\n" + split_text(ds.test));
  return h;
}

}  // namespace wavehdnn::data
