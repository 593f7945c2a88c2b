#pragma once

// Manifest, embedding table, and loss log persistence. All text formats are
// JSON Lines with a versioned header object on the first line.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "fqc/common.hpp"
#include "fqc/error.hpp"
#include "fqc/fqs.hpp"

namespace fqc {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

namespace detail {

inline std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

inline json parse_line(const std::string& text, const fs::path& path, std::size_t line) {
  try {
    auto j = json::parse(text);
    if (!j.is_object()) fail(Errc::parse, where(path, line) + ": expected a JSON object");
    return j;
  } catch (const json::exception& e) {
    fail(Errc::parse, where(path, line) + ": " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const fs::path& path, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) fail(Errc::parse, where(path, line) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(Errc::parse, where(path, line) + ": field '" + key + "' has the wrong type");
  }
}

inline void check_header(const json& j, const char* format, const fs::path& path) {
  const auto f = field<std::string>(j, "format", path, 1);
  if (f != format) fail(Errc::parse, where(path, 1) + ": expected format '" + format + "', got '" + f + "'");
  const auto v = field<int>(j, "version", path, 1);
  if (v != kFormatVersion) fail(Errc::parse, where(path, 1) + ": unsupported version " + std::to_string(v));
}

// Reads complete ('\n'-terminated) lines; a trailing partial line is an
// in-progress write and is ignored. Blank lines are skipped.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string all = ss.str();
  std::vector<std::pair<std::size_t, std::string>> out;
  std::size_t start = 0, line = 0;
  while (true) {
    const auto nl = all.find('\n', start);
    if (nl == std::string::npos) break;
    ++line;
    std::string text = all.substr(start, nl - start);
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") != std::string::npos) out.emplace_back(line, std::move(text));
    start = nl + 1;
  }
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::io, "short write to " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct SampleRecord {
  std::string sample_id;
  Label label = Label::real;
  std::string image_path;  // as written; relative paths resolve against the manifest directory
  std::optional<std::string> paired_real_id;
  std::string source_tag;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Manifest {
  fs::path base_dir;
  std::vector<SampleRecord> records;  // sorted by sample_id

  fs::path resolve(const SampleRecord& r) const {
    const fs::path p(r.image_path);
    return p.is_absolute() ? p : base_dir / p;
  }

  const SampleRecord* find(const std::string& id) const {
    auto it = std::lower_bound(records.begin(), records.end(), id,
                               [](const SampleRecord& r, const std::string& k) { return r.sample_id < k; });
    return it != records.end() && it->sample_id == id ? &*it : nullptr;
  }

  IdSet ids(Label label) const {
    IdSet out;
    for (const auto& r : records)
      if (r.label == label) out.push_back(r.sample_id);
    return out;
  }

  /// fake id -> paired real id
  std::map<std::string, std::string> pairs() const {
    std::map<std::string, std::string> out;
    for (const auto& r : records)
      if (r.label == Label::fake) out.emplace(r.sample_id, *r.paired_real_id);
    return out;
  }
};

struct ManifestOptions {
  bool check_paths = true;
};

/// Sorts by id and enforces uniqueness, pairing, and (optionally) path existence.
inline void validate_manifest(Manifest& m, const ManifestOptions& opts = {}) {
  std::sort(m.records.begin(), m.records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.sample_id < b.sample_id; });
  for (std::size_t i = 1; i < m.records.size(); ++i)
    if (m.records[i].sample_id == m.records[i - 1].sample_id)
      fail(Errc::duplicate, "duplicate sample_id '" + m.records[i].sample_id + "'");
  for (const auto& r : m.records) {
    if (r.label == Label::fake) {
      if (!r.paired_real_id) fail(Errc::referential_integrity, "FAKE sample '" + r.sample_id + "' has no paired_real_id");
      const auto* pair = m.find(*r.paired_real_id);
      if (pair == nullptr)
        fail(Errc::referential_integrity,
             "FAKE sample '" + r.sample_id + "' references unknown real '" + *r.paired_real_id + "'");
      if (pair->label != Label::real)
        fail(Errc::referential_integrity,
             "FAKE sample '" + r.sample_id + "' is paired with non-REAL '" + *r.paired_real_id + "'");
    } else if (r.paired_real_id) {
      fail(Errc::referential_integrity, "REAL sample '" + r.sample_id + "' must not have a paired_real_id");
    }
    if (opts.check_paths && !fs::exists(m.resolve(r)))
      fail(Errc::io, "image for '" + r.sample_id + "' not found: " + m.resolve(r).string());
  }
}

inline Manifest load_manifest(const fs::path& path, const ManifestOptions& opts = {}) {
  Manifest m;
  m.base_dir = path.parent_path();
  const auto lines = detail::read_lines(path);
  if (lines.empty()) return m;
  detail::check_header(detail::parse_line(lines.front().second, path, lines.front().first), "fqc-manifest", path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [ln, text] = lines[i];
    const json j = detail::parse_line(text, path, ln);
    SampleRecord r;
    r.sample_id = detail::field<std::string>(j, "sample_id", path, ln);
    if (r.sample_id.empty()) fail(Errc::parse, detail::where(path, ln) + ": empty sample_id");
    try {
      r.label = parse_label(detail::field<std::string>(j, "label", path, ln));
    } catch (const Error& e) {
      fail(e.code(), detail::where(path, ln) + ": " + e.what());
    }
    r.image_path = detail::field<std::string>(j, "image_path", path, ln);
    if (auto it = j.find("paired_real_id"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) fail(Errc::parse, detail::where(path, ln) + ": paired_real_id must be a string");
      r.paired_real_id = it->get<std::string>();
    }
    if (auto it = j.find("source_tag"); it != j.end() && it->is_string()) r.source_tag = it->get<std::string>();
    m.records.push_back(std::move(r));
  }
  validate_manifest(m, opts);
  return m;
}

inline std::string serialize_manifest(const Manifest& m) {
  std::string out = json{{"format", "fqc-manifest"}, {"version", kFormatVersion}}.dump() + "\n";
  for (const auto& r : m.records) {
    json j{{"sample_id", r.sample_id},
           {"label", label_name(r.label)},
           {"image_path", r.image_path},
           {"paired_real_id", r.paired_real_id ? json(*r.paired_real_id) : json(nullptr)},
           {"source_tag", r.source_tag}};
    out += j.dump() + "\n";
  }
  return out;
}

inline void save_manifest(const fs::path& path, const Manifest& m) { detail::write_text(path, serialize_manifest(m)); }

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

using EmbeddingTable = std::map<std::string, Embedding>;

namespace detail {

inline constexpr char kEmbeddingMagic[4] = {'F', 'Q', 'C', 'E'};

inline bool is_binary_embeddings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::memcmp(magic, kEmbeddingMagic, 4) == 0;
}

template <class T>
void put_le(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "binary embeddings assume a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get_le(std::istream& in, const fs::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != sizeof(T)) fail(Errc::parse, path.string() + ": truncated binary embeddings");
  return v;
}

inline EmbeddingTable read_text_embeddings(const fs::path& path) {
  EmbeddingTable table;
  const auto lines = read_lines(path);
  if (lines.empty()) fail(Errc::parse, path.string() + ": missing embeddings header");
  const json header = parse_line(lines.front().second, path, lines.front().first);
  check_header(header, "fqc-embeddings", path);
  const auto dim = field<std::size_t>(header, "dim", path, 1);
  const auto count = field<std::size_t>(header, "count", path, 1);
  if (dim == 0) fail(Errc::parse, where(path, 1) + ": dim must be positive");
  if (lines.size() - 1 != count)
    fail(Errc::parse, path.string() + ": header count " + std::to_string(count) + " but " +
                          std::to_string(lines.size() - 1) + " rows");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [ln, text] = lines[i];
    const json j = parse_line(text, path, ln);
    auto id = field<std::string>(j, "sample_id", path, ln);
    auto values = field<std::vector<double>>(j, "values", path, ln);
    if (values.size() != dim)
      fail(Errc::parse, where(path, ln) + ": row has " + std::to_string(values.size()) + " values, header dim is " +
                            std::to_string(dim));
    Embedding e;
    try {
      e = Embedding(std::move(values));
    } catch (const Error& err) {
      fail(Errc::parse, where(path, ln) + ": " + err.what());
    }
    if (!table.emplace(id, std::move(e)).second) fail(Errc::duplicate, where(path, ln) + ": duplicate id '" + id + "'");
  }
  return table;
}

inline EmbeddingTable read_binary_embeddings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  in.ignore(4);
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kFormatVersion) fail(Errc::parse, path.string() + ": unsupported version " + std::to_string(version));
  const auto dim = get_le<std::uint32_t>(in, path);
  const auto count = get_le<std::uint64_t>(in, path);
  if (dim == 0) fail(Errc::parse, path.string() + ": dim must be positive");
  EmbeddingTable table;
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto len = get_le<std::uint32_t>(in, path);
    std::string id(len, '\0');
    in.read(id.data(), len);
    if (static_cast<std::uint32_t>(in.gcount()) != len) fail(Errc::parse, path.string() + ": truncated id");
    std::vector<double> values(dim);
    for (auto& v : values) v = get_le<double>(in, path);
    Embedding e;
    try {
      e = Embedding(std::move(values));
    } catch (const Error& err) {
      fail(Errc::parse, path.string() + ": row " + std::to_string(r) + ": " + err.what());
    }
    if (!table.emplace(id, std::move(e)).second) fail(Errc::duplicate, path.string() + ": duplicate id '" + id + "'");
  }
  if (in.peek() != std::char_traits<char>::eof()) fail(Errc::parse, path.string() + ": trailing bytes after last row");
  return table;
}

inline std::size_t uniform_dim(const EmbeddingTable& table) {
  std::size_t dim = 0;
  for (const auto& [id, e] : table) {
    if (dim == 0) dim = e.dim();
    if (e.dim() != dim) fail(Errc::dimension, "embedding '" + id + "' has dim " + std::to_string(e.dim()));
  }
  return dim;
}

}  // namespace detail

/// Reads a whole embeddings file (text or binary, detected by magic bytes).
inline EmbeddingTable read_embeddings(const fs::path& path) {
  if (!fs::exists(path)) fail(Errc::io, "embeddings file not found: " + path.string());
  return detail::is_binary_embeddings(path) ? detail::read_binary_embeddings(path)
                                            : detail::read_text_embeddings(path);
}

/// Loads the rows for `expected_ids`; every one must be present.
inline EmbeddingTable load_embeddings(const fs::path& path, const IdSet& expected_ids) {
  EmbeddingTable all = read_embeddings(path);
  EmbeddingTable out;
  std::vector<std::string> missing;
  for (const auto& id : expected_ids) {
    auto it = all.find(id);
    if (it == all.end())
      missing.push_back(id);
    else
      out.emplace(id, it->second);
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " sample(s) missing from " + path.string() + ":";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 5); ++i) msg += " " + missing[i];
    fail(Errc::coverage, msg);
  }
  detail::uniform_dim(out);
  return out;
}

/// Every FAKE and its paired REAL must have an embedding.
inline EmbeddingTable load_embeddings(const fs::path& path, const Manifest& manifest) {
  std::set<std::string> needed;
  for (const auto& r : manifest.records)
    if (r.label == Label::fake) {
      needed.insert(r.sample_id);
      needed.insert(*r.paired_real_id);
    }
  return load_embeddings(path, IdSet(needed.begin(), needed.end()));
}

inline std::string serialize_embeddings(const EmbeddingTable& table) {
  const std::size_t dim = detail::uniform_dim(table);
  std::string out =
      json{{"format", "fqc-embeddings"}, {"version", kFormatVersion}, {"dim", dim}, {"count", table.size()}}.dump() + "\n";
  for (const auto& [id, e] : table) {
    json values = json::array();
    for (double v : e.values()) values.push_back(v);
    out += json{{"sample_id", id}, {"values", values}}.dump() + "\n";
  }
  return out;
}

inline std::string serialize_embeddings_binary(const EmbeddingTable& table) {
  const std::size_t dim = detail::uniform_dim(table);
  std::string out(detail::kEmbeddingMagic, 4);
  detail::put_le<std::uint32_t>(out, kFormatVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  detail::put_le<std::uint64_t>(out, table.size());
  for (const auto& [id, e] : table) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    for (double v : e.values()) detail::put_le<double>(out, v);
  }
  return out;
}

inline void save_embeddings(const fs::path& path, const EmbeddingTable& table, bool binary = false) {
  detail::write_text(path, binary ? serialize_embeddings_binary(table) : serialize_embeddings(table));
}

// ---------------------------------------------------------------------------
// Loss log
// ---------------------------------------------------------------------------

struct LossRecord {
  int epoch = 0;
  std::string sample_id;
  double loss = 0.0;
  double lr = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

inline void validate_loss_record(const LossRecord& r) {
  if (r.epoch < 0) fail(Errc::invalid_input, "negative epoch in loss record for '" + r.sample_id + "'");
  if (r.sample_id.empty()) fail(Errc::invalid_input, "loss record without sample_id");
  if (!(r.loss >= 0.0) || !std::isfinite(r.loss)) fail(Errc::invalid_loss, "invalid loss for '" + r.sample_id + "'");
  if (!(r.lr > 0.0) || !std::isfinite(r.lr)) fail(Errc::invalid_schedule, "invalid lr for '" + r.sample_id + "'");
}

inline std::string serialize_loss_record(const LossRecord& r) {
  return json{{"epoch", r.epoch}, {"sample_id", r.sample_id}, {"loss", r.loss}, {"lr", r.lr}}.dump() + "\n";
}

/// Enforces one record per (epoch, sample) and one lr per epoch.
class LossIndex {
 public:
  void check(const LossRecord& r) const {
    validate_loss_record(r);
    if (seen_.count({r.epoch, r.sample_id}))
      fail(Errc::duplicate, "duplicate loss record for ('" + r.sample_id + "', epoch " + std::to_string(r.epoch) + ")");
    if (auto it = lr_.find(r.epoch); it != lr_.end() && it->second != r.lr)
      fail(Errc::schedule_consistency, "epoch " + std::to_string(r.epoch) + " has learning rates " +
                                           json(it->second).dump() + " and " + json(r.lr).dump());
  }

  void insert(const LossRecord& r) {
    seen_.insert({r.epoch, r.sample_id});
    lr_.emplace(r.epoch, r.lr);
  }

  /// Checks a batch against the index and against itself, then inserts it.
  void admit(const std::vector<LossRecord>& records) {
    LossIndex trial = *this;
    for (const auto& r : records) {
      trial.check(r);
      trial.insert(r);
    }
    *this = std::move(trial);
  }

 private:
  std::set<std::pair<int, std::string>> seen_;
  std::map<int, double> lr_;
};

/// Parses a loss log; a trailing partial line (writer mid-append) is ignored.
inline std::vector<LossRecord> read_loss_log(const fs::path& path) {
  std::vector<LossRecord> out;
  if (!fs::exists(path)) return out;
  LossIndex index;
  for (const auto& [ln, text] : detail::read_lines(path)) {
    const json j = detail::parse_line(text, path, ln);
    LossRecord r{detail::field<int>(j, "epoch", path, ln), detail::field<std::string>(j, "sample_id", path, ln),
                 detail::field<double>(j, "loss", path, ln), detail::field<double>(j, "lr", path, ln)};
    try {
      index.check(r);
    } catch (const Error& e) {
      fail(e.code(), detail::where(path, ln) + ": " + e.what());
    }
    index.insert(r);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<LossRecord> read_epoch_losses(const fs::path& path, int epoch) {
  std::vector<LossRecord> out;
  for (auto& r : read_loss_log(path))
    if (r.epoch == epoch) out.push_back(std::move(r));
  return out;
}

/// Append-only loss log. Each record is one line written with a single
/// write(2) on an O_APPEND descriptor, so readers never see half a record
/// from a completed append.
class LossLog {
 public:
  explicit LossLog(fs::path path) : path_(std::move(path)) {
    for (const auto& r : read_loss_log(path_)) index_.insert(r);
  }

  const fs::path& path() const noexcept { return path_; }

  void append(const std::vector<LossRecord>& records) {
    LossIndex next = index_;
    next.admit(records);
    std::string buf;
    for (const auto& r : records) buf += serialize_loss_record(r);
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) fail(Errc::io, "cannot open loss log " + path_.string());
    std::size_t off = 0;
    while (off < buf.size()) {
      const auto n = ::write(fd, buf.data() + off, buf.size() - off);
      if (n <= 0) {
        ::close(fd);
        fail(Errc::io, "write to loss log " + path_.string() + " failed");
      }
      off += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
    index_ = std::move(next);
  }

  std::vector<LossRecord> read_epoch(int epoch) const { return read_epoch_losses(path_, epoch); }

 private:
  fs::path path_;
  LossIndex index_;
};

}  // namespace fqc
