#pragma once

// Implementations behind the `fqc` subcommands. Each throws fqc::Error on
// failure; tools/fqc.cpp maps that to a diagnostic and a nonzero exit.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fqc/config.hpp"
#include "fqc/dataio.hpp"
#include "fqc/freda_batch.hpp"
#include "fqc/harness.hpp"
#include "fqc/session.hpp"

namespace fqc {

// ---------------------------------------------------------------------------
// Static score table
// ---------------------------------------------------------------------------

struct StaticScoreRow {
  std::string sample_id;
  std::string paired_real_id;
  double q = 0.0;

  friend bool operator==(const StaticScoreRow&, const StaticScoreRow&) = default;
};

inline std::string serialize_static_scores(const std::vector<StaticScoreRow>& rows) {
  std::string out =
      json{{"format", "fqc-static-scores"}, {"version", kFormatVersion}, {"count", rows.size()}}.dump() + "\n";
  for (const auto& r : rows)
    out += json{{"sample_id", r.sample_id}, {"paired_real_id", r.paired_real_id}, {"q", r.q}}.dump() + "\n";
  return out;
}

inline std::vector<StaticScoreRow> read_static_scores(const fs::path& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) fail(Errc::parse, path.string() + ": empty static score table");
  const json header = detail::parse_line(lines.front().second, path, lines.front().first);
  detail::check_header(header, "fqc-static-scores", path);
  std::vector<StaticScoreRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [ln, text] = lines[i];
    const json j = detail::parse_line(text, path, ln);
    rows.push_back({detail::field<std::string>(j, "sample_id", path, ln),
                    detail::field<std::string>(j, "paired_real_id", path, ln), detail::field<double>(j, "q", path, ln)});
    if (i > 1 && !(rows[rows.size() - 2].sample_id < rows.back().sample_id))
      fail(Errc::parse, detail::where(path, ln) + ": rows must be sorted by unique sample_id");
  }
  if (rows.size() != detail::field<std::size_t>(header, "count", path, 1))
    fail(Errc::parse, path.string() + ": row count does not match header");
  return rows;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Writes the static score q of every fake.
inline std::vector<StaticScoreRow> cmd_score_static(const fs::path& manifest_path, const fs::path& embeddings_path,
                                                    const fs::path& out) {
  const Manifest manifest = load_manifest(manifest_path);
  const EmbeddingTable emb = load_embeddings(embeddings_path, manifest);
  std::vector<StaticScoreRow> rows;
  for (const auto& [id, q] : static_scores(manifest, emb)) rows.push_back({id, *manifest.find(id)->paired_real_id, q});
  detail::write_text(out, serialize_static_scores(rows));
  return rows;
}

/// Pair list: one pair per line, "fake_path<TAB>real_path" or
/// "src_id<TAB>fake_path<TAB>real_path". '#' starts a comment line. Relative
/// paths resolve against the pair list's directory.
inline std::vector<FredaJob> read_pair_list(const fs::path& pairs_path, const fs::path& out_dir) {
  const fs::path base = pairs_path.parent_path();
  std::vector<FredaJob> jobs;
  for (const auto& [ln, text] : detail::read_lines(pairs_path)) {
    if (text.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(text);
    for (std::string col; std::getline(ss, col, '\t');) cols.push_back(col);
    if (cols.size() != 2 && cols.size() != 3)
      fail(Errc::parse, detail::where(pairs_path, ln) + ": expected 2 or 3 tab-separated columns");
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    FredaJob job;
    job.fake_path = resolve(cols[cols.size() - 2]);
    job.real_path = resolve(cols.back());
    job.src_id = cols.size() == 3 ? cols[0] : job.fake_path.stem().string();
    job.out_path = out_dir / (job.src_id + ".freda" + job.fake_path.extension().string());
    jobs.push_back(std::move(job));
  }
  std::map<std::string, std::size_t> seen;
  for (const auto& j : jobs)
    if (seen[j.src_id]++) fail(Errc::duplicate, pairs_path.string() + ": duplicate source id '" + j.src_id + "'");
  return jobs;
}

/// Augments every listed pair and writes a provenance log.
inline std::vector<Provenance> cmd_freda(const fs::path& pairs_path, std::optional<std::size_t> radius,
                                         const fs::path& out_dir, std::optional<fs::path> provenance_path = {},
                                         unsigned threads = std::thread::hardware_concurrency()) {
  fs::create_directories(out_dir);
  const auto jobs = read_pair_list(pairs_path, out_dir);
  const auto prov = run_freda_jobs(jobs, radius, threads);
  std::string log;
  for (const auto& p : prov) log += serialize_provenance(p);
  detail::write_text(provenance_path.value_or(out_dir / "provenance.jsonl"), log);
  return prov;
}

/// Replays the pacing schedule without training. With a loss log the
/// recorded losses drive the dynamic hardness; without one every fake keeps
/// d = 0 and the ranking is by static score alone.
inline std::vector<ScheduleRow> cmd_schedule(const RunConfig& cfg, const fs::path& scores_path,
                                             std::optional<fs::path> losses_path, std::optional<fs::path> out) {
  std::map<std::string, double> q;
  for (const auto& r : read_static_scores(scores_path)) q.emplace(r.sample_id, r.q);
  CurriculumSession session(cfg.fqs, cfg.pacing, q, cfg.seed);
  std::map<int, std::vector<LossRecord>> by_epoch;
  if (losses_path) {
    if (!fs::exists(*losses_path)) fail(Errc::io, "loss log not found: " + losses_path->string());
    for (auto& r : read_loss_log(*losses_path)) by_epoch[r.epoch].push_back(std::move(r));
  } else {
    session.prime_dynamic(0.0);
  }
  while (!session.finished()) {
    const int t = session.epoch();
    session.next_pool();
    auto it = by_epoch.find(t);
    session.submit_losses(t, it == by_epoch.end() ? std::vector<LossRecord>{} : it->second);
  }
  const auto rows = session.schedule();
  if (out) detail::write_text(*out, serialize_schedule(rows));
  return rows;
}

struct RunOutputs {
  fs::path report;
  fs::path fqs;
  fs::path schedule;
  fs::path losses;
};

inline RunOutputs run_outputs(const fs::path& out_dir) {
  return {out_dir / "report.jsonl", out_dir / "fqs.jsonl", out_dir / "schedule.jsonl", out_dir / "losses.jsonl"};
}

/// Full harness run; writes report, final FQS table, schedule dump, and loss log under cfg.out_dir.
inline RunResult cmd_run(const RunConfig& cfg) {
  if (cfg.manifest.empty() || cfg.embeddings.empty() || cfg.out_dir.empty())
    fail(Errc::config, "paths.manifest, paths.embeddings and paths.out_dir are required for a run");
  const Manifest manifest = load_manifest(cfg.manifest);
  IdSet all_ids;
  for (const auto& r : manifest.records) all_ids.push_back(r.sample_id);
  const EmbeddingTable emb = load_embeddings(cfg.embeddings, all_ids);

  fs::create_directories(cfg.out_dir);
  const RunOutputs out = run_outputs(cfg.out_dir);
  fs::remove(out.losses);
  LossLog log(out.losses);
  RunResult result = run_curriculum(manifest, emb, cfg, &log);
  detail::write_text(out.report, serialize_report(result.report));
  detail::write_text(out.fqs, serialize_fqs_table(result.report.fqs));
  detail::write_text(out.schedule, serialize_schedule(result.schedule));
  return result;
}

/// CSV series of a report.
inline std::string cmd_report(const fs::path& report_path) { return report_csv(read_report(report_path)); }

/// CSV of a final FQS table.
inline std::string cmd_report_fqs(const fs::path& fqs_path) {
  std::string out = "sample_id,q,d,fqs,last_updated_epoch\n";
  char buf[128];
  for (const auto& s : read_fqs_table(fqs_path)) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%d\n", s.q, s.d, s.fqs, s.last_updated_epoch);
    out += s.sample_id + buf;
  }
  return out;
}

}  // namespace fqc
