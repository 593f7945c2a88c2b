#pragma once

// Epoch-by-epoch curriculum driver. A session owns the quality table and
// enforces the call order
//
//   next_pool(0) -> submit_losses(0) -> next_pool(1) -> ... -> close()
//
// which is the protocol any external training loop follows.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fqc/dataio.hpp"
#include "fqc/error.hpp"
#include "fqc/fqs.hpp"
#include "fqc/lr_schedule.hpp"
#include "fqc/pacing.hpp"

namespace fqc {

/// One line of the schedule dump.
struct ScheduleRow {
  int epoch = 0;
  Phase phase = Phase::warmup;
  std::size_t k = 0;
  double alpha_f = 0.0;
  double lr = 0.0;
  std::size_t hard_count = 0;
  std::size_t easy_count = 0;
  std::string hard_ids_digest;
  std::string easy_ids_digest;

  friend bool operator==(const ScheduleRow&, const ScheduleRow&) = default;
};

inline ScheduleRow schedule_row(const PoolPlan& plan, double lr) {
  return {plan.epoch,          plan.phase,           plan.k_current,          plan.alpha_f_current,
          lr,                  plan.hard_ids.size(), plan.easy_ids.size(),    digest_ids(plan.hard_ids),
          digest_ids(plan.easy_ids)};
}

inline std::string serialize_schedule_row(const ScheduleRow& r) {
  return json{{"epoch", r.epoch},
              {"phase", phase_name(r.phase)},
              {"k", r.k},
              {"alpha_f", r.alpha_f},
              {"lr", r.lr},
              {"hard_count", r.hard_count},
              {"easy_count", r.easy_count},
              {"hard_ids_digest", r.hard_ids_digest},
              {"easy_ids_digest", r.easy_ids_digest}}
             .dump() +
         "\n";
}

inline std::string serialize_schedule(const std::vector<ScheduleRow>& rows) {
  std::string out = json{{"format", "fqc-schedule"}, {"version", kFormatVersion}}.dump() + "\n";
  for (const auto& r : rows) out += serialize_schedule_row(r);
  return out;
}

inline std::vector<ScheduleRow> read_schedule(const fs::path& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) fail(Errc::parse, path.string() + ": empty schedule dump");
  detail::check_header(detail::parse_line(lines.front().second, path, lines.front().first), "fqc-schedule", path);
  std::vector<ScheduleRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [ln, text] = lines[i];
    const json j = detail::parse_line(text, path, ln);
    const auto phase = detail::field<std::string>(j, "phase", path, ln);
    if (phase != "warmup" && phase != "curriculum") fail(Errc::parse, detail::where(path, ln) + ": unknown phase");
    rows.push_back({detail::field<int>(j, "epoch", path, ln), phase == "warmup" ? Phase::warmup : Phase::curriculum,
                    detail::field<std::size_t>(j, "k", path, ln), detail::field<double>(j, "alpha_f", path, ln),
                    detail::field<double>(j, "lr", path, ln), detail::field<std::size_t>(j, "hard_count", path, ln),
                    detail::field<std::size_t>(j, "easy_count", path, ln),
                    detail::field<std::string>(j, "hard_ids_digest", path, ln),
                    detail::field<std::string>(j, "easy_ids_digest", path, ln)});
  }
  return rows;
}

class CurriculumSession {
 public:
  /// `static_scores` maps every fake id to its static score q.
  CurriculumSession(FqsConfig fqs, PacingConfig pacing, const std::map<std::string, double>& static_scores,
                    std::uint64_t seed = 0)
      : fqs_(fqs), pacing_(std::move(pacing)), seed_(seed), table_(fqs.alpha_f_init) {
    fqs_.validate();
    pacing_.validate(static_scores.size());
    for (const auto& [id, q] : static_scores) table_.add(id, q);
  }

  /// Treats every fake as having dynamic hardness `d` from the start, for
  /// dry runs without any loss history.
  void prime_dynamic(double d) {
    if (stage_ != Stage::awaiting_plan || cursor_ != 0) fail(Errc::session_state, "prime_dynamic must precede the first plan");
    for (const auto& [id, st] : table_.states()) table_.seed(id, d, 0);
  }

  const PoolPlan& next_pool() {
    if (stage_ == Stage::closed) fail(Errc::session_state, "session is closed");
    if (stage_ == Stage::awaiting_losses)
      fail(Errc::session_state, "losses for epoch " + std::to_string(cursor_) + " have not been submitted");
    if (cursor_ >= pacing_.total_epochs) fail(Errc::session_state, "schedule exhausted");
    PoolPlan plan = epoch_plan(cursor_, pacing_, fqs_, table_, seed_);
    table_.set_alpha_f(plan.alpha_f_current);
    plans_.push_back(std::move(plan));
    stage_ = Stage::awaiting_losses;
    return plans_.back();
  }

  /// Feeds one epoch of per-sample losses. Records for fakes update the
  /// dynamic hardness; other ids (reals, augmented copies) are accepted and
  /// leave the table unchanged.
  void submit_losses(int epoch, const std::vector<LossRecord>& records) {
    if (stage_ == Stage::closed) fail(Errc::session_state, "session is closed");
    if (stage_ != Stage::awaiting_losses || epoch != cursor_)
      fail(Errc::session_state, "expected losses for epoch " + std::to_string(cursor_) +
                                    (stage_ == Stage::awaiting_losses ? "" : " after its plan") + ", got epoch " +
                                    std::to_string(epoch));
    for (const auto& r : records)
      if (r.epoch != epoch)
        fail(Errc::session_state, "record for '" + r.sample_id + "' is tagged epoch " + std::to_string(r.epoch));
    index_.admit(records);

    const PoolPlan& plan = plans_.back();
    for (const auto& r : records) {
      if (!table_.contains(r.sample_id)) continue;
      const double s = instantaneous_hardness(r.loss, r.lr, fqs_.lr_max, fqs_.hardness_ceiling);
      if (plan.phase == Phase::warmup) {
        table_.seed(r.sample_id, s, epoch);
      } else {
        const bool hard = std::binary_search(plan.hard_ids.begin(), plan.hard_ids.end(), r.sample_id);
        table_.observe(r.sample_id, s, fqs_.gamma, hard, epoch);
      }
    }
    ++cursor_;
    stage_ = Stage::awaiting_plan;
  }

  /// Ends the session and returns the final per-fake quality table.
  std::vector<QualityState> close() {
    if (stage_ == Stage::closed) fail(Errc::session_state, "session already closed");
    stage_ = Stage::closed;
    std::vector<QualityState> out;
    out.reserve(table_.size());
    for (const auto& [id, st] : table_.states()) out.push_back(st);
    return out;
  }

  int epoch() const noexcept { return cursor_; }
  bool finished() const noexcept { return cursor_ >= pacing_.total_epochs; }
  const QualityTable& table() const noexcept { return table_; }
  const std::vector<PoolPlan>& plans() const noexcept { return plans_; }
  const FqsConfig& fqs_config() const noexcept { return fqs_; }
  const PacingConfig& pacing_config() const noexcept { return pacing_; }

  std::vector<ScheduleRow> schedule() const {
    std::vector<ScheduleRow> rows;
    for (const auto& p : plans_) rows.push_back(schedule_row(p, cosine_lr(p.epoch, pacing_.total_epochs, fqs_.lr_max)));
    return rows;
  }

 private:
  enum class Stage { awaiting_plan, awaiting_losses, closed };

  FqsConfig fqs_;
  PacingConfig pacing_;
  std::uint64_t seed_;
  QualityTable table_;
  LossIndex index_;
  std::vector<PoolPlan> plans_;
  int cursor_ = 0;
  Stage stage_ = Stage::awaiting_plan;
};

}  // namespace fqc
