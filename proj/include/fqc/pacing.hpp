#pragma once

// Pacing function: warm-up on the full fake set, then a shrinking top-FQS
// hard pool plus a bottom-FQS easy pool routed through FreDA.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fqc/common.hpp"
#include "fqc/error.hpp"
#include "fqc/fqs.hpp"

namespace fqc {

using ScoreMap = std::map<std::string, double>;

enum class SelectionMode { top_k, softmax };

struct PacingConfig {
  std::vector<int> milestones{2, 5, 8, 12, 15};
  int total_epochs = 20;
  std::optional<std::size_t> k_init;  // unset: the number of fakes
  double alpha_beta = 0.9;
  std::size_t easy_count = 1000;  // upper bound; shrinks to what remains outside the hard pool
  SelectionMode selection = SelectionMode::top_k;
  double softmax_temperature = 1.0;

  int warmup_epochs() const { return milestones.front(); }

  void validate() const {
    if (milestones.empty()) fail(Errc::config, "pacing sequence must not be empty");
    if (milestones.front() < 0) fail(Errc::config, "milestones must be non-negative");
    for (std::size_t i = 1; i < milestones.size(); ++i)
      if (milestones[i] <= milestones[i - 1]) fail(Errc::config, "milestones must be strictly increasing");
    if (total_epochs < 1) fail(Errc::config, "total_epochs must be positive");
    if (milestones.size() > 1 && milestones.back() >= total_epochs)
      fail(Errc::config, "last milestone must precede total_epochs");
    if (milestones.front() > total_epochs) fail(Errc::config, "warm-up longer than training");
    if (!(alpha_beta > 0.0 && alpha_beta <= 1.0)) fail(Errc::config, "alpha_beta must lie in (0,1]");
    if (k_init && *k_init < 1) fail(Errc::config, "k_init must be positive");
    if (!(softmax_temperature > 0.0)) fail(Errc::config, "softmax_temperature must be positive");
  }

  void validate(std::size_t fake_count) const {
    validate();
    if (fake_count == 0) fail(Errc::config, "dataset has no fake samples");
    if (k_init && *k_init > fake_count)
      fail(Errc::config, "k_init " + std::to_string(*k_init) + " exceeds fake count " + std::to_string(fake_count));
  }

  std::size_t initial_k(std::size_t fake_count) const { return k_init.value_or(fake_count); }
};

/// max(1, floor(alpha_beta * k_prev))
inline std::size_t shrink_k(std::size_t k_prev, double alpha_beta) {
  if (!(alpha_beta > 0.0 && alpha_beta <= 1.0)) fail(Errc::config, "alpha_beta must lie in (0,1]");
  if (k_prev < 1) fail(Errc::invalid_input, "pool size must be at least 1");
  const auto k = static_cast<std::size_t>(std::floor(alpha_beta * static_cast<double>(k_prev)));
  return std::max<std::size_t>(1, k);
}

/// Number of milestones T_n with T_n <= t.
inline int milestones_crossed(int t, const std::vector<int>& milestones) {
  return static_cast<int>(std::upper_bound(milestones.begin(), milestones.end(), t) - milestones.begin());
}

namespace detail {

struct Ranked {
  double key;
  const std::string* id;
};

// Picks the `count` best entries under `better` (a strict total order) and
// returns their ids sorted ascending.
template <class Better>
IdSet pick(std::vector<Ranked>& ranked, std::size_t count, Better better) {
  count = std::min(count, ranked.size());
  if (count < ranked.size())
    std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count), ranked.end(), better);
  IdSet out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(*ranked[i].id);
  std::sort(out.begin(), out.end());
  return out;
}

inline bool higher_first(const Ranked& a, const Ranked& b) {
  return a.key != b.key ? a.key > b.key : *a.id < *b.id;
}

inline bool lower_first(const Ranked& a, const Ranked& b) {
  return a.key != b.key ? a.key < b.key : *a.id < *b.id;
}

inline void check_finite(const ScoreMap& scores) {
  for (const auto& [id, s] : scores)
    if (!std::isfinite(s)) fail(Errc::invalid_input, "score for " + id + " is not finite");
}

}  // namespace detail

/// The k ids with the largest score; ties go to the smaller id.
inline IdSet select_hard_pool(const ScoreMap& scores, std::size_t k) {
  if (k > scores.size())
    fail(Errc::size, "hard pool size " + std::to_string(k) + " exceeds " + std::to_string(scores.size()) + " scored samples");
  detail::check_finite(scores);
  std::vector<detail::Ranked> ranked;
  ranked.reserve(scores.size());
  for (const auto& [id, s] : scores) ranked.push_back({s, &id});
  return detail::pick(ranked, k, detail::higher_first);
}

/// Up to `easy_count` ids with the smallest score outside `excluded`
/// (sorted); ties go to the smaller id.
inline IdSet select_easy_pool(const ScoreMap& scores, std::size_t easy_count, const IdSet& excluded) {
  detail::check_finite(scores);
  std::vector<detail::Ranked> ranked;
  ranked.reserve(scores.size());
  for (const auto& [id, s] : scores)
    if (!std::binary_search(excluded.begin(), excluded.end(), id)) ranked.push_back({s, &id});
  return detail::pick(ranked, easy_count, detail::lower_first);
}

/// Sampling without replacement with probability proportional to
/// exp(score / temperature), via Gumbel-top-k keyed on (seed, epoch, id).
inline IdSet sample_hard_pool(const ScoreMap& scores, std::size_t k, double temperature, std::uint64_t seed,
                              int epoch) {
  if (k > scores.size()) fail(Errc::size, "hard pool size exceeds scored samples");
  detail::check_finite(scores);
  std::vector<detail::Ranked> ranked;
  ranked.reserve(scores.size());
  const std::uint64_t base = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(epoch)));
  for (const auto& [id, s] : scores) {
    const double u = hash_unit(splitmix64(base ^ fnv1a(id)));
    ranked.push_back({s / temperature - std::log(-std::log(u)), &id});
  }
  return detail::pick(ranked, k, detail::higher_first);
}

enum class Phase { warmup, curriculum };

inline std::string_view phase_name(Phase p) { return p == Phase::warmup ? "warmup" : "curriculum"; }

struct PoolPlan {
  int epoch = 0;
  Phase phase = Phase::warmup;
  IdSet hard_ids;
  IdSet easy_ids;
  std::size_t k_current = 0;
  double alpha_f_current = 0.0;
  double mean_fqs_hard = 0.0;  // under alpha_f_current; 0 during warm-up
  double mean_fqs_easy = 0.0;

  friend bool operator==(const PoolPlan&, const PoolPlan&) = default;
};

/// Hard-pool size at epoch t: k_init shrunk once per milestone crossed.
inline std::size_t k_at_epoch(int t, const PacingConfig& cfg, std::size_t fake_count) {
  std::size_t k = cfg.initial_k(fake_count);
  for (int i = 0, n = milestones_crossed(t, cfg.milestones); i < n; ++i) k = shrink_k(k, cfg.alpha_beta);
  return k;
}

inline double alpha_f_at_epoch(int t, const PacingConfig& pacing, const FqsConfig& fqs) {
  return decay_alpha_f(fqs.alpha_f_init, milestones_crossed(t, pacing.milestones), fqs.alpha_f_decay);
}

/// Pool plan for epoch t from the current quality table (which holds every fake).
inline PoolPlan epoch_plan(int t, const PacingConfig& cfg, const FqsConfig& fqs, const QualityTable& table,
                           std::uint64_t seed = 0) {
  if (t < 0 || t >= cfg.total_epochs)
    fail(Errc::invalid_schedule, "epoch " + std::to_string(t) + " outside [0," + std::to_string(cfg.total_epochs) + ")");
  const std::size_t fakes = table.size();
  PoolPlan plan;
  plan.epoch = t;
  plan.alpha_f_current = alpha_f_at_epoch(t, cfg, fqs);
  if (t < cfg.warmup_epochs()) {
    plan.phase = Phase::warmup;
    for (const auto& [id, st] : table.states()) plan.hard_ids.push_back(id);
    plan.k_current = fakes;
    return plan;
  }
  plan.phase = Phase::curriculum;
  std::size_t unscored = 0;
  std::string first;
  for (const auto& [id, st] : table.states())
    if (st.last_updated_epoch < 0 && unscored++ == 0) first = id;
  if (unscored)
    fail(Errc::scoring_incomplete,
         std::to_string(unscored) + " fake(s) have no loss history at epoch " + std::to_string(t) + " (first: " + first + ")");

  const ScoreMap scores = table.scores(plan.alpha_f_current);
  plan.k_current = k_at_epoch(t, cfg, fakes);
  plan.hard_ids = cfg.selection == SelectionMode::top_k
                      ? select_hard_pool(scores, plan.k_current)
                      : sample_hard_pool(scores, plan.k_current, cfg.softmax_temperature, seed, t);
  plan.easy_ids = select_easy_pool(scores, cfg.easy_count, plan.hard_ids);

  auto mean_of = [&](const IdSet& ids) {
    double sum = 0.0;
    for (const auto& id : ids) sum += scores.at(id);
    return ids.empty() ? 0.0 : sum / static_cast<double>(ids.size());
  };
  plan.mean_fqs_hard = mean_of(plan.hard_ids);
  plan.mean_fqs_easy = mean_of(plan.easy_ids);
  return plan;
}

struct PoolEntry {
  std::string id;         // augmented entries carry the source id plus the augmentation tag
  std::string source_id;
  Label label = Label::fake;
  bool augmented = false;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

struct EpochPool {
  int epoch = 0;
  std::vector<PoolEntry> fakes;  // H_t originals plus FreDA(E_t)
  std::vector<PoolEntry> reals;  // every real sample
};

/// Assembles the epoch's sample pool. `augment(fake_id, real_id)` must return
/// the augmented entry for an easy-pool fake. Order is a seeded shuffle.
template <class Augment>
EpochPool build_epoch_pool(const PoolPlan& plan, const std::map<std::string, std::string>& paired_real,
                           const IdSet& real_ids, Augment&& augment, std::uint64_t seed) {
  EpochPool pool;
  pool.epoch = plan.epoch;
  pool.fakes.reserve(plan.hard_ids.size() + plan.easy_ids.size());
  for (const auto& id : plan.hard_ids) pool.fakes.push_back({id, id, Label::fake, false});
  for (const auto& id : plan.easy_ids) {
    auto it = paired_real.find(id);
    if (it == paired_real.end()) fail(Errc::pairing, "easy sample " + id + " has no paired real");
    if (!std::binary_search(real_ids.begin(), real_ids.end(), it->second))
      fail(Errc::pairing, "paired real " + it->second + " of " + id + " is not in the real set");
    pool.fakes.push_back(augment(id, it->second));
  }
  pool.reals.reserve(real_ids.size());
  for (const auto& id : real_ids) pool.reals.push_back({id, id, Label::real, false});

  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(0x706f6f6cULL + static_cast<std::uint64_t>(plan.epoch))));
  deterministic_shuffle(pool.fakes, rng);
  deterministic_shuffle(pool.reals, rng);
  return pool;
}

}  // namespace fqc
