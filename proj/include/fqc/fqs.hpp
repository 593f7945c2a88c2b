#pragma once

// Forgery Quality Score: static embedding similarity, learning-rate
// normalized loss hardness, its moving average, and their weighted sum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fqc/error.hpp"

namespace fqc {

/// Fixed-dimension face feature vector produced by an external recognition model.
class Embedding {
 public:
  Embedding() = default;

  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) fail(Errc::dimension, "embedding must have dim >= 1");
    for (double v : values_)
      if (!std::isfinite(v)) fail(Errc::invalid_input, "embedding contains a non-finite value");
  }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

struct FqsConfig {
  double gamma = 0.9;          // discount of the dynamic-hardness average
  double alpha_f_init = 0.5;   // initial weight of the static score
  double lr_max = 0.1;
  double alpha_f_decay = 0.5;  // multiplier applied once per crossed milestone
  double hardness_ceiling = 1e4;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) fail(Errc::config, "gamma must lie in [0,1]");
    if (!(alpha_f_init > 0.0) || !std::isfinite(alpha_f_init))
      fail(Errc::config, "alpha_f_init must be positive");
    if (!(lr_max > 0.0) || !std::isfinite(lr_max)) fail(Errc::config, "lr_max must be positive");
    if (!(alpha_f_decay > 0.0 && alpha_f_decay <= 1.0))
      fail(Errc::config, "alpha_f_decay must lie in (0,1]");
    if (!(hardness_ceiling > 0.0)) fail(Errc::config, "hardness_ceiling must be positive");
  }
};

/// Cosine similarity between a fake embedding and its paired real embedding.
inline double static_score(const Embedding& fake, const Embedding& real) {
  if (fake.dim() != real.dim())
    fail(Errc::dimension, "embedding dims differ: " + std::to_string(fake.dim()) + " vs " +
                              std::to_string(real.dim()));
  const auto a = fake.values();
  const auto b = real.values();
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(Errc::degenerate_input, "zero-norm embedding, cosine undefined");
  // sqrt(na)*sqrt(nb) is commutative, so the score is exactly symmetric.
  const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(cos, -1.0, 1.0);
}

/// Loss rescaled by lr_max / lr_t so that losses stay comparable while the
/// learning rate decays. Clamped at `ceiling` for lr_t close to zero.
inline double instantaneous_hardness(double loss, double lr_t, double lr_max,
                                     double ceiling = 1e4) {
  if (!(lr_t > 0.0) || !std::isfinite(lr_t)) fail(Errc::invalid_schedule, "learning rate must be positive");
  if (!(lr_max > 0.0) || !std::isfinite(lr_max)) fail(Errc::invalid_schedule, "lr_max must be positive");
  if (!(loss >= 0.0) || !std::isfinite(loss)) fail(Errc::invalid_loss, "loss must be finite and non-negative");
  return std::min(loss * lr_max / lr_t, ceiling);
}

/// One step of the dynamic-hardness recursion. Samples outside the hard
/// pool keep their previous value.
inline double update_dynamic(double d_prev, double s, double gamma, bool in_hard_pool) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail(Errc::config, "gamma must lie in [0,1]");
  if (!in_hard_pool) return d_prev;
  return gamma * s + (1.0 - gamma) * d_prev;
}

inline double combine_fqs(double d, double q, double alpha_f) {
  if (!std::isfinite(d) || !std::isfinite(q) || !std::isfinite(alpha_f))
    fail(Errc::invalid_input, "non-finite FQS input");
  if (alpha_f < 0.0) fail(Errc::invalid_input, "alpha_f must be non-negative");
  return d + alpha_f * q;
}

inline double decay_alpha_f(double alpha_f, int milestones_crossed, double factor = 0.5) {
  if (milestones_crossed < 0) fail(Errc::invalid_input, "negative milestone count");
  double a = alpha_f;
  for (int i = 0; i < milestones_crossed; ++i) a *= factor;
  return a;
}

struct QualityState {
  std::string sample_id;
  double q = 0.0;
  double d = 0.0;
  double fqs = 0.0;
  int last_updated_epoch = -1;  // -1 until the first loss observation

  friend bool operator==(const QualityState&, const QualityState&) = default;
};

// Per-fake score bookkeeping. `fqs` is recomputed from d, q and the current
// alpha_f on every mutation.
class QualityTable {
 public:
  QualityTable() = default;

  explicit QualityTable(double alpha_f) : alpha_f_(alpha_f) {}

  void add(const std::string& id, double q) {
    if (!std::isfinite(q)) fail(Errc::invalid_input, "static score for " + id + " is not finite");
    auto [it, inserted] = states_.try_emplace(id);
    if (!inserted) fail(Errc::duplicate, "sample " + id + " already scored");
    it->second.sample_id = id;
    it->second.q = q;
    refresh(it->second);
  }

  bool contains(const std::string& id) const { return states_.count(id) != 0; }

  const QualityState& at(const std::string& id) const {
    auto it = states_.find(id);
    if (it == states_.end()) fail(Errc::coverage, "no quality state for " + id);
    return it->second;
  }

  // Overwrites d; used while the model is warming up.
  void seed(const std::string& id, double s, int epoch) {
    auto& st = mutable_at(id);
    st.d = s;
    st.last_updated_epoch = epoch;
    refresh(st);
  }

  void observe(const std::string& id, double s, double gamma, bool in_hard_pool, int epoch) {
    auto& st = mutable_at(id);
    st.d = update_dynamic(st.d, s, gamma, in_hard_pool);
    if (in_hard_pool) st.last_updated_epoch = epoch;
    refresh(st);
  }

  void set_alpha_f(double alpha_f) {
    alpha_f_ = alpha_f;
    for (auto& [id, st] : states_) refresh(st);
  }

  double alpha_f() const noexcept { return alpha_f_; }
  std::size_t size() const noexcept { return states_.size(); }

  bool seeded(const std::string& id) const { return at(id).last_updated_epoch >= 0; }

  /// FQS of every sample under an explicit alpha_f, ordered by id.
  std::map<std::string, double> scores(double alpha_f) const {
    std::map<std::string, double> out;
    for (const auto& [id, st] : states_) out.emplace(id, combine_fqs(st.d, st.q, alpha_f));
    return out;
  }

  const std::map<std::string, QualityState>& states() const noexcept { return states_; }

 private:
  QualityState& mutable_at(const std::string& id) {
    auto it = states_.find(id);
    if (it == states_.end()) fail(Errc::coverage, "no quality state for " + id);
    return it->second;
  }

  void refresh(QualityState& st) const { st.fqs = combine_fqs(st.d, st.q, alpha_f_); }

  double alpha_f_ = 0.5;
  std::map<std::string, QualityState> states_;
};

}  // namespace fqc
