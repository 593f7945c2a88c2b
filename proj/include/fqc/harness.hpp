#pragma once

// Self-contained curriculum run: a logistic-regression stand-in for the
// detector supplies per-sample losses, a cosine schedule supplies the
// learning rate, and the session supplies each epoch's pool.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fqc/config.hpp"
#include "fqc/dataio.hpp"
#include "fqc/freda.hpp"
#include "fqc/image_io.hpp"
#include "fqc/lr_schedule.hpp"
#include "fqc/pacing.hpp"
#include "fqc/session.hpp"

namespace fqc {

// ---------------------------------------------------------------------------
// Toy detector
// ---------------------------------------------------------------------------

/// Logistic regression; the last weight is the bias.
struct ToyModel {
  std::vector<double> weights;
  std::size_t step_count = 0;

  ToyModel() = default;
  explicit ToyModel(std::size_t feature_dim) : weights(feature_dim + 1, 0.0) {}

  std::size_t feature_dim() const noexcept { return weights.size() - 1; }

  double logit(std::span<const double> x) const {
    if (x.size() != feature_dim())
      fail(Errc::dimension, "feature dim " + std::to_string(x.size()) + " vs model dim " + std::to_string(feature_dim()));
    double z = weights.back();
    for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
    return z;
  }

  friend bool operator==(const ToyModel&, const ToyModel&) = default;
};

struct Example {
  std::vector<double> features;
  Label label = Label::real;  // FAKE is the positive class
};

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Binary cross-entropy of the model's fake probability.
inline double example_loss(const ToyModel& m, const Example& ex) {
  const double z = m.logit(ex.features);
  return ex.label == Label::fake ? softplus(-z) : softplus(z);
}

/// One gradient step on the batch mean loss. Returns the updated model and
/// the per-sample losses evaluated before the step.
inline std::pair<ToyModel, std::vector<double>> toy_step(const ToyModel& model, std::span<const Example> batch,
                                                         double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail(Errc::invalid_schedule, "learning rate must be non-negative");
  std::vector<double> losses;
  losses.reserve(batch.size());
  std::vector<double> grad(model.weights.size(), 0.0);
  for (const auto& ex : batch) {
    const double z = model.logit(ex.features);
    const double y = ex.label == Label::fake ? 1.0 : 0.0;
    losses.push_back(y == 1.0 ? softplus(-z) : softplus(z));
    const double g = sigmoid(z) - y;
    for (std::size_t i = 0; i < ex.features.size(); ++i) grad[i] += g * ex.features[i];
    grad.back() += g;
  }
  ToyModel next = model;
  if (!batch.empty()) {
    const double scale = lr / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < grad.size(); ++i) next.weights[i] -= scale * grad[i];
  }
  ++next.step_count;
  return {std::move(next), std::move(losses)};
}

/// Standard normal draw from a hash (Box-Muller), identical on every platform.
inline double hash_normal(std::uint64_t h) {
  const double u1 = hash_unit(splitmix64(h));
  const double u2 = hash_unit(splitmix64(h ^ 0x5bd1e9955bd1e995ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct EpochRow {
  int epoch = 0;
  Phase phase = Phase::warmup;
  std::size_t k = 0;
  double alpha_f = 0.0;
  double lr = 0.0;
  std::size_t hard_count = 0;
  std::size_t easy_count = 0;
  std::size_t pool_fakes = 0;
  std::size_t pool_reals = 0;
  double mean_loss_hard = 0.0;  // evaluated with the parameters from the end of the previous epoch
  double mean_loss_easy = 0.0;
  double mean_loss_real = 0.0;
  double mean_fqs_hard = 0.0;
  double mean_fqs_easy = 0.0;
  double mean_train_loss = 0.0;  // mean mini-batch loss during the epoch

  friend bool operator==(const EpochRow&, const EpochRow&) = default;
};

struct TrainingReport {
  std::uint64_t seed = 0;
  int total_epochs = 0;
  std::vector<EpochRow> rows;
  std::vector<QualityState> fqs;  // final table, ordered by sample_id

  friend bool operator==(const TrainingReport&, const TrainingReport&) = default;
};

inline std::string serialize_report(const TrainingReport& r) {
  std::string out = json{{"format", "fqc-report"}, {"version", kFormatVersion}, {"seed", r.seed},
                         {"total_epochs", r.total_epochs}}
                        .dump() +
                    "\n";
  for (const auto& e : r.rows)
    out += json{{"epoch", e.epoch},
                {"phase", phase_name(e.phase)},
                {"k", e.k},
                {"alpha_f", e.alpha_f},
                {"lr", e.lr},
                {"hard_count", e.hard_count},
                {"easy_count", e.easy_count},
                {"pool_fakes", e.pool_fakes},
                {"pool_reals", e.pool_reals},
                {"mean_loss_hard", e.mean_loss_hard},
                {"mean_loss_easy", e.mean_loss_easy},
                {"mean_loss_real", e.mean_loss_real},
                {"mean_fqs_hard", e.mean_fqs_hard},
                {"mean_fqs_easy", e.mean_fqs_easy},
                {"mean_train_loss", e.mean_train_loss}}
               .dump() +
           "\n";
  return out;
}

inline std::string serialize_fqs_table(const std::vector<QualityState>& table) {
  std::string out = json{{"format", "fqc-fqs"}, {"version", kFormatVersion}, {"count", table.size()}}.dump() + "\n";
  for (const auto& s : table)
    out += json{{"sample_id", s.sample_id}, {"q", s.q}, {"d", s.d}, {"fqs", s.fqs},
                {"last_updated_epoch", s.last_updated_epoch}}
               .dump() +
           "\n";
  return out;
}

inline TrainingReport read_report(const fs::path& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) fail(Errc::parse, path.string() + ": empty report");
  const json header = detail::parse_line(lines.front().second, path, lines.front().first);
  detail::check_header(header, "fqc-report", path);
  TrainingReport r;
  r.seed = detail::field<std::uint64_t>(header, "seed", path, 1);
  r.total_epochs = detail::field<int>(header, "total_epochs", path, 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [ln, text] = lines[i];
    const json j = detail::parse_line(text, path, ln);
    EpochRow e;
    e.epoch = detail::field<int>(j, "epoch", path, ln);
    const auto phase = detail::field<std::string>(j, "phase", path, ln);
    if (phase != "warmup" && phase != "curriculum") fail(Errc::parse, detail::where(path, ln) + ": unknown phase");
    e.phase = phase == "warmup" ? Phase::warmup : Phase::curriculum;
    e.k = detail::field<std::size_t>(j, "k", path, ln);
    e.alpha_f = detail::field<double>(j, "alpha_f", path, ln);
    e.lr = detail::field<double>(j, "lr", path, ln);
    e.hard_count = detail::field<std::size_t>(j, "hard_count", path, ln);
    e.easy_count = detail::field<std::size_t>(j, "easy_count", path, ln);
    e.pool_fakes = detail::field<std::size_t>(j, "pool_fakes", path, ln);
    e.pool_reals = detail::field<std::size_t>(j, "pool_reals", path, ln);
    e.mean_loss_hard = detail::field<double>(j, "mean_loss_hard", path, ln);
    e.mean_loss_easy = detail::field<double>(j, "mean_loss_easy", path, ln);
    e.mean_loss_real = detail::field<double>(j, "mean_loss_real", path, ln);
    e.mean_fqs_hard = detail::field<double>(j, "mean_fqs_hard", path, ln);
    e.mean_fqs_easy = detail::field<double>(j, "mean_fqs_easy", path, ln);
    e.mean_train_loss = detail::field<double>(j, "mean_train_loss", path, ln);
    if (e.epoch != static_cast<int>(r.rows.size()))
      fail(Errc::parse, detail::where(path, ln) + ": rows must be consecutive epochs starting at 0");
    r.rows.push_back(e);
  }
  return r;
}

inline std::vector<QualityState> read_fqs_table(const fs::path& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) fail(Errc::parse, path.string() + ": empty FQS table");
  const json header = detail::parse_line(lines.front().second, path, lines.front().first);
  detail::check_header(header, "fqc-fqs", path);
  std::vector<QualityState> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [ln, text] = lines[i];
    const json j = detail::parse_line(text, path, ln);
    out.push_back({detail::field<std::string>(j, "sample_id", path, ln), detail::field<double>(j, "q", path, ln),
                   detail::field<double>(j, "d", path, ln), detail::field<double>(j, "fqs", path, ln),
                   detail::field<int>(j, "last_updated_epoch", path, ln)});
  }
  if (out.size() != detail::field<std::size_t>(header, "count", path, 1))
    fail(Errc::parse, path.string() + ": row count does not match header");
  return out;
}

/// CSV series for external plotting, one row per epoch.
inline std::string report_csv(const TrainingReport& r) {
  std::string out =
      "epoch,phase,k,alpha_f,lr,hard_count,easy_count,pool_fakes,pool_reals,mean_loss_hard,mean_loss_easy,"
      "mean_loss_real,mean_fqs_hard,mean_fqs_easy,mean_train_loss\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& e : r.rows) {
    out += std::to_string(e.epoch) + "," + std::string(phase_name(e.phase)) + "," + std::to_string(e.k) + "," +
           num(e.alpha_f) + "," + num(e.lr) + "," + std::to_string(e.hard_count) + "," + std::to_string(e.easy_count) +
           "," + std::to_string(e.pool_fakes) + "," + std::to_string(e.pool_reals) + "," + num(e.mean_loss_hard) + "," +
           num(e.mean_loss_easy) + "," + num(e.mean_loss_real) + "," + num(e.mean_fqs_hard) + "," +
           num(e.mean_fqs_easy) + "," + num(e.mean_train_loss) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curriculum run
// ---------------------------------------------------------------------------

struct RunResult {
  TrainingReport report;
  std::vector<ScheduleRow> schedule;
  std::vector<PoolPlan> plans;
  std::vector<LossRecord> losses;  // every logged record, epoch-major, id-sorted within an epoch
};

/// Static score of every fake against its paired real.
inline std::map<std::string, double> static_scores(const Manifest& manifest, const EmbeddingTable& emb) {
  std::map<std::string, double> q;
  for (const auto& r : manifest.records) {
    if (r.label != Label::fake) continue;
    auto f = emb.find(r.sample_id);
    auto p = emb.find(*r.paired_real_id);
    if (f == emb.end()) fail(Errc::coverage, "no embedding for fake '" + r.sample_id + "'");
    if (p == emb.end()) fail(Errc::coverage, "no embedding for real '" + *r.paired_real_id + "'");
    q.emplace(r.sample_id, static_score(f->second, p->second));
  }
  return q;
}

namespace detail {

class FeatureSource {
 public:
  FeatureSource(const Manifest& manifest, const EmbeddingTable& emb, const RunConfig& cfg, std::size_t dim)
      : manifest_(manifest), emb_(emb), cfg_(cfg), dim_(dim) {}

  std::vector<double> operator()(const PoolEntry& e) {
    if (!e.augmented) return embedding(e.source_id);
    if (cfg_.harness.feature_hook == FeatureHook::source_embedding) return embedding(e.source_id);
    auto it = augmented_.find(e.source_id);
    if (it != augmented_.end()) return it->second;
    const auto* fake = manifest_.find(e.source_id);
    const auto* real = manifest_.find(*fake->paired_real_id);
    const RasterImage fi = read_image(manifest_.resolve(*fake));
    const RasterImage ri = read_image(manifest_.resolve(*real));
    const std::size_t r = cfg_.freda_radius.value_or(default_radius(fi.height, fi.width));
    auto feats = spectral_band_features(freda(fi, ri, r), dim_);
    return augmented_.emplace(e.source_id, std::move(feats)).first->second;
  }

 private:
  std::vector<double> embedding(const std::string& id) const {
    auto it = emb_.find(id);
    if (it == emb_.end()) fail(Errc::coverage, "no embedding for '" + id + "'");
    return {it->second.values().begin(), it->second.values().end()};
  }

  const Manifest& manifest_;
  const EmbeddingTable& emb_;
  const RunConfig& cfg_;
  std::size_t dim_;
  std::map<std::string, std::vector<double>> augmented_;  // FreDA output is fixed per source
};

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace detail

/// Runs warm-up, scoring, pacing, FreDA routing, and toy training end to
/// end. Every manifest sample needs an embedding. When `log` is given every
/// epoch's loss records are appended to it.
inline RunResult run_curriculum(const Manifest& manifest, const EmbeddingTable& emb, const RunConfig& cfg,
                                LossLog* log = nullptr) {
  cfg.validate();
  const IdSet real_ids = manifest.ids(Label::real);
  const auto pairs = manifest.pairs();
  if (real_ids.empty()) fail(Errc::config, "manifest has no real samples");
  for (const auto& r : manifest.records)
    if (!emb.count(r.sample_id)) fail(Errc::coverage, "no embedding for '" + r.sample_id + "'");
  const std::size_t dim = emb.begin()->second.dim();

  CurriculumSession session(cfg.fqs, cfg.pacing, static_scores(manifest, emb), cfg.seed);
  detail::FeatureSource features(manifest, emb, cfg, dim);

  ToyModel model(dim);
  for (std::size_t i = 0; i < model.weights.size(); ++i)
    model.weights[i] = cfg.harness.init_scale * hash_normal(splitmix64(cfg.seed) ^ (0x77656967ULL + i));

  const std::size_t reals_per_batch = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(cfg.harness.batch_size * cfg.harness.real_fraction)), 1,
      cfg.harness.batch_size - 1);
  const std::size_t fakes_per_batch = cfg.harness.batch_size - reals_per_batch;

  RunResult result;
  result.report.seed = cfg.seed;
  result.report.total_epochs = cfg.pacing.total_epochs;

  for (int t = 0; t < cfg.pacing.total_epochs; ++t) {
    const PoolPlan& plan = session.next_pool();
    const double lr = cosine_lr(t, cfg.pacing.total_epochs, cfg.fqs.lr_max);
    auto augment = [](const std::string& fake_id, const std::string&) {
      return PoolEntry{augmented_id(fake_id), fake_id, Label::fake, true};
    };
    const EpochPool pool = build_epoch_pool(plan, pairs, real_ids, augment, cfg.seed);

    std::vector<Example> fake_ex, real_ex;
    for (const auto& e : pool.fakes) fake_ex.push_back({features(e), Label::fake});
    for (const auto& e : pool.reals) real_ex.push_back({features(e), Label::real});

    // Per-sample losses under the parameters the epoch starts from.
    std::vector<LossRecord> records;
    std::vector<double> hard_losses, easy_losses, real_losses;
    for (std::size_t i = 0; i < pool.fakes.size(); ++i) {
      const double l = example_loss(model, fake_ex[i]);
      records.push_back({t, pool.fakes[i].id, l, lr});
      (pool.fakes[i].augmented ? easy_losses : hard_losses).push_back(l);
    }
    for (std::size_t i = 0; i < pool.reals.size(); ++i) {
      const double l = example_loss(model, real_ex[i]);
      records.push_back({t, pool.reals[i].id, l, lr});
      real_losses.push_back(l);
    }
    std::sort(records.begin(), records.end(),
              [](const LossRecord& a, const LossRecord& b) { return a.sample_id < b.sample_id; });
    if (log) log->append(records);

    EpochRow row;
    row.epoch = t;
    row.phase = plan.phase;
    row.k = plan.k_current;
    row.alpha_f = plan.alpha_f_current;
    row.lr = lr;
    row.hard_count = plan.hard_ids.size();
    row.easy_count = plan.easy_ids.size();
    row.pool_fakes = pool.fakes.size();
    row.pool_reals = pool.reals.size();
    row.mean_loss_hard = detail::mean(hard_losses);
    row.mean_loss_easy = detail::mean(easy_losses);
    row.mean_loss_real = detail::mean(real_losses);
    row.mean_fqs_hard = plan.mean_fqs_hard;
    row.mean_fqs_easy = plan.mean_fqs_easy;

    session.submit_losses(t, records);

    // Mini-batches: consecutive fakes plus reals drawn cyclically.
    std::vector<double> batch_losses;
    std::size_t real_cursor = 0;
    for (std::size_t start = 0; start < fake_ex.size(); start += fakes_per_batch) {
      std::vector<Example> batch;
      const std::size_t end = std::min(fake_ex.size(), start + fakes_per_batch);
      for (std::size_t i = start; i < end; ++i) batch.push_back(fake_ex[i]);
      for (std::size_t i = 0; i < reals_per_batch; ++i) batch.push_back(real_ex[real_cursor++ % real_ex.size()]);
      auto [next, losses] = toy_step(model, batch, lr);
      model = std::move(next);
      batch_losses.push_back(detail::mean(losses));
    }
    row.mean_train_loss = detail::mean(batch_losses);

    result.report.rows.push_back(row);
    result.losses.insert(result.losses.end(), records.begin(), records.end());
  }
  result.schedule = session.schedule();
  result.plans = session.plans();
  result.report.fqs = session.close();
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic dataset
// ---------------------------------------------------------------------------

struct SynthOptions {
  std::size_t pairs = 100;
  std::size_t dim = 8;
  std::size_t image_size = 16;
  double hard_fraction = 0.5;
  std::uint64_t seed = 7;
};

struct SynthDataset {
  fs::path manifest;
  fs::path embeddings;
  fs::path config;
  IdSet hard_fakes;  // near-real embeddings
  IdSet easy_fakes;  // far from their reals
};

/// Writes images, manifest, embeddings, and a default config under `dir`.
/// Hard fakes sit close to their paired reals in embedding space and carry
/// a small shift along a shared "fake" direction; easy fakes are far from
/// their reals and strongly shifted.
inline SynthDataset make_synthetic_dataset(const fs::path& dir, const SynthOptions& opt) {
  if (opt.pairs < 2 || opt.dim < 2 || opt.image_size < 4)
    fail(Errc::invalid_input, "synthetic dataset needs >= 2 pairs, dim >= 2, image_size >= 4");
  fs::create_directories(dir / "images");
  std::uint64_t counter = splitmix64(opt.seed);
  auto normal = [&] { return hash_normal(counter = splitmix64(counter)); };
  auto unit = [&] { return hash_unit(counter = splitmix64(counter)); };

  const std::size_t n_hard = static_cast<std::size_t>(std::lround(opt.hard_fraction * opt.pairs));
  Manifest manifest;
  manifest.base_dir = dir;
  EmbeddingTable emb;
  SynthDataset out;
  const std::size_t S = opt.image_size;

  auto smooth = [&](RasterImage& img) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double fx = 1.0 + 2.0 * unit(), fy = 1.0 + 2.0 * unit();
      const double px = 2 * std::numbers::pi * unit(), py = 2 * std::numbers::pi * unit();
      for (std::size_t h = 0; h < S; ++h)
        for (std::size_t w = 0; w < S; ++w)
          img.at(h, w, c) = 0.5 + 0.15 * std::sin(2 * std::numbers::pi * fx * h / S + px) +
                            0.15 * std::cos(2 * std::numbers::pi * fy * w / S + py);
    }
  };
  auto add_noise = [&](RasterImage& img, double amp) {
    for (auto& p : img.pixels) p = std::clamp(p + amp * (2.0 * unit() - 1.0), 0.0, 1.0);
  };

  char name[32];
  for (std::size_t i = 0; i < opt.pairs; ++i) {
    std::snprintf(name, sizeof name, "real_%04zu", i);
    const std::string rid = name;
    std::snprintf(name, sizeof name, "fake_%04zu", i);
    const std::string fid = name;
    const bool hard = i < n_hard;

    std::vector<double> r(opt.dim), f(opt.dim);
    double norm = 0.0;
    for (auto& v : r) {
      v = normal();
      norm += v * v;
    }
    for (auto& v : r) v /= std::sqrt(norm);
    r[0] = 0.1 * normal();
    for (std::size_t k = 0; k < opt.dim; ++k)
      f[k] = hard ? r[k] + 0.05 * normal() : 0.3 * r[k] + 0.5 * normal();
    f[0] += hard ? 0.2 : 1.5;
    emb.emplace(rid, Embedding(r));
    emb.emplace(fid, Embedding(f));

    RasterImage real_img(S, S, 3), fake_img(S, S, 3);
    smooth(real_img);
    if (hard) {
      fake_img = real_img;
      add_noise(fake_img, 0.04);
    } else {
      smooth(fake_img);
      add_noise(fake_img, 0.15);
    }
    write_image(dir / "images" / (rid + ".png"), real_img);
    write_image(dir / "images" / (fid + ".png"), fake_img);
    manifest.records.push_back({rid, Label::real, "images/" + rid + ".png", std::nullopt, "synthetic"});
    manifest.records.push_back({fid, Label::fake, "images/" + fid + ".png", rid, hard ? "synthetic-hard" : "synthetic-easy"});
    (hard ? out.hard_fakes : out.easy_fakes).push_back(fid);
  }
  validate_manifest(manifest);

  out.manifest = dir / "manifest.jsonl";
  out.embeddings = dir / "embeddings.jsonl";
  out.config = dir / "config.json";
  save_manifest(out.manifest, manifest);
  save_embeddings(out.embeddings, emb);
  RunConfig cfg;
  cfg.seed = opt.seed;
  cfg.manifest = "manifest.jsonl";
  cfg.embeddings = "embeddings.jsonl";
  cfg.out_dir = "run";
  detail::write_text(out.config, config_to_json(cfg).dump(2) + "\n");
  return out;
}

}  // namespace fqc
