// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support.hpp"
#include "fqc/fqc.hpp"

using namespace fqc;
namespace t = fqc::test;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;  // 0: no runtime bound
  std::function<Verdict()> check;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <class F>
std::string code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return std::string(code_name(e.code()));
  } catch (const std::exception& e) {
    return std::string("other: ") + e.what();
  }
  return "no error";
}

double max_field_diff(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Verdict fft_oracle() {
  std::mt19937_64 rng(101);
  double fwd = 0.0, inv = 0.0, trip = 0.0;
  int fixtures = 0;
  for (std::size_t n : {4u, 8u}) {
    for (int i = 0; i < 40; ++i) {
      const std::size_t c = i % 2 ? 3 : 1;
      RasterImage img = t::random_image(rng, n, n, c);
      if (i == 0) img = RasterImage(n, n, c, 1.0);
      if (i == 1) {
        img = RasterImage(n, n, c);
        img.at(0, 0, 0) = 1.0;
      }
      const auto fast = forward_spectrum(img);
      fwd = std::max(fwd, t::max_abs_diff(fast, t::brute_force_spectrum(img)));
      inv = std::max(inv, max_field_diff(inverse_field(fast), t::brute_force_inverse(fast)));
      trip = std::max(trip, t::max_abs_diff(inverse_spectrum(fast).pixels, img.pixels));
      ++fixtures;
    }
  }
  return {fwd <= 1e-9 && inv <= 1e-9 && trip <= 1e-6,
          std::to_string(fixtures) + " fixtures, forward " + fmt("%.2e", fwd) + ", inverse " + fmt("%.2e", inv) +
              ", round trip " + fmt("%.2e", trip)};
}

Verdict freda_limits() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  int fixtures = 0;
  for (int i = 0; i < 24; ++i) {
    const std::size_t h = 2 + i * 3, w = 3 + (i * 5) % 29, c = i % 2 ? 3 : 1;
    const auto fake = t::random_image(rng, h, w, c), real = t::random_image(rng, h, w, c);
    const std::size_t full = (std::max(h, w) + 1) / 2;
    worst = std::max(worst, t::max_abs_diff(freda(fake, real, 0).pixels, fake.pixels));
    worst = std::max(worst, t::max_abs_diff(freda(fake, real, full).pixels, real.pixels));
    worst = std::max(worst, t::max_abs_diff(freda(real, real, 1 + i % 5).pixels, real.pixels));
    ++fixtures;
  }
  return {worst <= 1e-6, std::to_string(fixtures) + " fixtures, max pixel error " + fmt("%.2e", worst)};
}

Verdict energy_partition() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> D(2, 32), R(0, 17);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t h = D(rng), w = D(rng), c = i % 2 ? 3 : 1;
    const auto fr = forward_spectrum(t::random_image(rng, h, w, c));
    const auto ff = forward_spectrum(t::random_image(rng, h, w, c));
    const long r = R(rng);
    const auto fa = splice(fr, ff, build_mask(h, w, r));
    for (std::size_t ch = 0; ch < c; ++ch) {
      double got = 0.0, want = 0.0;
      for (std::size_t u = 0; u < h; ++u)
        for (std::size_t v = 0; v < w; ++v) {
          got += std::norm(fa.at(u, v, ch));
          want += std::norm((t::in_low_band(u, v, h, w, r) ? fr : ff).at(u, v, ch));
        }
      worst = std::max(worst, std::abs(got - want) / want);
    }
  }
  return {worst <= 1e-6, "100 cases, max relative error " + fmt("%.2e", worst)};
}

Verdict dynamic_hardness() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> U(0.0, 5.0), G(0.0, 1.0);
  std::bernoulli_distribution in(0.5);
  double worst = 0.0;
  int frozen = 0;
  for (int c = 0; c < 1000; ++c) {
    const double g = c % 50 == 0 ? 1.0 : c % 50 == 1 ? 0.0 : G(rng);
    const double d0 = U(rng);
    const int n = 1 + c % 30;
    double d = d0;
    std::vector<double> kept;
    for (int k = 0; k < n; ++k) {
      const double s = U(rng);
      const bool member = in(rng);
      d = update_dynamic(d, s, g, member);
      if (member)
        kept.push_back(s);
      else
        ++frozen;
    }
    double closed = std::pow(1.0 - g, static_cast<double>(kept.size())) * d0;
    for (std::size_t j = 0; j < kept.size(); ++j)
      closed += g * std::pow(1.0 - g, static_cast<double>(kept.size() - 1 - j)) * kept[j];
    worst = std::max(worst, std::abs(d - closed));
  }
  return {worst <= 1e-9, "1000 cases (" + std::to_string(frozen) + " frozen steps), max error " + fmt("%.2e", worst)};
}

Verdict schedule_trajectory() {
  const std::size_t K = 10000;
  std::map<std::string, double> q;
  for (std::size_t i = 0; i < K; ++i) q.emplace("f" + std::to_string(100000 + i), std::cos(0.01 * i));
  CurriculumSession s(FqsConfig{}, PacingConfig{}, q);
  s.prime_dynamic(0.0);
  while (!s.finished()) {
    const int e = s.epoch();
    s.next_pool();
    s.submit_losses(e, {});
  }
  const auto rows = s.schedule();
  if (rows.size() != 20) return {false, "expected 20 rows, got " + std::to_string(rows.size())};
  std::size_t k = K;
  int halvings = 0;
  double alpha_err = 0.0, lr_err = 0.0;
  bool k_ok = true;
  for (int e = 0; e < 20; ++e) {
    if (e == 2 || e == 5 || e == 8 || e == 12 || e == 15) {
      k = std::max<std::size_t>(1, k * 9 / 10);
      ++halvings;
    }
    k_ok = k_ok && rows[e].k == k;
    alpha_err = std::max(alpha_err, std::abs(rows[e].alpha_f - std::ldexp(0.5, -halvings)));
    lr_err = std::max(lr_err, std::abs(rows[e].lr - 0.1 * 0.5 * (1.0 + std::cos(std::numbers::pi * e / 20.0))));
  }
  return {k_ok && alpha_err <= 1e-12 && lr_err <= 1e-12,
          std::string("k ") + (k_ok ? "exact" : "MISMATCH") + ", alpha_f error " + fmt("%.1e", alpha_err) +
              ", lr error " + fmt("%.1e", lr_err)};
}

Verdict selection_brute_force() {
  std::mt19937_64 rng(505);
  int maps = 0;
  for (std::size_t n : {1u, 7u, 100u, 1000u, 10000u, 100000u}) {
    for (int distinct : {1, 4, 1 << 30}) {
      std::uniform_int_distribution<int> D(0, distinct - 1);
      std::map<std::string, double> scores;
      for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "x%06zu", (i * 7919) % 1000003);
        scores.emplace(id, D(rng) / 8.0);
      }
      std::vector<std::pair<double, std::string>> desc, asc;
      for (const auto& [id, s] : scores) {
        desc.push_back({-s, id});
        asc.push_back({s, id});
      }
      std::sort(desc.begin(), desc.end());
      std::sort(asc.begin(), asc.end());
      for (std::size_t k : {std::size_t{0}, std::size_t{1}, n / 2, n}) {
        IdSet want_hard;
        for (std::size_t i = 0; i < k; ++i) want_hard.push_back(desc[i].second);
        std::sort(want_hard.begin(), want_hard.end());
        const IdSet hard = select_hard_pool(scores, k);
        if (hard != want_hard) return {false, "top-k mismatch at n=" + std::to_string(n) + " k=" + std::to_string(k)};
        const std::size_t e = std::min<std::size_t>(1000, n);
        IdSet want_easy;
        for (const auto& [s, id] : asc) {
          if (want_easy.size() == e) break;
          if (!std::binary_search(hard.begin(), hard.end(), id)) want_easy.push_back(id);
        }
        std::sort(want_easy.begin(), want_easy.end());
        if (select_easy_pool(scores, e, hard) != want_easy)
          return {false, "bottom-E mismatch at n=" + std::to_string(n) + " k=" + std::to_string(k)};
      }
      ++maps;
    }
  }
  return {true, std::to_string(maps) + " score maps up to 100000 ids, tie-heavy included"};
}

Verdict end_to_end() {
  t::TempDir dir("fqc-accept");
  const auto ds = make_synthetic_dataset(dir.path(), {.pairs = 100});
  const auto cfg = load_config(ds.config);
  const auto manifest = load_manifest(cfg.manifest);
  const auto emb = load_embeddings(cfg.embeddings, manifest);
  if (manifest.records.size() != 200) return {false, "synthetic manifest is not 200 samples"};
  const auto res = run_curriculum(manifest, emb, cfg);
  int epochs = 0;
  double min_gap = INFINITY;
  for (const auto& row : res.report.rows) {
    if (row.phase != Phase::curriculum) continue;
    ++epochs;
    min_gap = std::min(min_gap, row.mean_fqs_hard - row.mean_fqs_easy);
  }
  std::vector<double> eval(cfg.pacing.warmup_epochs(), 0.0);
  std::vector<std::size_t> count(eval.size(), 0);
  for (const auto& r : res.losses)
    if (r.epoch < cfg.pacing.warmup_epochs()) {
      eval[r.epoch] += r.loss;
      ++count[r.epoch];
    }
  bool decreasing = true;
  std::string trace;
  for (std::size_t e = 0; e < eval.size(); ++e) {
    eval[e] /= static_cast<double>(count[e]);
    const double train = res.report.rows[e].mean_train_loss;
    if (e > 0)
      decreasing = decreasing && eval[e] < eval[e - 1] && train < res.report.rows[e - 1].mean_train_loss;
    trace += (e ? " -> " : "") + fmt("%.4f", train);
  }
  return {epochs > 0 && min_gap > 0.0 && decreasing,
          std::to_string(epochs) + " curriculum epochs, min FQS(H)-FQS(E) gap " + fmt("%.4f", min_gap) +
              ", warm-up train loss " + trace};
}

Verdict determinism() {
  t::TempDir dir("fqc-accept");
  const auto ds = make_synthetic_dataset(dir / "data", {.pairs = 100});
  auto cfg = load_config(ds.config);
  cfg.out_dir = dir / "a";
  cmd_run(cfg);
  cfg.out_dir = dir / "b";
  cmd_run(cfg);
  const auto a = run_outputs(dir / "a"), b = run_outputs(dir / "b");
  const bool same_report = t::read_file(a.report) == t::read_file(b.report);
  const bool same_schedule = t::read_file(a.schedule) == t::read_file(b.schedule);
  const bool same_rest = t::read_file(a.fqs) == t::read_file(b.fqs) && t::read_file(a.losses) == t::read_file(b.losses);
  return {same_report && same_schedule && same_rest && !t::read_file(a.report).empty(),
          std::string("report ") + (same_report ? "identical" : "DIFFERS") + ", schedule " +
              (same_schedule ? "identical" : "DIFFERS") + ", fqs/losses " + (same_rest ? "identical" : "DIFFER")};
}

Verdict io_round_trips() {
  t::TempDir dir("fqc-accept");
  const auto ds = make_synthetic_dataset(dir / "data", {.pairs = 20});
  auto cfg = load_config(ds.config);
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  const auto m1 = load_manifest(ds.manifest);
  save_manifest(dir / "m2.jsonl", m1);
  auto m2 = load_manifest(dir / "m2.jsonl", {.check_paths = false});
  expect(m1.records == m2.records && serialize_manifest(m1) == serialize_manifest(m2), "manifest");

  const auto e1 = read_embeddings(ds.embeddings);
  save_embeddings(dir / "e2.jsonl", e1);
  save_embeddings(dir / "e2.bin", e1, true);
  expect(serialize_embeddings(read_embeddings(dir / "e2.jsonl")) == serialize_embeddings(e1), "embeddings text");
  expect(serialize_embeddings(read_embeddings(dir / "e2.bin")) == serialize_embeddings(e1), "embeddings binary");

  cfg.out_dir = dir / "run";
  const auto res = cmd_run(cfg);
  const auto out = run_outputs(cfg.out_dir);
  const auto l1 = read_loss_log(out.losses);
  std::string relog;
  for (const auto& r : l1) relog += serialize_loss_record(r);
  expect(l1 == res.losses && relog == t::read_file(out.losses), "loss log");
  auto rep = read_report(out.report);
  expect(serialize_report(rep) == t::read_file(out.report), "report");
  expect(serialize_fqs_table(read_fqs_table(out.fqs)) == t::read_file(out.fqs), "fqs table");
  expect(serialize_schedule(read_schedule(out.schedule)) == t::read_file(out.schedule), "schedule");

  const std::string header = "{\"format\":\"fqc-manifest\",\"version\":1}\n";
  auto rec = [](const std::string& id, const char* label, const std::string& pair) {
    return "{\"sample_id\":\"" + id + "\",\"label\":\"" + label + "\",\"image_path\":\"x.png\"" +
           (pair.empty() ? std::string() : ",\"paired_real_id\":\"" + pair + "\"") + "}\n";
  };
  struct Case {
    const char* name;
    std::string text;
    const char* code;
  };
  const std::vector<Case> cases{
      {"dangling pair", header + rec("f", "FAKE", "r9") + rec("r", "REAL", ""), "E_REFERENCE"},
      {"unpaired fake", header + rec("f", "FAKE", "") + rec("r", "REAL", ""), "E_REFERENCE"},
      {"fake paired to fake", header + rec("f", "FAKE", "g") + rec("g", "FAKE", "r") + rec("r", "REAL", ""),
       "E_REFERENCE"},
      {"real with pair", header + rec("r", "REAL", "s") + rec("s", "REAL", ""), "E_REFERENCE"},
      {"duplicate id", header + rec("r", "REAL", "") + rec("r", "REAL", ""), "E_DUPLICATE"},
      {"malformed line", header + "{oops\n", "E_PARSE"},
  };
  for (const auto& c : cases) {
    t::write_file(dir / "bad.jsonl", c.text);
    const auto got = code_of([&] { load_manifest(dir / "bad.jsonl", {.check_paths = false}); });
    expect(got == c.code, std::string(c.name) + " gave " + got);
  }
  IdSet ids{"fake_0000", "no_such_id"};
  expect(code_of([&] { load_embeddings(ds.embeddings, ids); }) == "E_COVERAGE", "missing embedding");
  LossLog log(dir / "l.jsonl");
  log.append({{0, "a", 0.5, 0.1}});
  expect(code_of([&] { log.append({{0, "a", 0.4, 0.1}}); }) == "E_DUPLICATE", "duplicate loss");
  expect(code_of([&] { log.append({{0, "b", 0.4, 0.09}}); }) == "E_SCHEDULE_CONSISTENCY", "lr consistency");

  std::string detail = "manifest, embeddings (text+binary), loss log, report, fqs, schedule; " +
                       std::to_string(cases.size() + 3) + " rejection cases";
  if (!failures.empty()) {
    detail = "failed:";
    for (const auto& f : failures) detail += " [" + f + "]";
  }
  return {failures.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"FFT oracle: fast transforms vs direct DFT <= 1e-9, round trip <= 1e-6", 5.0, fft_oracle},
      {"FreDA limit cases within 1e-6 on >= 20 fixtures", 10.0, freda_limits},
      {"Spectral energy partition within 1e-6 relative", 0.0, energy_partition},
      {"Dynamic-hardness recursion vs unrolled closed form within 1e-9", 0.0, dynamic_hardness},
      {"Schedule trajectory k / alpha_f / lr under default configuration", 1.0, schedule_trajectory},
      {"Top-k / bottom-E selection equals brute-force sort", 0.0, selection_brute_force},
      {"End-to-end curriculum property on 200-sample synthetic set", 30.0, end_to_end},
      {"Determinism: two runs give byte-identical report and schedule", 0.0, determinism},
      {"I/O round trips and stable rejection codes", 0.0, io_round_trips},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      v.ok = false;
      v.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    std::printf("[%s] %s (%.3f s) %s\n", v.ok ? "PASS" : "FAIL", c.name.c_str(), secs, v.detail.c_str());
    failed += !v.ok;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
