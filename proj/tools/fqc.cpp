// fqc: forgery-quality curriculum pipeline.
//
//   fqc score-static --manifest m.jsonl --embeddings e.jsonl --out q.jsonl
//   fqc freda --pairs pairs.tsv [--radius R] --out-dir dir
//   fqc schedule --config c.json --scores q.jsonl [--losses log.jsonl] --out dump.jsonl
//   fqc run --config c.json [--seed N] [--out-dir dir]
//   fqc report --report report.jsonl [--out series.csv]
//   fqc synth --out-dir dir [--pairs N] [--dim D] [--size S] [--seed N]

#include <CLI11.hpp>

#include <iostream>

#include "fqc/fqc.hpp"

namespace {

void write_or_print(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    fqc::detail::write_text(out, text);
}

// Applies command-line overrides on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> radius;
  std::optional<std::string> out_dir;
  std::optional<int> total_epochs;
  std::optional<std::string> selection;

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "Override the RNG seed");
    app->add_option("--radius", radius, "Override the FreDA frequency threshold");
    app->add_option("--out-dir", out_dir, "Override paths.out_dir");
    app->add_option("--epochs", total_epochs, "Override pacing.total_epochs");
    app->add_option("--selection", selection, "Override pacing.selection (top_k|softmax)");
  }

  fqc::RunConfig apply(const std::string& config_path) const {
    fqc::json j;
    {
      std::ifstream in(config_path);
      if (!in) fqc::fail(fqc::Errc::io, "cannot open config " + config_path);
      try {
        j = fqc::json::parse(in);
      } catch (const fqc::json::exception& e) {
        fqc::fail(fqc::Errc::config, config_path + ": " + e.what());
      }
    }
    if (seed) j["seed"] = *seed;
    if (radius) j["freda"]["radius"] = *radius;
    if (total_epochs) j["pacing"]["total_epochs"] = *total_epochs;
    if (selection) j["pacing"]["selection"] = *selection;
    fqc::RunConfig cfg = fqc::parse_config(j, std::filesystem::path(config_path).parent_path());
    if (out_dir) cfg.out_dir = *out_dir;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forgery-quality curriculum pipeline: scoring, FreDA augmentation, pacing, toy training"};
  app.require_subcommand(1);

  std::string manifest, embeddings, out, pairs, out_dir, config, scores, losses, report, fqs_table;
  std::optional<std::size_t> radius;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  fqc::SynthOptions synth;
  Overrides schedule_over, run_over;

  auto* score = app.add_subcommand("score-static", "Write the static score q of every fake");
  score->add_option("--manifest", manifest, "Manifest (JSONL)")->required();
  score->add_option("--embeddings", embeddings, "Embeddings (JSONL or binary)")->required();
  score->add_option("--out", out, "Output score table")->required();

  auto* freda = app.add_subcommand("freda", "Frequency-splice fake/real pairs");
  freda->add_option("--pairs", pairs, "Pair list (TSV)")->required();
  freda->add_option("--radius", radius, "Frequency threshold r (default floor(min(H,W)/16))");
  freda->add_option("--out-dir", out_dir, "Output directory")->required();
  freda->add_option("--provenance", out, "Provenance log (default <out-dir>/provenance.jsonl)");
  freda->add_option("--threads", threads, "Worker threads");

  auto* schedule = app.add_subcommand("schedule", "Dry-run the pacing schedule");
  schedule->add_option("--config", config, "Run config (JSON)")->required();
  schedule->add_option("--scores", scores, "Static score table from score-static")->required();
  schedule->add_option("--losses", losses, "Recorded loss log to replay");
  schedule->add_option("--out", out, "Schedule dump (default stdout)");
  schedule_over.add_to(schedule);

  auto* run = app.add_subcommand("run", "Full curriculum run with the toy detector");
  run->add_option("--config", config, "Run config (JSON)")->required();
  run_over.add_to(run);

  auto* rep = app.add_subcommand("report", "Emit CSV series from a run report or FQS table");
  auto* rep_opt = rep->add_option("--report", report, "report.jsonl from a run");
  rep->add_option("--fqs", fqs_table, "fqs.jsonl from a run")->excludes(rep_opt);
  rep->add_option("--out", out, "CSV output (default stdout)");

  auto* syn = app.add_subcommand("synth", "Generate a synthetic dataset and default config");
  syn->add_option("--out-dir", out_dir, "Output directory")->required();
  syn->add_option("--pairs", synth.pairs, "Number of fake/real pairs");
  syn->add_option("--dim", synth.dim, "Embedding dimension");
  syn->add_option("--size", synth.image_size, "Image side length");
  syn->add_option("--hard-fraction", synth.hard_fraction, "Share of near-real fakes");
  syn->add_option("--seed", synth.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[E_USAGE]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (score->parsed()) {
      const auto rows = fqc::cmd_score_static(manifest, embeddings, out);
      std::cerr << "scored " << rows.size() << " fakes -> " << out << "\n";
    } else if (freda->parsed()) {
      const auto prov = fqc::cmd_freda(pairs, radius, out_dir,
                                       out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out), threads);
      std::cerr << "augmented " << prov.size() << " pairs -> " << out_dir << "\n";
    } else if (schedule->parsed()) {
      const auto cfg = schedule_over.apply(config);
      const auto rows = fqc::cmd_schedule(
          cfg, scores, losses.empty() ? std::nullopt : std::optional<std::filesystem::path>(losses), std::nullopt);
      write_or_print(fqc::serialize_schedule(rows), out);
    } else if (run->parsed()) {
      const auto cfg = run_over.apply(config);
      const auto result = fqc::cmd_run(cfg);
      std::cerr << "ran " << result.report.rows.size() << " epochs -> " << cfg.out_dir.string() << "\n";
    } else if (rep->parsed()) {
      if (report.empty() == fqs_table.empty()) fqc::fail(fqc::Errc::invalid_input, "pass exactly one of --report, --fqs");
      write_or_print(report.empty() ? fqc::cmd_report_fqs(fqs_table) : fqc::cmd_report(report), out);
    } else if (syn->parsed()) {
      const auto ds = fqc::make_synthetic_dataset(out_dir, synth);
      std::cerr << "wrote " << ds.manifest.string() << ", " << ds.embeddings.string() << ", " << ds.config.string()
                << "\n";
    }
  } catch (const fqc::Error& e) {
    std::cerr << e.diagnostic() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
