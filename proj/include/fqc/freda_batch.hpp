#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fqc/dataio.hpp"
#include "fqc/freda.hpp"
#include "fqc/image_io.hpp"

namespace fqc {

struct FredaJob {
  std::string src_id;
  fs::path fake_path;
  fs::path real_path;
  fs::path out_path;
};

struct Provenance {
  std::string src_id;
  std::size_t r = 0;
  std::string out_path;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

inline std::string serialize_provenance(const Provenance& p) {
  return json{{"src_id", p.src_id}, {"r", p.r}, {"out_path", p.out_path}}.dump() + "\n";
}

/// Runs FreDA over independent pairs on up to `threads` workers. Results are
/// returned in job order regardless of scheduling. The first failure (in job
/// order) is rethrown after all workers stop.
inline std::vector<Provenance> run_freda_jobs(const std::vector<FredaJob>& jobs, std::optional<std::size_t> radius,
                                              unsigned threads = std::thread::hardware_concurrency()) {
  std::vector<Provenance> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto& job = jobs[i];
        const RasterImage fake = read_image(job.fake_path);
        const RasterImage real = read_image(job.real_path);
        const std::size_t r = radius.value_or(default_radius(fake.height, fake.width));
        write_image(job.out_path, freda(fake, real, r));
        out[i] = {job.src_id, r, job.out_path.string()};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// Writes FreDA versions of the given fakes under `out_dir` as
/// "<id>.freda.png" and returns augmented id -> image path.
inline std::map<std::string, fs::path> materialize_freda(const Manifest& manifest, const IdSet& fake_ids,
                                                         std::optional<std::size_t> radius, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<FredaJob> jobs;
  for (const auto& id : fake_ids) {
    const auto* rec = manifest.find(id);
    if (rec == nullptr || rec->label != Label::fake) fail(Errc::pairing, "'" + id + "' is not a fake in the manifest");
    const auto* real = manifest.find(*rec->paired_real_id);
    jobs.push_back({id, manifest.resolve(*rec), manifest.resolve(*real), out_dir / (id + ".freda.png")});
  }
  std::map<std::string, fs::path> out;
  for (const auto& p : run_freda_jobs(jobs, radius)) out.emplace(augmented_id(p.src_id), p.out_path);
  return out;
}

}  // namespace fqc
