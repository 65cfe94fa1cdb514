#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "refexp/dataset.hpp"
#include "refexp/serialization.hpp"

namespace refexp {

enum class Verdict { accept, reject, edit };

std::string_view to_string(Verdict v) noexcept;
std::optional<Verdict> verdict_from_string(std::string_view s) noexcept;

struct ReviewDecision {
  std::string sample_id;
  Verdict verdict = Verdict::accept;
  std::optional<std::string> edited_text;  // required iff verdict == edit
  std::string reviewer;
  std::int64_t timestamp_ms = 0;  // monotonic milliseconds

  friend bool operator==(const ReviewDecision&, const ReviewDecision&) = default;
};

/// One append-only log record.
struct LogEntry {
  std::uint64_t seq = 0;
  ReviewDecision decision;
  std::string lease_id;
  /// For edits: whether the text matches a template; always true otherwise.
  bool template_conformant = true;
  /// The sample had already been decided by a different reviewer.
  bool conflict = false;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

json::Json log_entry_to_json(const LogEntry& entry);
LogEntry log_entry_from_json(const json::Json& j);
std::vector<LogEntry> load_decision_log(const std::filesystem::path& path);

struct Progress {
  std::size_t pending = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t edited = 0;
  std::size_t leased = 0;

  std::size_t total() const noexcept { return pending + accepted + rejected + edited; }
  friend bool operator==(const Progress&, const Progress&) = default;
};

json::Json progress_to_json(const Progress& p);
Progress compute_progress(const std::vector<GroundingSample>& samples);

/// Folds a decision log over freshly generated samples: per sample the entry
/// with the greatest (timestamp, seq) wins. Pure; the service state is always
/// equal to replay(initial samples, log).
std::vector<GroundingSample> replay(std::vector<GroundingSample> samples,
                                    const std::vector<LogEntry>& log);

/// Writes the accepted and edited samples (edited text applied) with
/// export_dataset, plus a progress summary next to it: `<file>.progress.json`
/// for JSONL, `<dir>/progress.json` for VOC XML.
Progress export_verified(const std::vector<GroundingSample>& samples,
                         const std::filesystem::path& path, DatasetFormat format);

struct Lease {
  GroundingSample sample;
  std::string image_ref;
  std::string lease_id;
  std::int64_t expires_at_ms = 0;
};

struct Ack {
  std::string sample_id;
  SampleStatus status = SampleStatus::pending;
  std::uint64_t seq = 0;
  bool duplicate = false;
  bool conflict = false;
  bool template_conformant = true;
};

struct ReviewOptions {
  std::int64_t lease_ttl_ms = 300'000;
  /// Append-only JSONL decision log. Replayed on construction if it exists.
  std::filesystem::path log_path;
  /// Fold snapshot, rewritten every `snapshot_every` decisions.
  std::filesystem::path snapshot_path;
  std::size_t snapshot_every = 100;
  /// Monotonic milliseconds; defaults to std::chrono::steady_clock.
  std::function<std::int64_t()> clock;
};

/// Rapid-judgment review queue. Thread-safe; every public call is atomic
/// with respect to the others.
class ReviewService {
 public:
  explicit ReviewService(std::vector<GroundingSample> samples, ReviewOptions options = {});

  /// Hands out the first pending sample without an active lease, or nullopt
  /// when none is available.
  std::optional<Lease> lease_next(const std::string& reviewer);

  /// Records a decision. Throws NotFound for an unknown sample, Conflict when
  /// another reviewer holds an active lease on it, InvalidInput for a
  /// malformed decision. Identical re-submissions are acknowledged without
  /// a new log entry.
  Ack submit_decision(const ReviewDecision& decision, const std::string& lease_id);

  Progress progress() const;
  std::vector<LogEntry> log() const;
  /// Current state of every sample, in the original order.
  std::vector<GroundingSample> samples() const;
  std::optional<GroundingSample> sample(const std::string& sample_id) const;

  Progress export_verified(const std::filesystem::path& path, DatasetFormat format) const;

  std::int64_t now() const { return options_.clock(); }

 private:
  struct ActiveLease {
    std::string lease_id;
    std::string reviewer;
    std::int64_t expires_at_ms = 0;
  };

  void apply(const LogEntry& entry);
  void reclaim_expired(std::int64_t now);
  void write_snapshot() const;
  void load_persisted();

  ReviewOptions options_;
  mutable std::mutex mutex_;
  std::vector<GroundingSample> samples_;
  std::map<std::string, std::size_t> index_;
  std::vector<LogEntry> log_;
  std::map<std::string, std::vector<std::size_t>> log_by_sample_;
  std::map<std::string, std::size_t> winner_;  // sample_id -> index into log_
  std::set<std::size_t> available_;            // undecided, unleased sample indices
  std::map<std::string, ActiveLease> leases_;  // sample_id -> lease
  std::uint64_t next_lease_ = 1;
};

}  // namespace refexp
