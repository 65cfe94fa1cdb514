#include "refexp/review.hpp"

#include <chrono>
#include <fstream>
#include <tuple>

#include "refexp/error.hpp"

namespace refexp {

namespace fs = std::filesystem;

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::reject: return "reject";
    case Verdict::edit: return "edit";
  }
  return "accept";
}

std::optional<Verdict> verdict_from_string(std::string_view s) noexcept {
  for (auto v : {Verdict::accept, Verdict::reject, Verdict::edit}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

json::Json log_entry_to_json(const LogEntry& e) {
  json::Json j;
  j["seq"] = e.seq;
  j["sample_id"] = e.decision.sample_id;
  j["verdict"] = std::string(to_string(e.decision.verdict));
  if (e.decision.edited_text) j["edited_text"] = *e.decision.edited_text;
  j["reviewer"] = e.decision.reviewer;
  j["timestamp"] = e.decision.timestamp_ms;
  j["lease_id"] = e.lease_id;
  j["template_conformant"] = e.template_conformant;
  j["conflict"] = e.conflict;
  return j;
}

LogEntry log_entry_from_json(const json::Json& j) {
  LogEntry e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.decision.sample_id = j.at("sample_id").get<std::string>();
  const auto verdict = verdict_from_string(j.at("verdict").get<std::string>());
  if (!verdict) throw InvalidInput("log entry: unknown verdict");
  e.decision.verdict = *verdict;
  if (const auto it = j.find("edited_text"); it != j.end() && it->is_string()) {
    e.decision.edited_text = it->get<std::string>();
  }
  e.decision.reviewer = j.at("reviewer").get<std::string>();
  e.decision.timestamp_ms = j.at("timestamp").get<std::int64_t>();
  e.lease_id = j.value("lease_id", std::string());
  e.template_conformant = j.value("template_conformant", true);
  e.conflict = j.value("conflict", false);
  return e;
}

std::vector<LogEntry> load_decision_log(const fs::path& path) {
  std::vector<LogEntry> log;
  json::for_each_jsonl_line(json::read_file(path), path.string(),
                            [&](const json::Json& j, std::size_t) {
                              log.push_back(log_entry_from_json(j));
                            });
  return log;
}

json::Json progress_to_json(const Progress& p) {
  json::Json j;
  j["pending"] = p.pending;
  j["accepted"] = p.accepted;
  j["rejected"] = p.rejected;
  j["edited"] = p.edited;
  j["leased"] = p.leased;
  j["total"] = p.total();
  return j;
}

Progress compute_progress(const std::vector<GroundingSample>& samples) {
  Progress p;
  for (const auto& s : samples) {
    switch (s.status) {
      case SampleStatus::pending: ++p.pending; break;
      case SampleStatus::accepted: ++p.accepted; break;
      case SampleStatus::rejected: ++p.rejected; break;
      case SampleStatus::edited: ++p.edited; break;
    }
  }
  return p;
}

namespace {

/// Last-write-wins order: later timestamp, then later log position.
bool supersedes(const LogEntry& candidate, const LogEntry& current) {
  return std::tie(candidate.decision.timestamp_ms, candidate.seq) >=
         std::tie(current.decision.timestamp_ms, current.seq);
}

void apply_verdict(GroundingSample& sample, const ReviewDecision& d) {
  switch (d.verdict) {
    case Verdict::accept:
      sample.status = SampleStatus::accepted;
      sample.edited_text.reset();
      break;
    case Verdict::reject:
      sample.status = SampleStatus::rejected;
      sample.edited_text.reset();
      break;
    case Verdict::edit:
      sample.status = SampleStatus::edited;
      sample.edited_text = d.edited_text;
      break;
  }
}

std::int64_t steady_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::vector<GroundingSample> replay(std::vector<GroundingSample> samples,
                                    const std::vector<LogEntry>& log) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < samples.size(); ++i) index.emplace(samples[i].sample_id, i);
  std::map<std::string, const LogEntry*> winner;
  for (const auto& entry : log) {
    const auto it = index.find(entry.decision.sample_id);
    if (it == index.end()) {
      throw InvalidInput("replay: log references unknown sample '" + entry.decision.sample_id + "'");
    }
    auto& current = winner[entry.decision.sample_id];
    if (current == nullptr || supersedes(entry, *current)) {
      current = &entry;
      apply_verdict(samples[it->second], entry.decision);
    }
  }
  return samples;
}

Progress export_verified(const std::vector<GroundingSample>& samples, const fs::path& path,
                         DatasetFormat format) {
  std::vector<GroundingSample> verified;
  for (const auto& s : samples) {
    if (s.status == SampleStatus::accepted || s.status == SampleStatus::edited) {
      verified.push_back(s);
    }
  }
  export_dataset(verified, path, format);
  const Progress progress = compute_progress(samples);
  fs::path summary = path;
  if (format == DatasetFormat::voc_xml) {
    summary /= "progress.json";
  } else {
    summary += ".progress.json";
  }
  json::write_file(summary, progress_to_json(progress).dump(2) + "\n");
  return progress;
}

// ---------------------------------------------------------------------------

ReviewService::ReviewService(std::vector<GroundingSample> samples, ReviewOptions options)
    : options_(std::move(options)), samples_(std::move(samples)) {
  if (!options_.clock) options_.clock = steady_now_ms;
  if (options_.lease_ttl_ms <= 0) throw InvalidInput("review: lease ttl must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!index_.emplace(samples_[i].sample_id, i).second) {
      throw InvalidInput("review: duplicate sample '" + samples_[i].sample_id + "'");
    }
    if (samples_[i].status == SampleStatus::pending) available_.insert(i);
  }
  load_persisted();
}

void ReviewService::load_persisted() {
  if (options_.log_path.empty()) return;
  std::error_code ec;
  if (fs::exists(options_.log_path, ec)) {
    for (const auto& entry : load_decision_log(options_.log_path)) {
      if (!index_.contains(entry.decision.sample_id)) {
        throw InvalidInput("review: log references unknown sample '" +
                           entry.decision.sample_id + "'");
      }
      apply(entry);
    }
  }
  if (options_.log_path.has_parent_path()) fs::create_directories(options_.log_path.parent_path(), ec);
}

void ReviewService::apply(const LogEntry& entry) {
  const std::size_t sample_idx = index_.at(entry.decision.sample_id);
  const std::size_t log_idx = log_.size();
  log_.push_back(entry);
  log_by_sample_[entry.decision.sample_id].push_back(log_idx);
  const auto it = winner_.find(entry.decision.sample_id);
  if (it == winner_.end() || supersedes(entry, log_[it->second])) {
    winner_[entry.decision.sample_id] = log_idx;
    apply_verdict(samples_[sample_idx], entry.decision);
  }
  available_.erase(sample_idx);
  leases_.erase(entry.decision.sample_id);
}

void ReviewService::reclaim_expired(std::int64_t now) {
  for (auto it = leases_.begin(); it != leases_.end();) {
    if (it->second.expires_at_ms <= now) {
      if (!winner_.contains(it->first)) available_.insert(index_.at(it->first));
      it = leases_.erase(it);
    } else {
      ++it;
    }
  }
}

std::optional<Lease> ReviewService::lease_next(const std::string& reviewer) {
  std::lock_guard lock(mutex_);
  const std::int64_t now = options_.clock();
  reclaim_expired(now);
  if (available_.empty()) return std::nullopt;
  const std::size_t idx = *available_.begin();
  available_.erase(available_.begin());
  const GroundingSample& sample = samples_[idx];
  ActiveLease lease{"lease-" + std::to_string(next_lease_++), reviewer, now + options_.lease_ttl_ms};
  leases_[sample.sample_id] = lease;
  return Lease{sample, "/api/samples/" + sample.sample_id + "/image", lease.lease_id,
               lease.expires_at_ms};
}

namespace {

bool same_payload(const ReviewDecision& a, const ReviewDecision& b) {
  return a.sample_id == b.sample_id && a.verdict == b.verdict && a.edited_text == b.edited_text &&
         a.reviewer == b.reviewer;
}

}  // namespace

Ack ReviewService::submit_decision(const ReviewDecision& decision, const std::string& lease_id) {
  std::lock_guard lock(mutex_);
  const auto found = index_.find(decision.sample_id);
  if (found == index_.end()) throw NotFound("unknown sample '" + decision.sample_id + "'");
  if (decision.reviewer.empty()) throw InvalidInput("decision needs a reviewer");
  if (decision.verdict == Verdict::edit) {
    if (!decision.edited_text || decision.edited_text->empty()) {
      throw InvalidInput("edit decision needs non-empty edited_text");
    }
  } else if (decision.edited_text) {
    throw InvalidInput("edited_text is only allowed with an edit verdict");
  }

  // Duplicates: an exact replay of any entry, or the current winner re-sent
  // with a fresh timestamp.
  const auto duplicate_of = [&]() -> const LogEntry* {
    if (const auto w = winner_.find(decision.sample_id);
        w != winner_.end() && same_payload(log_[w->second].decision, decision)) {
      return &log_[w->second];
    }
    if (const auto it = log_by_sample_.find(decision.sample_id); it != log_by_sample_.end()) {
      for (std::size_t idx : it->second) {
        if (log_[idx].decision == decision) return &log_[idx];
      }
    }
    return nullptr;
  }();
  if (duplicate_of) {
    return Ack{decision.sample_id, samples_[found->second].status, duplicate_of->seq, true,
               duplicate_of->conflict, duplicate_of->template_conformant};
  }

  reclaim_expired(options_.clock());
  if (const auto lease = leases_.find(decision.sample_id);
      lease != leases_.end() && lease->second.lease_id != lease_id) {
    throw Conflict("sample '" + decision.sample_id + "' is leased to " + lease->second.reviewer);
  }

  LogEntry entry;
  entry.seq = log_.size() + 1;
  entry.decision = decision;
  entry.lease_id = lease_id;
  entry.template_conformant =
      decision.verdict != Verdict::edit || matches_any_template(*decision.edited_text);
  if (const auto w = winner_.find(decision.sample_id); w != winner_.end()) {
    entry.conflict = log_[w->second].decision.reviewer != decision.reviewer;
  }

  if (!options_.log_path.empty()) {
    std::ofstream out(options_.log_path, std::ios::app | std::ios::binary);
    out << log_entry_to_json(entry).dump() << '\n';
    out.flush();
    if (!out) throw IoError("cannot append to " + options_.log_path.string());
  }
  apply(entry);
  if (!options_.snapshot_path.empty() && options_.snapshot_every > 0 &&
      entry.seq % options_.snapshot_every == 0) {
    write_snapshot();
  }
  return Ack{decision.sample_id, samples_[found->second].status, entry.seq, false, entry.conflict,
             entry.template_conformant};
}

void ReviewService::write_snapshot() const {
  json::Json j;
  j["log_length"] = log_.size();
  j["progress"] = progress_to_json(compute_progress(samples_));
  json::Json decided = json::Json::array();
  for (const auto& [id, idx] : winner_) {
    const auto& s = samples_[index_.at(id)];
    json::Json row;
    row["sample_id"] = id;
    row["status"] = std::string(to_string(s.status));
    if (s.edited_text) row["edited_text"] = *s.edited_text;
    row["winner_seq"] = log_[idx].seq;
    decided.push_back(std::move(row));
  }
  j["decided"] = std::move(decided);
  json::write_file(options_.snapshot_path, j.dump() + "\n");
}

Progress ReviewService::progress() const {
  std::lock_guard lock(mutex_);
  Progress p = compute_progress(samples_);
  const std::int64_t now = options_.clock();
  for (const auto& [id, lease] : leases_) {
    if (lease.expires_at_ms > now) ++p.leased;
  }
  return p;
}

std::vector<LogEntry> ReviewService::log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::vector<GroundingSample> ReviewService::samples() const {
  std::lock_guard lock(mutex_);
  return samples_;
}

std::optional<GroundingSample> ReviewService::sample(const std::string& sample_id) const {
  std::lock_guard lock(mutex_);
  const auto it = index_.find(sample_id);
  if (it == index_.end()) return std::nullopt;
  return samples_[it->second];
}

Progress ReviewService::export_verified(const fs::path& path, DatasetFormat format) const {
  return refexp::export_verified(samples(), path, format);
}

}  // namespace refexp
