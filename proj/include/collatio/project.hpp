#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collatio/aligner.hpp"
#include "collatio/analytics.hpp"
#include "collatio/corpus.hpp"
#include "collatio/embedding.hpp"
#include "collatio/feedback.hpp"

namespace collatio {

struct ProjectConfig {
  EmbeddingConfig embedding;
  AlignerConfig aligner;
  FeedbackConfig feedback;
  std::size_t churn_k = 10;
};

struct FeedbackResult {
  std::uint64_t iteration = 0;
  std::vector<TokenId> changed_tokens;
  FeedbackEvent event;
};

struct RealignResult {
  AlignmentSet set;
  AlignmentDiff diff;
};

struct RecoveryReport {
  std::size_t torn_bytes_dropped = 0;
  std::vector<std::uint64_t> regenerated;  // snapshot iterations rebuilt from the log
  std::vector<std::uint64_t> discarded;    // snapshots past the end of the log
};

// Event-sourced project directory:
//   project.json, editions/*.txt, corpus/*.json, snapshots/iter_<n>.vec,
//   alignments/iter_<n>.jsonl, events.jsonl, plans/<digest>.json, bundles/
// Event n turns snapshot n into snapshot n + 1. Not thread-safe; callers serialize writers.
class Project {
 public:
  static Project init(const std::filesystem::path& dir);
  static Project open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& project_id() const { return project_id_; }
  const ProjectConfig& config() const { return config_; }
  const Corpus& corpus() const { return corpus_; }
  bool trained() const { return latest_ != nullptr; }
  const RecoveryReport& recovery() const { return recovery_; }

  const Edition& ingest_file(const std::filesystem::path& source, const std::string& edition_id,
                             const std::string& title = {});
  const Edition& ingest_text(std::string_view text, const std::string& edition_id, const std::string& title = {});

  // Writes snapshot 0. Refused once feedback events exist.
  const EmbeddingState& train(const EmbeddingConfig& config);

  std::uint64_t latest_iteration() const;
  const EmbeddingState& latest() const;
  std::shared_ptr<const EmbeddingState> snapshot(std::uint64_t iteration) const;
  const std::vector<FeedbackEvent>& events() const { return events_; }

  // Alignment of two editions under snapshot `iteration`: the stored set when it matches,
  // otherwise computed with `config` (or the project's aligner config).
  AlignmentSet alignment(std::uint64_t iteration, const std::string& a, const std::string& b,
                         const std::optional<AlignerConfig>& config = std::nullopt) const;

  // Aligns against the latest snapshot, stores the set and makes `config` the project default.
  RealignResult realign(const std::string& a, const std::string& b, const std::optional<AlignerConfig>& config);

  std::optional<std::pair<std::string, std::string>> active_pair() const { return active_pair_; }

  // Rating of a line pair; the bin defaults to the project's classification.
  FeedbackResult rate(const LineId& a, const LineId& b, std::optional<Bin> bin, int rating);
  FeedbackResult drag(TokenId i, TokenId j, double target);

  // Rebuilds snapshots 1..N (and 0 when missing) from the log; returns the written iterations.
  std::vector<std::uint64_t> replay();

  BlindBundle export_blind(std::uint64_t before, std::uint64_t after, std::uint64_t seed,
                           std::optional<std::pair<std::string, std::string>> pair = std::nullopt);
  Evaluation unseal(const std::string& bundle_id, Verdict verdict) const;

  std::map<std::string, TransportPlan> stored_plans() const;
  TransportPlan plan(const std::string& digest) const;

  std::filesystem::path snapshot_path(std::uint64_t iteration) const;
  std::filesystem::path alignment_path(std::uint64_t iteration) const;
  std::filesystem::path events_path() const { return dir_ / "events.jsonl"; }

  // Test hook called at named points of a feedback write:
  // "plan_written", "event_appended", "snapshot_tmp_written", "snapshot_committed".
  std::function<void(std::string_view)> fault_hook;

 private:
  explicit Project(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void save_project_json() const;
  void save_corpus() const;
  void load_corpus();
  void load_events();
  void recover();
  std::vector<std::uint64_t> snapshot_iterations_on_disk() const;
  void write_snapshot_file(const EmbeddingState& state) const;
  std::shared_ptr<const EmbeddingState> read_snapshot_file(std::uint64_t iteration) const;
  FeedbackResult commit(FeedbackEvent event, const TransportPlan* plan);
  void require_trained() const;
  void fault(std::string_view stage) const {
    if (fault_hook) fault_hook(stage);
  }

  std::filesystem::path dir_;
  std::string project_id_;
  ProjectConfig config_;
  Corpus corpus_;
  std::vector<FeedbackEvent> events_;
  std::shared_ptr<const EmbeddingState> latest_;
  std::optional<std::pair<std::string, std::string>> active_pair_;
  RecoveryReport recovery_;

  std::unique_ptr<std::mutex> cache_mutex_ = std::make_unique<std::mutex>();
  mutable std::map<std::uint64_t, std::shared_ptr<const EmbeddingState>> cache_;
};

}  // namespace collatio
