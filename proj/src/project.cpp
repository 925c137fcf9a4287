#include "collatio/project.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "collatio/error.hpp"
#include "collatio/serialize.hpp"
#include "collatio/util.hpp"

namespace fs = std::filesystem;

namespace collatio {

namespace {

constexpr int kFormatVersion = 1;

void check_edition_id(const std::string& id) {
  if (id.empty()) throw ValidationError("edition id must be non-empty");
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      throw ValidationError("edition id '" + id + "' may only contain letters, digits, '_', '-' and '.'");
  if (id == "." || id == ".." || id == "vocabulary") throw ValidationError("edition id '" + id + "' is reserved");
}

std::string snapshot_text(const EmbeddingState& s) {
  std::ostringstream out;
  write_snapshot(out, s);
  return out.str();
}

}  // namespace

Project Project::init(const fs::path& dir) {
  if (fs::exists(dir / "project.json")) throw ValidationError("a project already exists at " + dir.string());
  for (const char* sub : {"editions", "corpus", "snapshots", "alignments", "plans", "bundles"})
    fs::create_directories(dir / sub);
  Project p(fs::absolute(dir));
  p.project_id_ = p.dir_.filename().string();
  if (p.project_id_.empty()) p.project_id_ = p.dir_.parent_path().filename().string();
  p.save_project_json();
  return p;
}

Project Project::open(const fs::path& dir) {
  const auto manifest = dir / "project.json";
  if (!fs::exists(manifest)) throw NotFoundError("no project at " + dir.string());
  Project p(fs::absolute(dir));
  const json j = json::parse(read_file(manifest));
  if (j.value("format", 0) != kFormatVersion) throw ValidationError("unsupported project format");
  p.project_id_ = j.at("project_id").get<std::string>();
  p.config_.embedding = embedding_config_from_json(j.at("embedding"));
  p.config_.aligner = aligner_config_from_json(j.at("aligner"));
  p.config_.feedback = feedback_config_from_json(j.at("feedback"));
  p.config_.churn_k = j.value("churn_k", p.config_.churn_k);
  if (j.contains("active_pair") && !j.at("active_pair").is_null())
    p.active_pair_ = {j.at("active_pair")[0].get<std::string>(), j.at("active_pair")[1].get<std::string>()};
  p.load_corpus();
  p.load_events();
  p.recover();
  return p;
}

void Project::save_project_json() const {
  json editions = json::array();
  for (const auto& e : corpus_.editions()) editions.push_back(e.edition_id);
  json j = {{"format", kFormatVersion},
            {"project_id", project_id_},
            {"editions", editions},
            {"embedding", to_json(config_.embedding)},
            {"aligner", to_json(config_.aligner)},
            {"feedback", to_json(config_.feedback)},
            {"churn_k", config_.churn_k},
            {"active_pair", active_pair_ ? json::array({active_pair_->first, active_pair_->second}) : json(nullptr)}};
  write_file_atomic(dir_ / "project.json", j.dump(2) + "\n");
}

void Project::save_corpus() const {
  for (const auto& e : corpus_.editions())
    write_file_atomic(dir_ / "corpus" / (e.edition_id + ".json"), edition_to_json(e).dump(2) + "\n");
  write_file_atomic(dir_ / "corpus" / "vocabulary.json", vocabulary_to_json(corpus_.vocabulary()).dump(2) + "\n");
}

void Project::load_corpus() {
  const json manifest = json::parse(read_file(dir_ / "project.json"));
  const auto ids = manifest.at("editions").get<std::vector<std::string>>();
  if (ids.empty()) return;
  const Vocabulary vocab = vocabulary_from_json(json::parse(read_file(dir_ / "corpus" / "vocabulary.json")));
  std::vector<Edition> editions;
  for (const auto& id : ids)
    editions.push_back(edition_from_json(json::parse(read_file(dir_ / "corpus" / (id + ".json"))), vocab));
  corpus_ = Corpus::from_editions(std::move(editions));
  if (!(corpus_.vocabulary() == vocab)) throw ValidationError("stored vocabulary does not match the stored editions");
}

void Project::load_events() {
  events_.clear();
  const auto path = events_path();
  if (!fs::exists(path)) return;
  const std::string text = read_file(path);

  // A line without its terminating newline is a torn append and was never committed.
  std::size_t committed = text.rfind('\n');
  committed = committed == std::string::npos ? 0 : committed + 1;
  if (committed < text.size()) {
    recovery_.torn_bytes_dropped = text.size() - committed;
    fs::resize_file(path, committed);
  }

  std::istringstream in(text.substr(0, committed));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    FeedbackEvent e;
    try {
      e = event_from_json(json::parse(line));
    } catch (const std::exception& ex) {
      throw ValidationError("events.jsonl line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (e.event_id != events_.size())
      throw ValidationError("events.jsonl has a gap or reorder at event " + std::to_string(e.event_id));
    events_.push_back(std::move(e));
  }
}

fs::path Project::snapshot_path(std::uint64_t iteration) const {
  return dir_ / "snapshots" / ("iter_" + std::to_string(iteration) + ".vec");
}

fs::path Project::alignment_path(std::uint64_t iteration) const {
  return dir_ / "alignments" / ("iter_" + std::to_string(iteration) + ".jsonl");
}

void Project::write_snapshot_file(const EmbeddingState& state) const {
  write_file_atomic(snapshot_path(state.iteration), snapshot_text(state),
                    [this] { fault("snapshot_tmp_written"); });
}

std::shared_ptr<const EmbeddingState> Project::read_snapshot_file(std::uint64_t iteration) const {
  std::ifstream in(snapshot_path(iteration), std::ios::binary);
  if (!in) throw NotFoundError("no snapshot for iteration " + std::to_string(iteration));
  auto s = std::make_shared<EmbeddingState>(read_snapshot(in));
  if (s->iteration != iteration) throw ValidationError("snapshot file iteration mismatch");
  if (s->vocab_size() != corpus_.vocabulary().size()) throw ValidationError("snapshot vocabulary size mismatch");
  return s;
}

std::vector<std::uint64_t> Project::snapshot_iterations_on_disk() const {
  std::vector<std::uint64_t> out;
  for (const auto& entry : fs::directory_iterator(dir_ / "snapshots")) {
    const std::string name = entry.path().filename().string();
    if (!name.starts_with("iter_") || !name.ends_with(".vec")) continue;
    const std::string digits = name.substr(5, name.size() - 9);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) continue;
    out.push_back(std::stoull(digits));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Project::recover() {
  for (const auto& entry : fs::directory_iterator(dir_ / "snapshots"))
    if (entry.path().extension() == ".tmp") fs::remove(entry.path());

  const std::uint64_t n = events_.size();
  if (!fs::exists(snapshot_path(0))) {
    if (n == 0) return;  // never trained
    write_snapshot_file(collatio::train(corpus_, config_.embedding));
    recovery_.regenerated.push_back(0);
  }

  std::shared_ptr<const EmbeddingState> state;
  try {
    state = read_snapshot_file(0);
  } catch (const ValidationError&) {
    write_snapshot_file(collatio::train(corpus_, config_.embedding));
    recovery_.regenerated.push_back(0);
    state = read_snapshot_file(0);
  }
  {
    std::lock_guard lock(*cache_mutex_);
    cache_[0] = state;
  }

  const auto plans = stored_plans();
  for (std::uint64_t k = 1; k <= n; ++k) {
    std::shared_ptr<const EmbeddingState> next;
    if (fs::exists(snapshot_path(k))) {
      try {
        next = read_snapshot_file(k);
      } catch (const ValidationError&) {
        next = nullptr;
      }
    }
    if (!next) {
      const auto& e = events_[k - 1];
      const TransportPlan* plan = nullptr;
      if (e.is_rating()) {
        auto it = plans.find(e.plan_digest);
        if (it == plans.end()) throw NotFoundError("missing stored plan " + e.plan_digest);
        plan = &it->second;
      }
      auto rebuilt = std::make_shared<EmbeddingState>(apply_event(*state, e, plan, config_.feedback));
      write_snapshot_file(*rebuilt);
      recovery_.regenerated.push_back(k);
      next = rebuilt;
    }
    state = next;
  }
  for (std::uint64_t k : snapshot_iterations_on_disk())
    if (k > n) {
      fs::remove(snapshot_path(k));
      recovery_.discarded.push_back(k);
    }
  latest_ = state;
  std::lock_guard lock(*cache_mutex_);
  cache_[state->iteration] = state;
}

void Project::require_trained() const {
  if (!latest_) throw ValidationError("project has no embedding yet; run train first");
}

const Edition& Project::ingest_text(std::string_view text, const std::string& edition_id, const std::string& title) {
  check_edition_id(edition_id);
  if (latest_) throw ValidationError("the corpus is frozen once an embedding has been trained");
  const Edition& e = corpus_.ingest(text, edition_id, title);
  write_file_atomic(dir_ / "editions" / (edition_id + ".txt"), text);
  save_corpus();
  save_project_json();
  return e;
}

const Edition& Project::ingest_file(const fs::path& source, const std::string& edition_id, const std::string& title) {
  if (!fs::exists(source)) throw NotFoundError("no such file " + source.string());
  return ingest_text(read_file(source), edition_id, title);
}

const EmbeddingState& Project::train(const EmbeddingConfig& config) {
  if (corpus_.empty()) throw ValidationError("ingest at least one edition before training");
  if (!events_.empty()) throw ValidationError("cannot retrain a project that already has feedback events");
  auto state = std::make_shared<EmbeddingState>(collatio::train(corpus_, config));
  config_.embedding = config;
  write_snapshot_file(*state);
  for (std::uint64_t k : snapshot_iterations_on_disk())
    if (k > 0) fs::remove(snapshot_path(k));
  save_project_json();
  latest_ = state;
  std::lock_guard lock(*cache_mutex_);
  cache_.clear();
  cache_[0] = state;
  return *latest_;
}

std::uint64_t Project::latest_iteration() const {
  require_trained();
  return latest_->iteration;
}

const EmbeddingState& Project::latest() const {
  require_trained();
  return *latest_;
}

std::shared_ptr<const EmbeddingState> Project::snapshot(std::uint64_t iteration) const {
  require_trained();
  if (iteration > latest_->iteration) throw NotFoundError("no snapshot for iteration " + std::to_string(iteration));
  {
    std::lock_guard lock(*cache_mutex_);
    auto it = cache_.find(iteration);
    if (it != cache_.end()) return it->second;
  }
  auto s = read_snapshot_file(iteration);
  std::lock_guard lock(*cache_mutex_);
  return cache_.emplace(iteration, s).first->second;
}

AlignmentSet Project::alignment(std::uint64_t iteration, const std::string& a, const std::string& b,
                                const std::optional<AlignerConfig>& config) const {
  const AlignerConfig cfg = config.value_or(config_.aligner);
  const auto& ea = corpus_.edition(a);
  const auto& eb = corpus_.edition(b);
  auto state = snapshot(iteration);
  const auto path = alignment_path(iteration);
  if (fs::exists(path)) {
    AlignmentSet stored = alignment_set_from_jsonl(read_file(path));
    if (stored.edition_a == a && stored.edition_b == b && stored.config_hash == config_hash(cfg)) return stored;
  }
  return align(*state, ea, eb, cfg);
}

RealignResult Project::realign(const std::string& a, const std::string& b, const std::optional<AlignerConfig>& config) {
  require_trained();
  const AlignerConfig cfg = config.value_or(config_.aligner);
  cfg.validate();
  const auto& ea = corpus_.edition(a);
  const auto& eb = corpus_.edition(b);

  // Previous set: the newest stored set for the same edition pair.
  AlignmentSet previous;
  previous.edition_a = a;
  previous.edition_b = b;
  for (std::uint64_t k = latest_->iteration + 1; k-- > 0;) {
    const auto path = alignment_path(k);
    if (!fs::exists(path)) continue;
    AlignmentSet stored = alignment_set_from_jsonl(read_file(path));
    if (stored.edition_a == a && stored.edition_b == b) {
      previous = std::move(stored);
      break;
    }
  }

  RealignResult r;
  r.set = align(*latest_, ea, eb, cfg);
  r.diff = diff(previous, r.set);
  write_file_atomic(alignment_path(r.set.iteration), alignment_set_to_jsonl(r.set));
  config_.aligner = cfg;
  active_pair_ = {a, b};
  save_project_json();
  return r;
}

std::map<std::string, TransportPlan> Project::stored_plans() const {
  std::map<std::string, TransportPlan> out;
  if (!fs::exists(dir_ / "plans")) return out;
  for (const auto& entry : fs::directory_iterator(dir_ / "plans")) {
    if (entry.path().extension() != ".json") continue;
    out.emplace(entry.path().stem().string(), plan_from_json(json::parse(read_file(entry.path()))));
  }
  return out;
}

TransportPlan Project::plan(const std::string& digest) const {
  const auto path = dir_ / "plans" / (digest + ".json");
  if (!fs::exists(path)) throw NotFoundError("missing stored plan " + digest);
  return plan_from_json(json::parse(read_file(path)));
}

FeedbackResult Project::commit(FeedbackEvent event, const TransportPlan* plan) {
  const EmbeddingState& state = *latest_;
  event.event_id = state.iteration;
  event.base_iteration = state.iteration;
  event.timestamp = iso_utc(unix_micros_now());
  auto next = std::make_shared<EmbeddingState>(apply_event(state, event, plan, config_.feedback));

  if (plan) {
    const auto path = dir_ / "plans" / (event.plan_digest + ".json");
    if (!fs::exists(path)) write_file_atomic(path, to_json(*plan).dump() + "\n");
    fault("plan_written");
  }
  append_line_durable(events_path(), to_json(event).dump());
  fault("event_appended");
  write_snapshot_file(*next);
  fault("snapshot_committed");

  FeedbackResult r;
  r.iteration = next->iteration;
  r.changed_tokens = changed_rows(state, *next);
  r.event = event;
  events_.push_back(std::move(event));
  latest_ = next;
  std::lock_guard lock(*cache_mutex_);
  cache_[next->iteration] = next;
  return r;
}

FeedbackResult Project::rate(const LineId& a, const LineId& b, std::optional<Bin> bin, int rating) {
  require_trained();
  rating_strength(rating);
  const Line& la = corpus_.line(a);
  const Line& lb = corpus_.line(b);
  const Bin expected = config_.aligner.binning ? classify_bin(la, lb, config_.aligner.half_ratio) : Bin::Full;
  const Bin used = bin.value_or(expected);
  if (used != Bin::Full && used != expected)
    throw ValidationError("line pair does not fall in bin " + to_string(used));

  FeedbackEvent e;
  e.kind = Rating{{a, b, used}, rating};
  TransportPlan plan = pair_plan(*latest_, la, lb, used);
  e.plan_digest = plan_digest(plan);
  return commit(std::move(e), &plan);
}

FeedbackResult Project::drag(TokenId i, TokenId j, double target) {
  require_trained();
  FeedbackEvent e;
  e.kind = Drag{i, j, target};
  e.validate();
  latest_->check_token(i);
  latest_->check_token(j);
  return commit(std::move(e), nullptr);
}

std::vector<std::uint64_t> Project::replay() {
  if (!fs::exists(snapshot_path(0))) {
    if (events_.empty() && !latest_) throw ValidationError("project has no embedding yet; run train first");
    write_snapshot_file(collatio::train(corpus_, config_.embedding));
  }
  auto initial = read_snapshot_file(0);
  std::vector<EmbeddingState> trail;
  collatio::replay(*initial, events_, stored_plans(), config_.feedback, &trail);

  std::vector<std::uint64_t> written;
  for (const auto& s : trail) {
    write_snapshot_file(s);
    written.push_back(s.iteration);
  }
  std::lock_guard lock(*cache_mutex_);
  cache_.clear();
  cache_[0] = initial;
  latest_ = trail.empty() ? initial : std::make_shared<EmbeddingState>(trail.back());
  cache_[latest_->iteration] = latest_;
  return written;
}

BlindBundle Project::export_blind(std::uint64_t before, std::uint64_t after, std::uint64_t seed,
                                  std::optional<std::pair<std::string, std::string>> pair) {
  require_trained();
  auto load = [&](std::uint64_t iteration) {
    const auto path = alignment_path(iteration);
    if (fs::exists(path)) {
      AlignmentSet stored = alignment_set_from_jsonl(read_file(path));
      if (!pair || (stored.edition_a == pair->first && stored.edition_b == pair->second)) return stored;
    }
    const auto p = pair ? pair : active_pair_;
    if (!p) throw ValidationError("no alignment stored for iteration " + std::to_string(iteration) +
                                  " and no edition pair to compute one");
    AlignmentSet set = align(*snapshot(iteration), corpus_.edition(p->first), corpus_.edition(p->second),
                             config_.aligner);
    write_file_atomic(path, alignment_set_to_jsonl(set));
    return set;
  };
  const AlignmentSet a = load(before);
  const AlignmentSet b = load(after);
  BlindBundle bundle = make_blind_bundle(a, b, seed);
  BundleStore(dir_ / "bundles").save(bundle);
  return bundle;
}

Evaluation Project::unseal(const std::string& bundle_id, Verdict verdict) const {
  return BundleStore(dir_ / "bundles").unseal(bundle_id, verdict);
}

}  // namespace collatio
