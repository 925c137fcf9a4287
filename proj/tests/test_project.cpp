#include <fstream>

#include "doctest.h"
#include "collatio/error.hpp"
#include "collatio/project.hpp"
#include "collatio/serialize.hpp"
#include "collatio/util.hpp"
#include "fixtures.hpp"

using namespace collatio;
namespace fs = std::filesystem;

namespace {

Project small_project(const fs::path& dir) {
  auto t = fixtures::make_tradition(23, 30, 70, 0.2);
  auto p = Project::init(dir);
  p.ingest_text(t.base, "A", "base");
  p.ingest_text(t.variant, "B", "variant");
  EmbeddingConfig ec;
  ec.dim = 12;
  p.train(ec);
  return p;
}

std::vector<std::string> snapshot_bytes(const Project& p) {
  std::vector<std::string> out;
  for (std::uint64_t k = 0; k <= p.latest_iteration(); ++k) out.push_back(read_file(p.snapshot_path(k)));
  return out;
}

void run_session(Project& p, int events) {
  p.realign("A", "B", std::nullopt);
  for (int n = 0; n < events; ++n) {
    if (n % 2 == 0)
      p.rate({"A", static_cast<std::size_t>(n % 30)}, {"B", static_cast<std::size_t>(n % 30)}, std::nullopt, n % 4 == 0 ? 5 : 2);
    else
      p.drag(static_cast<TokenId>(n), static_cast<TokenId>(n + 7), 0.8);
  }
}

}  // namespace

TEST_CASE("init, open and layout") {
  fixtures::ScratchDir d("layout");
  const auto dir = d.path / "p";
  {
    auto p = small_project(dir);
    CHECK(p.trained());
    CHECK(p.latest_iteration() == 0);
    CHECK_FALSE(p.project_id().empty());
  }
  for (const char* f : {"project.json", "editions/A.txt", "editions/B.txt", "corpus/A.json", "corpus/vocabulary.json",
                        "snapshots/iter_0.vec"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  CHECK_THROWS_AS(Project::init(dir), ValidationError);
  CHECK_THROWS_AS(Project::open(d.path / "nothing"), NotFoundError);

  auto p = Project::open(dir);
  CHECK(p.corpus().editions().size() == 2);
  CHECK(p.corpus().edition("A").title == "base");
  CHECK_THROWS_AS(p.ingest_text("more text", "C"), ValidationError);
  CHECK_THROWS_AS(p.ingest_text("x", "../evil"), ValidationError);
}

TEST_CASE("feedback persists and reopens bit-identically") {
  fixtures::ScratchDir d("persist");
  std::vector<std::string> bytes;
  {
    auto p = small_project(d.path);
    run_session(p, 6);
    CHECK(p.latest_iteration() == 6);
    CHECK(p.events().size() == 6);
    CHECK_THROWS_AS(p.train(EmbeddingConfig{}), ValidationError);
    bytes = snapshot_bytes(p);
  }
  auto p = Project::open(d.path);
  CHECK(p.latest_iteration() == 6);
  CHECK(snapshot_bytes(p) == bytes);
  CHECK(p.recovery().regenerated.empty());
  CHECK(p.active_pair() == std::pair<std::string, std::string>{"A", "B"});
  for (const auto& e : p.events())
    if (e.is_rating()) CHECK(fs::exists(d.path / "plans" / (e.plan_digest + ".json")));
}

TEST_CASE("neutral rating changes nothing but the iteration") {
  fixtures::ScratchDir d("neutral");
  auto p = small_project(d.path);
  const auto r = p.rate({"A", 3}, {"B", 3}, std::nullopt, 3);
  CHECK(r.changed_tokens.empty());
  CHECK(r.iteration == 1);
  CHECK(p.latest().vectors == p.snapshot(0)->vectors);
  CHECK_THROWS_AS(p.rate({"A", 3}, {"B", 3}, std::nullopt, 9), ValidationError);
  CHECK_THROWS_AS(p.rate({"A", 300}, {"B", 3}, std::nullopt, 4), NotFoundError);
  CHECK_THROWS_AS(p.drag(1, 1, 0.5), ValidationError);
  CHECK_THROWS_AS(p.drag(1, 100000, 0.5), NotFoundError);
  CHECK(p.events().size() == 1);
}

TEST_CASE("replay after deleting snapshots regenerates identical files") {
  fixtures::ScratchDir d("replay");
  auto p = small_project(d.path);
  run_session(p, 8);
  const auto bytes = snapshot_bytes(p);
  for (std::uint64_t k = 1; k <= 8; ++k) fs::remove(p.snapshot_path(k));
  const auto written = p.replay();
  CHECK(written.size() == 8);
  CHECK(snapshot_bytes(p) == bytes);
}

TEST_CASE("recovery repairs missing, corrupt, stray and torn files") {
  fixtures::ScratchDir d("recover");
  std::vector<std::string> bytes;
  {
    auto p = small_project(d.path);
    run_session(p, 5);
    bytes = snapshot_bytes(p);
  }
  fs::remove(d.path / "snapshots/iter_3.vec");
  {
    std::ofstream(d.path / "snapshots/iter_4.vec", std::ios::trunc) << "garbage";
    std::ofstream(d.path / "snapshots/iter_9.vec") << "stale";
    std::ofstream(d.path / "snapshots/iter_5.vec.tmp") << "partial";
    std::ofstream(d.path / "events.jsonl", std::ios::app) << "{\"event_id\": 5, \"kin";
  }
  auto p = Project::open(d.path);
  CHECK(p.recovery().torn_bytes_dropped > 0);
  CHECK(p.recovery().regenerated == std::vector<std::uint64_t>{3, 4});
  CHECK(p.recovery().discarded == std::vector<std::uint64_t>{9});
  CHECK_FALSE(fs::exists(d.path / "snapshots/iter_5.vec.tmp"));
  CHECK(p.latest_iteration() == 5);
  CHECK(snapshot_bytes(p) == bytes);
  const auto log = read_file(p.events_path());
  CHECK(log.back() == '\n');
  // the log keeps working after the repair
  p.drag(2, 3, 0.1);
  CHECK(Project::open(d.path).latest_iteration() == 6);
}

TEST_CASE("realign diffs against the previous stored set") {
  fixtures::ScratchDir d("realign");
  auto p = small_project(d.path);
  AlignerConfig cfg;
  cfg.theta_full = 0.6;
  const auto first = p.realign("A", "B", cfg);
  CHECK(first.diff.removed.empty());
  CHECK(first.diff.added == first.set.keys());
  CHECK(fs::exists(p.alignment_path(0)));
  CHECK(p.config().aligner.theta_full == 0.6);

  const auto again = p.realign("A", "B", std::nullopt);
  CHECK(again.diff.added.empty());
  CHECK(again.diff.removed.empty());

  for (int k = 0; k < 3; ++k) p.rate({"A", 1}, {"B", 1}, std::nullopt, 5);
  const auto later = p.realign("A", "B", std::nullopt);
  CHECK(later.set.iteration == 3);
  std::set<AlignmentKey> u = later.diff.retained;
  u.insert(later.diff.added.begin(), later.diff.added.end());
  CHECK(u == later.set.keys());
  std::set<AlignmentKey> v = later.diff.retained;
  v.insert(later.diff.removed.begin(), later.diff.removed.end());
  CHECK(v == first.set.keys());

  // stored sets are served as-is, other configs are computed
  const auto stored = p.alignment(0, "A", "B");
  CHECK(alignment_set_to_jsonl(stored) == read_file(p.alignment_path(0)));
  AlignerConfig strict;
  strict.theta_full = 0.95;
  CHECK(p.alignment(0, "A", "B", strict).config_hash == config_hash(strict));
  CHECK_THROWS_AS(p.alignment(7, "A", "B"), NotFoundError);
  CHECK_THROWS_AS(p.realign("A", "Q", std::nullopt), NotFoundError);
}

TEST_CASE("blind export and unseal through the project") {
  fixtures::ScratchDir d("blind");
  auto p = small_project(d.path);
  p.realign("A", "B", std::nullopt);
  p.rate({"A", 0}, {"B", 0}, std::nullopt, 5);
  const auto b1 = p.export_blind(0, 1, 77);
  const auto payload = read_file(d.path / "bundles" / ("bundle_" + b1.bundle_id + ".json"));
  CHECK(fs::exists(d.path / "bundles" / "sealed" / ("bundle_" + b1.bundle_id + ".key")));
  const auto b2 = p.export_blind(0, 1, 77);
  CHECK(b2.bundle_id == b1.bundle_id);
  CHECK(read_file(d.path / "bundles" / ("bundle_" + b2.bundle_id + ".json")) == payload);
  const auto e = p.unseal(b1.bundle_id, Verdict::X);
  CHECK(e.preferred == b1.truth[0]);
  CHECK_THROWS_AS(p.unseal("ffff", Verdict::X), NotFoundError);
}
