// collatio: batch front end for a text-alignment project directory.
// Results go to stdout as JSON, diagnostics to stderr.
// Exit codes: 0 success, 2 validation error, 1 internal error.

#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "collatio/error.hpp"
#include "collatio/project.hpp"
#include "collatio/serialize.hpp"
#include "collatio/server.hpp"
#include "collatio/util.hpp"

using namespace collatio;

namespace {

collatio::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void emit(const json& j) { std::cout << j.dump() << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive alignment of variant text editions"};
  app.require_subcommand(1);

  std::string dir;

  auto* init = app.add_subcommand("init", "Create an empty project directory");
  init->add_option("dir", dir, "Project directory")->required();

  std::string source, edition_id, title;
  auto* ingest = app.add_subcommand("ingest", "Add an edition (UTF-8, one verse per line)");
  ingest->add_option("dir", dir)->required();
  ingest->add_option("edition", source, "Edition text file")->required();
  ingest->add_option("--id", edition_id, "Edition id")->required();
  ingest->add_option("--title", title, "Display title");

  EmbeddingConfig emb;
  auto* train = app.add_subcommand("train", "Train the iteration-0 embedding from the corpus");
  train->add_option("dir", dir)->required();
  train->add_option("--dim", emb.dim, "Vector dimension")->capture_default_str();
  train->add_option("--window", emb.window, "Co-occurrence window radius")->capture_default_str();
  train->add_option("--seed", emb.seed, "Seed for rows without co-occurrences")->capture_default_str();

  AlignerConfig acfg;
  std::string ed_a, ed_b;
  bool no_binning = false;
  auto* align_cmd = app.add_subcommand("align", "Align two editions against the latest snapshot (JSON lines)");
  align_cmd->add_option("dir", dir)->required();
  align_cmd->add_option("--a", ed_a, "First edition id")->required();
  align_cmd->add_option("--b", ed_b, "Second edition id")->required();
  auto* band_opt = align_cmd->add_option("--band", acfg.band_width, "Band width in (0, 1]");
  auto* tf_opt = align_cmd->add_option("--theta-full", acfg.theta_full, "Acceptance threshold, full-line bin");
  auto* th_opt = align_cmd->add_option("--theta-half", acfg.theta_half, "Acceptance threshold, half-line bins");
  auto* hr_opt = align_cmd->add_option("--half-ratio", acfg.half_ratio, "Length ratio below which a pair is half-line");
  auto* mb_opt = align_cmd->add_flag("--mutual-best", acfg.mutual_best, "Keep mutual best matches per bin only");
  auto* nb_opt = align_cmd->add_flag("--no-binning", no_binning, "Score every pair as a full-line pair");

  auto* replay = app.add_subcommand("replay", "Regenerate snapshots 1..N from the event log");
  replay->add_option("dir", dir)->required();

  std::uint64_t before = 0, after = 0, seed = 0;
  auto* blind = app.add_subcommand("export-blind", "Write a blinded A/B bundle of two alignment iterations");
  blind->add_option("dir", dir)->required();
  blind->add_option("--before", before)->required();
  blind->add_option("--after", after)->required();
  blind->add_option("--seed", seed)->required();

  std::string bundle_id, verdict;
  auto* unseal = app.add_subcommand("unseal", "Record a verdict on a blind bundle and reveal it");
  unseal->add_option("dir", dir)->required();
  unseal->add_option("--bundle", bundle_id)->required();
  unseal->add_option("--verdict", verdict, "X or Y")->required();

  std::string line_a, line_b;
  int rating = 3;
  auto* rate = app.add_subcommand("rate", "Rate an aligned line pair on the 1..5 scale");
  rate->add_option("dir", dir)->required();
  rate->add_option("--a", line_a, "Line id, edition:index")->required();
  rate->add_option("--b", line_b, "Line id, edition:index")->required();
  rate->add_option("--rating", rating)->required()->check(CLI::Range(1, 5));

  std::string tok_i, tok_j;
  double target = 0;
  auto* drag = app.add_subcommand("drag", "Set a target similarity between two words");
  drag->add_option("dir", dir)->required();
  drag->add_option("--i", tok_i, "Token form")->required();
  drag->add_option("--j", tok_j, "Token form")->required();
  drag->add_option("--target", target, "Target cosine in (-1, 1]")->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API for the workbench");
  serve->add_option("dir", dir)->required();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*init) {
      Project p = Project::init(dir);
      emit({{"project", p.project_id()}, {"dir", p.dir().string()}});
    } else if (*ingest) {
      Project p = Project::open(dir);
      const Edition& e = p.ingest_file(source, edition_id, title);
      std::size_t tokens = 0;
      for (const auto& l : e.lines) tokens += l.size();
      emit({{"edition_id", e.edition_id}, {"lines", e.lines.size()}, {"tokens", tokens},
            {"vocabulary", p.corpus().vocabulary().size()}});
    } else if (*train) {
      Project p = Project::open(dir);
      const auto& s = p.train(emb);
      emit({{"iteration", s.iteration}, {"V", s.vocab_size()}, {"d", s.dim()},
            {"sha256", sha256_hex(read_file(p.snapshot_path(0)))}});
    } else if (*align_cmd) {
      Project p = Project::open(dir);
      AlignerConfig cfg = p.config().aligner;
      if (*band_opt) cfg.band_width = acfg.band_width;
      if (*tf_opt) cfg.theta_full = acfg.theta_full;
      if (*th_opt) cfg.theta_half = acfg.theta_half;
      if (*hr_opt) cfg.half_ratio = acfg.half_ratio;
      if (*mb_opt) cfg.mutual_best = acfg.mutual_best;
      if (*nb_opt) cfg.binning = !no_binning;
      const auto r = p.realign(ed_a, ed_b, cfg);
      std::cout << alignment_set_to_jsonl(r.set);
    } else if (*replay) {
      Project p = Project::open(dir);
      json snaps = json::array();
      snaps.push_back({{"iteration", 0}, {"sha256", sha256_hex(read_file(p.snapshot_path(0)))}});
      for (auto k : p.replay()) snaps.push_back({{"iteration", k}, {"sha256", sha256_hex(read_file(p.snapshot_path(k)))}});
      emit({{"events", p.events().size()}, {"snapshots", snaps}});
    } else if (*blind) {
      Project p = Project::open(dir);
      const auto b = p.export_blind(before, after, seed);
      emit({{"bundle_id", b.bundle_id},
            {"payload", (p.dir() / "bundles" / ("bundle_" + b.bundle_id + ".json")).string()}});
    } else if (*unseal) {
      Project p = Project::open(dir);
      emit(to_json(p.unseal(bundle_id, verdict_from_string(verdict))));
    } else if (*rate) {
      Project p = Project::open(dir);
      const auto r = p.rate(line_id_from_json(line_a), line_id_from_json(line_b), std::nullopt, rating);
      emit({{"iteration", r.iteration}, {"changed_tokens", r.changed_tokens}});
    } else if (*drag) {
      Project p = Project::open(dir);
      const auto& vocab = p.corpus().vocabulary();
      const auto r = p.drag(vocab.id(normalize_token(tok_i)), vocab.id(normalize_token(tok_j)), target);
      emit({{"iteration", r.iteration}, {"changed_tokens", r.changed_tokens}});
    } else if (*serve) {
      Project p = Project::open(dir);
      collatio::Server server(p);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << p.dir() << " on http://" << host << ':' << port << '\n';
      if (!server.listen(host, port)) {
        std::cerr << "cannot bind " << host << ':' << port << '\n';
        return 1;
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NotFoundError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
