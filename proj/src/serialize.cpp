#include "collatio/serialize.hpp"

#include <sstream>

#include "collatio/error.hpp"
#include "collatio/util.hpp"

namespace collatio {

json to_json(const LineId& id) { return json::array({id.edition, id.index}); }

LineId line_id_from_json(const json& j) {
  if (j.is_array() && j.size() == 2) return {j[0].get<std::string>(), j[1].get<std::size_t>()};
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw ValidationError("line id must look like 'edition:index'");
    try {
      return {s.substr(0, colon), std::stoul(s.substr(colon + 1))};
    } catch (const std::logic_error&) {
      throw ValidationError("bad line index in '" + s + "'");
    }
  }
  throw ValidationError("line id must be [edition, index] or 'edition:index'");
}

json edition_to_json(const Edition& e) {
  json lines = json::array();
  for (const auto& l : e.lines) lines.push_back({{"index", l.id.index}, {"raw", l.raw}, {"token_ids", l.tokens}});
  return {{"edition_id", e.edition_id}, {"title", e.title}, {"lines", lines}};
}

Edition edition_from_json(const json& j, const Vocabulary& vocab) {
  Edition e;
  e.edition_id = j.at("edition_id").get<std::string>();
  e.title = j.value("title", e.edition_id);
  for (const auto& jl : j.at("lines")) {
    Line l;
    l.id = {e.edition_id, jl.at("index").get<std::size_t>()};
    if (l.id.index != e.lines.size()) throw ValidationError("edition '" + e.edition_id + "': line indices not contiguous");
    l.raw = jl.at("raw").get<std::string>();
    l.tokens = jl.at("token_ids").get<std::vector<TokenId>>();
    if (l.tokens.empty()) throw ValidationError("edition '" + e.edition_id + "': empty line");
    for (TokenId t : l.tokens) l.forms.push_back(vocab.form(t));
    e.lines.push_back(std::move(l));
  }
  return e;
}

json vocabulary_to_json(const Vocabulary& v) {
  json ids = json::object();
  json freq = json::object();
  for (TokenId t = 0; t < v.size(); ++t) {
    ids[v.form(t)] = t;
    freq[std::to_string(t)] = v.frequency(t);
  }
  return {{"token_to_id", ids}, {"frequencies", freq}};
}

Vocabulary vocabulary_from_json(const json& j) {
  const auto& ids = j.at("token_to_id");
  const auto& freq = j.at("frequencies");
  std::vector<std::string> forms(ids.size());
  std::vector<std::uint64_t> counts(ids.size());
  std::vector<bool> seen(ids.size(), false);
  for (const auto& [form, id] : ids.items()) {
    const auto t = id.get<std::size_t>();
    if (t >= forms.size() || seen[t]) throw ValidationError("vocabulary ids are not dense");
    seen[t] = true;
    forms[t] = form;
    counts[t] = freq.at(std::to_string(t)).get<std::uint64_t>();
  }
  return Vocabulary::from_parts(std::move(forms), std::move(counts));
}

json to_json(const TransportPlan& plan) {
  json flows = json::array();
  for (const auto& f : plan.flows) flows.push_back({{"i", f.from}, {"j", f.to}, {"mass", f.mass}});
  return {{"cost", plan.cost}, {"iteration", plan.iteration}, {"ground", plan.ground}, {"flows", flows}};
}

TransportPlan plan_from_json(const json& j) {
  TransportPlan p;
  p.cost = j.at("cost").get<double>();
  p.iteration = j.at("iteration").get<std::uint64_t>();
  p.ground = j.value("ground", std::string(kGroundEuclideanUnit));
  for (const auto& f : j.at("flows")) p.flows.push_back({f.at("i"), f.at("j"), f.at("mass")});
  return p;
}

std::string plan_digest(const TransportPlan& plan) { return sha256_hex(to_json(plan).dump()); }

json to_json(const HeatmapData& h) {
  json sim = json::array();
  for (Eigen::Index r = 0; r < h.sim.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < h.sim.cols(); ++c) row.push_back(h.sim(r, c));
    sim.push_back(row);
  }
  json nn = json::array();
  for (const auto& [r, c] : h.nn) nn.push_back({r, c});
  json flows = json::array();
  for (const auto& f : h.flows) flows.push_back({{"r", f.row}, {"c", f.col}, {"mass", f.mass}});
  return {{"rows", h.rows}, {"cols", h.cols}, {"sim", sim}, {"nn", nn}, {"flows", flows}};
}

json to_json(const AlignerConfig& c) {
  return {{"band_width", c.band_width}, {"theta_full", c.theta_full}, {"theta_half", c.theta_half},
          {"half_ratio", c.half_ratio}, {"mutual_best", c.mutual_best}, {"binning", c.binning},
          {"prune", c.prune}};
}

AlignerConfig aligner_config_from_json(const json& j, AlignerConfig c) {
  if (!j.is_object()) throw ValidationError("aligner config must be an object");
  c.band_width = j.value("band_width", c.band_width);
  c.theta_full = j.value("theta_full", c.theta_full);
  c.theta_half = j.value("theta_half", c.theta_half);
  c.half_ratio = j.value("half_ratio", c.half_ratio);
  c.mutual_best = j.value("mutual_best", c.mutual_best);
  c.binning = j.value("binning", c.binning);
  c.prune = j.value("prune", c.prune);
  c.validate();
  return c;
}

json to_json(const AlignmentPair& p) {
  json span = nullptr;
  if (p.span) span = json::array({p.span->begin, p.span->end});
  return {{"a", to_json(p.a)}, {"b", to_json(p.b)}, {"sim", p.similarity}, {"bin", to_string(p.bin)}, {"span", span}};
}

AlignmentPair alignment_pair_from_json(const json& j) {
  AlignmentPair p;
  p.a = line_id_from_json(j.at("a"));
  p.b = line_id_from_json(j.at("b"));
  p.similarity = j.at("sim").get<double>();
  p.bin = bin_from_string(j.at("bin").get<std::string>());
  if (j.contains("span") && !j.at("span").is_null())
    p.span = Span{j.at("span")[0].get<std::size_t>(), j.at("span")[1].get<std::size_t>()};
  return p;
}

json to_json(const AlignmentKey& k) { return {{"a", to_json(k.a)}, {"b", to_json(k.b)}, {"bin", to_string(k.bin)}}; }

AlignmentKey alignment_key_from_json(const json& j) {
  AlignmentKey k;
  k.a = line_id_from_json(j.at("a"));
  k.b = line_id_from_json(j.at("b"));
  k.bin = bin_from_string(j.value("bin", std::string("full")));
  return k;
}

std::string alignment_set_to_jsonl(const AlignmentSet& set) {
  std::string out = json{{"type", "header"},
                         {"iteration", set.iteration},
                         {"a", set.edition_a},
                         {"b", set.edition_b},
                         {"config", to_json(set.config)},
                         {"config_hash", set.config_hash},
                         {"pairs", set.pairs.size()}}
                        .dump();
  out.push_back('\n');
  for (const auto& p : set.pairs) {
    out += to_json(p).dump();
    out.push_back('\n');
  }
  return out;
}

AlignmentSet alignment_set_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("alignment file is empty");
  const json header = json::parse(line);
  if (header.value("type", "") != "header") throw ValidationError("alignment file lacks a header record");
  AlignmentSet set;
  set.iteration = header.at("iteration").get<std::uint64_t>();
  set.edition_a = header.at("a").get<std::string>();
  set.edition_b = header.at("b").get<std::string>();
  set.config = aligner_config_from_json(header.at("config"));
  set.config_hash = header.at("config_hash").get<std::string>();
  while (std::getline(in, line))
    if (!line.empty()) set.pairs.push_back(alignment_pair_from_json(json::parse(line)));
  return set;
}

json to_json(const AlignmentDiff& d) {
  auto keys = [](const std::set<AlignmentKey>& s) {
    json a = json::array();
    for (const auto& k : s) a.push_back(to_json(k));
    return a;
  };
  return {{"added", keys(d.added)}, {"removed", keys(d.removed)}, {"retained", keys(d.retained)}};
}

json to_json(const FeedbackConfig& c) {
  return {{"eta", c.eta}, {"flow_floor", c.flow_floor}, {"max_step", c.max_step}};
}

FeedbackConfig feedback_config_from_json(const json& j, FeedbackConfig c) {
  c.eta = j.value("eta", c.eta);
  c.flow_floor = j.value("flow_floor", c.flow_floor);
  c.max_step = j.value("max_step", c.max_step);
  c.validate();
  return c;
}

json to_json(const FeedbackEvent& e) {
  json j = {{"event_id", e.event_id}, {"base_iteration", e.base_iteration}, {"timestamp", e.timestamp}};
  if (const auto* r = std::get_if<Rating>(&e.kind)) {
    j["kind"] = "rating";
    j["pair"] = to_json(r->pair);
    j["rating"] = r->rating;
    j["plan"] = e.plan_digest;
  } else {
    const auto& d = std::get<Drag>(e.kind);
    j["kind"] = "drag";
    j["i"] = d.i;
    j["j"] = d.j;
    j["target"] = d.target_similarity;
  }
  return j;
}

FeedbackEvent event_from_json(const json& j) {
  FeedbackEvent e;
  e.event_id = j.at("event_id").get<std::uint64_t>();
  e.base_iteration = j.at("base_iteration").get<std::uint64_t>();
  e.timestamp = j.value("timestamp", "");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "rating") {
    e.kind = Rating{alignment_key_from_json(j.at("pair")), j.at("rating").get<int>()};
    e.plan_digest = j.at("plan").get<std::string>();
  } else if (kind == "drag") {
    e.kind = Drag{j.at("i").get<TokenId>(), j.at("j").get<TokenId>(), j.at("target").get<double>()};
  } else {
    throw ValidationError("unknown event kind '" + kind + "'");
  }
  return e;
}

json to_json(const EmbeddingConfig& c) { return {{"dim", c.dim}, {"window", c.window}, {"seed", c.seed}}; }

EmbeddingConfig embedding_config_from_json(const json& j, EmbeddingConfig c) {
  c.dim = j.value("dim", c.dim);
  c.window = j.value("window", c.window);
  c.seed = j.value("seed", c.seed);
  return c;
}

json bundle_payload_json(const BlindBundle& b) {
  auto pairs = [](const AlignmentSet& s) {
    json a = json::array();
    for (const auto& p : s.pairs) a.push_back(to_json(p));
    return a;
  };
  return {{"bundle_id", b.bundle_id},
          {"editions", json::array({b.presented[0].edition_a, b.presented[0].edition_b})},
          {"X", pairs(b.presented[0])},
          {"Y", pairs(b.presented[1])}};
}

json bundle_key_json(const BlindBundle& b) {
  return {{"bundle_id", b.bundle_id}, {"seed", b.seed}, {"X", b.truth[0]}, {"Y", b.truth[1]}};
}

json to_json(const Evaluation& e) {
  return {{"bundle_id", e.bundle_id}, {"verdict", e.verdict}, {"preferred", e.preferred}, {"timestamp", e.timestamp}};
}

}  // namespace collatio
