#pragma once

#include <string>

#include "json.hpp"

#include "collatio/aligner.hpp"
#include "collatio/analytics.hpp"
#include "collatio/corpus.hpp"
#include "collatio/embedding.hpp"
#include "collatio/feedback.hpp"
#include "collatio/transport.hpp"

namespace collatio {

using nlohmann::json;

json to_json(const LineId& id);
LineId line_id_from_json(const json& j);

json edition_to_json(const Edition& e);
Edition edition_from_json(const json& j, const Vocabulary& vocab);

// {"token_to_id": {form: id}, "frequencies": {id: count}}
json vocabulary_to_json(const Vocabulary& v);
Vocabulary vocabulary_from_json(const json& j);

json to_json(const TransportPlan& plan);
TransportPlan plan_from_json(const json& j);
// Content digest of the canonical plan serialization.
std::string plan_digest(const TransportPlan& plan);

json to_json(const HeatmapData& h);

json to_json(const AlignerConfig& c);
AlignerConfig aligner_config_from_json(const json& j, AlignerConfig base = {});

json to_json(const AlignmentPair& p);
AlignmentPair alignment_pair_from_json(const json& j);
json to_json(const AlignmentKey& k);
AlignmentKey alignment_key_from_json(const json& j);

// JSON lines: header record, then one record per pair.
std::string alignment_set_to_jsonl(const AlignmentSet& set);
AlignmentSet alignment_set_from_jsonl(const std::string& text);

json to_json(const AlignmentDiff& d);

json to_json(const FeedbackConfig& c);
FeedbackConfig feedback_config_from_json(const json& j, FeedbackConfig base = {});

json to_json(const FeedbackEvent& e);
FeedbackEvent event_from_json(const json& j);

json to_json(const EmbeddingConfig& c);
EmbeddingConfig embedding_config_from_json(const json& j, EmbeddingConfig base = {});

// Provenance-free payload: the two presented sets as bare pair lists.
json bundle_payload_json(const BlindBundle& b);
json bundle_key_json(const BlindBundle& b);

json to_json(const Evaluation& e);

}  // namespace collatio
