#include "collatio/server.hpp"

#include <chrono>
#include <mutex>
#include <shared_mutex>

#include "httplib.h"

#include "collatio/error.hpp"
#include "collatio/serialize.hpp"

namespace collatio {

namespace {

constexpr auto kWriterWait = std::chrono::seconds(30);

void reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const ValidationError& e) {
      reply(res, {{"error", e.what()}}, 422);
    } catch (const json::exception& e) {
      reply(res, {{"error", e.what()}}, 422);
    } catch (const NotFoundError& e) {
      reply(res, {{"error", e.what()}}, 404);
    } catch (const ConflictError& e) {
      reply(res, {{"error", e.what()}}, 409);
    } catch (const std::exception& e) {
      reply(res, {{"error", e.what()}}, 500);
    }
  };
}

std::string param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw ValidationError(std::string("missing query parameter '") + name + "'");
  return req.get_param_value(name);
}

std::uint64_t uint_param(const httplib::Request& req, const char* name) {
  const std::string s = param(req, name);
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError(std::string("query parameter '") + name + "' must be a non-negative integer");
  }
}

TokenId token_from_json(const json& j, const Vocabulary& vocab) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto id = j.get<long long>();
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) throw NotFoundError("unknown token id");
    return static_cast<TokenId>(id);
  }
  if (j.is_string()) return vocab.id(j.get<std::string>());
  throw ValidationError("token must be an id or a surface form");
}

}  // namespace

struct Server::Impl {
  explicit Impl(Project& p) : project(p) {}

  Project& project;
  httplib::Server http;
  std::shared_mutex state;
  std::timed_mutex writer;

  std::pair<std::string, std::string> edition_pair(const httplib::Request& req) {
    if (req.has_param("a") && req.has_param("b")) return {req.get_param_value("a"), req.get_param_value("b")};
    if (auto p = project.active_pair()) return *p;
    throw ValidationError("query parameters 'a' and 'b' are required until a pair has been aligned");
  }

  template <class F>
  json write(F&& f) {
    std::unique_lock w(writer, std::defer_lock);
    if (!w.try_lock_for(kWriterWait)) throw ConflictError("another write is in progress");
    std::unique_lock s(state);
    return f();
  }

  json feedback_response(const FeedbackResult& r) {
    return {{"iteration", r.iteration}, {"changed_tokens", r.changed_tokens}, {"event_id", r.event.event_id}};
  }

  void routes() {
    http.Get("/editions", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock s(state);
      json out = json::array();
      for (const auto& e : project.corpus().editions()) {
        json lines = json::array();
        for (const auto& l : e.lines)
          lines.push_back({{"index", l.id.index}, {"raw", l.raw}, {"tokens", l.forms}, {"token_ids", l.tokens}});
        out.push_back({{"edition_id", e.edition_id}, {"title", e.title}, {"lines", lines}});
      }
      reply(res, out);
    }));

    http.Get("/alignments/diff", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock s(state);
      const auto [a, b] = edition_pair(req);
      const auto from = project.alignment(uint_param(req, "from"), a, b);
      const auto to = project.alignment(uint_param(req, "to"), a, b);
      reply(res, to_json(diff(from, to)));
    }));

    http.Get(R"(/alignments/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock s(state);
      const auto [a, b] = edition_pair(req);
      const auto set = project.alignment(std::stoull(req.matches[1].str()), a, b);
      json pairs = json::array();
      for (const auto& p : set.pairs) pairs.push_back(to_json(p));
      reply(res, {{"iteration", set.iteration},
                  {"a", set.edition_a},
                  {"b", set.edition_b},
                  {"config", to_json(set.config)},
                  {"config_hash", set.config_hash},
                  {"pairs", pairs}});
    }));

    http.Get("/heatmap", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock s(state);
      const Line& a = project.corpus().line(line_id_from_json(param(req, "a")));
      const Line& b = project.corpus().line(line_id_from_json(param(req, "b")));
      const auto iter = req.has_param("iter") ? uint_param(req, "iter") : project.latest_iteration();
      reply(res, to_json(pair_heatmap(*project.snapshot(iter), a, b)));
    }));

    http.Get("/wordchange", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock s(state);
      const auto from = project.snapshot(uint_param(req, "from"));
      const auto to = project.snapshot(uint_param(req, "to"));
      const Line& line = project.corpus().line(line_id_from_json(param(req, "line")));
      const std::size_t k = req.has_param("k") ? uint_param(req, "k") : project.config().churn_k;
      const auto mode = heatmap_mode_from_string(req.has_param("mode") ? req.get_param_value("mode") : "displacement");
      json words = json::array();
      for (std::size_t p = 0; p < line.tokens.size(); ++p) {
        const auto w = word_change(*from, *to, line.tokens[p], k);
        words.push_back({{"position", p}, {"token", w.token}, {"form", line.forms[p]},
                         {"displacement", w.displacement}, {"churn", w.churn}});
      }
      reply(res, {{"line", to_json(line.id)},
                  {"mode", mode == HeatmapMode::Displacement ? "displacement" : "churn"},
                  {"k", k},
                  {"tokens", line.forms},
                  {"intensity", line_heatmap(*from, *to, line, mode, k)},
                  {"words", words}});
    }));

    http.Post("/feedback/rating", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      const json& pair = body.at("pair");
      const LineId a = line_id_from_json(pair.at("a"));
      const LineId b = line_id_from_json(pair.at("b"));
      std::optional<Bin> bin;
      if (pair.contains("bin") && !pair.at("bin").is_null()) bin = bin_from_string(pair.at("bin").get<std::string>());
      const int rating = body.at("rating").get<int>();
      reply(res, write([&] { return feedback_response(project.rate(a, b, bin, rating)); }));
    }));

    http.Post("/feedback/drag", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      reply(res, write([&] {
        const auto& vocab = project.corpus().vocabulary();
        const TokenId i = token_from_json(body.at("i"), vocab);
        const TokenId j = token_from_json(body.at("j"), vocab);
        return feedback_response(project.drag(i, j, body.at("target").get<double>()));
      }));
    }));

    http.Post("/realign", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      reply(res, write([&] {
        std::pair<std::string, std::string> p;
        if (body.contains("a") && body.contains("b"))
          p = {body.at("a").get<std::string>(), body.at("b").get<std::string>()};
        else if (auto active = project.active_pair())
          p = *active;
        else
          throw ValidationError("realign needs 'a' and 'b' the first time");
        std::optional<AlignerConfig> cfg;
        if (body.contains("config")) cfg = aligner_config_from_json(body.at("config"), project.config().aligner);
        const auto r = project.realign(p.first, p.second, cfg);
        return json{{"iteration", r.set.iteration}, {"a", p.first}, {"b", p.second},
                    {"pairs", r.set.pairs.size()}, {"config_hash", r.set.config_hash}, {"diff", to_json(r.diff)}};
      }));
    }));

    http.Get("/history", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock s(state);
      json events = json::array();
      for (const auto& e : project.events()) events.push_back(to_json(e));
      reply(res, {{"iteration", project.trained() ? json(project.latest_iteration()) : json(nullptr)},
                  {"events", events}});
    }));
  }
};

Server::Server(Project& project) : impl_(std::make_unique<Impl>(project)) { impl_->routes(); }

Server::~Server() = default;

bool Server::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }

int Server::bind_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }

bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace collatio
