#pragma once

#include <memory>
#include <string>

#include "collatio/project.hpp"

namespace collatio {

// HTTP API over one project. Many readers, one writer at a time: feedback and
// realign requests queue on a writer lock and get 409 if it cannot be taken in time.
class Server {
 public:
  explicit Server(Project& project);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Blocks until stop(). Returns false when the address cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; follow with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace collatio
