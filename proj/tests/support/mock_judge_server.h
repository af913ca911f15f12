#pragma once

// Local OpenAI-compatible chat-completions server that replays canned
// completion texts in order (the last one repeats).

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace deepeval::testing {

class MockJudgeServer {
 public:
  explicit MockJudgeServer(std::vector<std::string> replies) : replies_(std::move(replies)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::string text;
      {
        std::lock_guard lock(mu_);
        requests_.push_back(nlohmann::json::parse(req.body));
        text = replies_.at(std::min(next_, replies_.size() - 1));
        ++next_;
      }
      nlohmann::json body{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}};
      res.set_content(body.dump(), "application/json");
    });
    server_.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockJudgeServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::vector<nlohmann::json> requests() {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::vector<nlohmann::json> requests_;
};

}  // namespace deepeval::testing
