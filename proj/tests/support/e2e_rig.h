#pragma once

// The committed end-to-end fixture (tests/e2e) copied into a scratch
// directory, with its simulated web served locally.

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepeval/cli.h"
#include "deepeval/hashing.h"
#include "support/mock_web_server.h"

#ifndef DEEPEVAL_SOURCE_DIR
#error "DEEPEVAL_SOURCE_DIR must be defined"
#endif

namespace deepeval::testing {

namespace fs = std::filesystem;

inline fs::path SourceDir() { return fs::path(DEEPEVAL_SOURCE_DIR); }
inline fs::path FixtureDir() { return SourceDir() / "tests" / "e2e"; }
inline fs::path GoldenDir() { return SourceDir() / "tests" / "golden" / "e2e"; }

inline std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void Spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline void LoadFixturePages(MockWebServer& web, const fs::path& pages_json) {
  for (const auto& p : nlohmann::json::parse(Slurp(pages_json))) {
    MockPage page;
    page.status = p.value("status", 200);
    page.location = p.value("location", "");
    if (p.contains("title")) {
      page.body = "<html><head><title>" + p["title"].get<std::string>() + "</title></head><body>" +
                  p.value("body", "") + "</body></html>";
    } else {
      page.body = p.value("body", "");
      page.content_type = "text/plain";
    }
    web.Add(p.at("path").get<std::string>(), page);
  }
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("deepeval-" + tag + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

/// A private copy of the fixture plus a web server for its pages.
struct E2eWorkspace {
  ScratchDir dir{"e2e"};
  MockWebServer web;

  E2eWorkspace() {
    fs::copy(FixtureDir(), dir.path(), fs::copy_options::recursive);
    LoadFixturePages(web, dir.path() / "pages.json");
  }
  fs::path config() const { return dir.path() / "config.json"; }
  fs::path results() const { return dir.path() / "results" / "e2e"; }

  CliResult Evaluate(std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"evaluate", "--config", config().string(), "--mock-base-url", web.base_url()};
    args.insert(args.end(), extra.begin(), extra.end());
    return Cli(args);
  }
};

/// The results directory in comparable form: top-level files verbatim and
/// the transcript directory as a sorted digest listing.
inline std::map<std::string, std::string> Snapshot(const fs::path& results) {
  std::map<std::string, std::string> files;
  std::vector<std::string> digests;
  if (!fs::exists(results)) return files;
  for (const auto& e : fs::directory_iterator(results)) {
    if (e.is_regular_file()) files[e.path().filename().string()] = Slurp(e.path());
  }
  if (fs::exists(results / "transcripts")) {
    for (const auto& e : fs::directory_iterator(results / "transcripts")) {
      digests.push_back(Sha256Hex(Slurp(e.path())) + "  " + e.path().filename().string() + "\n");
    }
  }
  std::sort(digests.begin(), digests.end());
  std::string listing;
  for (const auto& d : digests) listing += d;
  files["transcripts.sha256"] = listing;
  return files;
}

inline std::map<std::string, std::string> ReadGolden(const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = Slurp(e.path());
  return files;
}

inline void WriteGolden(const fs::path& dir, const std::map<std::string, std::string>& files) {
  fs::remove_all(dir);
  for (const auto& [name, text] : files) Spit(dir / name, text);
}

}  // namespace deepeval::testing
