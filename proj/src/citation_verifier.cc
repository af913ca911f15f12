#include "deepeval/citation_verifier.h"

#include <future>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace deepeval {
namespace {

using json = nlohmann::json;

std::string NumberedClaims(const std::vector<ClaimUnit>& claims) {
  std::string out;
  for (std::size_t i = 0; i < claims.size(); ++i) out += fmt::format("{}. {}\n", i + 1, claims[i].text);
  return out;
}

bool Paywalled(const FetchResult& r) {
  return r.status == FetchStatus::kHttpError && (r.http_code == 402 || r.http_code == 403);
}

struct GroupOutcome {
  std::vector<CitationError> errors;
  std::vector<std::string> warnings;
  std::size_t unknown_claims = 0;
  std::size_t checked_pairs = 0;
  bool unverifiable = false;
};

}  // namespace

std::vector<ClaimGroup> GroupClaimsByUrl(const std::vector<ClaimCitations>& pairs) {
  std::vector<ClaimGroup> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& pair : pairs) {
    std::set<std::string> seen;
    for (const auto& url : pair.urls) {
      if (!seen.insert(url).second) continue;
      auto [it, fresh] = index.emplace(url, groups.size());
      if (fresh) groups.push_back({url, {}});
      groups[it->second].claims.push_back(pair.claim);
    }
  }
  return groups;
}

bool IsAccessible(const FetchResult& result) { return result.status == FetchStatus::kOk; }

std::string_view CitationErrorKindName(CitationErrorKind k) {
  switch (k) {
    case CitationErrorKind::kE1: return "E1";
    case CitationErrorKind::kE2: return "E2";
    case CitationErrorKind::kE3: return "E3";
  }
  return "?";
}

json CitationAuditToJson(const CitationAuditSummary& s) {
  json errors = json::array();
  for (const auto& e : s.errors) {
    errors.push_back({{"kind", CitationErrorKindName(e.kind)},
                      {"url", e.url},
                      {"claim", e.claim ? json(*e.claim) : json(nullptr)},
                      {"evidence", e.evidence}});
  }
  return {{"e1", s.e1},
          {"e2", s.e2},
          {"e3", s.e3},
          {"total", s.total()},
          {"errors", errors},
          {"distinct_urls", s.distinct_urls},
          {"unknown_claims", s.unknown_claims},
          {"unverifiable_urls", s.unverifiable_urls},
          {"checked_pairs", s.checked_pairs},
          {"warnings", s.warnings}};
}

CitationAuditSummary CitationAuditFromJson(const json& j) {
  CitationAuditSummary s;
  s.e1 = j.at("e1").get<int>();
  s.e2 = j.at("e2").get<int>();
  s.e3 = j.at("e3").get<int>();
  for (const auto& e : j.at("errors")) {
    const auto kind = e.at("kind").get<std::string>();
    CitationError err{kind == "E1" ? CitationErrorKind::kE1 : kind == "E2" ? CitationErrorKind::kE2 : CitationErrorKind::kE3,
                      e.at("url").get<std::string>(), std::nullopt, e.value("evidence", "")};
    if (!e.at("claim").is_null()) err.claim = e["claim"].get<std::string>();
    s.errors.push_back(std::move(err));
  }
  s.distinct_urls = j.value("distinct_urls", 0u);
  s.unknown_claims = j.value("unknown_claims", 0u);
  s.unverifiable_urls = j.value("unverifiable_urls", 0u);
  s.checked_pairs = j.value("checked_pairs", 0u);
  s.warnings = j.value("warnings", std::vector<std::string>{});
  return s;
}

ResponseSchema RelevanceSchema() {
  return {"relevance", [](const json& j) -> std::optional<std::string> {
            if (!j.contains("relevant") || !j["relevant"].is_boolean()) return "missing boolean relevant";
            return std::nullopt;
          }};
}

ResponseSchema SupportSchema(std::size_t claim_count) {
  return {"support", [claim_count](const json& j) -> std::optional<std::string> {
            if (!j.contains("verdicts") || !j["verdicts"].is_array()) return "missing verdicts array";
            std::set<long> seen;
            for (const auto& v : j["verdicts"]) {
              if (!v.is_object() || !v.contains("claim_id") || !v["claim_id"].is_number_integer()) {
                return "verdict without integer claim_id";
              }
              const long id = v["claim_id"].get<long>();
              if (id < 1 || id > static_cast<long>(claim_count)) return fmt::format("claim_id {} out of range", id);
              if (!seen.insert(id).second) return fmt::format("duplicate claim_id {}", id);
              if (!v.contains("supported") || !v["supported"].is_boolean()) {
                return fmt::format("claim {} lacks boolean supported", id);
              }
            }
            if (seen.size() != claim_count) return fmt::format("{} of {} claims judged", seen.size(), claim_count);
            return std::nullopt;
          }};
}

CitationVerifier::CitationVerifier(JudgeGateway& gateway, Fetcher& fetcher, VerifierOptions options)
    : gateway_(gateway), fetcher_(fetcher), options_(options) {}

std::optional<JudgeResponse> CitationVerifier::FirstAnswer(const RenderedPrompt& prompt,
                                                           const ResponseSchema& schema) {
  for (const auto& id : gateway_.judge_ids()) {
    auto r = gateway_.Query(id, prompt, schema);
    if (r.ok()) return r;
  }
  return std::nullopt;
}

std::optional<bool> CitationVerifier::CoarseRelevance(const ResolvedTask& task, const ClaimGroup& group,
                                                      const FetchResult& page, std::string* reason) {
  const auto prompt = RenderPrompt(RelevanceTemplate(), {{"task", task.query},
                                                         {"url", group.url},
                                                         {"title", page.title},
                                                         {"page_prefix", page.content_prefix},
                                                         {"claims", NumberedClaims(group.claims)}});
  auto r = FirstAnswer(prompt, RelevanceSchema());
  if (!r) return std::nullopt;
  if (reason) *reason = r->parsed->value("reason", "");
  return (*r->parsed)["relevant"].get<bool>();
}

std::optional<std::vector<bool>> CitationVerifier::VerifySupport(const ClaimGroup& group, const FetchResult& page,
                                                                 std::vector<std::string>* reasons) {
  const auto prompt = RenderPrompt(
      SupportTemplate(),
      {{"url", group.url}, {"page_content", page.content_text}, {"claims", NumberedClaims(group.claims)}});
  auto r = FirstAnswer(prompt, SupportSchema(group.claims.size()));
  if (!r) return std::nullopt;
  std::vector<bool> supported(group.claims.size());
  if (reasons) reasons->assign(group.claims.size(), "");
  for (const auto& v : (*r->parsed)["verdicts"]) {
    const auto i = static_cast<std::size_t>(v["claim_id"].get<long>() - 1);
    supported[i] = v["supported"].get<bool>();
    if (reasons && v.contains("reason") && v["reason"].is_string()) (*reasons)[i] = v["reason"].get<std::string>();
  }
  return supported;
}

CitationAuditSummary CitationVerifier::Audit(const ResolvedTask& task, const ParsedReport& report) {
  const auto pairs = ExtractClaimCitationPairs(report);
  const auto groups = GroupClaimsByUrl(pairs);

  std::vector<std::future<GroupOutcome>> futures;
  for (const auto& group : groups) {
    futures.push_back(std::async(std::launch::async, [this, &task, &group] {
      GroupOutcome out;
      const auto page = fetcher_.Fetch(group.url);
      if (!IsAccessible(page)) {
        if (options_.paywall_unverifiable && Paywalled(page)) {
          out.unverifiable = true;
          return out;
        }
        out.errors.push_back({CitationErrorKind::kE1, group.url, std::nullopt, page.status_label()});
        return out;
      }
      std::string reason;
      auto relevant = CoarseRelevance(task, group, page, &reason);
      if (!relevant) {
        out.warnings.push_back(fmt::format("relevance check for {} failed on every judge; treated as relevant", group.url));
      } else if (!*relevant) {
        out.errors.push_back({CitationErrorKind::kE2, group.url, std::nullopt, reason});
        return out;
      }
      std::vector<std::string> reasons;
      auto supported = VerifySupport(group, page, &reasons);
      if (!supported) {
        out.unknown_claims = group.claims.size();
        out.warnings.push_back(fmt::format("support check for {} failed on every judge; {} claim(s) excluded",
                                           group.url, group.claims.size()));
        return out;
      }
      out.checked_pairs = group.claims.size();
      for (std::size_t i = 0; i < group.claims.size(); ++i) {
        if (!(*supported)[i]) {
          out.errors.push_back({CitationErrorKind::kE3, group.url, group.claims[i].text, reasons[i]});
        }
      }
      return out;
    }));
  }

  CitationAuditSummary summary;
  // Numbered keys that resolve to no URL are invalid links.
  std::set<int> unresolved;
  for (const auto& p : pairs) unresolved.insert(p.unresolved_numbers.begin(), p.unresolved_numbers.end());
  for (int n : unresolved) {
    summary.errors.push_back({CitationErrorKind::kE1, fmt::format("[{}]", n), std::nullopt, "no reference entry with a URL"});
  }

  std::exception_ptr failure;
  for (auto& f : futures) {
    try {
      auto out = f.get();
      for (auto& e : out.errors) summary.errors.push_back(std::move(e));
      for (auto& w : out.warnings) summary.warnings.push_back(std::move(w));
      summary.unknown_claims += out.unknown_claims;
      summary.checked_pairs += out.checked_pairs;
      summary.unverifiable_urls += out.unverifiable ? 1 : 0;
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& e : summary.errors) {
    switch (e.kind) {
      case CitationErrorKind::kE1: ++summary.e1; break;
      case CitationErrorKind::kE2: ++summary.e2; break;
      case CitationErrorKind::kE3: ++summary.e3; break;
    }
  }
  summary.distinct_urls = groups.size();
  const auto stats = fetcher_.stats();
  summary.cache_hits = stats.cache_hits;
  for (const auto& w : summary.warnings) spdlog::warn("{}", w);
  return summary;
}

}  // namespace deepeval
