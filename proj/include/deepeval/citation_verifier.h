#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepeval/fetcher.h"
#include "deepeval/judge_gateway.h"
#include "deepeval/report_parser.h"
#include "deepeval/task_model.h"

namespace deepeval {

struct ClaimGroup {
  std::string url;  // normalized
  std::vector<ClaimUnit> claims;
};

/// One group per distinct URL, in order of first appearance. A claim
/// citing several URLs joins each of their groups.
std::vector<ClaimGroup> GroupClaimsByUrl(const std::vector<ClaimCitations>& pairs);

bool IsAccessible(const FetchResult& result);

enum class CitationErrorKind { kE1, kE2, kE3 };
std::string_view CitationErrorKindName(CitationErrorKind k);

struct CitationError {
  CitationErrorKind kind;
  std::string url;                   // "[n]" for an unresolved numbered key
  std::optional<std::string> claim;  // E3 only
  std::string evidence;              // fetch status or judge reason
};

struct CitationAuditSummary {
  int e1 = 0;
  int e2 = 0;
  int e3 = 0;
  std::vector<CitationError> errors;
  std::size_t distinct_urls = 0;
  std::size_t cache_hits = 0;          // fetcher-wide snapshot; not persisted
  std::size_t unknown_claims = 0;      // support verdict unavailable, excluded
  std::size_t unverifiable_urls = 0;   // paywalled, excluded when so configured
  std::size_t checked_pairs = 0;       // (claim, source) pairs judged for support
  std::vector<std::string> warnings;

  int total() const { return e1 + e2 + e3; }
};

nlohmann::json CitationAuditToJson(const CitationAuditSummary& s);
CitationAuditSummary CitationAuditFromJson(const nlohmann::json& j);

ResponseSchema RelevanceSchema();
ResponseSchema SupportSchema(std::size_t claim_count);

struct VerifierOptions {
  bool paywall_unverifiable = false;  // 402/403 excluded instead of E1
};

/// Citation accuracy: per cited URL, an accessibility gate (E1), a coarse
/// relevance gate on the page opening (E2), then one support verdict per
/// claim (E3). Judges are tried in roster order until one answers.
class CitationVerifier {
 public:
  CitationVerifier(JudgeGateway& gateway, Fetcher& fetcher, VerifierOptions options = {});

  /// Throws OfflineCacheMiss when the fetcher is offline and a page is missing.
  CitationAuditSummary Audit(const ResolvedTask& task, const ParsedReport& report);

  /// nullopt when no judge produced a verdict.
  std::optional<bool> CoarseRelevance(const ResolvedTask& task, const ClaimGroup& group, const FetchResult& page,
                                      std::string* reason);
  /// One verdict per claim, or nullopt when no judge produced a full set.
  std::optional<std::vector<bool>> VerifySupport(const ClaimGroup& group, const FetchResult& page,
                                                 std::vector<std::string>* reasons);

 private:
  std::optional<JudgeResponse> FirstAnswer(const RenderedPrompt& prompt, const ResponseSchema& schema);

  JudgeGateway& gateway_;
  Fetcher& fetcher_;
  VerifierOptions options_;
};

}  // namespace deepeval
