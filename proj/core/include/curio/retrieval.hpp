#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "curio/action.hpp"
#include "curio/appcards.hpp"
#include "curio/divergence.hpp"
#include "curio/gate.hpp"

namespace curio {

inline constexpr int kDefaultMaxUnits = 16;  // per-source unit cap
inline constexpr int kMergedUnitCap = 32;    // cap after merging all sources
inline constexpr int kMaxFocusContributionTokens = 8;

enum class SourceKind { web_docs, git_history, trajectories };

const char* source_kind_name(SourceKind kind);

// What to look for once the gate has fired for an app.
struct RetrievalQuery {
  std::string app_id;
  double u_value = 0.0;
  double tau = 0.0;
  std::vector<std::string> focus_terms;  // non-empty, duplicate-free
  int max_units = kDefaultMaxUnits;
};

// One piece of evidence from a knowledge source.
struct KnowledgeUnit {
  SourceKind source_kind = SourceKind::web_docs;
  std::string locator;  // URL, path@commit, or trajectory id
  std::string excerpt;
  double relevance = 0.0;  // in [0, 1]

  bool operator==(const KnowledgeUnit&) const = default;
};

// A knowledge source. fetch returns at most query.max_units units, each with
// source_kind equal to kind(), ordered by relevance descending (ties by
// locator ascending). Transient failures raise SourceUnavailable; corrupted
// backing data raises MalformedCorpus naming the offending file. A
// network-backed implementation is expected to apply a request timeout and
// retry transient failures 3 times with exponential backoff before giving up
// with SourceUnavailable; the local reference clients below have nothing to
// retry.
class SourceClient {
 public:
  virtual ~SourceClient() = default;
  virtual SourceKind kind() const = 0;
  virtual std::vector<KnowledgeUnit> fetch(const RetrievalQuery& query) const = 0;
};

// Focus-term matching used by the reference clients: each focus term is
// tokenized (lowercase alphanumeric runs) and matched as a consecutive token
// sequence in the excerpt's token stream. relevance = matches / token count,
// clamped to [0, 1]. Exposed so tests and other clients can share it.
double term_frequency_relevance(const std::string& excerpt,
                                const std::vector<std::string>& focus_terms);

// Reads a directory of plain-text/HTML/Markdown files; one unit per file
// that mentions a focus term. locator = file name, excerpt = file content.
class DocsCorpusClient : public SourceClient {
 public:
  explicit DocsCorpusClient(std::filesystem::path root);
  SourceKind kind() const override { return SourceKind::web_docs; }
  std::vector<KnowledgeUnit> fetch(const RetrievalQuery& query) const override;

 private:
  std::filesystem::path root_;
};

// Reads a repository export: one JSON object per line with "commit",
// "message" and optionally "files". One unit per commit whose message
// mentions a focus term; locator = <export file name>@<commit>.
class GitExportClient : public SourceClient {
 public:
  explicit GitExportClient(std::filesystem::path export_file);
  SourceKind kind() const override { return SourceKind::git_history; }
  std::vector<KnowledgeUnit> fetch(const RetrievalQuery& query) const override;

 private:
  std::filesystem::path export_file_;
};

// Reads a directory of episode logs (JSONL transitions). One unit per
// episode whose summary mentions a focus term; locator = file stem, excerpt
// = the stem plus one "<app> --<action>--> <app>" line per transition.
class TrajectoryCorpusClient : public SourceClient {
 public:
  explicit TrajectoryCorpusClient(std::filesystem::path root);
  SourceKind kind() const override { return SourceKind::trajectories; }
  std::vector<KnowledgeUnit> fetch(const RetrievalQuery& query) const override;

 private:
  std::filesystem::path root_;
};

// Turns retrieved units into a draft card. Implementations must be
// deterministic functions of (app_id, units).
class Consolidator {
 public:
  virtual ~Consolidator() = default;
  virtual AppCard consolidate(const std::string& app_id,
                              const std::vector<KnowledgeUnit>& units) const = 0;
};

// Deterministic reference consolidator: one entry per unit (title = first
// clause of the excerpt, body = excerpt), grouped by inferred category in
// declaration order, preserving merged unit order within a category. Each
// entry cites its unit's locator in the card provenance.
class TemplateConsolidator : public Consolidator {
 public:
  AppCard consolidate(const std::string& app_id,
                      const std::vector<KnowledgeUnit>& units) const override;
};

// Builds the retrieval query for a fired gate: focus_terms are the top
// positive divergence contributions (residual bucket excluded, capped at
// kMaxFocusContributionTokens) followed by the kinds of recent actions,
// duplicates removed while preserving order. When both are empty the app id
// itself becomes the focus. Raises GateNotTriggered unless U > tau.
RetrievalQuery build_query(const AppAccumulator& acc, const GateConfig& config,
                           const InfoGainReport& report,
                           const std::vector<Action>& recent_actions,
                           int max_units = kDefaultMaxUnits);

// Flattens per-client results, drops exact duplicate excerpts, sorts by
// relevance descending with (source_kind, locator) tie-breaks, and caps the
// result at `cap` units.
std::vector<KnowledgeUnit> merge_units(const std::vector<std::vector<KnowledgeUnit>>& per_client,
                                       int cap = kMergedUnitCap);

// Runs a consolidator with error containment: NoUnits when units is empty,
// ConsolidatorFailure when a plugin throws anything that is not already a
// library error, and validation of the returned card.
AppCard consolidate(const std::string& app_id, const std::vector<KnowledgeUnit>& units,
                    const Consolidator& consolidator);

// Full retrieval transaction: query, fetch from every client concurrently,
// merge, consolidate, store the card under the next version, and mark the
// accumulator triggered. Any failure propagates before the store or the
// accumulator is touched, so a failed call leaves both exactly as they were.
AppCard retrieve_and_update(const std::string& app_id, AppAccumulator& acc,
                            const GateConfig& config, const InfoGainReport& report,
                            const std::vector<Action>& recent_actions,
                            const std::vector<const SourceClient*>& clients,
                            const Consolidator& consolidator, CardStore& store,
                            int max_units = kDefaultMaxUnits);

}  // namespace curio
