#include "curio/retrieval.hpp"

#include <mutex>
#include <algorithm>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "curio/errors.hpp"
#include "text_util.hpp"

namespace curio {
namespace {

using Json = nlohmann::ordered_json;

void validate_query(const RetrievalQuery& query) {
  if (query.app_id.empty()) raise(Errc::invalid_argument, "query app_id is empty");
  if (query.focus_terms.empty()) raise(Errc::invalid_argument, "query has no focus terms");
  if (query.max_units < 1) raise(Errc::invalid_argument, "max_units must be >= 1");
}

std::vector<std::vector<std::string>> focus_token_sequences(
    const std::vector<std::string>& focus_terms) {
  std::vector<std::vector<std::string>> sequences;
  for (const auto& term : focus_terms) {
    auto tokens = detail::tokenize(term);
    if (!tokens.empty()) sequences.push_back(std::move(tokens));
  }
  return sequences;
}

int count_matches(const std::vector<std::string>& tokens,
                  const std::vector<std::vector<std::string>>& sequences) {
  int matches = 0;
  for (const auto& seq : sequences) {
    if (seq.size() > tokens.size()) continue;
    for (std::size_t i = 0; i + seq.size() <= tokens.size(); ++i) {
      if (std::equal(seq.begin(), seq.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
        ++matches;
      }
    }
  }
  return matches;
}

void sort_and_cap(std::vector<KnowledgeUnit>& units, int cap) {
  std::sort(units.begin(), units.end(), [](const KnowledgeUnit& a, const KnowledgeUnit& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    if (a.source_kind != b.source_kind) return a.source_kind < b.source_kind;
    return a.locator < b.locator;
  });
  if (units.size() > static_cast<std::size_t>(cap)) units.resize(static_cast<std::size_t>(cap));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::malformed_corpus, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::filesystem::path> sorted_regular_files(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  for (const auto& item : std::filesystem::directory_iterator(root)) {
    if (item.is_regular_file()) files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// First clause of an excerpt, with emphasis markers and padding trimmed;
// capped at 80 bytes so a one-line excerpt cannot become an unwieldy title.
std::string derive_title(const std::string& body) {
  std::string first_line = body.substr(0, body.find('\n'));
  const std::size_t clause_end = first_line.find_first_of(":;.");
  std::string candidate =
      clause_end == std::string::npos ? first_line : first_line.substr(0, clause_end);
  auto strip = [](std::string& s) {
    std::size_t begin = 0;
    while (begin < s.size() && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '*')) ++begin;
    std::size_t end = s.size();
    while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '*')) --end;
    s = s.substr(begin, end - begin);
  };
  strip(candidate);
  if (candidate.empty()) {
    candidate = first_line;
    strip(candidate);
  }
  if (candidate.size() > 80) {
    candidate.resize(80);
    strip(candidate);
  }
  if (candidate.empty()) candidate = "Entry";
  return candidate;
}

// Makes an excerpt usable as a card entry body: LF endings, no trailing
// whitespace, no leading blank lines, and no line that could be mistaken
// for an entry start.
std::string sanitize_body(const std::string& excerpt) {
  std::string body;
  body.reserve(excerpt.size());
  for (char c : excerpt) {
    if (c != '\r') body.push_back(c);
  }
  auto lines = detail::split_lines(body);
  while (!lines.empty() && detail::trim(lines.front()).empty()) lines.erase(lines.begin());
  std::string out;
  for (auto& line : lines) {
    std::size_t end = line.size();
    while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t')) --end;
    line.resize(end);
    if (detail::is_entry_start(line)) line.insert(line.begin(), ' ');
    if (!out.empty()) out.push_back('\n');
    out.append(line);
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

int category_rank(CardCategory category) {
  switch (category) {
    case CardCategory::functional_semantics: return 0;
    case CardCategory::io_constraints: return 1;
    case CardCategory::ui_function_mapping: return 2;
    case CardCategory::interaction_patterns: return 3;
  }
  return 0;
}

}  // namespace

const char* source_kind_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::web_docs: return "web_docs";
    case SourceKind::git_history: return "git_history";
    case SourceKind::trajectories: return "trajectories";
  }
  return "web_docs";
}

double term_frequency_relevance(const std::string& excerpt,
                                const std::vector<std::string>& focus_terms) {
  const auto tokens = detail::tokenize(excerpt);
  if (tokens.empty()) return 0.0;
  const int matches = count_matches(tokens, focus_token_sequences(focus_terms));
  const double relevance = static_cast<double>(matches) / static_cast<double>(tokens.size());
  return std::clamp(relevance, 0.0, 1.0);
}

DocsCorpusClient::DocsCorpusClient(std::filesystem::path root) : root_(std::move(root)) {}

std::vector<KnowledgeUnit> DocsCorpusClient::fetch(const RetrievalQuery& query) const {
  validate_query(query);
  namespace fs = std::filesystem;
  if (!fs::exists(root_) || !fs::is_directory(root_)) {
    raise(Errc::source_unavailable, "docs corpus not found: " + root_.string());
  }
  std::vector<KnowledgeUnit> units;
  for (const auto& path : sorted_regular_files(root_)) {
    const std::string content = read_text_file(path);
    if (content.find('\0') != std::string::npos) {
      raise(Errc::malformed_corpus, "binary content in " + path.string());
    }
    const std::string excerpt = detail::rstrip(content);
    if (excerpt.empty()) continue;
    const double relevance = term_frequency_relevance(excerpt, query.focus_terms);
    if (relevance <= 0.0) continue;
    KnowledgeUnit unit;
    unit.source_kind = SourceKind::web_docs;
    unit.locator = path.filename().string();
    unit.excerpt = excerpt;
    unit.relevance = relevance;
    units.push_back(std::move(unit));
  }
  sort_and_cap(units, query.max_units);
  return units;
}

GitExportClient::GitExportClient(std::filesystem::path export_file)
    : export_file_(std::move(export_file)) {}

std::vector<KnowledgeUnit> GitExportClient::fetch(const RetrievalQuery& query) const {
  validate_query(query);
  namespace fs = std::filesystem;
  if (!fs::exists(export_file_) || !fs::is_regular_file(export_file_)) {
    raise(Errc::source_unavailable, "repository export not found: " + export_file_.string());
  }
  std::ifstream in(export_file_, std::ios::binary);
  if (!in) raise(Errc::source_unavailable, "cannot open " + export_file_.string());

  const std::string file_name = export_file_.filename().string();
  std::vector<KnowledgeUnit> units;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const Json doc = Json::parse(line, nullptr, false);
    const std::string where = export_file_.string() + ":" + std::to_string(line_no);
    if (doc.is_discarded() || !doc.is_object()) {
      raise(Errc::malformed_corpus, where + ": invalid JSON commit record");
    }
    if (!doc.contains("commit") || !doc.at("commit").is_string() || !doc.contains("message") ||
        !doc.at("message").is_string()) {
      raise(Errc::malformed_corpus, where + ": commit record needs string 'commit' and 'message'");
    }
    if (doc.contains("files")) {
      if (!doc.at("files").is_array()) {
        raise(Errc::malformed_corpus, where + ": 'files' must be an array");
      }
      for (const auto& item : doc.at("files")) {
        if (!item.is_string()) raise(Errc::malformed_corpus, where + ": 'files' must hold strings");
      }
    }
    const std::string commit = doc.at("commit").get<std::string>();
    if (commit.empty()) raise(Errc::malformed_corpus, where + ": empty commit id");
    const std::string excerpt = detail::rstrip(doc.at("message").get<std::string>());
    if (excerpt.empty()) continue;
    const double relevance = term_frequency_relevance(excerpt, query.focus_terms);
    if (relevance <= 0.0) continue;
    KnowledgeUnit unit;
    unit.source_kind = SourceKind::git_history;
    unit.locator = file_name + "@" + commit;
    unit.excerpt = excerpt;
    unit.relevance = relevance;
    units.push_back(std::move(unit));
  }
  sort_and_cap(units, query.max_units);
  return units;
}

TrajectoryCorpusClient::TrajectoryCorpusClient(std::filesystem::path root)
    : root_(std::move(root)) {}

std::vector<KnowledgeUnit> TrajectoryCorpusClient::fetch(const RetrievalQuery& query) const {
  validate_query(query);
  namespace fs = std::filesystem;
  if (!fs::exists(root_) || !fs::is_directory(root_)) {
    raise(Errc::source_unavailable, "trajectory corpus not found: " + root_.string());
  }
  std::vector<KnowledgeUnit> units;
  for (const auto& path : sorted_regular_files(root_)) {
    if (path.extension() != ".jsonl") continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::malformed_corpus, "cannot read " + path.string());
    std::string excerpt = path.stem().string();
    std::string line;
    int line_no = 0;
    bool any_transition = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      const Json doc = Json::parse(line, nullptr, false);
      const std::string where = path.string() + ":" + std::to_string(line_no);
      if (doc.is_discarded() || !doc.is_object()) {
        raise(Errc::malformed_corpus, where + ": invalid JSON transition record");
      }
      try {
        const std::string from = doc.at("state").at("app_id").get<std::string>();
        const std::string kind = doc.at("action").at("kind").get<std::string>();
        const std::string to = doc.at("next_state").at("app_id").get<std::string>();
        excerpt += "\n" + from + " --" + kind + "--> " + to;
        any_transition = true;
      } catch (const Json::exception&) {
        raise(Errc::malformed_corpus, where + ": transition record is missing state/action fields");
      }
    }
    if (!any_transition) continue;
    const double relevance = term_frequency_relevance(excerpt, query.focus_terms);
    if (relevance <= 0.0) continue;
    KnowledgeUnit unit;
    unit.source_kind = SourceKind::trajectories;
    unit.locator = path.stem().string();
    unit.excerpt = excerpt;
    unit.relevance = relevance;
    units.push_back(std::move(unit));
  }
  sort_and_cap(units, query.max_units);
  return units;
}

AppCard TemplateConsolidator::consolidate(const std::string& app_id,
                                          const std::vector<KnowledgeUnit>& units) const {
  if (units.empty()) raise(Errc::no_units, "no knowledge units for app '" + app_id + "'");

  struct Draft {
    CardEntry entry;
    std::string locator;
    int rank;
  };
  std::vector<Draft> drafts;
  for (const auto& unit : units) {
    const std::string body = sanitize_body(unit.excerpt);
    if (body.empty()) continue;
    Draft draft;
    draft.entry.title = derive_title(body);
    draft.entry.body = body;
    draft.entry.category = infer_category(draft.entry.title, draft.entry.body);
    draft.locator = std::string(source_kind_name(unit.source_kind)) + ":" + unit.locator;
    draft.rank = category_rank(draft.entry.category);
    drafts.push_back(std::move(draft));
  }
  if (drafts.empty()) {
    raise(Errc::no_units, "no usable knowledge units for app '" + app_id + "'");
  }
  std::stable_sort(drafts.begin(), drafts.end(),
                   [](const Draft& a, const Draft& b) { return a.rank < b.rank; });

  std::vector<CardEntry> entries;
  std::vector<std::string> provenance;
  entries.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    drafts[i].entry.index = static_cast<int>(i) + 1;
    provenance.push_back("entry " + std::to_string(i + 1) + " <- " + drafts[i].locator);
    entries.push_back(std::move(drafts[i].entry));
  }
  return make_card(app_id, std::move(entries), 1, std::move(provenance));
}

RetrievalQuery build_query(const AppAccumulator& acc, const GateConfig& config,
                           const InfoGainReport& report,
                           const std::vector<Action>& recent_actions, int max_units) {
  if (!should_trigger(acc, config)) {
    raise(Errc::gate_not_triggered, "U(" + acc.app_id + ") has not exceeded tau");
  }
  if (max_units < 1) raise(Errc::invalid_argument, "max_units must be >= 1");

  RetrievalQuery query;
  query.app_id = acc.app_id;
  query.u_value = acc.u_value;
  query.tau = config.tau;
  query.max_units = max_units;

  std::set<std::string> seen;
  int contribution_terms = 0;
  for (const auto& [token, value] : report.contributions) {
    if (contribution_terms >= kMaxFocusContributionTokens) break;
    if (token == kOtherToken || value <= 0.0) continue;
    if (seen.insert(token).second) {
      query.focus_terms.push_back(token);
      ++contribution_terms;
    }
  }
  for (const auto& action : recent_actions) {
    const std::string name = action_kind_name(action.kind);
    if (seen.insert(name).second) query.focus_terms.push_back(name);
  }
  if (query.focus_terms.empty()) query.focus_terms.push_back(acc.app_id);
  return query;
}

std::vector<KnowledgeUnit> merge_units(const std::vector<std::vector<KnowledgeUnit>>& per_client,
                                       int cap) {
  if (cap < 1) raise(Errc::invalid_argument, "merge cap must be >= 1");
  std::vector<KnowledgeUnit> merged;
  for (const auto& units : per_client) {
    merged.insert(merged.end(), units.begin(), units.end());
  }
  sort_and_cap(merged, static_cast<int>(merged.size()) + 1);
  std::set<std::string> excerpts;
  std::vector<KnowledgeUnit> deduped;
  deduped.reserve(merged.size());
  for (auto& unit : merged) {
    if (excerpts.insert(unit.excerpt).second) deduped.push_back(std::move(unit));
  }
  if (deduped.size() > static_cast<std::size_t>(cap)) {
    deduped.resize(static_cast<std::size_t>(cap));
  }
  return deduped;
}

AppCard consolidate(const std::string& app_id, const std::vector<KnowledgeUnit>& units,
                    const Consolidator& consolidator) {
  if (units.empty()) raise(Errc::no_units, "no knowledge units for app '" + app_id + "'");
  AppCard card;
  try {
    card = consolidator.consolidate(app_id, units);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(Errc::consolidator_failure, std::string("consolidator plugin failed: ") + e.what());
  }
  validate_card(card);
  if (card.app_name != app_id) {
    raise(Errc::consolidator_failure, "consolidator returned a card for '" + card.app_name +
                                          "' instead of '" + app_id + "'");
  }
  return card;
}

AppCard retrieve_and_update(const std::string& app_id, AppAccumulator& acc,
                            const GateConfig& config, const InfoGainReport& report,
                            const std::vector<Action>& recent_actions,
                            const std::vector<const SourceClient*>& clients,
                            const Consolidator& consolidator, CardStore& store, int max_units) {
  if (clients.empty()) raise(Errc::source_unavailable, "no source clients configured");
  for (const SourceClient* client : clients) {
    if (client == nullptr) raise(Errc::invalid_argument, "null source client");
  }
  const RetrievalQuery query = build_query(acc, config, report, recent_actions, max_units);

  std::vector<std::future<std::vector<KnowledgeUnit>>> futures;
  futures.reserve(clients.size());
  for (const SourceClient* client : clients) {
    futures.push_back(std::async(std::launch::async, [client, &query] {
      auto units = client->fetch(query);
      for (const auto& unit : units) {
        if (unit.source_kind != client->kind()) {
          raise(Errc::invalid_argument,
                std::string("client of kind ") + source_kind_name(client->kind()) +
                    " returned a unit of kind " + source_kind_name(unit.source_kind));
        }
      }
      return units;
    }));
  }
  std::vector<std::vector<KnowledgeUnit>> per_client;
  per_client.reserve(futures.size());
  for (auto& future : futures) per_client.push_back(future.get());

  const std::vector<KnowledgeUnit> merged = merge_units(per_client);
  AppCard card = consolidate(app_id, merged, consolidator);

  // Everything that can fail has run; commit the transaction.
  store.put(std::move(card));
  acc = mark_triggered(std::move(acc), config);
  return *store.current(app_id);
}

}  // namespace curio
