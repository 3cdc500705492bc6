#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace curio {

// App-card text format
// --------------------
// A card is UTF-8 text with this shape after canonicalization:
//
//   ### <AppName>:
//   1. Title: body text...
//   2. **Bold Title:** body text...
//      continuation lines belong to the entry above
//   3. Next: ...
//
// The header is "### " + app name + ":". Entry lines start with "N. " where
// N runs contiguously from 1. The first line of an entry splits at the first
// ": " into title and body; a line opening with "**" instead splits at the
// first ":** " and records the title as bold (the colon sits inside the
// emphasis markers, matching how such cards are written in the wild). Body
// text continues over following lines until the next entry line and is kept
// byte-for-byte, including markup like **this**.
//
// Canonical form: LF line endings, no trailing whitespace on any line, and
// exactly one trailing newline. parse_card canonicalizes first, so for any
// syntactically valid text render_card(parse_card(text)) equals
// canonicalize_card_text(text) byte-for-byte.

enum class CardCategory {
  functional_semantics,
  io_constraints,
  ui_function_mapping,
  interaction_patterns,
};

const char* category_name(CardCategory category);
std::optional<CardCategory> category_from_name(std::string_view name);

struct CardEntry {
  int index = 1;
  std::string title;
  std::string body;
  CardCategory category = CardCategory::functional_semantics;
  bool bold_title = false;

  bool operator==(const CardEntry&) const = default;
};

struct AppCard {
  std::string app_name;
  std::vector<CardEntry> entries;
  int version = 1;
  // Source descriptors, e.g. "entry 1 <- web_docs:usage.txt" or "forced".
  std::vector<std::string> provenance;

  bool operator==(const AppCard&) const = default;
};

// Throws InvalidCard unless the card renders to text that parses back to the
// same value: contiguous 1..n indices, titles without a ": " separator
// inside them, bodies without trailing whitespace or entry-shaped lines.
void validate_card(const AppCard& card);

AppCard make_card(std::string app_name, std::vector<CardEntry> entries, int version = 1,
                  std::vector<std::string> provenance = {});

std::string canonicalize_card_text(std::string_view text);

// Parses card text (canonicalizing first). Categories are inferred from
// entry wording via infer_category; version and provenance take defaults.
AppCard parse_card(std::string_view text);

// Renders the canonical text form. render_card(parse_card(t)) reproduces
// canonicalize_card_text(t) exactly, and parse_card(render_card(c)) == c up
// to version and provenance (which the text form does not carry).
std::string render_card(const AppCard& card);

// Keyword heuristics: Settings/Permissions titles are io_constraints, tap or
// long-press wording is ui_function_mapping, error/exception/restore wording
// is interaction_patterns, everything else functional_semantics.
CardCategory infer_category(std::string_view title, std::string_view body);

// Versioned card storage keyed by app name. At most one current card per
// app; earlier versions are retained. On disk each card lives at
// <root>/<app_name>/<version>.card in canonical text form.
class CardStore {
 public:
  CardStore() = default;
  CardStore(const CardStore& other);
  CardStore& operator=(const CardStore& other);

  // Stores the card under the next version for its app and returns that
  // version number.
  int put(AppCard card);
  std::optional<AppCard> current(const std::string& app_name) const;
  std::vector<AppCard> versions(const std::string& app_name) const;
  // Current card of every app, ordered by app name.
  std::vector<AppCard> all_current() const;
  std::size_t app_count() const;
  std::size_t total_versions() const;

  static CardStore load(const std::filesystem::path& root);
  void save(const std::filesystem::path& root) const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::vector<AppCard>> cards_;
};

// Ranks current cards against a task description by lowercase word-token
// overlap: a task token scores 3 when it appears among app-name tokens, 2
// among entry titles, 1 among entry bodies. Cards scoring zero are dropped;
// ties break by app name ascending. Returns at most `limit` cards.
std::vector<AppCard> select_cards(const std::string& task_description, const CardStore& store,
                                  int limit);

// Appends rendered cards to the prompt inside a fixed fenced block:
//
//   <prompt>
//
//   ===== APPCARD KNOWLEDGE =====
//   <card 1 text>
//
//   <card 2 text>
//   ===== END APPCARD KNOWLEDGE =====
//
// With no cards the prompt is returned unchanged.
std::string inject(const std::string& prompt, const std::vector<AppCard>& cards);

inline constexpr std::string_view kInjectBlockHeader = "===== APPCARD KNOWLEDGE =====";
inline constexpr std::string_view kInjectBlockFooter = "===== END APPCARD KNOWLEDGE =====";

// Keeps the entries scoring highest against the context (title tokens weigh
// 2, body tokens 1; ties prefer earlier entries), preserving their original
// order and re-indexing from 1. Bodies are never rewritten. A note recording
// the selection is appended to provenance.
AppCard select_fragments(const AppCard& card, const std::string& context, int max_entries);

// JSON export mirroring the AppCard fields, for programmatic consumers.
std::string card_to_json(const AppCard& card, int indent = -1);

}  // namespace curio
