#include "curio/appcards.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "json.hpp"

#include "curio/errors.hpp"
#include "text_util.hpp"

namespace curio {
namespace {

using detail::is_entry_start;
using detail::split_lines;
using detail::token_set;
using detail::tokenize;

constexpr std::string_view kHeaderPrefix = "### ";

[[noreturn]] void card_error(Errc code, int line_no, const std::string& message) {
  raise(code, message + " (line " + std::to_string(line_no) + ")");
}

bool has_trailing_blank(std::string_view body) {
  if (body.empty()) return true;
  const char last = body.back();
  if (last == ' ' || last == '\t' || last == '\n') return true;
  for (const auto& line : split_lines(body)) {
    if (!line.empty() && (line.back() == ' ' || line.back() == '\t')) return true;
  }
  return false;
}

void validate_entry(const CardEntry& entry, int position) {
  const std::string where = "entry " + std::to_string(position);
  if (entry.index != position) {
    raise(Errc::invalid_card, where + " has index " + std::to_string(entry.index) +
                                  ", expected " + std::to_string(position));
  }
  if (entry.title.empty()) raise(Errc::invalid_card, where + " has an empty title");
  if (entry.title.find('\n') != std::string::npos ||
      entry.title.find('\r') != std::string::npos) {
    raise(Errc::invalid_card, where + " title contains a line break");
  }
  if (entry.bold_title) {
    if (entry.title.find(":** ") != std::string::npos) {
      raise(Errc::invalid_card, where + " bold title contains the ':** ' separator");
    }
  } else {
    if (entry.title.find(": ") != std::string::npos) {
      raise(Errc::invalid_card, where + " title contains the ': ' separator");
    }
    if (entry.title.rfind("**", 0) == 0) {
      raise(Errc::invalid_card, where + " plain title may not open with '**'");
    }
  }
  if (entry.body.empty()) raise(Errc::invalid_card, where + " has an empty body");
  if (entry.body.find('\r') != std::string::npos) {
    raise(Errc::invalid_card, where + " body contains a carriage return");
  }
  if (has_trailing_blank(entry.body)) {
    raise(Errc::invalid_card, where + " body carries trailing whitespace");
  }
  const auto lines = split_lines(entry.body);
  if (lines.empty() || detail::trim(lines.front()).empty()) {
    raise(Errc::invalid_card, where + " body starts with a blank line");
  }
  for (const auto& line : lines) {
    if (is_entry_start(line)) {
      raise(Errc::invalid_card, where + " body line looks like an entry start: '" + line + "'");
    }
  }
}

struct CardTokens {
  std::set<std::string> app;
  std::set<std::string> titles;
  std::set<std::string> bodies;
};

CardTokens card_tokens(const AppCard& card) {
  CardTokens tokens;
  tokens.app = token_set(card.app_name);
  for (const auto& entry : card.entries) {
    for (auto& token : tokenize(entry.title)) tokens.titles.insert(std::move(token));
    for (auto& token : tokenize(entry.body)) tokens.bodies.insert(std::move(token));
  }
  return tokens;
}

int overlap_score(const std::set<std::string>& task_tokens, const CardTokens& tokens) {
  int score = 0;
  for (const auto& token : task_tokens) {
    if (tokens.app.count(token)) score += 3;
    if (tokens.titles.count(token)) score += 2;
    if (tokens.bodies.count(token)) score += 1;
  }
  return score;
}

}  // namespace

const char* category_name(CardCategory category) {
  switch (category) {
    case CardCategory::functional_semantics: return "functional_semantics";
    case CardCategory::io_constraints: return "io_constraints";
    case CardCategory::ui_function_mapping: return "ui_function_mapping";
    case CardCategory::interaction_patterns: return "interaction_patterns";
  }
  return "functional_semantics";
}

std::optional<CardCategory> category_from_name(std::string_view name) {
  if (name == "functional_semantics") return CardCategory::functional_semantics;
  if (name == "io_constraints") return CardCategory::io_constraints;
  if (name == "ui_function_mapping") return CardCategory::ui_function_mapping;
  if (name == "interaction_patterns") return CardCategory::interaction_patterns;
  return std::nullopt;
}

void validate_card(const AppCard& card) {
  if (card.app_name.empty()) raise(Errc::invalid_card, "app name is empty");
  if (card.app_name.find('\n') != std::string::npos ||
      card.app_name.find('\r') != std::string::npos) {
    raise(Errc::invalid_card, "app name contains a line break");
  }
  if (card.app_name.find('/') != std::string::npos) {
    raise(Errc::invalid_card, "app name contains '/': '" + card.app_name + "'");
  }
  if (card.version < 1) {
    raise(Errc::invalid_card, "version must be >= 1, got " + std::to_string(card.version));
  }
  if (card.entries.empty()) raise(Errc::invalid_card, "card has no entries");
  for (std::size_t i = 0; i < card.entries.size(); ++i) {
    validate_entry(card.entries[i], static_cast<int>(i) + 1);
  }
}

AppCard make_card(std::string app_name, std::vector<CardEntry> entries, int version,
                  std::vector<std::string> provenance) {
  AppCard card;
  card.app_name = std::move(app_name);
  card.entries = std::move(entries);
  card.version = version;
  card.provenance = std::move(provenance);
  validate_card(card);
  return card;
}

std::string canonicalize_card_text(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 1);
  std::string line;
  auto flush = [&out, &line] {
    std::size_t end = line.size();
    while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t')) --end;
    out.append(line, 0, end);
    out.push_back('\n');
    line.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;  // CRLF: let the \n flush
      flush();
    } else if (c == '\n') {
      flush();
    } else {
      line.push_back(c);
    }
  }
  if (!line.empty()) flush();
  while (out.size() >= 2 && out[out.size() - 1] == '\n' && out[out.size() - 2] == '\n') {
    out.pop_back();
  }
  if (out == "\n") out.clear();
  return out;
}

AppCard parse_card(std::string_view text) {
  const std::string canon = canonicalize_card_text(text);
  if (canon.empty()) raise(Errc::missing_header, "card text is empty");
  const auto lines = split_lines(canon);

  const std::string& header = lines.front();
  if (header.rfind(kHeaderPrefix, 0) != 0 || header.back() != ':' ||
      header.size() <= kHeaderPrefix.size() + 1) {
    raise(Errc::missing_header,
          "expected '### <AppName>:' on the first line, found '" + header + "'");
  }
  std::string app_name =
      header.substr(kHeaderPrefix.size(), header.size() - kHeaderPrefix.size() - 1);

  struct RawEntry {
    std::string title;
    bool bold = false;
    std::string body;
  };
  std::vector<RawEntry> raw;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const int line_no = static_cast<int>(i) + 1;
    if (!is_entry_start(line)) {
      if (raw.empty()) {
        card_error(Errc::malformed_entry, line_no, "content before the first entry: '" + line + "'");
      }
      raw.back().body.push_back('\n');
      raw.back().body.append(line);
      continue;
    }

    const std::size_t dot = line.find('.');
    int index = 0;
    try {
      index = std::stoi(line.substr(0, dot));
    } catch (const std::exception&) {
      card_error(Errc::malformed_entry, line_no, "entry index out of range: '" + line + "'");
    }
    const int expected = static_cast<int>(raw.size()) + 1;
    if (index != expected) {
      card_error(Errc::non_contiguous_indices, line_no,
                 "expected entry " + std::to_string(expected) + ", found " +
                     std::to_string(index));
    }
    const std::string rest = line.substr(dot + 2);

    RawEntry entry;
    if (rest.rfind("**", 0) == 0) {
      const std::size_t sep = rest.find(":** ");
      if (sep == std::string::npos) {
        if (rest.size() >= 3 && rest.compare(rest.size() - 3, 3, ":**") == 0) {
          card_error(Errc::empty_entry, line_no,
                     "entry " + std::to_string(index) + " has an empty body");
        }
        card_error(Errc::malformed_entry, line_no,
                   "bold entry " + std::to_string(index) + " is missing the ':** ' separator");
      }
      entry.title = rest.substr(2, sep - 2);
      entry.bold = true;
      entry.body = rest.substr(sep + 4);
    } else {
      const std::size_t sep = rest.find(": ");
      if (sep == std::string::npos) {
        if (!rest.empty() && rest.back() == ':') {
          card_error(Errc::empty_entry, line_no,
                     "entry " + std::to_string(index) + " has an empty body");
        }
        card_error(Errc::malformed_entry, line_no,
                   "entry " + std::to_string(index) + " is missing the ': ' separator");
      }
      entry.title = rest.substr(0, sep);
      entry.body = rest.substr(sep + 2);
    }
    if (entry.title.empty()) {
      card_error(Errc::empty_entry, line_no,
                 "entry " + std::to_string(index) + " has an empty title");
    }
    if (entry.body.empty()) {
      card_error(Errc::empty_entry, line_no,
                 "entry " + std::to_string(index) + " has an empty body");
    }
    raw.push_back(std::move(entry));
  }

  if (raw.empty()) raise(Errc::empty_card, "card '" + app_name + "' has no entries");

  std::vector<CardEntry> entries;
  entries.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CardEntry entry;
    entry.index = static_cast<int>(i) + 1;
    entry.title = std::move(raw[i].title);
    entry.bold_title = raw[i].bold;
    entry.body = std::move(raw[i].body);
    entry.category = infer_category(entry.title, entry.body);
    entries.push_back(std::move(entry));
  }
  return make_card(std::move(app_name), std::move(entries));
}

std::string render_card(const AppCard& card) {
  validate_card(card);
  std::string out;
  out.append(kHeaderPrefix);
  out.append(card.app_name);
  out.append(":\n");
  for (const auto& entry : card.entries) {
    out.append(std::to_string(entry.index));
    out.append(". ");
    if (entry.bold_title) {
      out.append("**");
      out.append(entry.title);
      out.append(":** ");
    } else {
      out.append(entry.title);
      out.append(": ");
    }
    out.append(entry.body);
    out.push_back('\n');
  }
  return out;
}

CardCategory infer_category(std::string_view title, std::string_view body) {
  if (detail::contains_ci(title, "settings") || detail::contains_ci(title, "permissions")) {
    return CardCategory::io_constraints;
  }
  if (detail::contains_ci(body, "tap") || detail::contains_ci(body, "long-press") ||
      detail::contains_ci(body, "long press")) {
    return CardCategory::ui_function_mapping;
  }
  const auto mentions = [&](std::string_view word) {
    return detail::contains_ci(title, word) || detail::contains_ci(body, word);
  };
  if (mentions("exception") || mentions("error") || mentions("restore")) {
    return CardCategory::interaction_patterns;
  }
  return CardCategory::functional_semantics;
}

CardStore::CardStore(const CardStore& other) {
  std::shared_lock lock(other.mutex_);
  cards_ = other.cards_;
}

CardStore& CardStore::operator=(const CardStore& other) {
  if (this == &other) return *this;
  std::map<std::string, std::vector<AppCard>> copy;
  {
    std::shared_lock lock(other.mutex_);
    copy = other.cards_;
  }
  std::unique_lock lock(mutex_);
  cards_ = std::move(copy);
  return *this;
}

int CardStore::put(AppCard card) {
  validate_card(card);
  std::unique_lock lock(mutex_);
  auto& versions = cards_[card.app_name];
  const int version = versions.empty() ? 1 : versions.back().version + 1;
  card.version = version;
  versions.push_back(std::move(card));
  return version;
}

std::optional<AppCard> CardStore::current(const std::string& app_name) const {
  std::shared_lock lock(mutex_);
  auto it = cards_.find(app_name);
  if (it == cards_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::vector<AppCard> CardStore::versions(const std::string& app_name) const {
  std::shared_lock lock(mutex_);
  auto it = cards_.find(app_name);
  if (it == cards_.end()) return {};
  return it->second;
}

std::vector<AppCard> CardStore::all_current() const {
  std::shared_lock lock(mutex_);
  std::vector<AppCard> out;
  out.reserve(cards_.size());
  for (const auto& [name, versions] : cards_) {
    (void)name;
    if (!versions.empty()) out.push_back(versions.back());
  }
  return out;
}

std::size_t CardStore::app_count() const {
  std::shared_lock lock(mutex_);
  return cards_.size();
}

std::size_t CardStore::total_versions() const {
  std::shared_lock lock(mutex_);
  std::size_t total = 0;
  for (const auto& [name, versions] : cards_) {
    (void)name;
    total += versions.size();
  }
  return total;
}

CardStore CardStore::load(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  CardStore store;
  if (!fs::exists(root)) raise(Errc::io_error, "card store root not found: " + root.string());
  if (!fs::is_directory(root)) {
    raise(Errc::io_error, "card store root is not a directory: " + root.string());
  }
  std::vector<fs::path> app_dirs;
  for (const auto& item : fs::directory_iterator(root)) {
    if (item.is_directory()) app_dirs.push_back(item.path());
  }
  std::sort(app_dirs.begin(), app_dirs.end());
  for (const auto& dir : app_dirs) {
    const std::string app_name = dir.filename().string();
    std::vector<std::pair<int, fs::path>> files;
    for (const auto& item : fs::directory_iterator(dir)) {
      if (!item.is_regular_file() || item.path().extension() != ".card") continue;
      const std::string stem = item.path().stem().string();
      int version = 0;
      try {
        std::size_t used = 0;
        version = std::stoi(stem, &used);
        if (used != stem.size() || version < 1) throw std::invalid_argument(stem);
      } catch (const std::exception&) {
        raise(Errc::io_error, "card file name is not a version number: " + item.path().string());
      }
      files.emplace_back(version, item.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& [version, path] : files) {
      std::ifstream in(path, std::ios::binary);
      if (!in) raise(Errc::io_error, "cannot read card file: " + path.string());
      std::ostringstream buffer;
      buffer << in.rdbuf();
      AppCard card;
      try {
        card = parse_card(buffer.str());
      } catch (const Error& e) {
        raise(e.code(), path.string() + ": " + e.what());
      }
      if (card.app_name != app_name) {
        raise(Errc::invalid_card, path.string() + ": header names '" + card.app_name +
                                      "' but the store directory is '" + app_name + "'");
      }
      card.version = version;
      std::unique_lock lock(store.mutex_);
      store.cards_[app_name].push_back(std::move(card));
    }
  }
  return store;
}

void CardStore::save(const std::filesystem::path& root) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) raise(Errc::io_error, "cannot create card store root: " + root.string());
  std::shared_lock lock(mutex_);
  for (const auto& [name, versions] : cards_) {
    const fs::path dir = root / name;
    fs::create_directories(dir, ec);
    if (ec) raise(Errc::io_error, "cannot create card store directory: " + dir.string());
    for (const auto& card : versions) {
      const fs::path path = dir / (std::to_string(card.version) + ".card");
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) raise(Errc::io_error, "cannot write card file: " + path.string());
      out << render_card(card);
    }
  }
}

std::vector<AppCard> select_cards(const std::string& task_description, const CardStore& store,
                                  int limit) {
  if (limit < 0) raise(Errc::invalid_argument, "limit must be >= 0");
  if (limit == 0) return {};
  const std::set<std::string> task = token_set(task_description);

  struct Scored {
    int score;
    AppCard card;
  };
  std::vector<Scored> scored;
  for (auto& card : store.all_current()) {
    const int score = overlap_score(task, card_tokens(card));
    if (score > 0) scored.push_back({score, std::move(card)});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.card.app_name < b.card.app_name;
  });
  if (scored.size() > static_cast<std::size_t>(limit)) {
    scored.resize(static_cast<std::size_t>(limit));
  }
  std::vector<AppCard> out;
  out.reserve(scored.size());
  for (auto& item : scored) out.push_back(std::move(item.card));
  return out;
}

std::string inject(const std::string& prompt, const std::vector<AppCard>& cards) {
  if (cards.empty()) return prompt;
  std::string out = prompt;
  out.append("\n\n");
  out.append(kInjectBlockHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < cards.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out.append(render_card(cards[i]));
  }
  out.append(kInjectBlockFooter);
  out.push_back('\n');
  return out;
}

AppCard select_fragments(const AppCard& card, const std::string& context, int max_entries) {
  validate_card(card);
  if (max_entries < 1) raise(Errc::invalid_argument, "max_entries must be >= 1");
  const std::set<std::string> wanted = token_set(context);
  const int total = static_cast<int>(card.entries.size());

  AppCard out = card;
  if (max_entries >= total) {
    out.provenance.push_back("fragments: kept " + std::to_string(total) + "/" +
                             std::to_string(total));
    return out;
  }

  struct Ranked {
    int score;
    int position;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(card.entries.size());
  for (int i = 0; i < total; ++i) {
    const auto& entry = card.entries[static_cast<std::size_t>(i)];
    const auto titles = token_set(entry.title);
    const auto bodies = token_set(entry.body);
    int score = 0;
    for (const auto& token : wanted) {
      if (titles.count(token)) score += 2;
      if (bodies.count(token)) score += 1;
    }
    ranked.push_back({score, i});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.position < b.position;
  });
  ranked.resize(static_cast<std::size_t>(max_entries));
  std::sort(ranked.begin(), ranked.end(),
            [](const Ranked& a, const Ranked& b) { return a.position < b.position; });

  out.entries.clear();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    CardEntry entry = card.entries[static_cast<std::size_t>(ranked[i].position)];
    entry.index = static_cast<int>(i) + 1;
    out.entries.push_back(std::move(entry));
  }
  out.provenance.push_back("fragments: kept " + std::to_string(max_entries) + "/" +
                           std::to_string(total));
  validate_card(out);
  return out;
}

std::string card_to_json(const AppCard& card, int indent) {
  nlohmann::ordered_json doc;
  doc["app_name"] = card.app_name;
  doc["version"] = card.version;
  doc["provenance"] = card.provenance;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& entry : card.entries) {
    nlohmann::ordered_json item;
    item["index"] = entry.index;
    item["title"] = entry.title;
    item["body"] = entry.body;
    item["category"] = category_name(entry.category);
    item["bold_title"] = entry.bold_title;
    entries.push_back(std::move(item));
  }
  doc["entries"] = std::move(entries);
  return doc.dump(indent);
}

}  // namespace curio
