#include "newsrisk/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <nlohmann/json.hpp>

#include "newsrisk/io.hpp"
#include "newsrisk/porter.hpp"

namespace newsrisk {

using nlohmann::json;

FormatTag parse_format_tag(std::string_view text) {
  if (text == "story") return FormatTag::Story;
  if (text == "market-snapshot") return FormatTag::MarketSnapshot;
  if (text == "earnings-summary") return FormatTag::EarningsSummary;
  if (text == "machine-generated") return FormatTag::MachineGenerated;
  if (text == "unverified") return FormatTag::Unverified;
  if (text == "other") return FormatTag::Other;
  throw Error(ErrorKind::ParseError, "unknown format_tag '" + std::string(text) + "'");
}

const char* to_string(FormatTag tag) {
  switch (tag) {
    case FormatTag::Story: return "story";
    case FormatTag::MarketSnapshot: return "market-snapshot";
    case FormatTag::EarningsSummary: return "earnings-summary";
    case FormatTag::MachineGenerated: return "machine-generated";
    case FormatTag::Unverified: return "unverified";
    case FormatTag::Other: return "other";
  }
  return "other";
}

const char* to_string(DropReason reason) {
  switch (reason) {
    case DropReason::MachineGenerated: return "machine-generated";
    case DropReason::Unverified: return "unverified";
    case DropReason::TooShort: return "too-short";
  }
  return "unknown";
}

void RawArticle::validate() const {
  if (pid.empty()) throw Error(ErrorKind::ParseError, "article has empty pid");
  if (headline.empty() && body.empty())
    throw Error(ErrorKind::ParseError, "article " + pid + "@" + date.to_string() + " has neither headline nor body");
}

namespace {

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> alnum_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (is_alnum(c)) {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string strip_tags(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '<') {
      std::size_t close = text.find('>', i + 1);
      if (close != std::string_view::npos && text.substr(i + 1, close - i - 1).find('\n') == std::string_view::npos) {
        out += ' ';
        i = close;
        continue;
      }
    }
    out += text[i];
  }
  return out;
}

std::string collapse_whitespace(std::string_view line) {
  std::string out;
  bool pending_space = false;
  for (char c : line) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

}  // namespace

void CompanyAliasTable::add(const std::string& pid, std::string canonical_name,
                            const std::vector<std::string>& aliases) {
  if (pid.empty()) throw Error(ErrorKind::ParseError, "alias table entry with empty pid");
  if (canonical_name.empty()) throw Error(ErrorKind::ParseError, "alias table entry " + pid + " has empty name");
  CompanyAliases entry;
  entry.aliases.insert(collapse_whitespace(to_lower(canonical_name)));
  for (const auto& alias : aliases) {
    auto normalized = collapse_whitespace(to_lower(alias));
    if (!normalized.empty()) entry.aliases.insert(std::move(normalized));
  }
  entry.canonical_name = std::move(canonical_name);
  entries_[pid] = std::move(entry);
}

const CompanyAliases* CompanyAliasTable::find(const std::string& pid) const {
  auto it = entries_.find(pid);
  return it == entries_.end() ? nullptr : &it->second;
}

const CompanyAliases& CompanyAliasTable::at(const std::string& pid) const {
  const auto* entry = find(pid);
  if (!entry) throw Error(ErrorKind::UnknownPid, "pid '" + pid + "' not in alias table");
  return *entry;
}

CompanyAliasTable CompanyAliasTable::from_json_text(std::string_view text) {
  CompanyAliasTable table;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("alias table: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "alias table must be a JSON object");
  for (const auto& [pid, entry] : doc.items()) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
      throw Error(ErrorKind::ParseError, "alias table entry " + pid + " needs a string 'name'");
    std::vector<std::string> aliases;
    if (entry.contains("aliases")) {
      for (const auto& a : entry["aliases"]) {
        if (!a.is_string()) throw Error(ErrorKind::ParseError, "alias table entry " + pid + " has a non-string alias");
        aliases.push_back(a.get<std::string>());
      }
    }
    table.add(pid, entry["name"].get<std::string>(), aliases);
  }
  return table;
}

CompanyAliasTable CompanyAliasTable::load(const std::filesystem::path& path) {
  return from_json_text(io::read_file(path));
}

StopwordSet parse_stopwords(std::string_view text) {
  StopwordSet words;
  for (auto& line : io::split_lines(text)) {
    auto word = collapse_whitespace(to_lower(line));
    if (!word.empty()) words.insert(std::move(word));
  }
  return words;
}

StopwordSet load_stopwords(const std::filesystem::path& path) { return parse_stopwords(io::read_file(path)); }

const StopwordSet& default_stopwords() {
  static const StopwordSet words = {
      "a",      "about",  "above", "after", "again", "against", "all",   "am",    "an",    "and",   "any",
      "are",    "as",     "at",    "be",    "because", "been",  "before", "being", "below", "between",
      "both",   "but",    "by",    "can",   "could", "did",     "do",    "does",  "doing", "down",  "during",
      "each",   "few",    "for",   "from",  "further", "had",   "has",   "have",  "having", "he",   "her",
      "here",   "hers",   "him",   "his",   "how",   "i",       "if",    "in",    "into",  "is",    "it",
      "its",    "itself", "just",  "me",    "more",  "most",    "my",    "of",    "off",   "on",    "once",
      "only",   "or",     "other", "our",   "ours",  "out",     "over",  "own",   "said",  "same",  "she",
      "should", "so",     "some",  "such",  "than",  "that",    "the",   "their", "theirs", "them", "then",
      "there",  "these",  "they",  "this",  "those", "through", "to",    "too",   "under", "until", "up",
      "very",   "was",    "we",    "were",  "what",  "when",    "where", "which", "while", "who",   "whom",
      "why",    "will",   "with",  "would", "you",   "your",    "yours", "also",  "s",     "t"};
  return words;
}

std::string CleanText::joined() const {
  if (headline.empty()) return body;
  if (body.empty()) return headline;
  return headline + "\n" + body;
}

std::string clean_text(std::string_view text, const CleaningConfig& config) {
  std::vector<std::regex> patterns;
  patterns.reserve(config.boilerplate_patterns.size());
  for (const auto& p : config.boilerplate_patterns) {
    try {
      patterns.emplace_back(p, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error(ErrorKind::ConfigError, "bad boilerplate pattern '" + p + "': " + e.what());
    }
  }
  std::string stripped = config.strip_html ? strip_tags(text) : std::string(text);
  std::vector<std::string> kept;
  for (const auto& raw_line : io::split_lines(stripped)) {
    std::string line = collapse_whitespace(to_lower(raw_line));
    if (line.empty()) continue;
    bool boilerplate = std::any_of(patterns.begin(), patterns.end(),
                                   [&](const std::regex& re) { return std::regex_search(line, re); });
    if (!boilerplate) kept.push_back(std::move(line));
  }
  return join(kept, "\n");
}

CleanOutcome clean_article(const RawArticle& raw, const CleaningConfig& config) {
  if (raw.format_tag == FormatTag::MachineGenerated) return DropReason::MachineGenerated;
  if (raw.format_tag == FormatTag::Unverified) return DropReason::Unverified;
  CleanText out{clean_text(raw.headline, config), clean_text(raw.body, config)};
  if (alnum_tokens(out.body).size() < config.min_body_tokens) return DropReason::TooShort;
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double fuzzy_match_score(std::string_view a, std::string_view b) {
  std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  auto flush = [&] {
    auto s = collapse_whitespace(current);
    if (!s.empty()) sentences.push_back(std::move(s));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    current += c;
    bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && (i + 1 == text.size() || is_space(text[i + 1]))) flush();
  }
  flush();
  return sentences;
}

namespace {

bool sentence_mentions(const std::string& sentence, const std::vector<std::string>& sentence_tokens,
                       const CompanyAliases& company, double threshold) {
  for (const auto& alias : company.aliases) {
    if (sentence.find(alias) != std::string::npos) return true;
  }
  for (const auto& alias : company.aliases) {
    auto alias_tokens = alnum_tokens(alias);
    if (alias_tokens.empty() || alias_tokens.size() > sentence_tokens.size()) continue;
    std::string target = join(alias_tokens, " ");
    std::size_t n = alias_tokens.size();
    for (std::size_t start = 0; start + n <= sentence_tokens.size(); ++start) {
      std::string window = sentence_tokens[start];
      for (std::size_t k = 1; k < n; ++k) window += " " + sentence_tokens[start + k];
      if (fuzzy_match_score(window, target) >= threshold) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::string> extract_relevant_sentences(std::string_view text, const std::string& pid,
                                                    const CompanyAliasTable& aliases, double threshold,
                                                    bool multi_company) {
  const CompanyAliases& company = aliases.at(pid);
  auto sentences = split_sentences(text);
  if (!multi_company) return sentences;
  std::vector<std::string> kept;
  for (auto& sentence : sentences) {
    auto tokens = alnum_tokens(sentence);
    if (sentence_mentions(sentence, tokens, company, threshold)) kept.push_back(std::move(sentence));
  }
  return kept;
}

std::vector<std::string> tokenize_and_normalize(std::string_view text, const StopwordSet& stopwords, bool stemming) {
  std::vector<std::string> out;
  for (auto& token : alnum_tokens(text)) {
    if (stopwords.count(token)) continue;
    if (stemming) {
      token = porter_stem(token);
      if (token.empty() || stopwords.count(token)) continue;
    }
    out.push_back(std::move(token));
  }
  return out;
}

CleanDocument aggregate_company_day(const std::vector<ProcessedArticle>& articles) {
  if (articles.empty()) throw Error(ErrorKind::EmptyCorpus, "no articles to aggregate");
  CleanDocument doc;
  doc.pid = articles.front().pid;
  doc.date = articles.front().date;
  doc.sentences_kept = 0;
  for (const auto& article : articles) {
    if (article.pid != doc.pid || article.date != doc.date)
      throw Error(ErrorKind::MixedKeys, "cannot merge " + article.pid + "@" + article.date.to_string() + " into " +
                                            doc.pid + "@" + doc.date.to_string());
    doc.tokens.insert(doc.tokens.end(), article.tokens.begin(), article.tokens.end());
    doc.sentences_kept += article.sentences_kept;
  }
  doc.articles_merged = static_cast<int>(articles.size());
  return doc;
}

PreprocessResult preprocess_corpus(const std::vector<RawArticle>& articles, const CompanyAliasTable& aliases,
                                   const StopwordSet& stopwords, const PreprocessConfig& config) {
  PreprocessResult result;
  std::map<RowKey, std::vector<ProcessedArticle>> groups;
  result.stats.articles_in = articles.size();
  for (const auto& raw : articles) {
    raw.validate();
    auto outcome = clean_article(raw, config.cleaning);
    if (const auto* reason = std::get_if<DropReason>(&outcome)) {
      ++result.stats.dropped[*reason];
      continue;
    }
    const auto& text = std::get<CleanText>(outcome);
    bool multi = config.multi_company_formats.count(raw.format_tag) > 0;
    auto sentences =
        extract_relevant_sentences(text.joined(), raw.pid, aliases, config.fuzzy_threshold, multi);
    ProcessedArticle processed{raw.pid, raw.date, {}, static_cast<int>(sentences.size())};
    for (const auto& sentence : sentences) {
      auto tokens = tokenize_and_normalize(sentence, stopwords, config.stemming);
      processed.tokens.insert(processed.tokens.end(), tokens.begin(), tokens.end());
    }
    ++result.stats.articles_kept;
    groups[RowKey{raw.pid, raw.date}].push_back(std::move(processed));
  }
  result.documents.reserve(groups.size());
  for (const auto& [key, group] : groups) result.documents.push_back(aggregate_company_day(group));
  return result;
}

std::vector<RawArticle> parse_articles_jsonl(std::string_view text) {
  std::vector<RawArticle> articles;
  auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (collapse_whitespace(lines[i]).empty()) continue;
    try {
      auto j = json::parse(lines[i]);
      RawArticle a;
      a.pid = j.at("pid").get<std::string>();
      a.date = Date::parse(j.at("date").get<std::string>());
      a.headline = j.value("headline", "");
      a.body = j.value("body", "");
      a.format_tag = parse_format_tag(j.value("format_tag", "other"));
      a.validate();
      articles.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, "articles line " + std::to_string(i + 1) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), "articles line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return articles;
}

std::vector<RawArticle> load_articles(const std::filesystem::path& path) {
  return parse_articles_jsonl(io::read_file(path));
}

std::string articles_to_jsonl(const std::vector<RawArticle>& articles) {
  std::string out;
  for (const auto& a : articles) {
    json j = {{"pid", a.pid},
              {"date", a.date.to_string()},
              {"headline", a.headline},
              {"body", a.body},
              {"format_tag", to_string(a.format_tag)}};
    out += j.dump() + "\n";
  }
  return out;
}

std::string documents_to_jsonl(const std::vector<CleanDocument>& documents) {
  std::string out;
  for (const auto& d : documents) {
    json j = {{"pid", d.pid},
              {"date", d.date.to_string()},
              {"tokens", d.tokens},
              {"sentences_kept", d.sentences_kept},
              {"articles_merged", d.articles_merged}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<CleanDocument> parse_documents_jsonl(std::string_view text) {
  std::vector<CleanDocument> docs;
  auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (collapse_whitespace(lines[i]).empty()) continue;
    try {
      auto j = json::parse(lines[i]);
      CleanDocument d;
      d.pid = j.at("pid").get<std::string>();
      d.date = Date::parse(j.at("date").get<std::string>());
      d.tokens = j.at("tokens").get<std::vector<std::string>>();
      d.sentences_kept = j.value("sentences_kept", 0);
      d.articles_merged = j.value("articles_merged", 1);
      docs.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, "documents line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<CleanDocument> load_documents(const std::filesystem::path& path) {
  return parse_documents_jsonl(io::read_file(path));
}

}  // namespace newsrisk
