#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "newsrisk/common.hpp"

namespace newsrisk {

enum class FormatTag { Story, MarketSnapshot, EarningsSummary, MachineGenerated, Unverified, Other };

FormatTag parse_format_tag(std::string_view text);
const char* to_string(FormatTag tag);

struct RawArticle {
  std::string pid;
  Date date;
  std::string headline;
  std::string body;
  FormatTag format_tag = FormatTag::Story;

  /// Throws ParseError when pid is empty or both headline and body are empty.
  void validate() const;
};

struct CompanyAliases {
  std::string canonical_name;
  /// Lowercase-normalized; always contains the lowercased canonical name.
  std::set<std::string> aliases;
};

class CompanyAliasTable {
 public:
  void add(const std::string& pid, std::string canonical_name, const std::vector<std::string>& aliases);
  const CompanyAliases* find(const std::string& pid) const;
  const CompanyAliases& at(const std::string& pid) const;  // throws UnknownPid
  const std::map<std::string, CompanyAliases>& entries() const { return entries_; }

  /// JSON object: pid -> {"name": ..., "aliases": [...]}
  static CompanyAliasTable from_json_text(std::string_view text);
  static CompanyAliasTable load(const std::filesystem::path& path);

 private:
  std::map<std::string, CompanyAliases> entries_;
};

struct CleanDocument {
  std::string pid;
  Date date;
  std::vector<std::string> tokens;
  int sentences_kept = 0;
  int articles_merged = 1;

  RowKey key() const { return {pid, date}; }
};

using StopwordSet = std::unordered_set<std::string>;

StopwordSet load_stopwords(const std::filesystem::path& path);
StopwordSet parse_stopwords(std::string_view text);
/// A small general-English list used when no file is configured.
const StopwordSet& default_stopwords();

struct CleaningConfig {
  std::size_t min_body_tokens = 20;
  /// ECMAScript regexes; any normalized line matching one is removed.
  std::vector<std::string> boilerplate_patterns;
  bool strip_html = true;
};

enum class DropReason { MachineGenerated, Unverified, TooShort };
const char* to_string(DropReason reason);

struct CleanText {
  std::string headline;
  std::string body;

  /// Headline and body separated by a newline (omits an empty headline).
  std::string joined() const;
};

using CleanOutcome = std::variant<CleanText, DropReason>;

/// Line-level normalization applied to headline and body: tag stripping,
/// lowercasing, whitespace collapsing, boilerplate-line removal. Idempotent.
std::string clean_text(std::string_view text, const CleaningConfig& config);

CleanOutcome clean_article(const RawArticle& raw, const CleaningConfig& config = {});

/// 1 - lev(a, b) / max(|a|, |b|); 1.0 when both are empty.
double fuzzy_match_score(std::string_view a, std::string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Sentences end at '.', '!' or '?' followed by whitespace, or at a line break.
std::vector<std::string> split_sentences(std::string_view text);

std::vector<std::string> extract_relevant_sentences(std::string_view text, const std::string& pid,
                                                    const CompanyAliasTable& aliases, double threshold,
                                                    bool multi_company);

/// Splits on non-alphanumeric boundaries, lowercases, drops stopwords and
/// optionally Porter-stems. Stopwords are removed both before and after stemming.
std::vector<std::string> tokenize_and_normalize(std::string_view text, const StopwordSet& stopwords, bool stemming);

struct ProcessedArticle {
  std::string pid;
  Date date;
  std::vector<std::string> tokens;
  int sentences_kept = 0;
};

/// Concatenates same-key articles in order; throws MixedKeys or EmptyCorpus.
CleanDocument aggregate_company_day(const std::vector<ProcessedArticle>& articles);

struct PreprocessConfig {
  CleaningConfig cleaning;
  double fuzzy_threshold = 0.85;
  std::set<FormatTag> multi_company_formats = {FormatTag::MarketSnapshot};
  bool stemming = false;
};

struct PreprocessStats {
  std::size_t articles_in = 0;
  std::size_t articles_kept = 0;
  std::map<DropReason, std::size_t> dropped;
};

struct PreprocessResult {
  std::vector<CleanDocument> documents;  // sorted by (pid, date)
  PreprocessStats stats;
};

PreprocessResult preprocess_corpus(const std::vector<RawArticle>& articles, const CompanyAliasTable& aliases,
                                   const StopwordSet& stopwords, const PreprocessConfig& config);

std::vector<RawArticle> parse_articles_jsonl(std::string_view text);
std::vector<RawArticle> load_articles(const std::filesystem::path& path);
std::string articles_to_jsonl(const std::vector<RawArticle>& articles);

std::string documents_to_jsonl(const std::vector<CleanDocument>& documents);
std::vector<CleanDocument> parse_documents_jsonl(std::string_view text);
std::vector<CleanDocument> load_documents(const std::filesystem::path& path);

}  // namespace newsrisk
