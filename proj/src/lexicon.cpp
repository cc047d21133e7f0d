#include "newsrisk/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>

#include "newsrisk/common.hpp"
#include "newsrisk/io.hpp"

namespace newsrisk {

const char* to_string(LexiconName name) {
  switch (name) {
    case LexiconName::LoughranMcDonald: return "loughran_mcdonald";
    case LexiconName::Vader: return "vader";
    case LexiconName::Afinn: return "afinn";
    case LexiconName::SentiWordNet: return "sentiwordnet";
    case LexiconName::Opinion: return "opinion";
  }
  return "unknown";
}

LexiconName parse_lexicon_name(std::string_view text) {
  for (auto name : kLexiconOrder)
    if (text == to_string(name)) return name;
  throw Error(ErrorKind::ConfigError, "unknown lexicon '" + std::string(text) + "'");
}

namespace {

std::string trim_lower(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

Lexicon parse_lexicon(std::string_view text, LexiconName name) {
  Lexicon lex;
  lex.name = name;
  WordSet conflicted;
  auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    std::string trimmed = trim_lower(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw Error(ErrorKind::ParseError, std::string(to_string(name)) + " line " + std::to_string(i + 1) +
                                             ": expected word<TAB>score");
    std::string word = trim_lower(line.substr(0, tab));
    std::string score_text = trim_lower(line.substr(tab + 1));
    if (word.empty())
      throw Error(ErrorKind::ParseError, std::string(to_string(name)) + " line " + std::to_string(i + 1) + ": empty word");
    double score = 0.0;
    try {
      score = io::parse_double(score_text, "lexicon score");
    } catch (const Error&) {
      throw Error(ErrorKind::ParseError, std::string(to_string(name)) + " line " + std::to_string(i + 1) +
                                             ": bad score '" + score_text + "'");
    }
    if (score == 0.0 || conflicted.count(word)) continue;
    WordSet& same = score > 0 ? lex.positive : lex.negative;
    WordSet& other = score > 0 ? lex.negative : lex.positive;
    if (other.erase(word)) {
      conflicted.insert(word);
      lex.conflicts.push_back(word);
      continue;
    }
    same.insert(std::move(word));
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path, LexiconName name) {
  auto lex = parse_lexicon(io::read_file(path), name);
  for (const auto& w : lex.conflicts)
    std::cerr << "warning: " << path.string() << ": '" << w << "' has both polarities; dropped\n";
  return lex;
}

const WordSet& default_negators() {
  static const WordSet negators = {"no", "not", "never", "n't", "without", "none"};
  return negators;
}

SentimentScore sentiment_score(std::span<const std::string> tokens, const Lexicon& lexicon, const WordSet& negators) {
  SentimentScore score;
  score.lexicon = lexicon.name;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& token = tokens[i];
    if (lexicon.negative.count(token)) {
      ++score.negatives_counted;
    } else if (lexicon.positive.count(token)) {
      std::size_t from = i >= kNegationWindow ? i - kNegationWindow : 0;
      bool negated = std::any_of(tokens.begin() + static_cast<std::ptrdiff_t>(from),
                                 tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                 [&](const std::string& t) { return negators.count(t) > 0; });
      if (!negated) ++score.positives_counted;
    }
  }
  int total = score.positives_counted + score.negatives_counted;
  if (total > 0) score.value = static_cast<double>(score.positives_counted - score.negatives_counted) / total;
  return score;
}

std::array<double, 5> score_all(std::span<const std::string> tokens, const LexiconSet& lexicons,
                                const WordSet& negators) {
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < lexicons.size(); ++i) out[i] = sentiment_score(tokens, lexicons[i], negators).value;
  return out;
}

}  // namespace newsrisk
