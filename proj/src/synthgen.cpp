#include "newsrisk/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>
#include <unordered_set>

#include "newsrisk/corpus.hpp"
#include "newsrisk/embeddings.hpp"
#include "newsrisk/io.hpp"
#include "newsrisk/porter.hpp"
#include "newsrisk/ratings.hpp"

namespace newsrisk {

using json = nlohmann::json;

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, "generator: " + msg); };
  if (n_companies < 1 || n_days < 1 || day_spacing < 1) fail("n_companies, n_days and day_spacing must be >= 1");
  if (!(downgrade_rate > 0.0 && downgrade_rate < 1.0)) fail("downgrade_rate must be in (0, 1)");
  for (double v : {news_signal_strength, benchmark_signal_strength, complementarity, news_coverage, lm_event_coverage})
    if (!(v >= 0.0 && v <= 1.0)) fail("strengths, complementarity and coverages must be in [0, 1]");
  if (topic_count < 1 || topic_block_size < 2) fail("topic_count >= 1 and topic_block_size >= 2 required");
  if (vocab_size < 10 || event_vocab_size < 2 || sentiment_vocab_size < 2) fail("vocabulary pools too small");
  if (vec_dim < 2 || vec_distractors < 0) fail("vec_dim must be >= 2");
}

std::string bundle_files::lexicon(const char* name) { return std::string("lexicons/") + name + ".txt"; }

void SynthBundle::write(const std::filesystem::path& dir) const {
  for (const auto& [name, content] : files) io::write_file(dir / name, content);
}

std::vector<std::string> pseudo_words(std::size_t count, Rng& rng, int min_syllables, int max_syllables) {
  static const char consonants[] = "bdgkmnprtvz";
  static const char vowels[] = "aiou";
  static const char finals[] = "kntrmdpbgvz";
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  const auto& stop = default_stopwords();
  while (out.size() < count) {
    int syllables = min_syllables + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_syllables - min_syllables + 1)));
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += consonants[uniform_index(rng, 11)];
      w += vowels[uniform_index(rng, 4)];
    }
    if (bernoulli(rng, 0.4)) w += finals[uniform_index(rng, 11)];
    if (w.size() < 5 || porter_stem(w) != w || stop.count(w) || !seen.insert(w).second) continue;
    out.push_back(w);
  }
  return out;
}

namespace {

const std::vector<std::string> kFunctionWords = {"the", "of", "and", "in", "to", "a", "for", "on", "with", "at"};
const std::vector<std::string> kDowngradeWords = {"downgrade", "downgraded", "downgrades"};
const std::vector<std::string> kNameSuffixes = {"Holdings", "Group", "Industries", "Partners", "Systems"};

const std::vector<std::string> kNormalTemplates = {"N F T S T F", "S N F T S T X", "N T F S F T",
                                                   "S F S N T F X", "N X T S F T F"};
const std::vector<std::string> kEventTemplates = {"N E T S E F", "S N F E S E T", "N E S F T E", "S N E T X E"};
const std::vector<std::string> kGenericTemplates = {"S F T S F F", "F S T F S T"};

struct Pools {
  std::vector<std::string> filler;
  std::vector<double> filler_cdf;
  std::vector<std::vector<std::string>> topics;
  std::vector<std::string> events;
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  std::vector<std::string> people;
};

struct Company {
  std::string pid;
  std::string short_name;  // pseudo-word, e.g. "bavokiru"
  std::string display;     // "Bavokiru"
  std::string full_name;   // "Bavokiru Holdings"
  int topic = 0;
};

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

std::string misspell(const std::string& word, Rng& rng) {
  static const char vowels[] = "aiou";
  std::string w = word;
  std::vector<std::size_t> vowel_pos;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (std::string_view("aiou").find(w[i]) != std::string_view::npos) vowel_pos.push_back(i);
  if (vowel_pos.empty()) return w;
  std::size_t p = vowel_pos[uniform_index(rng, vowel_pos.size())];
  char replacement = w[p];
  while (replacement == w[p]) replacement = vowels[uniform_index(rng, 4)];
  w[p] = replacement;
  return w;
}

class Writer {
 public:
  Writer(const Pools& pools, Rng& rng) : pools_(pools), rng_(rng) {}

  const std::string& pick(const std::vector<std::string>& pool) { return pool[uniform_index(rng_, pool.size())]; }

  const std::string& filler() {
    double r = uniform01(rng_) * pools_.filler_cdf.back();
    auto it = std::upper_bound(pools_.filler_cdf.begin(), pools_.filler_cdf.end(), r);
    return pools_.filler[std::min(static_cast<std::size_t>(it - pools_.filler_cdf.begin()), pools_.filler.size() - 1)];
  }

  const std::string& topic_word(int topic) {
    int t = topic;
    if (bernoulli(rng_, 0.2)) t = static_cast<int>(uniform_index(rng_, pools_.topics.size()));
    return pick(pools_.topics[static_cast<std::size_t>(t)]);
  }

  std::string sentence(const std::string& tmpl, const std::string& mention, int topic, bool with_downgrade) {
    std::string out;
    for (char slot : tmpl) {
      if (slot == ' ') continue;
      if (!out.empty()) out += ' ';
      switch (slot) {
        case 'N': out += mention; break;
        case 'E': out += pick(pools_.events); break;
        case 'T': out += topic_word(topic); break;
        case 'F': out += filler(); break;
        case 'S': out += pick(kFunctionWords); break;
        case 'X': out += bernoulli(rng_, 0.5) ? pick(pools_.positive) : pick(pools_.negative); break;
      }
    }
    if (with_downgrade) out += " " + pick(kDowngradeWords);
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out + ".";
  }

 private:
  const Pools& pools_;
  Rng& rng_;
};

struct DayState {
  const Company* company;
  Date date;
  double event_prob;
};

struct ArticleDraft {
  RawArticle article;
  int sentences = 0;
  int event_sentences = 0;
};

ArticleDraft write_article(FormatTag tag, const DayState& day, const std::vector<Company>& companies, Writer& w,
                           const Pools& pools, Rng& rng) {
  ArticleDraft d;
  d.article.pid = day.company->pid;
  d.article.date = day.date;
  d.article.format_tag = tag;
  const Company& c = *day.company;
  auto mention = [&] { return bernoulli(rng, 0.5) ? c.full_name : c.display; };
  auto own_sentence = [&](const std::string& name) {
    bool event = bernoulli(rng, day.event_prob);
    ++d.sentences;
    if (event) ++d.event_sentences;
    const auto& tmpl = event ? w.pick(kEventTemplates) : w.pick(kNormalTemplates);
    return w.sentence(tmpl, name, c.topic, event && bernoulli(rng, 0.03));
  };

  std::vector<std::string> body;
  d.article.headline = w.sentence("N T F", c.full_name, c.topic, false);
  d.article.headline.pop_back();
  switch (tag) {
    case FormatTag::MarketSnapshot: {
      d.article.headline = "Market snapshot " + w.filler() + " " + w.filler();
      std::vector<const Company*> others;
      for (int k = 0; k < 2 + static_cast<int>(uniform_index(rng, 3)); ++k)
        others.push_back(&companies[uniform_index(rng, companies.size())]);
      std::size_t own_slot = uniform_index(rng, others.size() + 1);
      for (std::size_t i = 0; i <= others.size(); ++i) {
        if (i == own_slot) {
          std::string name = bernoulli(rng, 0.5) ? capitalize(misspell(c.short_name, rng)) : c.display;
          for (int s = 0; s < 2; ++s) body.push_back(own_sentence(name));
        } else {
          const Company* o = others[i < own_slot ? i : i - 1];
          if (o == &c) continue;
          bool event = bernoulli(rng, 0.3);
          body.push_back(w.sentence(event ? w.pick(kEventTemplates) : w.pick(kNormalTemplates), o->display, o->topic,
                                    false));
          body.push_back(w.sentence(w.pick(kNormalTemplates), o->display, o->topic, false));
        }
      }
      break;
    }
    default: {
      bool short_story = tag == FormatTag::Story && bernoulli(rng, 0.03);
      int n = short_story ? 1 : tag == FormatTag::EarningsSummary ? 4 + static_cast<int>(uniform_index(rng, 4))
                                                                  : 6 + static_cast<int>(uniform_index(rng, 5));
      for (int s = 0; s < n; ++s) {
        if (!short_story && bernoulli(rng, 0.15))
          body.push_back(w.sentence(w.pick(kGenericTemplates), w.filler(), c.topic, false));
        else
          body.push_back(own_sentence(mention()));
      }
      if (short_story) d.article.headline = "Brief";
      break;
    }
  }

  bool html = bernoulli(rng, 0.3);
  std::string text;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) text += bernoulli(rng, 0.3) ? "\n" : " ";
    text += html ? "<p>" + body[i] + "</p>" : body[i];
  }
  if (bernoulli(rng, 0.5))
    text += "\nReporting by " + capitalize(w.pick(pools.people)) + " " + capitalize(w.pick(pools.people)) +
            "; Editing by " + capitalize(w.pick(pools.people));
  d.article.body = std::move(text);
  return d;
}

FormatTag draw_format(Rng& rng) {
  double r = uniform01(rng);
  if (r < 0.6) return FormatTag::Story;
  if (r < 0.75) return FormatTag::EarningsSummary;
  if (r < 0.9) return FormatTag::MarketSnapshot;
  if (r < 0.95) return FormatTag::MachineGenerated;
  return FormatTag::Unverified;
}

std::map<int, std::string> invert_scale(const std::map<std::string, int, std::less<>>& scale) {
  std::map<int, std::string> out;
  for (const auto& [symbol, notch] : scale) out.emplace(notch, symbol);  // first symbol per notch wins
  return out;
}

std::vector<float> random_direction(int dim, Rng& rng) {
  std::vector<float> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  for (auto& x : v) {
    x = static_cast<float>(standard_normal(rng));
    norm += static_cast<double>(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
  return v;
}

std::vector<float> noisy(const std::vector<float>* direction, double weight, double noise, int dim, Rng& rng) {
  std::vector<float> v(static_cast<std::size_t>(dim));
  double scale = noise / std::sqrt(static_cast<double>(dim));
  for (std::size_t k = 0; k < v.size(); ++k)
    v[k] = static_cast<float>((direction ? weight * (*direction)[k] : 0.0) + scale * standard_normal(rng));
  return v;
}

std::string lexicon_text(const char* title, const std::vector<std::pair<std::string, double>>& entries) {
  std::string out = std::string("# synthetic ") + title + " lexicon\n";
  auto sorted = entries;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [word, score] : sorted) out += word + "\t" + io::format_double(score, 6) + "\n";
  return out;
}

}  // namespace

SynthBundle generate(const GeneratorConfig& config) {
  config.validate();
  SynthBundle bundle;
  bundle.config = config;
  Rng vocab_rng(mix_seed(config.seed, "vocabulary"));

  // vocabulary pools, all disjoint
  std::size_t n_topic_words = static_cast<std::size_t>(config.topic_count * config.topic_block_size);
  std::size_t total = static_cast<std::size_t>(config.vocab_size) + n_topic_words +
                      static_cast<std::size_t>(config.event_vocab_size + 2 * config.sentiment_vocab_size + 40);
  auto words = pseudo_words(total, vocab_rng);
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    std::vector<std::string> out(words.begin() + static_cast<std::ptrdiff_t>(at),
                                 words.begin() + static_cast<std::ptrdiff_t>(at + n));
    at += n;
    return out;
  };
  Pools pools;
  pools.filler = take(static_cast<std::size_t>(config.vocab_size));
  double acc = 0.0;
  for (std::size_t r = 0; r < pools.filler.size(); ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), 0.8);
    pools.filler_cdf.push_back(acc);
  }
  for (int t = 0; t < config.topic_count; ++t) pools.topics.push_back(take(static_cast<std::size_t>(config.topic_block_size)));
  pools.events = take(static_cast<std::size_t>(config.event_vocab_size));
  pools.positive = take(static_cast<std::size_t>(config.sentiment_vocab_size));
  pools.negative = take(static_cast<std::size_t>(config.sentiment_vocab_size));
  pools.people = take(40);
  bundle.event_words = pools.events;

  // companies with well-separated 4-syllable names
  std::vector<Company> companies;
  std::vector<std::string> used_names;
  for (const auto& w : words) used_names.push_back(w);
  while (companies.size() < static_cast<std::size_t>(config.n_companies)) {
    auto candidate = pseudo_words(1, vocab_rng, 4, 4)[0];
    bool clash = false;
    for (const auto& c : companies) clash = clash || levenshtein(c.short_name, candidate) < 4;
    for (const auto& u : used_names) clash = clash || u == candidate;
    if (clash) continue;
    Company c;
    char pid[16];
    std::snprintf(pid, sizeof pid, "C%04zu", companies.size() + 1);
    c.pid = pid;
    c.short_name = candidate;
    c.display = capitalize(candidate);
    c.full_name = c.display + " " + kNameSuffixes[uniform_index(vocab_rng, kNameSuffixes.size())];
    c.topic = static_cast<int>(uniform_index(vocab_rng, static_cast<std::size_t>(config.topic_count)));
    companies.push_back(std::move(c));
  }

  Rng rng(mix_seed(config.seed, "rows"));
  Writer writer(pools, rng);
  const auto moodys = invert_scale(NotchScale::standard().moodys_map());
  const auto sp = invert_scale(NotchScale::standard().sp_map());
  const Date base(2019, 1, 7);

  std::vector<RawArticle> articles;
  std::string ratings = "pid,date,moodys_symbol,sp_symbol\n";
  std::string benchmark = "pid,date";
  for (int j = 1; j <= 9; ++j) benchmark += ",bench_" + std::to_string(j);
  benchmark += "\n";
  const double loadings[9] = {1.0, 0.8, 0.6, 0.9, 0.7, 0.5, 0.8, 0.6, 0.4};

  for (const auto& company : companies) {
    Date start = base.plus_days(static_cast<int>(uniform_index(rng, 180)));
    int positives = 0;
    for (int d = 0; d < config.n_days; ++d) positives += bernoulli(rng, config.downgrade_rate);
    int first_pos = config.n_days - positives;

    // ratings: initial observation before the window, one downgrade 365 days after the first positive day
    int m0 = 5 + static_cast<int>(uniform_index(rng, 10));
    int s0 = std::clamp(m0 + static_cast<int>(uniform_index(rng, 3)) - 1, 1, 18);
    ratings += company.pid + "," + start.plus_days(-30).to_string() + "," + moodys.at(m0) + "," + sp.at(s0) + "\n";
    if (positives > 0) {
      Date downgrade = start.plus_days(first_pos * config.day_spacing + 365);
      int current = std::max(m0, s0);
      int next = std::min(current + 1 + static_cast<int>(uniform_index(rng, 3)), 20);
      bool by_moodys = bernoulli(rng, 0.5);
      ratings += company.pid + "," + downgrade.to_string() + "," + (by_moodys ? moodys.at(next) : moodys.at(m0)) +
                 "," + (by_moodys ? sp.at(s0) : sp.at(next)) + "\n";
    } else if (bernoulli(rng, 0.3)) {
      Date upgrade = start.plus_days(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(config.n_days * config.day_spacing))));
      ratings += company.pid + "," + upgrade.to_string() + "," + moodys.at(std::max(m0 - 1, 1)) + "," +
                 sp.at(std::max(s0 - 1, 1)) + "\n";
    }

    for (int d = 0; d < config.n_days; ++d) {
      PlantedRow row;
      row.key = {company.pid, start.plus_days(d * config.day_spacing)};
      row.label = d >= first_pos;
      row.topic = company.topic;
      if (row.label) {
        row.bench_strong = bernoulli(rng, config.benchmark_signal_strength);
        row.news_eligible = !row.bench_strong || !bernoulli(rng, config.complementarity);
      }

      double shift = row.bench_strong ? 2.0 : 0.0;
      double group[3] = {standard_normal(rng), standard_normal(rng), standard_normal(rng)};
      benchmark += row.key.pid + "," + row.key.date.to_string();
      for (int j = 0; j < 9; ++j) {
        double x = loadings[j] * shift + 0.6 * group[j / 3] + 0.8 * standard_normal(rng);
        benchmark += "," + io::format_double(x, 10);
      }
      benchmark += "\n";

      if (bernoulli(rng, config.news_coverage)) {
        double event_prob = 0.02;
        if (row.label) event_prob += (row.news_eligible ? 0.65 : 0.05) * config.news_signal_strength;
        DayState day{&company, row.key.date, event_prob};
        int n_articles = 1 + bernoulli(rng, 0.4) + bernoulli(rng, 0.15);
        for (int a = 0; a < n_articles; ++a) {
          auto draft = write_article(draw_format(rng), day, companies, writer, pools, rng);
          ++row.articles;
          row.sentences += draft.sentences;
          row.event_sentences += draft.event_sentences;
          articles.push_back(std::move(draft.article));
        }
      }
      bundle.positives += static_cast<std::size_t>(row.label);
      bundle.truth.push_back(std::move(row));
    }
  }

  // aliases
  json aliases = json::object();
  for (const auto& c : companies) aliases[c.pid] = {{"name", c.full_name}, {"aliases", {c.short_name}}};

  // lexicons
  Rng lex_rng(mix_seed(config.seed, "lexicons"));
  auto subset = [&](const std::vector<std::string>& pool, double share) {
    std::vector<std::string> out;
    for (const auto& w : pool)
      if (bernoulli(lex_rng, share)) out.push_back(w);
    return out;
  };
  std::vector<std::pair<std::string, double>> lm, vader, afinn, swn, opinion;
  auto lm_events = subset(pools.events, config.lm_event_coverage);
  for (const auto& w : lm_events) lm.emplace_back(w, -1);
  for (const auto& w : subset(pools.negative, 0.5)) lm.emplace_back(w, -1);
  for (const auto& w : subset(pools.positive, 0.5)) lm.emplace_back(w, 1);
  for (const auto& w : subset(pools.positive, 0.6)) vader.emplace_back(w, 0.5 + 3.0 * uniform01(lex_rng));
  for (const auto& w : subset(pools.negative, 0.6)) vader.emplace_back(w, -0.5 - 3.0 * uniform01(lex_rng));
  for (const auto& w : subset(pools.positive, 0.5)) afinn.emplace_back(w, 1 + static_cast<double>(uniform_index(lex_rng, 5)));
  for (const auto& w : subset(pools.negative, 0.5)) afinn.emplace_back(w, -1 - static_cast<double>(uniform_index(lex_rng, 5)));
  for (const auto& w : subset(pools.positive, 0.7)) swn.emplace_back(w, 0.125 * (1 + static_cast<double>(uniform_index(lex_rng, 6))));
  for (const auto& w : subset(pools.negative, 0.7)) swn.emplace_back(w, -0.125 * (1 + static_cast<double>(uniform_index(lex_rng, 6))));
  swn.emplace_back(pools.filler[0], 0.25);
  swn.emplace_back(pools.filler[0], -0.25);
  for (const auto& w : subset(pools.positive, 0.4)) opinion.emplace_back(w, 1);
  for (const auto& w : subset(pools.negative, 0.4)) opinion.emplace_back(w, -1);

  // word vectors: event words share one direction, each topic block another
  Rng vec_rng(mix_seed(config.seed, "vectors"));
  WordVectorTable vectors(config.vec_dim);
  auto event_dir = random_direction(config.vec_dim, vec_rng);
  auto pos_dir = random_direction(config.vec_dim, vec_rng);
  auto neg_dir = random_direction(config.vec_dim, vec_rng);
  std::vector<std::vector<float>> topic_dirs;
  for (int t = 0; t < config.topic_count; ++t) topic_dirs.push_back(random_direction(config.vec_dim, vec_rng));
  for (const auto& w : pools.events) vectors.add(w, noisy(&event_dir, 1.0, 0.3, config.vec_dim, vec_rng));
  for (int t = 0; t < config.topic_count; ++t)
    for (const auto& w : pools.topics[static_cast<std::size_t>(t)])
      vectors.add(w, noisy(&topic_dirs[static_cast<std::size_t>(t)], 0.8, 0.6, config.vec_dim, vec_rng));
  for (const auto& w : pools.positive) vectors.add(w, noisy(&pos_dir, 0.5, 0.8, config.vec_dim, vec_rng));
  for (const auto& w : pools.negative) vectors.add(w, noisy(&neg_dir, 0.5, 0.8, config.vec_dim, vec_rng));
  for (const auto& w : pools.filler) vectors.add(w, noisy(nullptr, 0.0, 1.0, config.vec_dim, vec_rng));
  for (const auto& w : kFunctionWords) vectors.add(w, noisy(nullptr, 0.0, 1.0, config.vec_dim, vec_rng));
  for (const auto& w : kDowngradeWords) vectors.add(w, noisy(&event_dir, 0.5, 0.8, config.vec_dim, vec_rng));
  for (const auto& w : pseudo_words(static_cast<std::size_t>(config.vec_distractors), vec_rng, 2, 4))
    vectors.add(w, noisy(nullptr, 0.0, 1.0, config.vec_dim, vec_rng));

  // provenance
  std::string provenance = "pid,date,label,bench_strong,news_eligible,articles,sentences,event_sentences,topic\n";
  for (const auto& r : bundle.truth)
    provenance += r.key.pid + "," + r.key.date.to_string() + "," + std::to_string(r.label) + "," +
                  std::to_string(r.bench_strong) + "," + std::to_string(r.news_eligible) + "," +
                  std::to_string(r.articles) + "," + std::to_string(r.sentences) + "," +
                  std::to_string(r.event_sentences) + "," + std::to_string(r.topic) + "\n";

  auto& files = bundle.files;
  files[bundle_files::kArticles] = articles_to_jsonl(articles);
  files[bundle_files::kAliases] = aliases.dump(1) + "\n";
  files[bundle_files::kRatings] = ratings;
  files[bundle_files::kBenchmark] = benchmark;
  files[bundle_files::kVectors] = format_vec(vectors);
  files[bundle_files::kProvenance] = provenance;
  files[bundle_files::lexicon("loughran_mcdonald")] = lexicon_text("loughran_mcdonald", lm);
  files[bundle_files::lexicon("vader")] = lexicon_text("vader", vader);
  files[bundle_files::lexicon("afinn")] = lexicon_text("afinn", afinn);
  files[bundle_files::lexicon("sentiwordnet")] = lexicon_text("sentiwordnet", swn);
  files[bundle_files::lexicon("opinion")] = lexicon_text("opinion", opinion);

  json manifest;
  manifest["generator"] = "newsrisk-synthgen";
  manifest["version"] = 1;
  manifest["config"] = json::parse(generator_config_to_json(config));
  manifest["company_days"] = bundle.truth.size();
  manifest["positives"] = bundle.positives;
  manifest["positive_rate"] = static_cast<double>(bundle.positives) / static_cast<double>(bundle.truth.size());
  manifest["articles"] = articles.size();
  std::size_t with_news = 0, eligible = 0, strong = 0;
  for (const auto& r : bundle.truth) {
    with_news += r.articles > 0;
    eligible += r.news_eligible;
    strong += r.bench_strong;
  }
  manifest["company_days_with_articles"] = with_news;
  manifest["positives_news_eligible"] = eligible;
  manifest["positives_benchmark_strong"] = strong;
  manifest["event_words"] = pools.events;
  manifest["lexicon_event_words"] = lm_events;
  manifest["topic_blocks"] = pools.topics;
  manifest["templates"] = {{"normal", kNormalTemplates}, {"event", kEventTemplates}, {"generic", kGenericTemplates}};
  json hashes = json::object();
  for (const auto& [name, content] : files) hashes[name] = fnv1a_hex(content);
  manifest["files"] = hashes;
  files[bundle_files::kManifest] = manifest.dump(2) + "\n";
  return bundle;
}

std::string generator_config_to_json(const GeneratorConfig& c) {
  json j = {{"n_companies", c.n_companies},
            {"n_days", c.n_days},
            {"day_spacing", c.day_spacing},
            {"downgrade_rate", c.downgrade_rate},
            {"news_signal_strength", c.news_signal_strength},
            {"benchmark_signal_strength", c.benchmark_signal_strength},
            {"complementarity", c.complementarity},
            {"news_coverage", c.news_coverage},
            {"topic_count", c.topic_count},
            {"topic_block_size", c.topic_block_size},
            {"vocab_size", c.vocab_size},
            {"event_vocab_size", c.event_vocab_size},
            {"sentiment_vocab_size", c.sentiment_vocab_size},
            {"lm_event_coverage", c.lm_event_coverage},
            {"vec_dim", c.vec_dim},
            {"vec_distractors", c.vec_distractors},
            {"seed", c.seed}};
  return j.dump(2);
}

GeneratorConfig generator_config_from_json(std::string_view text) {
  GeneratorConfig c;
  try {
    auto j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, "generator config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "n_companies") c.n_companies = value.get<int>();
      else if (key == "n_days") c.n_days = value.get<int>();
      else if (key == "day_spacing") c.day_spacing = value.get<int>();
      else if (key == "downgrade_rate") c.downgrade_rate = value.get<double>();
      else if (key == "news_signal_strength") c.news_signal_strength = value.get<double>();
      else if (key == "benchmark_signal_strength") c.benchmark_signal_strength = value.get<double>();
      else if (key == "complementarity") c.complementarity = value.get<double>();
      else if (key == "news_coverage") c.news_coverage = value.get<double>();
      else if (key == "topic_count") c.topic_count = value.get<int>();
      else if (key == "topic_block_size") c.topic_block_size = value.get<int>();
      else if (key == "vocab_size") c.vocab_size = value.get<int>();
      else if (key == "event_vocab_size") c.event_vocab_size = value.get<int>();
      else if (key == "sentiment_vocab_size") c.sentiment_vocab_size = value.get<int>();
      else if (key == "lm_event_coverage") c.lm_event_coverage = value.get<double>();
      else if (key == "vec_dim") c.vec_dim = value.get<int>();
      else if (key == "vec_distractors") c.vec_distractors = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw Error(ErrorKind::ConfigError, "unknown generator config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("generator config: ") + e.what());
  }
  c.validate();
  return c;
}

PlantedTopicCorpus planted_topic_corpus(int n_topics, int n_docs, int doc_len, int block_size, double primary_share,
                                        std::uint64_t seed) {
  if (n_topics < 1 || n_docs < 1 || doc_len < 1 || block_size < 2)
    throw Error(ErrorKind::ConfigError, "planted topic corpus needs positive sizes");
  Rng rng(mix_seed(seed, "planted-topics"));
  auto words = pseudo_words(static_cast<std::size_t>(n_topics * block_size), rng);
  PlantedTopicCorpus out;
  for (int t = 0; t < n_topics; ++t)
    out.blocks.emplace_back(words.begin() + t * block_size, words.begin() + (t + 1) * block_size);
  for (int d = 0; d < n_docs; ++d) {
    int primary = d % n_topics;
    int secondary = n_topics > 1 ? (primary + 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_topics - 1)))) % n_topics
                                 : primary;
    TokenList doc;
    for (int i = 0; i < doc_len; ++i) {
      int t = bernoulli(rng, primary_share) ? primary : secondary;
      const auto& block = out.blocks[static_cast<std::size_t>(t)];
      doc.push_back(block[uniform_index(rng, block.size())]);
    }
    out.documents.push_back(std::move(doc));
    out.dominant_topic.push_back(primary);
  }
  return out;
}

}  // namespace newsrisk
