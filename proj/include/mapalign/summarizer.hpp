#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mapalign/error.hpp"

namespace mapalign {

/// External completion endpoint (OpenAI chat-completions wire format, plain
/// HTTP). Read from MAPALIGN_SUMMARIZER_URL / _KEY / _MODEL.
struct SummarizerConfig {
  std::string url;
  std::string api_key;
  std::string model = "gpt-4o";
  int timeout_seconds = 30;

  static std::optional<SummarizerConfig> from_env() {
    const char* url = std::getenv("MAPALIGN_SUMMARIZER_URL");
    if (!url || !*url) return std::nullopt;
    SummarizerConfig c;
    c.url = url;
    if (const char* key = std::getenv("MAPALIGN_SUMMARIZER_KEY")) c.api_key = key;
    if (const char* model = std::getenv("MAPALIGN_SUMMARIZER_MODEL"); model && *model) c.model = model;
    return c;
  }
};

struct Summary {
  std::string text;
  std::string source;  // "upstream", "extractive", or "empty"
};

namespace detail {

inline const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "the",   "and",   "for",   "with",  "that",  "this",  "from",  "are",   "was",   "were",  "has",   "have",
      "had",   "its",   "into",  "onto",  "over",  "under", "than",  "then",  "there", "their", "they",  "them",
      "these", "those", "what",  "when",  "where", "which", "while", "who",   "whom",  "will",  "would", "can",
      "could", "should", "about", "after", "before", "between", "both", "each", "more", "most", "other", "some",
      "such",  "not",   "only",  "own",   "same",  "very",  "just",  "but",   "also",  "any",   "all",   "our",
      "out",   "you",   "your",  "his",   "her",   "him",   "she",   "been",  "being", "does",  "did",   "doing",
      "how",   "why",   "because", "until", "against", "through", "during", "above", "below", "off", "again",
      "further", "once", "here", "one",  "two",   "may",   "might", "must",  "shall", "upon",  "per",   "via"};
  return words;
}

}  // namespace detail

/// Top-5 most frequent content words (count descending, then alphabetical).
inline Summary extractive_summary(const std::vector<std::string>& texts) {
  std::map<std::string, int> counts;
  for (const auto& t : texts) {
    std::string word;
    auto flush = [&] {
      if (word.size() >= 3 && !detail::stopwords().count(word)) ++counts[word];
      word.clear();
    };
    for (unsigned char ch : t) {
      if (std::isalpha(ch)) {
        word.push_back(static_cast<char>(std::tolower(ch)));
      } else {
        flush();
      }
    }
    flush();
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  Summary s{"", "extractive"};
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranked.size()); ++i) {
    if (i) s.text += ", ";
    s.text += ranked[i].first;
  }
  return s;
}

/// Sends the texts to the configured endpoint and returns its message content.
inline Summary upstream_summary(const SummarizerConfig& cfg, const std::vector<std::string>& texts) {
  const std::string prefix = "http://";
  if (cfg.url.rfind(prefix, 0) != 0) throw Error("summarizer_unavailable", "only http:// summarizer endpoints are supported", cfg.url);
  const auto slash = cfg.url.find('/', prefix.size());
  const std::string host = cfg.url.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : cfg.url.substr(slash);

  nlohmann::ordered_json body;
  body["model"] = cfg.model;
  std::string joined;
  for (const auto& t : texts) joined += "- " + t + "\n";
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", "Summarize the common theme of the following items in two sentences."}},
       {{"role", "user"}, {"content", joined}}});

  httplib::Client client(host);
  client.set_connection_timeout(cfg.timeout_seconds);
  client.set_read_timeout(cfg.timeout_seconds);
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw Error("summarizer_unavailable", "summarizer request failed", httplib::to_string(res.error()));
  if (res->status != 200) throw Error("summarizer_unavailable", "summarizer returned an error status", std::to_string(res->status));
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return {reply.at("choices").at(0).at("message").at("content").get<std::string>(), "upstream"};
  } catch (const nlohmann::json::exception& e) {
    throw Error("summarizer_unavailable", "malformed summarizer response", e.what());
  }
}

inline Summary summarize(const std::optional<SummarizerConfig>& cfg, const std::vector<std::string>& texts) {
  if (texts.empty()) return {"", "empty"};
  if (!cfg) return extractive_summary(texts);
  return upstream_summary(*cfg, texts);
}

}  // namespace mapalign
