// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dprw/corpus.hpp"
#include "dprw/error.hpp"
#include "dprw/rng.hpp"

namespace dprw {

// Templated intent-classification corpora in two domains whose content
// words are disjoint; only the words in `shared_function_words()` occur in
// both. Each intent has several templates with {slot} placeholders.
enum class SyntheticDomain { kTravel, kAssistant };

struct SyntheticSizes {
  std::size_t train = 200;
  std::size_t validation = 40;
  std::size_t test = 160;
};

inline const std::set<std::string>& shared_function_words() {
  static const std::set<std::string> words = {"a", "for", "i", "in", "is", "me", "please", "the", "to", "what"};
  return words;
}

namespace detail {

struct IntentTemplates {
  std::string label;
  std::vector<std::string> templates;
};

struct DomainSpec {
  std::vector<IntentTemplates> intents;
  std::map<std::string, std::vector<std::string>> slots;
};

inline const DomainSpec& domain_spec(SyntheticDomain d) {
  static const DomainSpec travel{
      {
          {"flight", {"find a flight from {city} to {city}", "flights from {city} to {city} on {day}"}},
          {"airfare", {"how much is the fare from {city} to {city}", "cheapest fare to {city} on {day}"}},
          {"ground_service", {"ground transportation in {city}", "is there a taxi at the {city} airport"}},
          {"airline", {"which airline flies to {city}", "what airlines serve {city} on {day}"}},
          {"abbreviation", {"what does fare code {code} mean", "explain code {code}"}},
          {"aircraft", {"what aircraft is used on flight {num}", "type of plane for flight {num}"}},
          {"distance", {"how far is the {city} airport from downtown", "distance from downtown {city} to the airport"}},
          {"capacity", {"how many seats on a {plane}", "what is the seating capacity of the {plane}"}},
      },
      {
          {"city", {"boston", "denver", "dallas", "atlanta", "newark", "cleveland", "seattle", "houston"}},
          {"day", {"monday", "friday", "sunday"}},
          {"code", {"qx", "yn", "fn"}},
          {"num", {"twelve", "forty", "ninety"}},
          {"plane", {"boeing", "airbus", "turboprop"}},
      }};
  static const DomainSpec assistant{
      {
          {"play_music", {"play some {genre} music by {artist}", "play the latest {artist} songs"}},
          {"get_weather", {"tell me the weather forecast in {place} {when}", "will it rain in {place} {when}"}},
          {"book_restaurant", {"book a table for {count} near {place}", "reserve a {cuisine} restaurant for {count}"}},
          {"rate_book", {"rate this novel {stars} stars", "give the book {title} {stars} stars"}},
          {"add_to_playlist", {"add {artist} to my {genre} playlist", "put this song in my {genre} playlist"}},
          {"search_creative_work", {"search for the movie {title}", "look up the album {title}"}},
          {"search_screening_event", {"movie times for {title} near {place}", "where can i watch {title} {when}"}},
          {"set_alarm", {"set an alarm for {clock} {when}", "wake me up {when} around {clock}"}},
      },
      {
          {"genre", {"jazz", "rock", "pop"}},
          {"artist", {"adele", "drake", "shakira", "coldplay"}},
          {"place", {"paris", "tokyo", "berlin", "madrid"}},
          {"when", {"tomorrow", "tonight", "today"}},
          {"count", {"six", "seven", "eight"}},
          {"cuisine", {"italian", "thai", "mexican"}},
          {"stars", {"one", "three", "four"}},
          {"title", {"dune", "titanic", "inception"}},
          {"clock", {"noon", "midnight", "dawn"}},
      }};
  return d == SyntheticDomain::kTravel ? travel : assistant;
}

inline std::string fill_template(const std::string& tmpl, const DomainSpec& spec, Rng& rng) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i);
      const auto& values = spec.slots.at(tmpl.substr(i + 1, close - i - 1));
      out += values[rng.below(values.size())];
      i = close + 1;
    } else {
      out.push_back(tmpl[i++]);
    }
  }
  return out;
}

inline Split synthetic_split(const DomainSpec& spec, std::size_t n, Rng& rng) {
  static const std::vector<std::string> prefixes = {"", "", "please "};
  static const std::vector<std::string> suffixes = {"", "", " for me"};
  Split docs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& intent = spec.intents[i % spec.intents.size()];
    const auto& tmpl = intent.templates[rng.below(intent.templates.size())];
    std::string text = prefixes[rng.below(prefixes.size())] + fill_template(tmpl, spec, rng);
    text += suffixes[rng.below(suffixes.size())];
    docs.push_back(Document{text, intent.label});
  }
  rng.shuffle(docs);
  return docs;
}

}  // namespace detail

inline std::string domain_name(SyntheticDomain d) { return d == SyntheticDomain::kTravel ? "travel" : "assistant"; }

inline SyntheticDomain parse_domain(const std::string& s) {
  if (s == "travel") return SyntheticDomain::kTravel;
  if (s == "assistant") return SyntheticDomain::kAssistant;
  throw ConfigError("unknown synthetic domain '" + s + "' (expected travel or assistant)");
}

// Labels are balanced round-robin within each split, then shuffled.
inline LabeledDataset make_synthetic_corpus(SyntheticDomain domain, const SyntheticSizes& sizes, std::uint64_t seed) {
  if (sizes.train == 0) throw ConfigError("synthetic corpus needs a non-empty training split");
  const auto& spec = detail::domain_spec(domain);
  const auto tag = static_cast<std::uint64_t>(domain);
  LabeledDataset ds;
  Rng train = Rng::stream(seed, Purpose::kSynthetic, {tag, 0});
  Rng val = Rng::stream(seed, Purpose::kSynthetic, {tag, 1});
  Rng test = Rng::stream(seed, Purpose::kSynthetic, {tag, 2});
  ds.train = detail::synthetic_split(spec, sizes.train, train);
  ds.validation = detail::synthetic_split(spec, sizes.validation, val);
  ds.test = detail::synthetic_split(spec, sizes.test, test);
  ds.recompute_label_set();
  return ds;
}

}  // namespace dprw
