// Writes the bundled toy corpus: 200 documents whose labels depend on the
// document topic (a confounder) and on a few planted words that are
// independent of the topic, plus 100 held-out documents from the same
// process.
//
//   make_toy_corpus OUT_DIR
//
// Produces OUT_DIR/toy_corpus.jsonl, OUT_DIR/toy_corpus_test.jsonl,
// OUT_DIR/toy_corpus.meta.json and OUT_DIR/lexicon.json.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

const std::vector<std::vector<std::string>> kTopics = {
    {"match",   "team",    "goal",    "coach",   "league",  "season",  "player",  "stadium", "score",
     "striker", "defender", "referee", "trophy",  "fans",    "transfer", "keeper",  "derby",   "pitch",
     "tackle",  "captain", "injury",  "final",   "kickoff", "penalty", "squad"},
    {"recipe",  "oven",    "flour",   "butter",  "garlic",  "sauce",   "kitchen", "bake",    "pasta",
     "onion",   "pepper",  "salt",    "dinner",  "chef",    "spice",   "roast",   "dough",   "soup",
     "herbs",   "grill",   "cheese",  "lemon",   "dessert", "simmer",  "plate"},
    {"flight",  "hotel",   "beach",   "island",  "passport", "luggage", "museum",  "train",   "tour",
     "journey", "harbor",  "village", "map",     "ticket",  "airport", "resort",  "cruise",  "hostel",
     "coast",   "mountain", "guide",  "border",  "visa",    "ferry",   "market"},
    {"software", "laptop", "server",  "code",    "network", "browser", "update",  "device",  "cloud",
     "battery", "screen",  "keyboard", "app",    "startup", "data",    "chip",    "cable",   "router",
     "compiler", "kernel", "database", "pixel",  "sensor",  "robot",   "upload"}};

const std::vector<std::string> kGeneral = {
    "the",   "a",      "and",    "of",     "to",     "in",    "it",    "was",   "this",  "that",
    "with",  "for",    "on",     "we",     "they",   "there", "some",  "more",  "time",  "day",
    "week",  "people", "place",  "thing",  "way",    "part",  "year",  "new",   "old",   "small",
    "large", "long",   "first",  "last",   "next",   "early", "late",  "often", "again", "still",
    "also",  "just",   "around", "about",  "after",  "before", "while", "during", "under", "over",
    "story", "friend", "family", "city",   "morning", "night", "weekend", "plan", "idea", "news"};

// Raise the label log-odds by kPlantedEffect each; drawn independently of
// the topic.
const std::vector<std::string> kPlanted = {"superb", "delightful", "flawless"};
constexpr double kPlantedRate = 0.3;
constexpr double kPlantedEffect = 4.0;
// Topic log-odds: the confounding path from topic words to the label.
const std::vector<double> kTopicBias = {-2.5, -1.0, 1.0, 2.5};

constexpr std::size_t kDocuments = 200;
constexpr std::size_t kHeldOut = 100;
constexpr std::size_t kTokensPerDoc = 40;
constexpr double kTopicShare = 0.7;
constexpr std::uint64_t kSeed = 20240517;

json lexicon() {
  return {{"superb", {"posemo"}},
          {"delightful", {"posemo"}},
          {"flawless", {"posemo"}},
          {"happ*", {"posemo"}},
          {"injur*", {"negemo", "health"}},
          {"penalty", {"negemo"}},
          {"friend", {"social"}},
          {"family", {"social"}},
          {"people", {"social"}},
          {"fans", {"social"}},
          {"team", {"social", "leisure"}},
          {"match", {"leisure"}},
          {"beach", {"leisure"}},
          {"tour", {"leisure"}},
          {"cruise", {"leisure"}},
          {"dinner", {"ingest"}},
          {"bake", {"ingest"}},
          {"soup", {"ingest"}},
          {"cheese", {"ingest"}},
          {"dessert", {"ingest"}},
          {"salt", {"ingest"}},
          {"morning", {"time"}},
          {"night", {"time"}},
          {"week*", {"time"}},
          {"day", {"time"}},
          {"year", {"time"}},
          {"early", {"time"}},
          {"late", {"time"}},
          {"comput*", {"work"}},
          {"software", {"work"}},
          {"startup", {"work"}},
          {"code", {"work"}}};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_toy_corpus OUT_DIR\n";
    return 2;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);

  // Explicit integer draws keep the output identical across standard
  // libraries, whose distribution classes are implementation-defined.
  std::mt19937_64 rng(kSeed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); };

  std::ofstream corpus(dir / "toy_corpus.jsonl", std::ios::binary);
  std::ofstream held_out(dir / "toy_corpus_test.jsonl", std::ios::binary);
  std::size_t positives = 0;
  for (std::size_t d = 0; d < kDocuments + kHeldOut; ++d) {
    const std::size_t topic = d % kTopics.size();
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < kTokensPerDoc; ++i) {
      const auto& pool = uniform() < kTopicShare ? kTopics[topic] : kGeneral;
      tokens.push_back(pool[pick(pool.size())]);
    }
    double logit = kTopicBias[topic];
    for (const auto& word : kPlanted) {
      if (uniform() < kPlantedRate) {
        tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pick(tokens.size() + 1)), word);
        logit += kPlantedEffect;
      }
    }
    // Centers the planted contribution so labels stay roughly balanced.
    logit -= kPlantedEffect * kPlantedRate * static_cast<double>(kPlanted.size());
    const int label = uniform() < 1.0 / (1.0 + std::exp(-logit)) ? 1 : 0;
    if (d < kDocuments) positives += static_cast<std::size_t>(label);
    std::string text;
    for (const auto& t : tokens) text += (text.empty() ? "" : " ") + t;
    (d < kDocuments ? corpus : held_out) << json{{"text", text}, {"label", label}}.dump() << "\n";
  }

  json meta = {{"documents", kDocuments},
               {"held_out_documents", kHeldOut},
               {"positives", positives},
               {"planted_words", kPlanted},
               {"planted_rate", kPlantedRate},
               {"planted_effect", kPlantedEffect},
               {"topic_bias", kTopicBias},
               {"seed", kSeed}};
  std::ofstream(dir / "toy_corpus.meta.json", std::ios::binary) << meta.dump(2) << "\n";
  std::ofstream(dir / "lexicon.json", std::ios::binary) << lexicon().dump(2) << "\n";
  std::cout << "wrote " << kDocuments << " documents (" << positives << " positive) to " << dir.string() << "\n";
  return 0;
}
