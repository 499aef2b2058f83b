// Writes the bundled synthetic review corpus (CSV, header Reviews,Classification).
// Usage: make_mini_corpus <out.csv>
// Output depends only on the constants below.

#include <array>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "sentipipe/corpus.hpp"
#include "sentipipe/io.hpp"
#include "sentipipe/rng.hpp"

namespace {

using sentipipe::SentimentLabel;

constexpr std::uint64_t kSeed = 20240601;

const std::vector<std::string> kDrugs = {
    "lisinopril", "metformin", "sertraline", "ibuprofen", "amoxicillin", "omeprazole",
    "gabapentin", "atorvastatin", "levothyroxine", "prednisone", "zolpidem", "citalopram"};

const std::vector<std::string> kNegative = {
    "terrible headaches every single day",
    "awful nausea and constant vomiting",
    "worst medication i have ever taken",
    "made my anxiety horribly worse",
    "severe rash and painful swelling",
    "stopped it after dizzy fainting spells",
    "miserable insomnia for weeks",
    "useless and dangerous, avoid it",
    "horrible stomach cramps and bloating",
    "my doctor had to take me off it immediately",
};

const std::vector<std::string> kNeutral = {
    "not sure yet whether it does anything",
    "some days are fine and some days are not",
    "hard to say if there is any change",
    "mild effects either way so far",
    "still waiting to see results",
    "about the same as my previous prescription",
    "no strong opinion after a month",
    "average experience overall",
};

const std::vector<std::string> kPositive = {
    "wonderful relief within a week",
    "excellent results and great energy",
    "life changing, i feel fantastic",
    "highly recommend this amazing drug",
    "my symptoms vanished completely",
    "best decision my doctor ever made",
    "happy and calm for the first time in years",
    "works perfectly with zero problems",
    "so grateful, sleeping beautifully now",
    "blood pressure is finally perfect",
};

const std::vector<std::string> kFiller = {
    "i take it every morning",
    "been on it for three months",
    "my pharmacist suggested it",
    "taking the generic version",
    "dose was adjusted twice",
    "prescribed by my family doctor",
};

// Indexed by label code.
const std::array<const std::vector<std::string>*, 3> kPools = {&kNegative, &kNeutral, &kPositive};
const std::array<std::string, 3> kVerdicts = {"horrible", "so-so", "excellent"};

template <typename T>
const T& pick(sentipipe::Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

std::string make_review(sentipipe::Rng& rng, const std::vector<std::string>& pool,
                        const std::string& verdict) {
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span(order));
  std::string text = "On " + pick(rng, kDrugs) + ": " + pool[order[0]];
  const auto phrases = 2 + rng.below(2);
  for (std::uint64_t i = 1; i < phrases; ++i) text += ". " + pool[order[i]];
  text += ". " + pick(rng, kFiller) + ". Verdict: " + verdict + ", " + verdict + ", " + verdict + ".";
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <out.csv>\n", argv[0]);
    return 2;
  }
  try {
    const std::array<std::pair<SentimentLabel, std::size_t>, 3> plan = {
        {{SentimentLabel::Negative, 150}, {SentimentLabel::Neutral, 60},
         {SentimentLabel::Positive, 90}}};
    std::vector<SentimentLabel> labels;
    for (const auto& [label, count] : plan) labels.insert(labels.end(), count, label);
    sentipipe::Rng rng(kSeed);
    rng.shuffle(std::span(labels));

    std::vector<sentipipe::RawReview> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto c = static_cast<std::size_t>(labels[i]);
      rows.push_back({"mini-" + std::to_string(i + 1),
                      make_review(rng, *kPools[c], kVerdicts[c]), labels[i]});
    }
    sentipipe::write_file(argv[1], sentipipe::corpus_to_csv(rows));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
