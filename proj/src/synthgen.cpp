#include "ecnlab/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>

#include "ecnlab/error.hpp"
#include "ecnlab/rng.hpp"

namespace ecnlab {

namespace {

constexpr const char* kEntityClasses[] = {"PER", "GEO", "ORG", "TIM"};
constexpr double kOrgAcronymShare = 0.40;
constexpr double kTimDigitShare = 0.50;

const std::vector<std::string>& function_words() {
  static const std::vector<std::string> words = {
      "the", "of",  "in",  "a",    "to",  "and", "on",  "for", "with", "at",
      "by",  "from", "as", "is",   "was", "has", "had", "that", "it",  "said"};
  return words;
}

std::string random_word(SplitMix64& rng, int len_min, int len_max) {
  const int len = static_cast<int>(rng.range(len_min, len_max));
  std::string w;
  w.reserve(len);
  for (int i = 0; i < len; ++i) {
    w.push_back(static_cast<char>('a' + rng.below(26)));
  }
  return w;
}

std::string titled(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

std::string fresh_word(SplitMix64& rng, std::set<std::string>& used, int len_min, int len_max) {
  for (;;) {
    std::string w = random_word(rng, len_min, len_max);
    if (used.insert(w).second) return w;
  }
}

struct SeqVocab {
  std::vector<std::vector<std::string>> entity;  // per class
  std::vector<std::string> filler;               // function + content words
};

SeqVocab build_seq_vocab(const SeqGenConfig& cfg) {
  SeqVocab v;
  SplitMix64 rng(derive_stream(cfg.seed, "vocab"));
  std::set<std::string> used;
  for (const std::string& w : function_words()) used.insert(w);

  v.entity.resize(cfg.entity_vocab_sizes.size());
  for (std::size_t c = 0; c < cfg.entity_vocab_sizes.size(); ++c) {
    for (int i = 0; i < cfg.entity_vocab_sizes[c]; ++i) {
      std::string w;
      if (c == 2 && rng.uniform() < kOrgAcronymShare) {
        // acronym: all caps, 3-5 letters
        w = fresh_word(rng, used, 3, 5);
        for (char& ch : w) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (!used.insert(w).second) {
          --i;
          continue;
        }
      } else if (c == 3 && rng.uniform() < kTimDigitShare) {
        // year-like digit token
        w = std::to_string(1900 + rng.range(0, 140));
        if (!used.insert(w).second) {
          --i;
          continue;
        }
      } else {
        w = titled(fresh_word(rng, used, 4, 8));
        if (!used.insert(w).second) {
          --i;
          continue;
        }
      }
      v.entity[c].push_back(w);
    }
  }

  v.filler = function_words();
  const int n_decoys = static_cast<int>(std::lround(cfg.decoy_fraction * cfg.filler_vocab_size));
  for (int i = 0; i < cfg.filler_vocab_size; ++i) {
    std::string w = fresh_word(rng, used, 3, 8);
    if (i < n_decoys) {
      w = titled(w);  // capitalized non-entity word
      if (!used.insert(w).second) {
        --i;
        continue;
      }
    }
    v.filler.push_back(w);
  }
  return v;
}

void validate(const SeqGenConfig& cfg) {
  if (cfg.n_train < 0 || cfg.n_gold < 0 || cfg.n_test < 0) {
    throw ConfigError("seq gen: negative split size");
  }
  if (cfg.entity_vocab_sizes.size() != 4) {
    throw ConfigError("seq gen: expected 4 entity vocab sizes (PER GEO ORG TIM)");
  }
  for (int s : cfg.entity_vocab_sizes) {
    if (s < 1) throw ConfigError("seq gen: entity vocab size must be >= 1");
  }
  if (cfg.sentence_len_min < 1 || cfg.sentence_len_max < cfg.sentence_len_min) {
    throw ConfigError("seq gen: empty sentence length range");
  }
  if (cfg.entity_len_min < 1 || cfg.entity_len_max < cfg.entity_len_min) {
    throw ConfigError("seq gen: empty entity length range");
  }
  if (cfg.entity_density < 0) throw ConfigError("seq gen: negative entity density");
  if (cfg.filler_vocab_size < 1) throw ConfigError("seq gen: filler vocab too small");
  // the longest admissible entity load must fit the shortest sentence
  const int max_entities = static_cast<int>(std::floor(cfg.entity_density)) + 1;
  const int worst = max_entities * cfg.entity_len_max + (max_entities - 1);
  if (worst > cfg.sentence_len_min) {
    throw ConfigError("seq gen: density/lengths cannot fit the shortest sentence");
  }
}

// Uniform composition of `free` into n_gaps non-negative parts (stars and bars).
std::vector<int> random_gaps(SplitMix64& rng, int free, int n_gaps) {
  if (n_gaps == 1) return {free};
  const int m = free + n_gaps - 1;
  std::set<int> bars;
  while (static_cast<int>(bars.size()) < n_gaps - 1) {
    bars.insert(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
  }
  std::vector<int> gaps;
  int prev = -1;
  for (int b : bars) {
    gaps.push_back(b - prev - 1);
    prev = b;
  }
  gaps.push_back(m - 1 - prev);
  return gaps;
}

SequenceSample gen_sentence(const SeqGenConfig& cfg, const SeqVocab& vocab, SplitMix64& rng) {
  const int body = static_cast<int>(rng.range(cfg.sentence_len_min, cfg.sentence_len_max));
  int n_entities = static_cast<int>(std::floor(cfg.entity_density));
  const double frac = cfg.entity_density - std::floor(cfg.entity_density);
  if (rng.bernoulli(frac)) ++n_entities;

  std::vector<int> entity_len(n_entities);
  std::vector<int> entity_class(n_entities);
  int load = 0;
  for (int e = 0; e < n_entities; ++e) {
    entity_len[e] = static_cast<int>(rng.range(cfg.entity_len_min, cfg.entity_len_max));
    entity_class[e] = static_cast<int>(rng.below(vocab.entity.size()));
    load += entity_len[e];
  }
  while (n_entities > 0 && load + (n_entities - 1) > body) {
    load -= entity_len[--n_entities];  // should not happen with a valid config
  }

  const int free = body - load - std::max(0, n_entities - 1);
  const std::vector<int> gaps = random_gaps(rng, free, n_entities + 1);

  SequenceSample s;
  auto push_filler = [&] {
    const bool fn = rng.uniform() < cfg.function_word_share;
    const std::size_t n_fn = function_words().size();
    std::string w = fn ? vocab.filler[rng.below(n_fn)]
                       : vocab.filler[n_fn + rng.below(vocab.filler.size() - n_fn)];
    s.tokens.push_back(std::move(w));
    s.labels.push_back(0);
  };

  for (int e = 0; e < n_entities; ++e) {
    for (int g = 0; g < gaps[e] + (e > 0 ? 1 : 0); ++g) push_filler();
    const auto& words = vocab.entity[entity_class[e]];
    for (int t = 0; t < entity_len[e]; ++t) {
      s.tokens.push_back(words[rng.below(words.size())]);
      s.labels.push_back(entity_class[e] + 1);
    }
  }
  for (int g = 0; g < gaps[n_entities]; ++g) push_filler();

  s.tokens.push_back(".");
  s.labels.push_back(0);

  // sentence-initial capitalization for background words
  if (s.labels[0] == 0) s.tokens[0] = titled(s.tokens[0]);

  s.features.assign(s.tokens.size(), FeatureMap{});
  return s;
}

Dataset gen_seq_split(const SeqGenConfig& cfg, const SeqVocab& vocab, const TagSet& ts,
                      const char* split, int n, DatasetRole role) {
  Dataset ds{ts, DataKind::sequence, role, {}, {}};
  ds.sequences.reserve(n);
  const std::uint64_t split_seed = derive_stream(cfg.seed, split);
  for (int i = 0; i < n; ++i) {
    SplitMix64 rng(derive_stream(split_seed, static_cast<std::uint64_t>(i)));
    ds.sequences.push_back(gen_sentence(cfg, vocab, rng));
  }
  return ds;
}

void validate(const GridGenConfig& cfg) {
  if (cfg.n_train < 0 || cfg.n_gold < 0 || cfg.n_test < 0) {
    throw ConfigError("grid gen: negative split size");
  }
  if (cfg.height < 4 || cfg.width < 4) throw ConfigError("grid gen: grid too small");
  if (cfg.band_height_min < 1 || cfg.band_height_max < cfg.band_height_min ||
      cfg.band_height_max > cfg.height) {
    throw ConfigError("grid gen: bad road band height range");
  }
  if (cfg.vehicle_count_min < 0 || cfg.vehicle_count_max < cfg.vehicle_count_min) {
    throw ConfigError("grid gen: bad vehicle count range");
  }
  if (cfg.vehicle_h_min < 1 || cfg.vehicle_h_max < cfg.vehicle_h_min ||
      cfg.vehicle_w_min < 1 || cfg.vehicle_w_max < cfg.vehicle_w_min) {
    throw ConfigError("grid gen: bad vehicle size range");
  }
  if (cfg.vehicle_h_min > cfg.band_height_min || cfg.vehicle_w_min > cfg.width) {
    throw ConfigError("grid gen: vehicle does not fit the road band");
  }
  if (cfg.vehicle_palette.empty()) throw ConfigError("grid gen: empty vehicle palette");
  if (cfg.color_noise < 0) throw ConfigError("grid gen: negative color noise");
}

double quantized(double v) { return std::round(v * 1e6) / 1e6; }

GridSample gen_grid(const GridGenConfig& cfg, SplitMix64& rng) {
  GridSample g;
  g.height = cfg.height;
  g.width = cfg.width;
  g.labels.assign(g.size(), 0);
  g.pixels.assign(g.size(), {0, 0, 0});

  const int band_h = static_cast<int>(rng.range(cfg.band_height_min, cfg.band_height_max));
  const int band_top = static_cast<int>(rng.range(0, cfg.height - band_h));
  for (int r = band_top; r < band_top + band_h; ++r) {
    for (int c = 0; c < cfg.width; ++c) g.labels[g.at(r, c)] = 1;
  }

  std::vector<std::array<double, 3>> base(g.size());
  for (int p = 0; p < g.size(); ++p) {
    base[p] = g.labels[p] == 1 ? cfg.road_color : cfg.other_color;
  }

  const int n_veh = static_cast<int>(rng.range(cfg.vehicle_count_min, cfg.vehicle_count_max));
  for (int v = 0; v < n_veh; ++v) {
    const int vh = static_cast<int>(rng.range(cfg.vehicle_h_min, std::min(cfg.vehicle_h_max, band_h)));
    const int vw = static_cast<int>(rng.range(cfg.vehicle_w_min, std::min(cfg.vehicle_w_max, cfg.width)));
    const int top = static_cast<int>(rng.range(band_top, band_top + band_h - vh));
    const int left = static_cast<int>(rng.range(0, cfg.width - vw));
    const auto color = cfg.vehicle_palette[rng.below(cfg.vehicle_palette.size())];
    for (int r = top; r < top + vh; ++r) {
      for (int c = left; c < left + vw; ++c) {
        g.labels[g.at(r, c)] = 2;
        base[g.at(r, c)] = color;
      }
    }
  }

  for (int p = 0; p < g.size(); ++p) {
    for (int ch = 0; ch < 3; ++ch) {
      const double noisy = base[p][ch] + cfg.color_noise * rng.normal();
      g.pixels[p][ch] = quantized(std::clamp(noisy, 0.0, 1.0));
    }
  }
  return g;
}

Dataset gen_grid_split(const GridGenConfig& cfg, const TagSet& ts, const char* split, int n,
                       DatasetRole role) {
  Dataset ds{ts, DataKind::grid, role, {}, {}};
  ds.grids.reserve(n);
  const std::uint64_t split_seed = derive_stream(cfg.seed, split);
  for (int i = 0; i < n; ++i) {
    SplitMix64 rng(derive_stream(split_seed, static_cast<std::uint64_t>(i)));
    ds.grids.push_back(gen_grid(cfg, rng));
  }
  return ds;
}

}  // namespace

GeneratedSplits gen_synthetic_sequences(const SeqGenConfig& cfg) {
  validate(cfg);
  TagSet ts;
  ts.labels.push_back("O");
  for (const char* c : kEntityClasses) ts.labels.emplace_back(c);
  ts.background_index = 0;

  const SeqVocab vocab = build_seq_vocab(cfg);
  GeneratedSplits out;
  out.tagset = ts;
  out.train = gen_seq_split(cfg, vocab, ts, "train", cfg.n_train, DatasetRole::clean);
  out.gold = gen_seq_split(cfg, vocab, ts, "gold", cfg.n_gold, DatasetRole::gold);
  out.test = gen_seq_split(cfg, vocab, ts, "test", cfg.n_test, DatasetRole::test);
  return out;
}

GeneratedSplits gen_synthetic_grids(const GridGenConfig& cfg) {
  validate(cfg);
  TagSet ts;
  ts.labels = {"other", "road", "vehicle"};
  ts.background_index = 0;

  GeneratedSplits out;
  out.tagset = ts;
  out.train = gen_grid_split(cfg, ts, "train", cfg.n_train, DatasetRole::clean);
  out.gold = gen_grid_split(cfg, ts, "gold", cfg.n_gold, DatasetRole::gold);
  out.test = gen_grid_split(cfg, ts, "test", cfg.n_test, DatasetRole::test);
  return out;
}

}  // namespace ecnlab
