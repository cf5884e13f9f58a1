#include "ecnlab/features.hpp"

#include <cctype>

#include "ecnlab/digest.hpp"
#include "ecnlab/error.hpp"

namespace ecnlab {

namespace {

bool ascii_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool ascii_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool ascii_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_title(const std::string& s) {
  if (s.empty() || !ascii_upper(s[0])) return false;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (ascii_upper(s[i])) return false;
  }
  return true;
}

bool is_upper(const std::string& s) {
  bool any = false;
  for (char c : s) {
    if (ascii_lower(c)) return false;
    if (ascii_upper(c)) any = true;
  }
  return any;
}

bool is_lower(const std::string& s) {
  bool any = false;
  for (char c : s) {
    if (ascii_upper(c)) return false;
    if (ascii_lower(c)) any = true;
  }
  return any;
}

bool is_digit(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!ascii_digit(c)) return false;
  }
  return true;
}

std::string shape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (ascii_upper(c)) {
      out.push_back('X');
    } else if (ascii_lower(c)) {
      out.push_back('x');
    } else if (ascii_digit(c)) {
      out.push_back('d');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string flag(bool b) { return b ? "1" : "0"; }

}  // namespace

FeatureExtractor::FeatureExtractor(int n_features) : n_features_(n_features) {
  if (n_features < 0 || n_features > kNumFeatures) {
    throw ConfigError("FeatureExtractor: n_features outside [0," +
                      std::to_string(int(kNumFeatures)) + "]");
  }
}

const std::vector<std::string>& FeatureExtractor::feature_names() {
  static const std::vector<std::string> names = {
      "is_title", "is_upper", "is_lower", "is_digit", "length",  "shape",
      "sent_start", "sent_end", "prefix1", "prefix2", "prefix3", "suffix1",
      "suffix2",  "suffix3",  "prev_is_title", "next_is_title", "prev_lower",
      "next_lower", "lower"};
  return names;
}

FeatureMap FeatureExtractor::extract_token(const SequenceSample& sample, int j) const {
  const int d = sample.length();
  if (j < 0 || j >= d) throw RunError("extract_token: index out of range");
  const std::string& tok = sample.tokens[j];
  const std::string low = lowercase(tok);
  const int n = static_cast<int>(tok.size());

  FeatureMap out;
  const auto& names = feature_names();
  for (int f = 0; f < n_features_; ++f) {
    const std::string& name = names[f];
    std::string value;
    if (name == "is_title") {
      value = flag(is_title(tok));
    } else if (name == "is_upper") {
      value = flag(is_upper(tok));
    } else if (name == "is_lower") {
      value = flag(is_lower(tok));
    } else if (name == "is_digit") {
      value = flag(is_digit(tok));
    } else if (name == "length") {
      value = std::to_string(n);
    } else if (name == "shape") {
      value = shape(tok);
    } else if (name == "sent_start") {
      value = flag(j == 0);
    } else if (name == "sent_end") {
      value = flag(j == d - 1);
    } else if (name == "prefix1") {
      value = low.substr(0, 1);
    } else if (name == "prefix2") {
      value = low.substr(0, std::min<std::size_t>(2, low.size()));
    } else if (name == "prefix3") {
      value = low.substr(0, std::min<std::size_t>(3, low.size()));
    } else if (name == "suffix1") {
      value = n >= 1 ? low.substr(low.size() - 1) : low;
    } else if (name == "suffix2") {
      value = low.size() >= 2 ? low.substr(low.size() - 2) : low;
    } else if (name == "suffix3") {
      value = low.size() >= 3 ? low.substr(low.size() - 3) : low;
    } else if (name == "prev_is_title") {
      value = j > 0 ? flag(is_title(sample.tokens[j - 1])) : "<bos>";
    } else if (name == "next_is_title") {
      value = j < d - 1 ? flag(is_title(sample.tokens[j + 1])) : "<eos>";
    } else if (name == "prev_lower") {
      value = j > 0 ? lowercase(sample.tokens[j - 1]) : "<bos>";
    } else if (name == "next_lower") {
      value = j < d - 1 ? lowercase(sample.tokens[j + 1]) : "<eos>";
    } else if (name == "lower") {
      value = low;
    }
    out[name] = std::move(value);
  }
  return out;
}

std::vector<FeatureMap> FeatureExtractor::extract(const SequenceSample& sample) const {
  std::vector<FeatureMap> out;
  out.reserve(sample.tokens.size());
  for (int j = 0; j < sample.length(); ++j) out.push_back(extract_token(sample, j));
  return out;
}

std::string FeatureExtractor::schema_digest() const {
  std::string blob = "token-features-v1;n=" + std::to_string(n_features_) + ";";
  const auto& names = feature_names();
  for (int f = 0; f < n_features_; ++f) {
    blob += names[f];
    blob += ',';
  }
  return sha256_hex(blob);
}

}  // namespace ecnlab
