#include "ecnlab/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecnlab/error.hpp"
#include "ecnlab/rng.hpp"

namespace ecnlab {

namespace {

double logsumexp(const double* x, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, x[i]);
  double s = 0;
  for (int i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

void check_finite(const std::vector<double>& pot, const char* what) {
  for (double v : pot) {
    if (!std::isfinite(v)) throw RunError(std::string("crf: non-finite ") + what);
  }
}

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

}  // namespace

CrfModel::CrfModel(TagSet tagset, std::string feature_schema_digest)
    : tagset_(std::move(tagset)), schema_digest_(std::move(feature_schema_digest)) {
  trans_.assign(static_cast<std::size_t>(n_labels()) * n_labels(), 0.0);
}

int CrfModel::feature_id(const std::string& key) const {
  auto it = feature_ids_.find(key);
  return it == feature_ids_.end() ? -1 : it->second;
}

int CrfModel::intern_feature(const std::string& key) {
  auto it = feature_ids_.find(key);
  if (it != feature_ids_.end()) return it->second;
  const int id = static_cast<int>(feature_names_.size());
  feature_names_.push_back(key);
  feature_ids_.emplace(key, id);
  unary_.resize(feature_names_.size() * static_cast<std::size_t>(n_labels()), 0.0);
  return id;
}

ActiveFeatures CrfModel::index_features(const std::vector<FeatureMap>& maps) const {
  ActiveFeatures active(maps.size());
  for (std::size_t j = 0; j < maps.size(); ++j) {
    active[j].reserve(maps[j].size());
    for (const auto& [name, value] : maps[j]) {
      const int id = feature_id(name + "=" + value);
      if (id >= 0) active[j].push_back(id);
    }
  }
  return active;
}

std::vector<double> CrfModel::potentials(const ActiveFeatures& active) const {
  const int k = n_labels();
  std::vector<double> pot(active.size() * static_cast<std::size_t>(k), 0.0);
  for (std::size_t j = 0; j < active.size(); ++j) {
    double* row = pot.data() + j * k;
    for (int f : active[j]) {
      const double* w = unary_.data() + static_cast<std::size_t>(f) * k;
      for (int l = 0; l < k; ++l) row[l] += w[l];
    }
  }
  return pot;
}

CrfModel crf_model_from_parts(TagSet tagset, std::string schema_digest,
                              std::vector<std::string> feature_names, std::vector<double> unary,
                              std::vector<double> trans, bool trained) {
  CrfModel m(std::move(tagset), std::move(schema_digest));
  m.feature_names_ = std::move(feature_names);
  for (std::size_t i = 0; i < m.feature_names_.size(); ++i) {
    m.feature_ids_.emplace(m.feature_names_[i], static_cast<int>(i));
  }
  if (unary.size() != m.feature_names_.size() * static_cast<std::size_t>(m.n_labels()) ||
      trans.size() != static_cast<std::size_t>(m.n_labels()) * m.n_labels()) {
    throw ConfigError("crf model: weight array sizes do not match");
  }
  m.unary_ = std::move(unary);
  m.trans_ = std::move(trans);
  m.trained_ = trained;
  return m;
}

CrfForwardResult crf_forward_indexed(const CrfModel& model, const ActiveFeatures& active) {
  const int d = static_cast<int>(active.size());
  const int k = model.n_labels();
  if (d == 0) throw RunError("crf_forward: empty sequence");
  const std::vector<double> pot = model.potentials(active);
  check_finite(pot, "unary potentials");
  check_finite(model.transitions(), "transition weights");
  const std::vector<double>& trans = model.transitions();

  std::vector<double> alpha(static_cast<std::size_t>(d) * k);
  std::vector<double> beta(static_cast<std::size_t>(d) * k);
  std::vector<double> scratch(k);

  for (int l = 0; l < k; ++l) alpha[l] = pot[l];
  for (int j = 1; j < d; ++j) {
    for (int l = 0; l < k; ++l) {
      for (int a = 0; a < k; ++a) scratch[a] = alpha[(j - 1) * k + a] + trans[a * k + l];
      alpha[j * k + l] = pot[j * k + l] + logsumexp(scratch.data(), k);
    }
  }
  for (int l = 0; l < k; ++l) beta[(d - 1) * k + l] = 0.0;
  for (int j = d - 2; j >= 0; --j) {
    for (int l = 0; l < k; ++l) {
      for (int b = 0; b < k; ++b) {
        scratch[b] = trans[l * k + b] + pot[(j + 1) * k + b] + beta[(j + 1) * k + b];
      }
      beta[j * k + l] = logsumexp(scratch.data(), k);
    }
  }

  CrfForwardResult out;
  out.d = d;
  out.k = k;
  out.log_z = logsumexp(alpha.data() + (d - 1) * k, k);
  if (!std::isfinite(out.log_z)) throw RunError("crf_forward: non-finite logZ");

  out.marginals.resize(static_cast<std::size_t>(d) * k);
  for (int j = 0; j < d; ++j) {
    for (int l = 0; l < k; ++l) {
      out.marginals[j * k + l] = std::exp(alpha[j * k + l] + beta[j * k + l] - out.log_z);
    }
  }
  if (d > 1) {
    out.pairwise_marginals.resize(static_cast<std::size_t>(d - 1) * k * k);
    for (int j = 0; j + 1 < d; ++j) {
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          out.pairwise_marginals[(j * k + a) * k + b] =
              std::exp(alpha[j * k + a] + trans[a * k + b] + pot[(j + 1) * k + b] +
                       beta[(j + 1) * k + b] - out.log_z);
        }
      }
    }
  }
  return out;
}

CrfForwardResult crf_forward(const CrfModel& model, const std::vector<FeatureMap>& features) {
  return crf_forward_indexed(model, model.index_features(features));
}

double crf_score(const CrfModel& model, const ActiveFeatures& active,
                 const std::vector<int>& labels) {
  const int k = model.n_labels();
  const std::vector<double> pot = model.potentials(active);
  double s = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    s += pot[j * k + labels[j]];
    if (j > 0) s += model.transition(labels[j - 1], labels[j]);
  }
  return s;
}

namespace {

// Gradient of the (unregularized) log-likelihood of one indexed sample,
// accumulated into `grad` with weight `scale`. Returns the log-likelihood.
double accumulate_loglik_grad(const CrfModel& model, const ActiveFeatures& active,
                              const std::vector<int>& labels, double scale, CrfGradient& grad) {
  const int d = static_cast<int>(active.size());
  const int k = model.n_labels();
  if (labels.size() != active.size()) throw RunError("crf: labels/features length mismatch");
  const CrfForwardResult fwd = crf_forward_indexed(model, active);
  const double loglik = crf_score(model, active, labels) - fwd.log_z;

  for (int j = 0; j < d; ++j) {
    for (int f : active[j]) {
      double* row = grad.unary.data() + static_cast<std::size_t>(f) * k;
      row[labels[j]] += scale;
      for (int l = 0; l < k; ++l) row[l] -= scale * fwd.marginal(j, l);
    }
  }
  for (int j = 1; j < d; ++j) {
    grad.trans[labels[j - 1] * k + labels[j]] += scale;
  }
  for (int j = 0; j + 1 < d; ++j) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        grad.trans[a * k + b] -= scale * fwd.pairwise(j, a, b);
      }
    }
  }
  return loglik;
}

struct RegTerms {
  double l1_norm = 0;
  double l2_sq = 0;
};

RegTerms apply_regularizer(const CrfModel& model, double c1, double c2, CrfGradient& grad) {
  RegTerms terms;
  auto apply = [&](const std::vector<double>& w, std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      terms.l1_norm += std::abs(w[i]);
      terms.l2_sq += w[i] * w[i];
      g[i] -= c1 * sign_of(w[i]) + 2.0 * c2 * w[i];
    }
  };
  apply(model.unary(), grad.unary);
  apply(model.transitions(), grad.trans);
  return terms;
}

}  // namespace

CrfLoglikResult crf_loglik_grad(const CrfModel& model, const std::vector<FeatureMap>& features,
                                const std::vector<int>& labels, double c1, double c2) {
  CrfLoglikResult out;
  out.grad.unary.assign(model.unary().size(), 0.0);
  out.grad.trans.assign(model.transitions().size(), 0.0);
  out.loglik =
      accumulate_loglik_grad(model, model.index_features(features), labels, 1.0, out.grad);
  const RegTerms reg = apply_regularizer(model, c1, c2, out.grad);
  out.objective = out.loglik - c1 * reg.l1_norm - c2 * reg.l2_sq;
  return out;
}

CrfModel crf_train(const Dataset& train, const FeatureExtractor& fx, const CrfTrainConfig& cfg,
                   std::vector<double>* objective_history) {
  if (train.is_grid()) throw RunError("crf_train: expected a sequence dataset");
  if (train.sequences.empty()) throw RunError("crf_train: empty dataset");
  if (cfg.steps < 1 || cfg.batch_size < 1) throw ConfigError("crf_train: steps/batch must be >= 1");
  if (cfg.l1 < 0 || cfg.l2 < 0) throw ConfigError("crf_train: negative regularizer");

  CrfModel model(train.tagset, fx.schema_digest());

  // Index the corpus once; the dictionary is built in first-seen order.
  const std::size_t n = train.sequences.size();
  std::vector<ActiveFeatures> corpus(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SequenceSample& s = train.sequences[i];
    corpus[i].resize(s.tokens.size());
    for (int j = 0; j < s.length(); ++j) {
      const FeatureMap fm = fx.extract_token(s, j);
      corpus[i][j].reserve(fm.size());
      for (const auto& [name, value] : fm) {
        corpus[i][j].push_back(model.intern_feature(name + "=" + value));
      }
    }
  }

  CrfGradient grad;
  SplitMix64 batch_rng(derive_stream(cfg.seed, "crf-batches"));
  std::vector<std::size_t> batch(cfg.batch_size);

  // Polyak-Ruppert tail averaging: plain constant-rate SGD bounces around the
  // optimum on indicator features; the returned model is the average of the
  // second half of the trajectory.
  const int avg_from = cfg.steps / 2;
  std::vector<double> avg_unary, avg_trans;
  std::size_t avg_count = 0;

  for (int step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < cfg.batch_size; ++b) batch[b] = batch_rng.below(n);

    grad.unary.assign(model.unary().size(), 0.0);
    grad.trans.assign(model.transitions().size(), 0.0);
    double batch_ll = 0;
    const double scale = 1.0 / cfg.batch_size;
    for (std::size_t i : batch) {
      batch_ll +=
          scale * accumulate_loglik_grad(model, corpus[i], train.sequences[i].labels, scale, grad);
    }
    // The penalized objective is sum_i ll_i - c1|w| - c2|w|^2 over the whole
    // corpus; per minibatch step the regularizer enters at 1/n strength.
    const RegTerms reg = apply_regularizer(model, cfg.l1 / n, cfg.l2 / n, grad);
    if (objective_history) {
      objective_history->push_back(batch_ll - (cfg.l1 * reg.l1_norm + cfg.l2 * reg.l2_sq) / n);
    }

    std::vector<double>& unary = model.unary();
    for (std::size_t i = 0; i < unary.size(); ++i) unary[i] += cfg.learning_rate * grad.unary[i];
    std::vector<double>& trans = model.transitions();
    for (std::size_t i = 0; i < trans.size(); ++i) trans[i] += cfg.learning_rate * grad.trans[i];

    if (step >= avg_from) {
      avg_unary.resize(unary.size(), 0.0);
      avg_trans.resize(trans.size(), 0.0);
      for (std::size_t i = 0; i < unary.size(); ++i) avg_unary[i] += unary[i];
      for (std::size_t i = 0; i < trans.size(); ++i) avg_trans[i] += trans[i];
      ++avg_count;
    }
  }

  if (avg_count > 0) {
    for (std::size_t i = 0; i < avg_unary.size(); ++i) {
      model.unary()[i] = avg_unary[i] / static_cast<double>(avg_count);
    }
    for (std::size_t i = 0; i < avg_trans.size(); ++i) {
      model.transitions()[i] = avg_trans[i] / static_cast<double>(avg_count);
    }
  }

  model.set_trained(true);
  return model;
}

std::vector<int> crf_decode_indexed(const CrfModel& model, const ActiveFeatures& active) {
  const int d = static_cast<int>(active.size());
  const int k = model.n_labels();
  if (d == 0) throw RunError("crf_decode: empty sequence");
  const std::vector<double> pot = model.potentials(active);
  check_finite(pot, "unary potentials");
  const std::vector<double>& trans = model.transitions();

  // delta[j][l]: best score of a suffix starting at j labelled l. Choosing
  // greedily from the front then yields the lexicographically smallest
  // optimal labeling.
  std::vector<double> delta(static_cast<std::size_t>(d) * k);
  for (int l = 0; l < k; ++l) delta[(d - 1) * k + l] = pot[(d - 1) * k + l];
  for (int j = d - 2; j >= 0; --j) {
    for (int l = 0; l < k; ++l) {
      double best = -std::numeric_limits<double>::infinity();
      for (int b = 0; b < k; ++b) {
        best = std::max(best, trans[l * k + b] + delta[(j + 1) * k + b]);
      }
      delta[j * k + l] = pot[j * k + l] + best;
    }
  }

  std::vector<int> labels(d);
  int prev = 0;
  {
    double best = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < k; ++l) {
      if (delta[l] > best) {
        best = delta[l];
        prev = l;
      }
    }
    labels[0] = prev;
  }
  for (int j = 1; j < d; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    int pick = 0;
    for (int b = 0; b < k; ++b) {
      const double s = trans[prev * k + b] + delta[j * k + b];
      if (s > best) {
        best = s;
        pick = b;
      }
    }
    labels[j] = pick;
    prev = pick;
  }
  return labels;
}

std::vector<int> crf_decode(const CrfModel& model, const std::vector<FeatureMap>& features) {
  return crf_decode_indexed(model, model.index_features(features));
}

CrfMarginalDecodeResult crf_marginal_decode(const CrfModel& model,
                                            const std::vector<FeatureMap>& features) {
  const CrfForwardResult fwd = crf_forward(model, features);
  CrfMarginalDecodeResult out;
  out.marginals = fwd.marginals;
  out.labels.resize(fwd.d);
  for (int j = 0; j < fwd.d; ++j) {
    int pick = 0;
    double best = -1;
    for (int l = 0; l < fwd.k; ++l) {
      if (fwd.marginal(j, l) > best) {
        best = fwd.marginal(j, l);
        pick = l;
      }
    }
    out.labels[j] = pick;
  }
  return out;
}

}  // namespace ecnlab
