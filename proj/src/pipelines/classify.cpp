#include "docintel/pipelines/classify.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "docintel/error.hpp"
#include "docintel/sparse/tokenizer.hpp"

namespace docintel::pipelines {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<std::string> class_list(const std::vector<LabeledText>& examples) {
  if (examples.empty()) throw Error(ErrorCode::kEmptyExamples, "no training examples");
  std::set<std::string> labels;
  for (const auto& e : examples) labels.insert(e.label);
  if (labels.size() < 2) {
    throw Error(ErrorCode::kSingleClass, "training needs at least two classes");
  }
  return {labels.begin(), labels.end()};
}

Prediction argmax(const std::vector<std::string>& classes, const std::vector<double>& scores) {
  Prediction p;
  std::size_t best = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    p.scores[classes[i]] = scores[i];
    if (scores[i] > scores[best]) best = i;  // strict: earlier label wins ties
  }
  p.label = classes[best];
  return p;
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  return kind == ModelKind::kCentroidFewshot ? "centroid_fewshot" : "tfidf_linear";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  if (name == "centroid_fewshot") return ModelKind::kCentroidFewshot;
  if (name == "tfidf_linear") return ModelKind::kTfidfLinear;
  return std::nullopt;
}

nlohmann::json LinearTextModel::to_json() const {
  nlohmann::json j = {{"kind", model_kind_name(kind)},
                      {"classes", classes},
                      {"training_meta",
                       {{"seed", training_meta.seed},
                        {"epochs", training_meta.epochs},
                        {"learning_rate", training_meta.learning_rate}}}};
  if (kind == ModelKind::kCentroidFewshot) {
    j["centroids"] = centroids;
    j["embedder"] = embedder;
  } else {
    j["vocabulary"] = vocabulary;
    j["idf"] = idf;
    j["weights"] = weights;
    j["bias"] = bias;
  }
  return j;
}

LinearTextModel LinearTextModel::from_json(const nlohmann::json& j) {
  LinearTextModel m;
  try {
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kInvalidArgument, "unknown model kind");
    m.kind = *kind;
    m.classes = j.at("classes").get<std::vector<std::string>>();
    const auto& meta = j.at("training_meta");
    m.training_meta = {meta.at("seed").get<std::uint64_t>(), meta.at("epochs").get<std::size_t>(),
                       meta.at("learning_rate").get<double>()};
    if (m.kind == ModelKind::kCentroidFewshot) {
      m.centroids = j.at("centroids").get<std::vector<dense::EmbeddingVector>>();
      m.embedder = j.value("embedder", nlohmann::json::object());
      if (m.centroids.size() != m.classes.size()) {
        throw Error(ErrorCode::kInvalidArgument, "centroid count differs from class count");
      }
    } else {
      m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
      m.idf = j.at("idf").get<std::vector<double>>();
      m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
      m.bias = j.at("bias").get<std::vector<double>>();
      bool ok = m.idf.size() == m.vocabulary.size() && m.weights.size() == m.classes.size() &&
                m.bias.size() == m.classes.size();
      for (const auto& w : m.weights) ok = ok && w.size() == m.vocabulary.size();
      if (!ok) throw Error(ErrorCode::kInvalidArgument, "inconsistent model dimensions");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad model JSON: ") + e.what());
  }
  if (m.classes.size() < 2) throw Error(ErrorCode::kSingleClass, "model has fewer than 2 classes");
  return m;
}

nlohmann::json Prediction::to_json() const { return {{"label", label}, {"scores", scores}}; }

LinearTextModel train_fewshot(const std::vector<LabeledText>& examples,
                              const dense::Embedder& embedder) {
  LinearTextModel model;
  model.kind = ModelKind::kCentroidFewshot;
  model.classes = class_list(examples);
  model.embedder = embedder.fingerprint();
  std::vector<std::string> texts;
  for (const auto& e : examples) texts.push_back(e.text);
  const auto vectors = embedder.embed(texts);

  const std::size_t dim = embedder.dimension();
  for (const auto& label : model.classes) {
    std::vector<double> sum(dim, 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (examples[i].label != label) continue;
      for (std::size_t d = 0; d < dim; ++d) sum[d] += vectors[i][d];
      ++n;
    }
    dense::EmbeddingVector c(dim);
    for (std::size_t d = 0; d < dim; ++d) c[d] = static_cast<float>(sum[d] / static_cast<double>(n));
    dense::normalize(c);
    model.centroids.push_back(std::move(c));
  }
  return model;
}

double logistic_loss(std::span<const double> weights, double bias,
                     const std::vector<std::vector<double>>& rows,
                     std::span<const double> targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double z = dot(weights, rows[i]) + bias;
    total += softplus(z) - targets[i] * z;
  }
  return total / static_cast<double>(rows.size());
}

std::pair<std::vector<double>, double> logistic_gradient(
    std::span<const double> weights, double bias, const std::vector<std::vector<double>>& rows,
    std::span<const double> targets) {
  std::vector<double> gw(weights.size(), 0.0);
  double gb = 0.0;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double err = sigmoid(dot(weights, rows[i]) + bias) - targets[i];
    for (std::size_t d = 0; d < gw.size(); ++d) gw[d] += err * rows[i][d];
    gb += err;
  }
  for (auto& g : gw) g *= inv_n;
  return {std::move(gw), gb * inv_n};
}

std::vector<double> tfidf_features(const LinearTextModel& model, std::string_view text) {
  std::vector<double> row(model.vocabulary.size(), 0.0);
  for (const auto& term : sparse::tokenize_terms(text)) {
    auto it = std::lower_bound(model.vocabulary.begin(), model.vocabulary.end(), term);
    if (it != model.vocabulary.end() && *it == term) row[it - model.vocabulary.begin()] += 1.0;
  }
  double sq = 0.0;
  for (std::size_t d = 0; d < row.size(); ++d) {
    row[d] *= model.idf[d];
    sq += row[d] * row[d];
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : row) x *= inv;
  }
  return row;
}

LinearTextModel train_tfidf_linear(const std::vector<LabeledText>& dataset,
                                   const TrainingMeta& meta, kernels::Exec exec) {
  LinearTextModel model;
  model.kind = ModelKind::kTfidfLinear;
  model.classes = class_list(dataset);
  model.training_meta = meta;
  for (const auto& label : model.classes) {
    const auto n = std::count_if(dataset.begin(), dataset.end(),
                                 [&](const LabeledText& e) { return e.label == label; });
    if (n < 2) {
      throw Error(ErrorCode::kInvalidArgument, "class '" + label + "' needs at least 2 examples");
    }
  }
  if (!(meta.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  }

  std::map<std::string, std::size_t> df;
  for (const auto& e : dataset) {
    auto terms = sparse::tokenize_terms(e.text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (const auto& t : terms) ++df[t];
  }
  const double n_docs = static_cast<double>(dataset.size());
  for (const auto& [term, count] : df) {
    model.vocabulary.push_back(term);
    model.idf.push_back(std::log(n_docs / static_cast<double>(count)) + 1.0);
  }

  std::vector<std::vector<double>> rows;
  for (const auto& e : dataset) rows.push_back(tfidf_features(model, e.text));

  const std::size_t classes = model.classes.size();
  model.weights.assign(classes, std::vector<double>(model.vocabulary.size(), 0.0));
  model.bias.assign(classes, 0.0);
  kernels::for_each_index(exec, classes, [&](std::size_t c) {
    std::vector<double> targets(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      targets[i] = dataset[i].label == model.classes[c] ? 1.0 : 0.0;
    }
    auto& w = model.weights[c];
    double& b = model.bias[c];
    for (std::size_t epoch = 0; epoch < meta.epochs; ++epoch) {
      auto [gw, gb] = logistic_gradient(w, b, rows, targets);
      for (std::size_t d = 0; d < w.size(); ++d) w[d] -= meta.learning_rate * gw[d];
      b -= meta.learning_rate * gb;
    }
  });
  return model;
}

Prediction predict_vector(const LinearTextModel& model, std::span<const float> query) {
  if (model.kind != ModelKind::kCentroidFewshot) {
    throw Error(ErrorCode::kInvalidArgument, "predict_vector needs a centroid model");
  }
  std::vector<double> scores;
  for (const auto& c : model.centroids) scores.push_back(dense::cosine(query, c));
  return argmax(model.classes, scores);
}

Prediction predict(const LinearTextModel& model, std::string_view text,
                   const dense::Embedder* embedder) {
  if (model.kind == ModelKind::kCentroidFewshot) {
    if (!embedder) throw Error(ErrorCode::kInvalidArgument, "centroid model needs an embedder");
    if (!model.centroids.empty() && embedder->dimension() != model.centroids.front().size()) {
      throw Error(ErrorCode::kDimensionMismatch, "embedder dimension differs from the model");
    }
    return predict_vector(model, embedder->embed_one(text));
  }
  const auto row = tfidf_features(model, text);
  std::vector<double> scores;
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    scores.push_back(sigmoid(dot(model.weights[c], row) + model.bias[c]));
  }
  return argmax(model.classes, scores);
}

}  // namespace docintel::pipelines
