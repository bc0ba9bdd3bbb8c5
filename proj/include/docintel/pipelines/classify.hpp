#pragma once

#include <optional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "docintel/dense/embedding.hpp"
#include "docintel/kernels.hpp"

namespace docintel::pipelines {

enum class ModelKind { kCentroidFewshot, kTfidfLinear };

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);

struct LabeledText {
  std::string text;
  std::string label;
};

struct TrainingMeta {
  std::uint64_t seed = 42;
  std::size_t epochs = 100;
  double learning_rate = 0.1;

  bool operator==(const TrainingMeta&) const = default;
};

struct LinearTextModel {
  ModelKind kind = ModelKind::kCentroidFewshot;
  std::vector<std::string> classes;  // lexicographic
  // centroid_fewshot
  std::vector<dense::EmbeddingVector> centroids;
  nlohmann::json embedder = nlohmann::json::object();
  // tfidf_linear
  std::vector<std::string> vocabulary;  // sorted
  std::vector<double> idf;
  std::vector<std::vector<double>> weights;  // per class, |vocabulary| each
  std::vector<double> bias;
  TrainingMeta training_meta;

  nlohmann::json to_json() const;
  static LinearTextModel from_json(const nlohmann::json& j);
  bool operator==(const LinearTextModel&) const = default;
};

struct Prediction {
  std::string label;
  std::map<std::string, double> scores;

  nlohmann::json to_json() const;
};

// Per-class mean of the embedded examples, re-normalized. Throws
// EmptyExamples / SingleClass.
LinearTextModel train_fewshot(const std::vector<LabeledText>& examples,
                              const dense::Embedder& embedder);

// tf-idf features (idf = ln(N/df) + 1, rows L2-normalized) and one-vs-rest
// logistic regression by full-batch gradient descent from zero weights.
// Needs >= 2 classes with >= 2 examples each.
LinearTextModel train_tfidf_linear(const std::vector<LabeledText>& dataset,
                                   const TrainingMeta& meta = {},
                                   kernels::Exec exec = kernels::Exec::kParallel);

// Feature row of a text under a trained tf-idf vocabulary.
std::vector<double> tfidf_features(const LinearTextModel& model, std::string_view text);

// Mean binary cross-entropy of one one-vs-rest problem and its gradient.
double logistic_loss(std::span<const double> weights, double bias,
                     const std::vector<std::vector<double>>& rows, std::span<const double> targets);
std::pair<std::vector<double>, double> logistic_gradient(
    std::span<const double> weights, double bias, const std::vector<std::vector<double>>& rows,
    std::span<const double> targets);

// Argmax over classes; exact ties go to the lexicographically first label.
Prediction predict(const LinearTextModel& model, std::string_view text,
                   const dense::Embedder* embedder = nullptr);
// Centroid models only: predicts from an already embedded query.
Prediction predict_vector(const LinearTextModel& model, std::span<const float> query);

}  // namespace docintel::pipelines
