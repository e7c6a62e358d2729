#ifndef AA_MODELS_H_
#define AA_MODELS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aa/nn/adam.h"
#include "aa/nn/ops.h"
#include "aa/nn/tensor.h"
#include "json.hpp"

namespace aa {

enum class ModelKind { kCnn2, kCnn2Pv, kCnn2De };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double lr = 0.001;
  double keep_prob = 0.75;
  int maps = 100;
  int disc_maps = 100;
  int char_dim = 50;
  int disc_dim = 20;
  std::vector<int> windows{3, 4, 5};
  std::vector<int> disc_windows{3, 4, 5};
  uint64_t seed = 1;
  int max_char_len = 2200;
  int max_disc_len = 256;
  nn::Activation activation = nn::Activation::kRelu;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct ModelDims {
  ModelKind kind = ModelKind::kCnn2;
  size_t n_classes = 2;
  size_t char_vocab = 2;
  size_t char_dim = 50;
  std::vector<int> windows{3, 4, 5};
  size_t maps = 100;
  size_t disc_vocab = 0;
  size_t disc_dim = 20;
  std::vector<int> disc_windows{3, 4, 5};
  size_t disc_maps = 100;
  size_t pv_dim = 0;
  nn::Activation activation = nn::Activation::kRelu;

  size_t char_features() const { return windows.size() * maps; }
  size_t disc_features() const {
    return kind == ModelKind::kCnn2De ? disc_windows.size() * disc_maps : 0;
  }
  size_t feature_dim() const {
    return char_features() + disc_features() + (kind == ModelKind::kCnn2Pv ? pv_dim : 0);
  }

  nlohmann::json to_json() const;
  static ModelDims from_json(const nlohmann::json& j);
};

ModelDims make_dims(ModelKind kind, const TrainConfig& config, size_t n_classes,
                    size_t char_vocab, size_t disc_vocab = 0, size_t pv_dim = 0);

template <typename T>
struct ModelParams {
  ModelDims dims;
  nn::Tensor<T> char_emb;  // char_vocab x char_dim
  nn::ConvBank<T> char_conv;
  nn::Tensor<T> disc_emb;  // disc_vocab x disc_dim (CNN2-DE only)
  nn::ConvBank<T> disc_conv;
  nn::Tensor<T> out_w;  // feature_dim x n_classes
  nn::Tensor<T> out_b;  // n_classes

  // All-zero parameters of the right shapes; also used as gradient buffers.
  static ModelParams zeros(const ModelDims& dims);

  // Learnable tensors in a fixed order shared by the optimizer, the
  // gradient checker and the checkpoint directory.
  std::vector<std::pair<std::string, nn::Tensor<T>*>> tensors();
  std::vector<std::pair<std::string, const nn::Tensor<T>*>> tensors() const;

  template <typename U>
  ModelParams<U> cast() const;
};

// Embeddings uniform(-0.05, 0.05) with a zero padding row, Glorot-uniform
// filters and softmax weights, zero biases.
template <typename T>
ModelParams<T> init_params(const ModelDims& dims, uint64_t seed);

// Already-indexed, already-padded inputs for one example. `pv` is read only
// by CNN2-PV and `disc` only by CNN2-DE.
struct ModelInput {
  std::vector<int> chars;
  std::vector<int> disc;
  std::vector<double> pv;
};

struct DropoutSpec {
  bool training = false;
  double keep_prob = 1.0;
  uint64_t seed = 0;
};

// Class distribution for one example.
template <typename T>
std::vector<T> forward(const ModelParams<T>& params, const ModelInput& input,
                       const DropoutSpec& dropout = {});

template <typename T>
std::vector<T> cnn2_forward(const ModelParams<T>& params, std::span<const int> bigrams,
                            const DropoutSpec& dropout = {});
template <typename T>
std::vector<T> cnn2_pv_forward(const ModelParams<T>& params, std::span<const int> bigrams,
                               std::span<const double> pv, const DropoutSpec& dropout = {});
template <typename T>
std::vector<T> cnn2_de_forward(const ModelParams<T>& params, std::span<const int> bigrams,
                               std::span<const int> disc, const DropoutSpec& dropout = {});

// Cross-entropy loss of one example; adds `scale` times its gradient to `grad`.
template <typename T>
T loss_and_gradient(const ModelParams<T>& params, const ModelInput& input, size_t label,
                    const DropoutSpec& dropout, ModelParams<T>& grad, T scale = T(1));

std::vector<int> pad_or_truncate(std::span<const int> seq, size_t max_len, int pad = 0);

struct Example {
  ModelInput input;
  int label = 0;
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// Seeded epoch loop: shuffle, batch, mean cross-entropy gradient, Adam.
TrainResult train(const ModelDims& dims, const std::vector<Example>& data,
                  const TrainConfig& config);

// Argmax class; ties go to the lowest index.
int predict_class(const ModelParams<float>& params, const ModelInput& input);

struct Checkpoint {
  ModelParams<float> params;
  nlohmann::json meta;
};

void save_checkpoint(const ModelParams<float>& params, const nlohmann::json& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace aa

#endif  // AA_MODELS_H_
