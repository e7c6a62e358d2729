#include "aa/models.h"

#include <cmath>
#include <numeric>
#include <set>

#include "aa/checkpoint.h"
#include "aa/error.h"
#include "aa/rng.h"

namespace aa {

using nn::Tensor;

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kCnn2: return "cnn2";
    case ModelKind::kCnn2Pv: return "cnn2-pv";
    case ModelKind::kCnn2De: return "cnn2-de";
  }
  return "cnn2";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "cnn2") return ModelKind::kCnn2;
  if (name == "cnn2-pv") return ModelKind::kCnn2Pv;
  if (name == "cnn2-de") return ModelKind::kCnn2De;
  throw Error(ErrorKind::kConfig, "unknown CNN model kind '" + std::string(name) + "'");
}

namespace {

std::string activation_name(nn::Activation a) {
  return a == nn::Activation::kRelu ? "relu" : "tanh";
}

nn::Activation parse_activation(const std::string& s) {
  if (s == "relu") return nn::Activation::kRelu;
  if (s == "tanh") return nn::Activation::kTanh;
  throw Error(ErrorKind::kConfig, "unknown activation '" + s + "'");
}

}  // namespace

void TrainConfig::validate() const {
  const auto positive = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::kConfig, std::string(what) + " must be positive");
  };
  positive(epochs > 0, "epochs");
  positive(batch_size > 0, "batch_size");
  positive(lr > 0, "lr");
  positive(maps > 0, "maps");
  positive(disc_maps > 0, "disc_maps");
  positive(char_dim > 0, "char_dim");
  positive(disc_dim > 0, "disc_dim");
  positive(!windows.empty() && !disc_windows.empty(), "window list size");
  if (!(keep_prob > 0 && keep_prob <= 1)) {
    throw Error(ErrorKind::kConfig, "keep_prob must be in (0, 1]");
  }
  int max_w = 0, max_dw = 0;
  for (int w : windows) positive(w > 0, "window"), max_w = std::max(max_w, w);
  for (int w : disc_windows) positive(w > 0, "window"), max_dw = std::max(max_dw, w);
  if (max_char_len < max_w) throw Error(ErrorKind::kConfig, "max_char_len below largest window");
  if (max_disc_len < max_dw) throw Error(ErrorKind::kConfig, "max_disc_len below largest window");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},         {"batch_size", batch_size},
          {"lr", lr},                 {"keep_prob", keep_prob},
          {"maps", maps},             {"disc_maps", disc_maps},
          {"char_dim", char_dim},     {"disc_dim", disc_dim},
          {"windows", windows},       {"disc_windows", disc_windows},
          {"seed", seed},             {"max_char_len", max_char_len},
          {"max_disc_len", max_disc_len}, {"activation", activation_name(activation)}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.keep_prob = j.value("keep_prob", c.keep_prob);
  c.maps = j.value("maps", c.maps);
  c.disc_maps = j.value("disc_maps", c.disc_maps);
  c.char_dim = j.value("char_dim", c.char_dim);
  c.disc_dim = j.value("disc_dim", c.disc_dim);
  c.windows = j.value("windows", c.windows);
  c.disc_windows = j.value("disc_windows", c.disc_windows);
  c.seed = j.value("seed", c.seed);
  c.max_char_len = j.value("max_char_len", c.max_char_len);
  c.max_disc_len = j.value("max_disc_len", c.max_disc_len);
  c.activation = parse_activation(j.value("activation", std::string("relu")));
  return c;
}

nlohmann::json ModelDims::to_json() const {
  return {{"kind", std::string(model_kind_name(kind))},
          {"n_classes", n_classes},
          {"char_vocab", char_vocab},
          {"char_dim", char_dim},
          {"windows", windows},
          {"maps", maps},
          {"disc_vocab", disc_vocab},
          {"disc_dim", disc_dim},
          {"disc_windows", disc_windows},
          {"disc_maps", disc_maps},
          {"pv_dim", pv_dim},
          {"activation", activation_name(activation)}};
}

ModelDims ModelDims::from_json(const nlohmann::json& j) {
  ModelDims d;
  d.kind = parse_model_kind(j.at("kind").get<std::string>());
  d.n_classes = j.at("n_classes").get<size_t>();
  d.char_vocab = j.at("char_vocab").get<size_t>();
  d.char_dim = j.at("char_dim").get<size_t>();
  d.windows = j.at("windows").get<std::vector<int>>();
  d.maps = j.at("maps").get<size_t>();
  d.disc_vocab = j.at("disc_vocab").get<size_t>();
  d.disc_dim = j.at("disc_dim").get<size_t>();
  d.disc_windows = j.at("disc_windows").get<std::vector<int>>();
  d.disc_maps = j.at("disc_maps").get<size_t>();
  d.pv_dim = j.at("pv_dim").get<size_t>();
  d.activation = parse_activation(j.at("activation").get<std::string>());
  return d;
}

ModelDims make_dims(ModelKind kind, const TrainConfig& config, size_t n_classes,
                    size_t char_vocab, size_t disc_vocab, size_t pv_dim) {
  ModelDims d;
  d.kind = kind;
  d.n_classes = n_classes;
  d.char_vocab = char_vocab;
  d.char_dim = config.char_dim;
  d.windows = config.windows;
  d.maps = config.maps;
  d.disc_vocab = kind == ModelKind::kCnn2De ? disc_vocab : 0;
  d.disc_dim = config.disc_dim;
  d.disc_windows = config.disc_windows;
  d.disc_maps = config.disc_maps;
  d.pv_dim = kind == ModelKind::kCnn2Pv ? pv_dim : 0;
  d.activation = config.activation;
  return d;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelDims& dims) {
  ModelParams p;
  p.dims = dims;
  p.char_emb = Tensor<T>({dims.char_vocab, dims.char_dim});
  p.char_conv = nn::ConvBank<T>::zeros(dims.windows, dims.maps, dims.char_dim);
  if (dims.kind == ModelKind::kCnn2De) {
    p.disc_emb = Tensor<T>({dims.disc_vocab, dims.disc_dim});
    p.disc_conv = nn::ConvBank<T>::zeros(dims.disc_windows, dims.disc_maps, dims.disc_dim);
  }
  p.out_w = Tensor<T>({dims.feature_dim(), dims.n_classes});
  p.out_b = Tensor<T>({dims.n_classes});
  return p;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> ModelParams<T>::tensors() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  out.emplace_back("char_emb", &char_emb);
  for (size_t i = 0; i < char_conv.windows.size(); ++i) {
    const std::string w = std::to_string(char_conv.windows[i]);
    out.emplace_back("char_conv_w" + w, &char_conv.weights[i]);
    out.emplace_back("char_conv_b" + w, &char_conv.biases[i]);
  }
  if (dims.kind == ModelKind::kCnn2De) {
    out.emplace_back("disc_emb", &disc_emb);
    for (size_t i = 0; i < disc_conv.windows.size(); ++i) {
      const std::string w = std::to_string(disc_conv.windows[i]);
      out.emplace_back("disc_conv_w" + w, &disc_conv.weights[i]);
      out.emplace_back("disc_conv_b" + w, &disc_conv.biases[i]);
    }
  }
  out.emplace_back("out_w", &out_w);
  out.emplace_back("out_b", &out_b);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> ModelParams<T>::tensors() const {
  auto mutable_list = const_cast<ModelParams*>(this)->tensors();
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  for (auto& [name, t] : mutable_list) out.emplace_back(name, t);
  return out;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out = ModelParams<U>::zeros(dims);
  auto src = tensors();
  auto dst = out.tensors();
  for (size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<U>();
  return out;
}

template <typename T>
ModelParams<T> init_params(const ModelDims& dims, uint64_t seed) {
  ModelParams<T> p = ModelParams<T>::zeros(dims);
  Rng rng(seed);
  const auto uniform = [&](Tensor<T>& t, double limit) {
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-limit, limit));
  };
  const auto glorot = [&](Tensor<T>& t, size_t fan_in, size_t fan_out) {
    uniform(t, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
  };
  const auto embedding = [&](Tensor<T>& t) {
    uniform(t, 0.05);
    for (auto& v : t.row(0)) v = T(0);  // padding row
  };
  embedding(p.char_emb);
  for (auto& w : p.char_conv.weights) glorot(w, w.cols(), w.rows());
  if (dims.kind == ModelKind::kCnn2De) {
    embedding(p.disc_emb);
    for (auto& w : p.disc_conv.weights) glorot(w, w.cols(), w.rows());
  }
  glorot(p.out_w, dims.feature_dim(), dims.n_classes);
  return p;
}

namespace {

template <typename T>
struct BranchTrace {
  Tensor<T> seq;
  std::vector<Tensor<T>> maps;
  nn::Pooled<T> pooled;
};

template <typename T>
struct Trace {
  BranchTrace<T> chars;
  BranchTrace<T> disc;
  std::vector<T> dropped;  // features after dropout
  std::vector<T> mask;
  std::vector<T> logits;
};

template <typename T>
BranchTrace<T> run_branch(std::span<const int> indices, const Tensor<T>& table,
                          const nn::ConvBank<T>& bank, nn::Activation act) {
  BranchTrace<T> b;
  b.seq = nn::embed_lookup(indices, table);
  b.maps = nn::conv1d_bank(b.seq, bank, act);
  b.pooled = nn::max_over_time(b.maps);
  return b;
}

template <typename T>
Trace<T> run_forward(const ModelParams<T>& params, const ModelInput& input,
                     const DropoutSpec& dropout) {
  const ModelDims& dims = params.dims;
  Trace<T> tr;
  tr.chars = run_branch<T>(input.chars, params.char_emb, params.char_conv, dims.activation);
  std::vector<T> features = tr.chars.pooled.values;
  if (dims.kind == ModelKind::kCnn2De) {
    tr.disc = run_branch<T>(input.disc, params.disc_emb, params.disc_conv, dims.activation);
    features.insert(features.end(), tr.disc.pooled.values.begin(), tr.disc.pooled.values.end());
  } else if (dims.kind == ModelKind::kCnn2Pv) {
    if (input.pv.size() != dims.pv_dim) {
      throw Error(ErrorKind::kDimensionMismatch, "probability vector has " +
                                                     std::to_string(input.pv.size()) +
                                                     " entries, model expects " +
                                                     std::to_string(dims.pv_dim));
    }
    for (double v : input.pv) features.push_back(static_cast<T>(v));
  }
  Rng rng(dropout.seed);
  auto dr = nn::dropout<T>(features, dropout.keep_prob, rng, dropout.training);
  tr.dropped = std::move(dr.values);
  tr.mask = std::move(dr.mask);
  const size_t k = dims.n_classes;
  tr.logits.assign(params.out_b.data(), params.out_b.data() + k);
  for (size_t f = 0; f < tr.dropped.size(); ++f) {
    const T v = tr.dropped[f];
    if (v == T(0)) continue;
    const T* w = params.out_w.data() + f * k;
    for (size_t c = 0; c < k; ++c) tr.logits[c] += v * w[c];
  }
  return tr;
}

template <typename T>
void branch_backward(std::span<const int> indices, const BranchTrace<T>& b,
                     std::span<const T> d_pooled, const nn::ConvBank<T>& bank,
                     nn::Activation act, Tensor<T>& d_table, nn::ConvBank<T>& d_bank) {
  auto d_maps = nn::max_over_time_backward<T>(d_pooled, b.pooled, b.maps);
  Tensor<T> d_seq(b.seq.shape());
  nn::conv1d_bank_backward(b.seq, bank, b.maps, d_maps, act, d_bank, &d_seq);
  nn::embed_backward(indices, d_seq, d_table);
}

template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
  // label 0 is always valid; only the probabilities are used
  return nn::softmax_xent<T>(logits, 0).probs;
}

void require_kind(const ModelDims& dims, ModelKind kind) {
  if (dims.kind != kind) {
    throw Error(ErrorKind::kDimensionMismatch, "parameters belong to a " +
                                                   std::string(model_kind_name(dims.kind)) +
                                                   " model, not " +
                                                   std::string(model_kind_name(kind)));
  }
}

}  // namespace

template <typename T>
std::vector<T> forward(const ModelParams<T>& params, const ModelInput& input,
                       const DropoutSpec& dropout) {
  return softmax(run_forward(params, input, dropout).logits);
}

template <typename T>
std::vector<T> cnn2_forward(const ModelParams<T>& params, std::span<const int> bigrams,
                            const DropoutSpec& dropout) {
  require_kind(params.dims, ModelKind::kCnn2);
  ModelInput in;
  in.chars.assign(bigrams.begin(), bigrams.end());
  return forward(params, in, dropout);
}

template <typename T>
std::vector<T> cnn2_pv_forward(const ModelParams<T>& params, std::span<const int> bigrams,
                               std::span<const double> pv, const DropoutSpec& dropout) {
  require_kind(params.dims, ModelKind::kCnn2Pv);
  ModelInput in;
  in.chars.assign(bigrams.begin(), bigrams.end());
  in.pv.assign(pv.begin(), pv.end());
  return forward(params, in, dropout);
}

template <typename T>
std::vector<T> cnn2_de_forward(const ModelParams<T>& params, std::span<const int> bigrams,
                               std::span<const int> disc, const DropoutSpec& dropout) {
  require_kind(params.dims, ModelKind::kCnn2De);
  ModelInput in;
  in.chars.assign(bigrams.begin(), bigrams.end());
  in.disc.assign(disc.begin(), disc.end());
  return forward(params, in, dropout);
}

template <typename T>
T loss_and_gradient(const ModelParams<T>& params, const ModelInput& input, size_t label,
                    const DropoutSpec& dropout, ModelParams<T>& grad, T scale) {
  const ModelDims& dims = params.dims;
  Trace<T> tr = run_forward(params, input, dropout);
  auto sx = nn::softmax_xent<T>(tr.logits, label);
  const size_t k = dims.n_classes;
  std::vector<T> g(k);
  for (size_t c = 0; c < k; ++c) g[c] = scale * sx.grad[c];
  for (size_t c = 0; c < k; ++c) grad.out_b[c] += g[c];
  std::vector<T> d_features(tr.dropped.size(), T(0));
  for (size_t f = 0; f < tr.dropped.size(); ++f) {
    const T* w = params.out_w.data() + f * k;
    T* dw = grad.out_w.data() + f * k;
    const T v = tr.dropped[f];
    T acc = 0;
    for (size_t c = 0; c < k; ++c) {
      dw[c] += v * g[c];
      acc += w[c] * g[c];
    }
    d_features[f] = acc * tr.mask[f];
  }
  const size_t cf = dims.char_features();
  branch_backward<T>(input.chars, tr.chars, std::span<const T>(d_features.data(), cf),
                     params.char_conv, dims.activation, grad.char_emb, grad.char_conv);
  if (dims.kind == ModelKind::kCnn2De) {
    branch_backward<T>(input.disc, tr.disc,
                       std::span<const T>(d_features.data() + cf, dims.disc_features()),
                       params.disc_conv, dims.activation, grad.disc_emb, grad.disc_conv);
  }
  return sx.loss;
}

std::vector<int> pad_or_truncate(std::span<const int> seq, size_t max_len, int pad) {
  std::vector<int> out(seq.begin(), seq.begin() + std::min(seq.size(), max_len));
  out.resize(max_len, pad);
  return out;
}

TrainResult train(const ModelDims& dims, const std::vector<Example>& data,
                  const TrainConfig& config) {
  config.validate();
  std::set<int> classes;
  for (const auto& ex : data) {
    if (ex.label < 0 || static_cast<size_t>(ex.label) >= dims.n_classes) {
      throw Error(ErrorKind::kIndexOutOfRange, "label " + std::to_string(ex.label) +
                                                   " outside " + std::to_string(dims.n_classes) +
                                                   " classes");
    }
    classes.insert(ex.label);
  }
  if (classes.size() < 2) {
    throw Error(ErrorKind::kDegenerateDataset,
                "training needs at least two classes, got " + std::to_string(classes.size()));
  }
  TrainResult result;
  result.params = init_params<float>(dims, Rng::mix(config.seed, 1));
  ModelParams<float> grad = ModelParams<float>::zeros(dims);
  auto param_list = result.params.tensors();
  auto grad_list = grad.tensors();
  std::vector<Tensor<float>*> param_ptrs;
  std::vector<const Tensor<float>*> grad_ptrs;
  for (size_t i = 0; i < param_list.size(); ++i) {
    param_ptrs.push_back(param_list[i].second);
    grad_ptrs.push_back(grad_list[i].second);
  }
  nn::AdamState<float> adam;
  Rng shuffle(Rng::mix(config.seed, 2));
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  uint64_t step = 0;
  const size_t batch = static_cast<size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    double epoch_loss = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += batch) {
      const size_t end = std::min(order.size(), begin + batch);
      for (auto& [name, t] : grad_list) t->fill(0.0f);
      const float scale = 1.0f / static_cast<float>(end - begin);
      double batch_loss = 0.0;
      for (size_t pos = begin; pos < end; ++pos) {
        const Example& ex = data[order[pos]];
        DropoutSpec dropout{true, config.keep_prob, Rng::mix(config.seed, 1000 + step * batch + pos - begin)};
        batch_loss += loss_and_gradient(result.params, ex.input, static_cast<size_t>(ex.label),
                                        dropout, grad, scale);
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::kNonFiniteLoss,
                    "loss became " + std::to_string(batch_loss) + " at epoch " +
                        std::to_string(epoch) + ", batch starting at " + std::to_string(begin));
      }
      nn::adam_step(param_ptrs, grad_ptrs, adam, config.lr);
      epoch_loss += batch_loss;
      ++step;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return result;
}

int predict_class(const ModelParams<float>& params, const ModelInput& input) {
  const std::vector<float> probs = forward(params, input);
  int best = 0;
  for (size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = static_cast<int>(c);
  }
  return best;
}

void save_checkpoint(const ModelParams<float>& params, const nlohmann::json& meta,
                     const std::filesystem::path& path) {
  Container c;
  c.kind = std::string(model_kind_name(params.dims.kind));
  c.meta = meta.is_null() ? nlohmann::json::object() : meta;
  c.meta["dims"] = params.dims.to_json();
  for (const auto& [name, t] : params.tensors()) {
    c.tensors.push_back({name, t->shape(), std::vector<float>(t->data(), t->data() + t->size())});
  }
  write_container(path, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Container c = read_container(path);
  Checkpoint out;
  try {
    const ModelDims dims = ModelDims::from_json(c.meta.at("dims"));
    if (model_kind_name(dims.kind) != c.kind) {
      throw Error(ErrorKind::kCorruptCheckpoint, "kind field disagrees with dims");
    }
    out.params = ModelParams<float>::zeros(dims);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptCheckpoint, path.string() + ": bad dims: " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kCorruptCheckpoint) throw;
    throw Error(ErrorKind::kCorruptCheckpoint, path.string() + ": " + e.what());
  }
  for (auto& [name, t] : out.params.tensors()) {
    const TensorBlob& blob = c.tensor(name);
    if (blob.shape != t->shape()) {
      throw Error(ErrorKind::kCorruptCheckpoint, "tensor '" + name + "' has shape " +
                                                     nn::shape_string(blob.shape) + ", expected " +
                                                     nn::shape_string(t->shape()));
    }
    std::copy(blob.data.begin(), blob.data.end(), t->data());
  }
  out.meta = std::move(c.meta);
  out.meta.erase("dims");
  return out;
}

#define AA_INSTANTIATE(T)                                                                   \
  template struct ModelParams<T>;                                                           \
  template ModelParams<T> init_params<T>(const ModelDims&, uint64_t);                       \
  template std::vector<T> forward<T>(const ModelParams<T>&, const ModelInput&,              \
                                     const DropoutSpec&);                                   \
  template std::vector<T> cnn2_forward<T>(const ModelParams<T>&, std::span<const int>,      \
                                          const DropoutSpec&);                              \
  template std::vector<T> cnn2_pv_forward<T>(const ModelParams<T>&, std::span<const int>,   \
                                             std::span<const double>, const DropoutSpec&);  \
  template std::vector<T> cnn2_de_forward<T>(const ModelParams<T>&, std::span<const int>,   \
                                             std::span<const int>, const DropoutSpec&);     \
  template T loss_and_gradient<T>(const ModelParams<T>&, const ModelInput&, size_t,         \
                                  const DropoutSpec&, ModelParams<T>&, T);

AA_INSTANTIATE(float)
AA_INSTANTIATE(double)
#undef AA_INSTANTIATE

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;

}  // namespace aa
