#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tms/common.hpp"
#include "tms/feature_map.hpp"
#include "tms/layers.hpp"

namespace tms {

enum class NodeKind { conv, depthwise, batchnorm, activation, tms, se, pooling, fc, affine };

inline const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::conv: return "conv";
    case NodeKind::depthwise: return "depthwise";
    case NodeKind::batchnorm: return "batchnorm";
    case NodeKind::activation: return "activation";
    case NodeKind::tms: return "tms";
    case NodeKind::se: return "se";
    case NodeKind::pooling: return "pooling";
    case NodeKind::fc: return "fc";
    case NodeKind::affine: return "affine";
  }
  return "?";
}

struct PoolingParams {};

// Per-channel affine map y = scale * x + shift. This is what remains of a
// batch-norm node at the tail of a re-parameterized region.
template <typename Scalar>
struct AffineParams {
  std::vector<Scalar> scale;
  std::vector<Scalar> shift;

  std::size_t channels() const { return scale.size(); }

  void validate() const {
    require(!scale.empty(), "scale", "must be non-empty");
    require(shift.size() == scale.size(), "shift", "length must match scale");
  }
};

template <typename Scalar>
void affine_inplace(const AffineParams<Scalar>& affine, FeatureMap<Scalar>& x) {
  affine.validate();
  require(x.channels == affine.channels(), "channels",
          "input has " + std::to_string(x.channels) + " channels, affine expects " +
              std::to_string(affine.channels()));
  for (std::size_t c = 0; c < x.channels; ++c) {
    const Scalar a = affine.scale[c];
    const Scalar b = affine.shift[c];
    Scalar* xr = x.row(c);
    for (std::size_t t = 0; t < x.frames; ++t) xr[t] = xr[t] * a + b;
  }
}

template <typename Scalar>
struct LayerNode {
  std::string name;
  NodeKind kind = NodeKind::conv;
  std::variant<ConvLayer<Scalar>, DepthwiseBranch<Scalar>, BatchNormParams<Scalar>,
               Activation<Scalar>, TmsLayer<Scalar>, SeBlock<Scalar>, PoolingParams,
               FcLayer<Scalar>, AffineParams<Scalar>>
      params;
};

enum class Topology { regular, rep };

inline const char* topology_tag(Topology t) { return t == Topology::regular ? "regular" : "rep"; }

inline constexpr std::uint32_t kModelFormatVersion = 1;

// An ordered chain of layer nodes: frame-level operators up to the single
// pooling node, then fully connected layers down to the embedding.
template <typename Scalar>
struct ModelGraph {
  std::size_t input_dim = 0;
  std::size_t embedding_dim = 0;
  std::vector<LayerNode<Scalar>> nodes;
  Topology topology = Topology::regular;
  std::string canonical_config;  // canonical JSON this graph was built from
  std::string config_hash;       // hex digest of topology tag + canonical config
  std::uint64_t seed = 0;
  std::uint32_t format_version = kModelFormatVersion;

  void validate() const;
};

template <typename Scalar>
void ModelGraph<Scalar>::validate() const {
  require(input_dim > 0, "input_dim", "must be positive");
  require(embedding_dim > 0, "embedding_dim", "must be positive");
  require(!nodes.empty(), "layers", "model has no layers");

  std::size_t channels = input_dim;
  bool pooled = false;
  std::size_t vec_len = 0;

  for (const auto& node : nodes) {
    const std::string where = "layers[" + node.name + "]";
    if (!pooled) {
      switch (node.kind) {
        case NodeKind::conv: {
          const auto& c = std::get<ConvLayer<Scalar>>(node.params);
          c.validate();
          require(c.in_channels == channels, where.c_str(),
                  "expects " + std::to_string(c.in_channels) + " channels but receives " +
                      std::to_string(channels));
          channels = c.out_channels;
          break;
        }
        case NodeKind::depthwise: {
          const auto& d = std::get<DepthwiseBranch<Scalar>>(node.params);
          d.validate();
          require(d.channels == channels, where.c_str(), "channel mismatch");
          break;
        }
        case NodeKind::batchnorm: {
          const auto& bn = std::get<BatchNormParams<Scalar>>(node.params);
          bn.validate();
          require(bn.channels() == channels, where.c_str(), "channel mismatch");
          break;
        }
        case NodeKind::activation:
          break;
        case NodeKind::tms: {
          const auto& t = std::get<TmsLayer<Scalar>>(node.params);
          t.validate();
          require(t.in_channels() == channels, where.c_str(),
                  "expects " + std::to_string(t.in_channels()) + " channels but receives " +
                      std::to_string(channels));
          require(topology == Topology::regular, "topology",
                  "re-parameterized graphs may not contain multi-branch nodes");
          channels = t.out_channels();
          break;
        }
        case NodeKind::se: {
          const auto& s = std::get<SeBlock<Scalar>>(node.params);
          s.validate();
          require(s.channels == channels, where.c_str(), "channel mismatch");
          break;
        }
        case NodeKind::affine: {
          const auto& a = std::get<AffineParams<Scalar>>(node.params);
          a.validate();
          require(a.channels() == channels, where.c_str(), "channel mismatch");
          break;
        }
        case NodeKind::pooling:
          pooled = true;
          vec_len = 2 * channels;
          break;
        case NodeKind::fc:
          throw ValidationError(where, "fc layers must come after pooling");
      }
    } else {
      require(node.kind == NodeKind::fc, where.c_str(),
              "only fc layers may follow pooling");
      const auto& fc = std::get<FcLayer<Scalar>>(node.params);
      fc.validate();
      require(fc.in_features == vec_len, where.c_str(),
              "expects " + std::to_string(fc.in_features) + " features but receives " +
                  std::to_string(vec_len));
      vec_len = fc.out_features;
    }
  }
  require(pooled, "layers", "model must contain a pooling layer");
  require(vec_len == embedding_dim, "embedding_dim",
          "configured " + std::to_string(embedding_dim) + " but the last layer emits " +
              std::to_string(vec_len));
}

// Reusable buffers for repeated forwards; with a warm workspace the forward
// pass performs no heap allocation.
template <typename Scalar>
struct Workspace {
  FeatureMap<Scalar> a, b, scratch;
  std::vector<Scalar> vec;
};

template <typename Scalar>
std::vector<Scalar> model_forward(const ModelGraph<Scalar>& model, const FeatureMap<Scalar>& x,
                                  Workspace<Scalar>& ws) {
  require(x.channels == model.input_dim, "input",
          "feature map has " + std::to_string(x.channels) + " channels, model expects " +
              std::to_string(model.input_dim));

  ws.a.resize(x.channels, x.frames);
  std::copy(x.data.begin(), x.data.end(), ws.a.data.begin());
  FeatureMap<Scalar>* cur = &ws.a;
  FeatureMap<Scalar>* next = &ws.b;

  bool pooled = false;
  for (const auto& node : model.nodes) {
    if (!pooled) {
      switch (node.kind) {
        case NodeKind::conv:
          conv1d_forward_into(std::get<ConvLayer<Scalar>>(node.params), *cur, *next);
          std::swap(cur, next);
          break;
        case NodeKind::depthwise:
          next->resize(cur->channels, cur->frames);
          std::fill(next->data.begin(), next->data.end(), Scalar(0));
          depthwise_accumulate(std::get<DepthwiseBranch<Scalar>>(node.params), *cur, *next);
          std::swap(cur, next);
          break;
        case NodeKind::batchnorm:
          batchnorm_inplace(std::get<BatchNormParams<Scalar>>(node.params), *cur);
          break;
        case NodeKind::activation:
          activation_inplace(std::get<Activation<Scalar>>(node.params), *cur);
          break;
        case NodeKind::tms:
          tms_forward_into(std::get<TmsLayer<Scalar>>(node.params), *cur, *next, ws.scratch);
          std::swap(cur, next);
          break;
        case NodeKind::se:
          se_inplace(std::get<SeBlock<Scalar>>(node.params), *cur);
          break;
        case NodeKind::affine:
          affine_inplace(std::get<AffineParams<Scalar>>(node.params), *cur);
          break;
        case NodeKind::pooling:
          ws.vec = statistics_pooling(*cur);
          pooled = true;
          break;
        case NodeKind::fc:
          throw ValidationError("layers[" + node.name + "]", "fc layer before pooling");
      }
    } else {
      ws.vec = fc_forward(std::get<FcLayer<Scalar>>(node.params), ws.vec);
    }
  }
  require(pooled, "layers", "model has no pooling layer");
  return ws.vec;
}

template <typename Scalar>
std::vector<Scalar> model_forward(const ModelGraph<Scalar>& model, const FeatureMap<Scalar>& x) {
  Workspace<Scalar> ws;
  return model_forward(model, x, ws);
}

}  // namespace tms
