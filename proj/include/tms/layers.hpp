#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tms/common.hpp"
#include "tms/feature_map.hpp"

namespace tms {

// ---------------------------------------------------------------------------
// Layer parameter types
// ---------------------------------------------------------------------------

// Dense or grouped 1-D convolution over the time axis. Weight layout is
// [out_channels][in_channels/groups][kernel]. All kernels are odd so the
// window is centered; outputs keep the input frame count (same-padding,
// stride 1).
//
// pad_value, when non-empty, is the per-input-channel constant the layer
// sees outside [0, T). Freshly built layers pad with zeros (empty vector);
// batch-norm folding produces layers whose implicit out-of-range input is
// the folded normalizer's response to zero, which is what keeps the folded
// layer exactly equal to the BN + conv composition at sequence boundaries.
template <typename Scalar>
struct ConvLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t groups = 1;
  std::size_t dilation = 1;
  std::vector<Scalar> weight;
  std::vector<Scalar> bias;       // empty means no bias
  std::vector<Scalar> pad_value;  // empty means zero padding

  std::size_t in_per_group() const { return in_channels / groups; }
  std::size_t out_per_group() const { return out_channels / groups; }
  std::size_t fan_in() const { return in_per_group() * kernel; }

  Scalar& w(std::size_t oc, std::size_t icl, std::size_t j) {
    return weight[(oc * in_per_group() + icl) * kernel + j];
  }
  Scalar w(std::size_t oc, std::size_t icl, std::size_t j) const {
    return weight[(oc * in_per_group() + icl) * kernel + j];
  }

  void validate() const {
    require(in_channels > 0, "in_channels", "must be positive");
    require(out_channels > 0, "out_channels", "must be positive");
    require(kernel % 2 == 1, "kernel", "must be odd, got " + std::to_string(kernel));
    require(groups > 0, "groups", "must be positive");
    require(dilation > 0, "dilation", "must be positive");
    require(in_channels % groups == 0, "groups",
            "must divide in_channels (" + std::to_string(groups) + " vs " +
                std::to_string(in_channels) + ")");
    require(out_channels % groups == 0, "groups",
            "must divide out_channels (" + std::to_string(groups) + " vs " +
                std::to_string(out_channels) + ")");
    require(weight.size() == out_channels * in_per_group() * kernel, "weight",
            "size must be out_channels * (in_channels/groups) * kernel");
    require(bias.empty() || bias.size() == out_channels, "bias",
            "length must equal out_channels");
    require(pad_value.empty() || pad_value.size() == in_channels, "pad_value",
            "length must equal in_channels");
  }
};

// Per-channel temporal kernel: channel n of the output is channel n of the
// input convolved with kernel row n. No cross-channel mixing.
template <typename Scalar>
struct DepthwiseBranch {
  std::size_t channels = 0;
  std::size_t kernel = 1;
  std::vector<Scalar> weight;  // [channels][kernel]
  std::vector<Scalar> bias;    // empty means no bias

  Scalar& w(std::size_t c, std::size_t j) { return weight[c * kernel + j]; }
  Scalar w(std::size_t c, std::size_t j) const { return weight[c * kernel + j]; }

  void validate() const {
    require(channels > 0, "channels", "must be positive");
    require(kernel % 2 == 1, "kernel", "must be odd, got " + std::to_string(kernel));
    require(weight.size() == channels * kernel, "weight",
            "size must be channels * kernel");
    require(bias.empty() || bias.size() == channels, "bias",
            "length must equal channels");
  }
};

// Inference-mode batch normalization: fixed statistics, per-channel affine.
template <typename Scalar>
struct BatchNormParams {
  std::vector<Scalar> gamma;
  std::vector<Scalar> beta;
  std::vector<Scalar> mean;
  std::vector<Scalar> variance;
  Scalar epsilon = Scalar(1e-5);

  std::size_t channels() const { return gamma.size(); }

  static BatchNormParams identity(std::size_t channels) {
    BatchNormParams bn;
    bn.gamma.assign(channels, Scalar(1));
    bn.beta.assign(channels, Scalar(0));
    bn.mean.assign(channels, Scalar(0));
    bn.variance.assign(channels, Scalar(1));
    bn.epsilon = Scalar(0);
    return bn;
  }

  void validate() const {
    require(!gamma.empty(), "gamma", "must be non-empty");
    require(beta.size() == gamma.size(), "beta", "length must match gamma");
    require(mean.size() == gamma.size(), "mean", "length must match gamma");
    require(variance.size() == gamma.size(), "variance", "length must match gamma");
    for (const Scalar v : variance) {
      require(v >= Scalar(0), "variance", "must be non-negative");
    }
    require(epsilon >= Scalar(0), "epsilon", "must be non-negative");
  }
};

// Squeeze-excitation gate: temporal mean -> bottleneck FC + ReLU ->
// expansion FC + sigmoid -> per-channel scaling.
template <typename Scalar>
struct SeBlock {
  std::size_t channels = 0;
  std::size_t bottleneck = 0;
  std::vector<Scalar> w1;  // [bottleneck][channels]
  std::vector<Scalar> b1;  // [bottleneck]
  std::vector<Scalar> w2;  // [channels][bottleneck]
  std::vector<Scalar> b2;  // [channels]

  void validate() const {
    require(channels > 0, "channels", "must be positive");
    require(bottleneck > 0, "bottleneck", "must be positive");
    require(w1.size() == bottleneck * channels, "w1", "size must be bottleneck * channels");
    require(b1.size() == bottleneck, "b1", "length must equal bottleneck");
    require(w2.size() == channels * bottleneck, "w2", "size must be channels * bottleneck");
    require(b2.size() == channels, "b2", "length must equal channels");
  }
};

enum class ActKind { relu, leaky_relu };

template <typename Scalar>
struct Activation {
  ActKind kind = ActKind::relu;
  Scalar slope = Scalar(0.01);  // leaky_relu only
};

// One temporal multi-scale layer: a channel-modeling convolution (with an
// optional identity shortcut) feeding K per-channel temporal branches whose
// outputs are summed (with an optional identity shortcut of their own).
template <typename Scalar>
struct TmsLayer {
  ConvLayer<Scalar> channel_conv;
  std::vector<DepthwiseBranch<Scalar>> branches;
  bool cm_shortcut = false;
  bool tms_shortcut = false;

  std::size_t in_channels() const { return channel_conv.in_channels; }
  std::size_t out_channels() const { return channel_conv.out_channels; }

  void validate() const {
    channel_conv.validate();
    require(!branches.empty(), "branches", "need at least one temporal branch");
    for (const auto& b : branches) {
      b.validate();
      require(b.channels == channel_conv.out_channels, "branches",
              "branch channels must equal channel-modeling out_channels");
    }
    if (cm_shortcut || tms_shortcut) {
      require(channel_conv.in_channels == channel_conv.out_channels, "shortcut",
              "shortcuts require in_channels == out_channels");
    }
  }
};

// Affine map on a flat vector: y = weight * v + bias.
template <typename Scalar>
struct FcLayer {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::vector<Scalar> weight;  // [out][in]
  std::vector<Scalar> bias;    // empty means no bias

  void validate() const {
    require(in_features > 0, "in_features", "must be positive");
    require(out_features > 0, "out_features", "must be positive");
    require(weight.size() == out_features * in_features, "weight",
            "size must be out_features * in_features");
    require(bias.empty() || bias.size() == out_features, "bias",
            "length must equal out_features");
  }
};

// ---------------------------------------------------------------------------
// Forward operations
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using StridedConstMap =
    Eigen::Map<const RowMat<Scalar>, Eigen::Unaligned,
               Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

}  // namespace detail

// y = W * x with centered window, stride 1, per-layer input padding
// (zero unless pad_value is set). Accumulates one GEMM per kernel tap.
template <typename Scalar>
void conv1d_forward_into(const ConvLayer<Scalar>& layer, const FeatureMap<Scalar>& x,
                         FeatureMap<Scalar>& out) {
  layer.validate();
  require(x.channels == layer.in_channels, "in_channels",
          "input has " + std::to_string(x.channels) + " channels, layer expects " +
              std::to_string(layer.in_channels));
  require(x.frames >= 1, "frames", "input must have at least one frame");

  const std::size_t T = x.frames;
  const std::size_t ipg = layer.in_per_group();
  const std::size_t opg = layer.out_per_group();
  const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(layer.kernel / 2);

  out.resize(layer.out_channels, T);
  if (layer.bias.empty()) {
    std::fill(out.data.begin(), out.data.end(), Scalar(0));
  } else {
    for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
      std::fill(out.row(oc), out.row(oc) + T, layer.bias[oc]);
    }
  }

  using Map = Eigen::Map<detail::RowMat<Scalar>, Eigen::Unaligned,
                         Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
  using CMap = detail::StridedConstMap<Scalar>;

  std::vector<Scalar> pad_response(opg);
  for (std::size_t g = 0; g < layer.groups; ++g) {
    const Scalar* wg = layer.weight.data() + g * opg * ipg * layer.kernel;
    const Scalar* xg = x.data.data() + g * ipg * T;
    Scalar* yg = out.data.data() + g * opg * T;
    Map y(yg, static_cast<Eigen::Index>(opg), static_cast<Eigen::Index>(T),
          Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(static_cast<Eigen::Index>(T), 1));

    for (std::size_t j = 0; j < layer.kernel; ++j) {
      const std::ptrdiff_t offset =
          (static_cast<std::ptrdiff_t>(j) - center) * static_cast<std::ptrdiff_t>(layer.dilation);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -offset);
      const std::ptrdiff_t hi =
          std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(T),
                                   static_cast<std::ptrdiff_t>(T) - offset);
      // Tap slice of the group weight: opg x ipg with inner stride `kernel`.
      CMap wj(wg + j, static_cast<Eigen::Index>(opg), static_cast<Eigen::Index>(ipg),
              Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(
                  static_cast<Eigen::Index>(ipg * layer.kernel),
                  static_cast<Eigen::Index>(layer.kernel)));

      if (hi > lo) {
        CMap xs(xg + (lo + offset), static_cast<Eigen::Index>(ipg),
                static_cast<Eigen::Index>(hi - lo),
                Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(
                    static_cast<Eigen::Index>(T), 1));
        y.middleCols(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo))
            .noalias() += wj * xs;
      }

      if (!layer.pad_value.empty() && (lo > 0 || hi < static_cast<std::ptrdiff_t>(T))) {
        // Out-of-range taps read the per-channel pad level instead of zero.
        for (std::size_t r = 0; r < opg; ++r) {
          Scalar acc = Scalar(0);
          for (std::size_t c = 0; c < ipg; ++c) {
            acc += wj(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
                   layer.pad_value[g * ipg + c];
          }
          pad_response[r] = acc;
        }
        const std::ptrdiff_t clamped_lo =
            std::min<std::ptrdiff_t>(lo, static_cast<std::ptrdiff_t>(T));
        const std::ptrdiff_t clamped_hi = std::max<std::ptrdiff_t>(hi, 0);
        for (std::size_t r = 0; r < opg; ++r) {
          Scalar* yr = yg + r * T;
          for (std::ptrdiff_t t = 0; t < clamped_lo; ++t) yr[t] += pad_response[r];
          for (std::ptrdiff_t t = clamped_hi; t < static_cast<std::ptrdiff_t>(T); ++t) {
            yr[t] += pad_response[r];
          }
        }
      }
    }
  }
}

template <typename Scalar>
FeatureMap<Scalar> conv1d_forward(const ConvLayer<Scalar>& layer, const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> out;
  conv1d_forward_into(layer, x, out);
  return out;
}

// Accumulates the branch response into `out` (which must already have the
// input's shape). Splitting accumulation out lets the multi-branch layer
// sum K branches without K temporaries.
template <typename Scalar>
void depthwise_accumulate(const DepthwiseBranch<Scalar>& branch, const FeatureMap<Scalar>& x,
                          FeatureMap<Scalar>& out) {
  branch.validate();
  require(x.channels == branch.channels, "channels",
          "input has " + std::to_string(x.channels) + " channels, branch expects " +
              std::to_string(branch.channels));
  const std::size_t T = x.frames;
  const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(branch.kernel / 2);

  for (std::size_t c = 0; c < branch.channels; ++c) {
    const Scalar* xr = x.row(c);
    Scalar* yr = out.row(c);
    if (!branch.bias.empty()) {
      const Scalar b = branch.bias[c];
      for (std::size_t t = 0; t < T; ++t) yr[t] += b;
    }
    for (std::size_t j = 0; j < branch.kernel; ++j) {
      const Scalar w = branch.w(c, j);
      if (w == Scalar(0)) continue;
      const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(j) - center;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -offset);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(T), static_cast<std::ptrdiff_t>(T) - offset);
      for (std::ptrdiff_t t = lo; t < hi; ++t) yr[t] += w * xr[t + offset];
    }
  }
}

template <typename Scalar>
FeatureMap<Scalar> depthwise_forward(const DepthwiseBranch<Scalar>& branch,
                                     const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> out(x.channels, x.frames);
  depthwise_accumulate(branch, x, out);
  return out;
}

template <typename Scalar>
void batchnorm_inplace(const BatchNormParams<Scalar>& bn, FeatureMap<Scalar>& x) {
  bn.validate();
  require(x.channels == bn.channels(), "channels",
          "input has " + std::to_string(x.channels) + " channels, batchnorm expects " +
              std::to_string(bn.channels()));
  for (std::size_t c = 0; c < x.channels; ++c) {
    const Scalar scale =
        bn.gamma[c] / static_cast<Scalar>(
                          std::sqrt(static_cast<double>(bn.variance[c]) +
                                    static_cast<double>(bn.epsilon)));
    const Scalar shift = bn.beta[c] - bn.mean[c] * scale;
    Scalar* xr = x.row(c);
    for (std::size_t t = 0; t < x.frames; ++t) xr[t] = xr[t] * scale + shift;
  }
}

template <typename Scalar>
FeatureMap<Scalar> batchnorm_forward(const BatchNormParams<Scalar>& bn,
                                     const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> out = x;
  batchnorm_inplace(bn, out);
  return out;
}

template <typename Scalar>
void activation_inplace(const Activation<Scalar>& act, FeatureMap<Scalar>& x) {
  if (act.kind == ActKind::relu) {
    for (Scalar& v : x.data) v = std::max(Scalar(0), v);
  } else {
    const Scalar s = act.slope;
    for (Scalar& v : x.data) v = v >= Scalar(0) ? v : s * v;
  }
}

template <typename Scalar>
FeatureMap<Scalar> activation_forward(const Activation<Scalar>& act,
                                      const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> out = x;
  activation_inplace(act, out);
  return out;
}

// Full multi-scale layer: channel-modeling conv (+ shortcut), then the sum
// of all temporal branches (+ shortcut of the channel-modeling output).
template <typename Scalar>
void tms_forward_into(const TmsLayer<Scalar>& layer, const FeatureMap<Scalar>& x,
                      FeatureMap<Scalar>& out, FeatureMap<Scalar>& scratch) {
  layer.validate();
  conv1d_forward_into(layer.channel_conv, x, scratch);
  if (layer.cm_shortcut) {
    for (std::size_t i = 0; i < scratch.data.size(); ++i) scratch.data[i] += x.data[i];
  }
  out.resize(scratch.channels, scratch.frames);
  if (layer.tms_shortcut) {
    std::copy(scratch.data.begin(), scratch.data.end(), out.data.begin());
  } else {
    std::fill(out.data.begin(), out.data.end(), Scalar(0));
  }
  for (const auto& branch : layer.branches) {
    depthwise_accumulate(branch, scratch, out);
  }
}

template <typename Scalar>
FeatureMap<Scalar> tms_forward(const TmsLayer<Scalar>& layer, const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> out, scratch;
  tms_forward_into(layer, x, out, scratch);
  return out;
}

template <typename Scalar>
void se_inplace(const SeBlock<Scalar>& se, FeatureMap<Scalar>& x) {
  se.validate();
  require(x.channels == se.channels, "channels",
          "input has " + std::to_string(x.channels) + " channels, SE block expects " +
              std::to_string(se.channels));
  const std::size_t T = x.frames;

  std::vector<Scalar> squeeze(se.channels);
  for (std::size_t c = 0; c < se.channels; ++c) {
    double acc = 0.0;
    const Scalar* xr = x.row(c);
    for (std::size_t t = 0; t < T; ++t) acc += static_cast<double>(xr[t]);
    squeeze[c] = static_cast<Scalar>(acc / static_cast<double>(T));
  }

  std::vector<Scalar> hidden(se.bottleneck);
  for (std::size_t r = 0; r < se.bottleneck; ++r) {
    Scalar acc = se.b1[r];
    const Scalar* wr = se.w1.data() + r * se.channels;
    for (std::size_t c = 0; c < se.channels; ++c) acc += wr[c] * squeeze[c];
    hidden[r] = std::max(Scalar(0), acc);
  }

  for (std::size_t c = 0; c < se.channels; ++c) {
    Scalar acc = se.b2[c];
    const Scalar* wr = se.w2.data() + c * se.bottleneck;
    for (std::size_t r = 0; r < se.bottleneck; ++r) acc += wr[r] * hidden[r];
    const Scalar gate =
        static_cast<Scalar>(1.0 / (1.0 + std::exp(-static_cast<double>(acc))));
    Scalar* xr = x.row(c);
    for (std::size_t t = 0; t < T; ++t) xr[t] *= gate;
  }
}

template <typename Scalar>
FeatureMap<Scalar> se_forward(const SeBlock<Scalar>& se, const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> out = x;
  se_inplace(se, out);
  return out;
}

// Per-channel temporal mean followed by per-channel population standard
// deviation, variance floored at 1e-10 before the square root.
template <typename Scalar>
std::vector<Scalar> statistics_pooling(const FeatureMap<Scalar>& x) {
  require(x.frames >= 1, "frames", "cannot pool zero frames");
  require(x.channels >= 1, "channels", "cannot pool zero channels");
  std::vector<Scalar> out(2 * x.channels);
  for (std::size_t c = 0; c < x.channels; ++c) {
    const Scalar* xr = x.row(c);
    double mean = 0.0;
    for (std::size_t t = 0; t < x.frames; ++t) mean += static_cast<double>(xr[t]);
    mean /= static_cast<double>(x.frames);
    double var = 0.0;
    for (std::size_t t = 0; t < x.frames; ++t) {
      const double d = static_cast<double>(xr[t]) - mean;
      var += d * d;
    }
    var /= static_cast<double>(x.frames);
    out[c] = static_cast<Scalar>(mean);
    out[x.channels + c] = static_cast<Scalar>(std::sqrt(std::max(var, 1e-10)));
  }
  return out;
}

template <typename Scalar>
std::vector<Scalar> fc_forward(const std::vector<Scalar>& weight,
                               const std::vector<Scalar>& bias,
                               const std::vector<Scalar>& v) {
  require(!v.empty(), "v", "input vector must be non-empty");
  require(weight.size() % v.size() == 0, "weight",
          "size must be a multiple of the input length");
  const std::size_t out_features = weight.size() / v.size();
  require(bias.empty() || bias.size() == out_features, "bias",
          "length must equal out_features");
  std::vector<Scalar> out(out_features);
  for (std::size_t r = 0; r < out_features; ++r) {
    Scalar acc = bias.empty() ? Scalar(0) : bias[r];
    const Scalar* wr = weight.data() + r * v.size();
    for (std::size_t c = 0; c < v.size(); ++c) acc += wr[c] * v[c];
    out[r] = acc;
  }
  return out;
}

template <typename Scalar>
std::vector<Scalar> fc_forward(const FcLayer<Scalar>& fc, const std::vector<Scalar>& v) {
  fc.validate();
  require(v.size() == fc.in_features, "in_features",
          "input has " + std::to_string(v.size()) + " features, layer expects " +
              std::to_string(fc.in_features));
  return fc_forward(fc.weight, fc.bias, v);
}

}  // namespace tms
