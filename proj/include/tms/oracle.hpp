#pragma once

#include <cstddef>
#include <string>

#include "tms/common.hpp"
#include "tms/feature_map.hpp"
#include "tms/layers.hpp"

namespace tms {

// Brute-force reference convolutions. These are the verification route for
// the production forwards: literal summation over output channel, group
// input channel, and kernel tap with explicit boundary handling, and no
// shared code with the fast paths. Guarded to small instances so nobody is
// tempted to run a model through them.

inline constexpr std::size_t kOracleMaxChannels = 64;
inline constexpr std::size_t kOracleMaxFrames = 512;
inline constexpr std::size_t kOracleMaxKernel = 15;

namespace detail {

inline void oracle_size_guard(std::size_t in, std::size_t out, std::size_t frames,
                              std::size_t kernel) {
  require(in <= kOracleMaxChannels && out <= kOracleMaxChannels, "oracle",
          "size guard: channels must be <= " + std::to_string(kOracleMaxChannels));
  require(frames <= kOracleMaxFrames, "oracle",
          "size guard: frames must be <= " + std::to_string(kOracleMaxFrames));
  require(kernel <= kOracleMaxKernel, "oracle",
          "size guard: kernel must be <= " + std::to_string(kOracleMaxKernel));
}

}  // namespace detail

template <typename Scalar>
FeatureMap<Scalar> oracle_direct_conv(const ConvLayer<Scalar>& layer,
                                      const FeatureMap<Scalar>& x) {
  layer.validate();
  require(x.channels == layer.in_channels, "in_channels", "oracle input channel mismatch");
  detail::oracle_size_guard(layer.in_channels, layer.out_channels, x.frames, layer.kernel);

  const std::ptrdiff_t T = static_cast<std::ptrdiff_t>(x.frames);
  const std::size_t ipg = layer.in_channels / layer.groups;
  const std::size_t opg = layer.out_channels / layer.groups;
  const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(layer.kernel / 2);

  FeatureMap<Scalar> y(layer.out_channels, x.frames);
  for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
    const std::size_t g = oc / opg;
    for (std::ptrdiff_t t = 0; t < T; ++t) {
      double acc = layer.bias.empty() ? 0.0 : static_cast<double>(layer.bias[oc]);
      for (std::size_t icl = 0; icl < ipg; ++icl) {
        const std::size_t ic = g * ipg + icl;
        for (std::size_t j = 0; j < layer.kernel; ++j) {
          const std::ptrdiff_t src =
              t + (static_cast<std::ptrdiff_t>(j) - center) *
                      static_cast<std::ptrdiff_t>(layer.dilation);
          double xv;
          if (src >= 0 && src < T) {
            xv = static_cast<double>(x.at(ic, static_cast<std::size_t>(src)));
          } else {
            xv = layer.pad_value.empty() ? 0.0 : static_cast<double>(layer.pad_value[ic]);
          }
          acc += static_cast<double>(layer.w(oc, icl, j)) * xv;
        }
      }
      y.at(oc, static_cast<std::size_t>(t)) = static_cast<Scalar>(acc);
    }
  }
  return y;
}

template <typename Scalar>
FeatureMap<Scalar> oracle_direct_depthwise(const DepthwiseBranch<Scalar>& branch,
                                           const FeatureMap<Scalar>& x) {
  branch.validate();
  require(x.channels == branch.channels, "channels", "oracle input channel mismatch");
  detail::oracle_size_guard(branch.channels, branch.channels, x.frames, branch.kernel);

  const std::ptrdiff_t T = static_cast<std::ptrdiff_t>(x.frames);
  const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(branch.kernel / 2);

  FeatureMap<Scalar> y(branch.channels, x.frames);
  for (std::size_t c = 0; c < branch.channels; ++c) {
    for (std::ptrdiff_t t = 0; t < T; ++t) {
      double acc = branch.bias.empty() ? 0.0 : static_cast<double>(branch.bias[c]);
      for (std::size_t j = 0; j < branch.kernel; ++j) {
        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(j) - center;
        if (src >= 0 && src < T) {
          acc += static_cast<double>(branch.w(c, j)) *
                 static_cast<double>(x.at(c, static_cast<std::size_t>(src)));
        }
      }
      y.at(c, static_cast<std::size_t>(t)) = static_cast<Scalar>(acc);
    }
  }
  return y;
}

}  // namespace tms
