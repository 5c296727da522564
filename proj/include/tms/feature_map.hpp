#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "tms/common.hpp"

namespace tms {

// A channels x frames feature tensor stored channel-major:
// data[c * frames + t]. Scalar is float by default across the library;
// double instantiation is the high-precision verification mode.
template <typename Scalar>
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t frames = 0;
  std::vector<Scalar> data;

  FeatureMap() = default;

  FeatureMap(std::size_t channels_, std::size_t frames_)
      : channels(channels_), frames(frames_), data(channels_ * frames_, Scalar(0)) {
    require(channels_ > 0, "channels", "must be positive");
    require(frames_ > 0, "frames", "must be positive");
  }

  // Resizes without shrinking capacity; used by pre-allocated workspaces.
  void resize(std::size_t channels_, std::size_t frames_) {
    require(channels_ > 0, "channels", "must be positive");
    require(frames_ > 0, "frames", "must be positive");
    channels = channels_;
    frames = frames_;
    data.resize(channels_ * frames_);
  }

  Scalar& at(std::size_t c, std::size_t t) { return data[c * frames + t]; }
  Scalar at(std::size_t c, std::size_t t) const { return data[c * frames + t]; }

  Scalar* row(std::size_t c) { return data.data() + c * frames; }
  const Scalar* row(std::size_t c) const { return data.data() + c * frames; }

  bool all_finite() const {
    for (const Scalar v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }
};

}  // namespace tms
