#pragma once

#include "smn/diffcore.hpp"

namespace smn {

inline constexpr std::size_t kDefaultImageHidden = 64;
inline constexpr std::size_t kViTB32Width = 512;

struct ImageHeadVars {
    ad::Var w1;  // Fc x Fh
    ad::Var b1;  // 1 x Fh
    ad::Var w2;  // Fh x 1
    ad::Var b2;  // 1 x 1
};

/// relu(x W1 + b1) W2 + b2. With `relu_output` the final layer is also
/// rectified, which is the strictly two-nonlinear-layer variant.
ad::Var image_popularity(const ad::Var& feature, const ImageHeadVars& head, bool relu_output = false);

}  // namespace smn

namespace smn {

struct Corpus;
struct EmbeddingFile;

/// Fills image features from a `.semb` keyed by event id, replacing inline
/// features. Events without a row keep no image. Sets the header width.
/// Returns the number of events that received a feature.
std::size_t attach_image_features(Corpus& corpus, const EmbeddingFile& images);

}  // namespace smn
