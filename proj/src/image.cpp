#include "smn/image.hpp"

#include <string>

#include "smn/error.hpp"

namespace smn {

ad::Var image_popularity(const ad::Var& feature, const ImageHeadVars& head, bool relu_output) {
    if (feature.rows() != 1 || feature.cols() != head.w1.rows()) {
        throw ShapeError("image feature dimension mismatch: got " + std::to_string(feature.cols()) +
                         ", head expects " + std::to_string(head.w1.rows()));
    }
    const ad::Var hidden = ad::relu(ad::add(ad::matmul(feature, head.w1), head.b1));
    ad::Var out = ad::add(ad::matmul(hidden, head.w2), head.b2);
    return relu_output ? ad::relu(out) : out;
}

}  // namespace smn

#include "smn/corpus.hpp"
#include "smn/semb.hpp"

namespace smn {

std::size_t attach_image_features(Corpus& corpus, const EmbeddingFile& images) {
    if (corpus.header.fc && *corpus.header.fc != images.dim) {
        for (const auto& ev : corpus.events) {
            if (ev.image_feature) {
                throw ValidationError("image file dim " + std::to_string(images.dim) +
                                      " conflicts with corpus fc " + std::to_string(*corpus.header.fc));
            }
        }
    }
    corpus.header.fc = images.dim;
    std::size_t attached = 0;
    for (auto& ev : corpus.events) {
        ev.image_feature.reset();
        if (const auto* row = images.find(ev.id)) {
            ev.image_feature = std::vector<double>(row->begin(), row->end());
            ++attached;
        }
    }
    return attached;
}

}  // namespace smn
