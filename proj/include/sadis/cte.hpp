#pragma once

#include "sadis/tensor.hpp"

namespace sadis {

// Color-texture extraction on image-encoder token embeddings.

struct CteConfig {
    double gamma = 0.003;       // singular-value decay rate (γ)
    double beta = 1.0;          // singular-value gain (β)
    double color_scale = 1.0;   // gain on the color embedding

    void validate() const;
};

// Texture tokens followed by color tokens, 2 * n_t rows in total.
class StyleCondition {
public:
    StyleCondition(Embedding texture, Embedding color);

    const Matrix& tokens() const { return tokens_; }
    Eigen::Index branch_tokens() const { return tokens_.rows() / 2; }

    Embedding texture() const;
    Embedding color() const;

private:
    Matrix tokens_;
};

// color_scale * (emb_color - emb_gray). Strips what the color image shares
// with its grayscale version, leaving the color attributes.
Embedding extract_color_embedding(const Embedding& emb_color, const Embedding& emb_gray, const CteConfig& config = {});

// Token-axis concatenation, rows of `a` first.
Embedding concat_tokens(const Embedding& a, const Embedding& b);

// sigma_i -> beta * exp(-gamma * sigma_i) * sigma_i. Input must be
// nonnegative and nonincreasing.
Vector reweight_singular_values(const Vector& sigma, const CteConfig& config = {});

// Concatenates the gray-texture and average-gray embeddings, damps the
// dominant singular directions (the shared gray tone) and returns the
// first n_t rows of the reconstruction.
Embedding extract_texture_embedding(const Embedding& emb_gray_tx, const Embedding& emb_avg_gray,
                                    const CteConfig& config = {});

StyleCondition combine(const Embedding& emb_tx, const Embedding& emb_clr);

}  // namespace sadis
