#include "sadis/cte.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "sadis/error.hpp"

namespace sadis {

namespace {

std::string dims(const Embedding& e)
{
    return "(" + std::to_string(e.token_count()) + ", " + std::to_string(e.width()) + ")";
}

void require_same_shape(const Embedding& a, const Embedding& b, const char* op)
{
    if (a.token_count() != b.token_count() || a.width() != b.width()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
    }
}

}  // namespace

void CteConfig::validate() const
{
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be finite and >= 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and > 0");
    if (!(color_scale >= 0.0) || !std::isfinite(color_scale)) throw DomainError("color_scale must be finite and >= 0");
}

StyleCondition::StyleCondition(Embedding texture, Embedding color)
{
    require_same_shape(texture, color, "combine");
    tokens_ = concat_tokens(texture, color).tokens();
}

Embedding StyleCondition::texture() const
{
    return Embedding(tokens_.topRows(branch_tokens()));
}

Embedding StyleCondition::color() const
{
    return Embedding(tokens_.bottomRows(branch_tokens()));
}

Embedding extract_color_embedding(const Embedding& emb_color, const Embedding& emb_gray, const CteConfig& config)
{
    config.validate();
    require_same_shape(emb_color, emb_gray, "extract_color_embedding");
    return Embedding(config.color_scale * (emb_color.tokens() - emb_gray.tokens()));
}

Embedding concat_tokens(const Embedding& a, const Embedding& b)
{
    if (a.width() != b.width()) {
        throw DimensionError("concat_tokens: feature width mismatch " + dims(a) + " vs " + dims(b));
    }
    Matrix out(a.token_count() + b.token_count(), a.width());
    out.topRows(a.token_count()) = a.tokens();
    out.bottomRows(b.token_count()) = b.tokens();
    return Embedding(std::move(out));
}

Vector reweight_singular_values(const Vector& sigma, const CteConfig& config)
{
    config.validate();
    Vector out(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const double s = sigma[i];
        if (!(s >= 0.0)) {
            throw DomainError("singular value " + std::to_string(i) + " is negative or NaN");
        }
        if (i > 0 && s > sigma[i - 1]) {
            throw DomainError("singular values must be sorted nonincreasing");
        }
        // exp underflows to 0 for very large gamma * s, which is the intended limit.
        out[i] = config.beta * std::exp(-config.gamma * s) * s;
    }
    return out;
}

Embedding extract_texture_embedding(const Embedding& emb_gray_tx, const Embedding& emb_avg_gray,
                                    const CteConfig& config)
{
    config.validate();
    require_same_shape(emb_gray_tx, emb_avg_gray, "extract_texture_embedding");

    const Embedding stacked = concat_tokens(emb_gray_tx, emb_avg_gray);
    Eigen::BDCSVD<Matrix> svd(stacked.tokens(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
        const Vector& s = svd.singularValues();
        const double cond = s.size() && s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : INFINITY;
        throw NumericalError("SVD of the stacked texture embedding failed (condition estimate " +
                             std::to_string(cond) + ")");
    }
    const Vector reweighted = reweight_singular_values(svd.singularValues(), config);
    const Matrix rebuilt = svd.matrixU() * reweighted.asDiagonal() * svd.matrixV().transpose();
    return Embedding(rebuilt.topRows(emb_gray_tx.token_count()));
}

StyleCondition combine(const Embedding& emb_tx, const Embedding& emb_clr)
{
    return StyleCondition(emb_tx, emb_clr);
}

}  // namespace sadis
