#include "sadis/regwct.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "sadis/error.hpp"

namespace sadis {

namespace {

// Fractions are compared as integers over this denominator so that gate
// boundaries such as 0.6 and 0.8 are hit exactly.
constexpr long long kFracDenominator = 1'000'000;

long long frac_numerator(double frac)
{
    return std::llround(frac * static_cast<double>(kFracDenominator));
}

Eigen::SelfAdjointEigenSolver<Matrix> decompose(const Matrix& gram)
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of the channel gram matrix did not converge");
    }
    return solver;
}

}  // namespace

void RegWctConfig::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and >= 0");
    if (!(omega >= 0.0 && omega <= 1.0)) throw DomainError("omega must lie in [0, 1]");
    if (!(t_end_frac >= 0.0 && t_end_frac < t_start_frac && t_start_frac <= 1.0)) {
        throw DomainError("timestep gate needs 0 <= t_end_frac < t_start_frac <= 1");
    }
    if (!(eig_floor > 0.0) || !std::isfinite(eig_floor)) throw DomainError("eig_floor must be finite and > 0");
}

ChannelMoments channel_moments(const LatentTensor& z)
{
    ChannelMoments out;
    out.mean = z.flat().rowwise().mean();
    const Matrix centered = z.flat().colwise() - out.mean;
    out.gram = centered * centered.transpose();
    return out;
}

LatentTensor whiten(const LatentTensor& z, const RegWctConfig& config)
{
    config.validate();
    const ChannelMoments moments = channel_moments(z);
    const auto solver = decompose(moments.gram);
    const Vector& eig = solver.eigenvalues();
    const double top = eig.maxCoeff();
    if (!(top > 0.0)) {
        throw DegenerateError("latent has zero variance in every channel; whitening is undefined");
    }
    Vector inv_root(eig.size());
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        inv_root[i] = eig[i] > config.eig_floor * top ? 1.0 / std::sqrt(eig[i]) : 0.0;
    }
    const Matrix& basis = solver.eigenvectors();
    const Matrix transform = basis * inv_root.asDiagonal() * basis.transpose();
    return LatentTensor(transform * (z.flat().colwise() - moments.mean), z.height(), z.width());
}

LatentTensor color(const LatentTensor& z_white, const LatentTensor& ref, const RegWctConfig& config)
{
    config.validate();
    if (z_white.channels() != ref.channels()) {
        throw DimensionError("color: channel mismatch " + std::to_string(z_white.channels()) + " vs reference " +
                             std::to_string(ref.channels()));
    }
    const ChannelMoments moments = channel_moments(ref);
    const auto solver = decompose(moments.gram);
    const Vector& eig = solver.eigenvalues();
    if (!(eig.maxCoeff() > 0.0)) {
        throw DegenerateError("reference latent has zero variance; coloring is undefined");
    }
    const Vector root = eig.cwiseMax(0.0).cwiseSqrt();
    const Matrix& basis = solver.eigenvectors();
    const Matrix transform = basis * root.asDiagonal() * basis.transpose();

    const Vector white_mean = z_white.flat().rowwise().mean();
    Matrix out = transform * (z_white.flat().colwise() - white_mean);
    out.colwise() += moments.mean;
    return LatentTensor(std::move(out), z_white.height(), z_white.width());
}

LatentTensor wct(const LatentTensor& z, const LatentTensor& ref, const RegWctConfig& config)
{
    if (z.channels() != ref.channels()) {
        throw DimensionError("wct: channel mismatch " + std::to_string(z.channels()) + " vs reference " +
                             std::to_string(ref.channels()));
    }
    return color(whiten(z, config), ref, config);
}

LatentTensor reg_wct(const LatentTensor& z, const LatentTensor& ref, const RegWctConfig& config, Rng& rng)
{
    LatentTensor out = wct(z, ref, config);
    if (config.lambda == 0.0) {
        return out;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix& flat = out.flat();
    for (Eigen::Index c = 0; c < flat.rows(); ++c) {
        for (Eigen::Index p = 0; p < flat.cols(); ++p) {
            flat(c, p) += config.lambda * normal(rng);
        }
    }
    return out;
}

bool in_gate(long t, long total, const RegWctConfig& config)
{
    if (total <= 0 || t < 0 || t > total) {
        throw DomainError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(total) + "]");
    }
    const long long scaled = static_cast<long long>(t) * kFracDenominator;
    return scaled >= frac_numerator(config.t_end_frac) * total &&
           scaled <= frac_numerator(config.t_start_frac) * total;
}

bool gate_fires(long t, long total, const RegWctConfig& config)
{
    return in_gate(t, total, config) && config.omega != 0.0;
}

LatentTensor blend(const LatentTensor& z_prime, const LatentTensor& ref, const RegWctConfig& config, Rng& rng)
{
    config.validate();
    if (config.omega == 0.0) {
        return z_prime;
    }
    const LatentTensor transformed = reg_wct(z_prime, ref, config, rng);
    Matrix out = (1.0 - config.omega) * z_prime.flat() + config.omega * transformed.flat();
    return LatentTensor(std::move(out), z_prime.height(), z_prime.width());
}

LatentTensor blend_step(const LatentTensor& z_prime, const LatentTensor& ref, long t, long total,
                        const RegWctConfig& config, Rng& rng)
{
    config.validate();
    if (!gate_fires(t, total, config)) {
        return z_prime;
    }
    return blend(z_prime, ref, config, rng);
}

}  // namespace sadis
