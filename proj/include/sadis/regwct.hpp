#pragma once

#include <cstdint>
#include <random>

#include "sadis/tensor.hpp"

namespace sadis {

// Whitening-coloring transform on channel-major latents, with noise
// regularization, an omega blend and timestep gating.

using Rng = std::mt19937_64;

struct RegWctConfig {
    double lambda = 0.01;       // noise scale (λ)
    double omega = 0.5;         // blend weight (ω)
    double t_start_frac = 0.8;  // T_start / T
    double t_end_frac = 0.6;    // T_end / T
    std::uint64_t seed = 0;
    double eig_floor = 1e-8;    // relative to the largest eigenvalue

    void validate() const;
};

struct ChannelMoments {
    Vector mean;  // per-channel spatial mean
    Matrix gram;  // (z - m)(z - m)^T, unnormalized
};

ChannelMoments channel_moments(const LatentTensor& z);

// E D^{-1/2} E^T (z - m). Eigenvalues below eig_floor * max are treated as
// zero, so the output is whitened on the informative subspace only.
LatentTensor whiten(const LatentTensor& z, const RegWctConfig& config = {});

// E_c D_c^{1/2} E_c^T z_white + m_c: imposes the reference's centered gram
// and mean. z_white is re-centered first.
LatentTensor color(const LatentTensor& z_white, const LatentTensor& ref, const RegWctConfig& config = {});

LatentTensor wct(const LatentTensor& z, const LatentTensor& ref, const RegWctConfig& config = {});

// wct(z, ref) + lambda * delta, delta ~ N(0, 1) drawn from `rng` in
// (c, h, w) order.
LatentTensor reg_wct(const LatentTensor& z, const LatentTensor& ref, const RegWctConfig& config, Rng& rng);

// True when t / total lies in [t_end_frac, t_start_frac], compared in exact
// integer arithmetic.
bool in_gate(long t, long total, const RegWctConfig& config);

// Whether blend_step would transform the latent at this step.
bool gate_fires(long t, long total, const RegWctConfig& config);

// (1 - omega) z' + omega * reg_wct(z', ref) inside the gate, z' unchanged
// (same bytes, no draws) outside it or when omega == 0.
LatentTensor blend_step(const LatentTensor& z_prime, const LatentTensor& ref, long t, long total,
                        const RegWctConfig& config, Rng& rng);

// The blend without gating.
LatentTensor blend(const LatentTensor& z_prime, const LatentTensor& ref, const RegWctConfig& config, Rng& rng);

}  // namespace sadis
