#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sadis/metrics.hpp"
#include "sadis/regwct.hpp"
#include "sadis/tensor.hpp"

namespace sadis {

// Closed-form Gaussian diffusion: data is i.i.d. per spatial position with
// channel distribution N(data_mean, data_cov), so the optimal noise
// predictor is exact and trajectories need no trained model.

struct SimConfig {
    Eigen::Index channels = 4;
    Eigen::Index height = 16;
    Eigen::Index width = 16;
    long train_steps = 1000;
    long steps = 50;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    Vector data_mean = Vector::Zero(4);
    Matrix data_cov = Matrix::Identity(4, 4);
    Vector ref_mean = Vector::Zero(4);
    Matrix ref_cov = default_reference_covariance(4);
    std::uint64_t seed = 0;
    RegWctConfig regwct{};

    void validate() const;

    // Correlated SPD matrix with unit diagonal: equicorrelation 0.75, whose
    // condition number is (1 + 0.75 (C - 1)) / 0.25.
    static Matrix default_reference_covariance(Eigen::Index channels);
};

struct Schedule {
    std::vector<double> alpha_bar;  // indexed by training timestep
    std::vector<long> timesteps;    // DDIM timesteps, descending
};

Schedule make_schedule(const SimConfig& config);

// Per-position channel vectors drawn from N(mean, cov) via Cholesky.
LatentTensor sample_gaussian(const Vector& mean, const Matrix& cov, Eigen::Index height, Eigen::Index width,
                             Rng& rng);
LatentTensor sample_data(const SimConfig& config, Rng& rng);

// sqrt(1 - ab) * Sigma_t^{-1} (z - sqrt(ab) mu) with Sigma_t = ab Sigma0 + (1 - ab) I.
LatentTensor exact_eps(const LatentTensor& z_t, double alpha_bar, const SimConfig& config);
LatentTensor exact_eps(const LatentTensor& z_t, long t, const SimConfig& config, const Schedule& schedule);

// Deterministic (eta = 0) DDIM update from level alpha_bar to alpha_bar_prev.
LatentTensor ddim_update(const LatentTensor& z_t, const LatentTensor& eps, double alpha_bar, double alpha_bar_prev);

struct CheckpointSpectrum {
    long step = 0;
    SpectrumProfile profile;
};

struct TrajectoryReport {
    LatentTensor final_sample;
    double cov_distance_to_ref = 0.0;
    double cov_distance_to_data = 0.0;
    std::vector<CheckpointSpectrum> spectrum_profiles;
    std::vector<long> gated_steps;
};

// Checkpoint timesteps at 0.8T, 0.6T, 0.4T, 0.2T and 0.
std::vector<long> checkpoint_timesteps(long train_steps);

TrajectoryReport run_trajectory(const SimConfig& config);

// Long-format CSV "step,radius,power", one row per checkpoint and radius.
void report_to_csv(const TrajectoryReport& report, const std::filesystem::path& path);
std::string report_csv(const TrajectoryReport& report);

// {"cov_to_ref": x, "cov_to_data": y, "gated_steps": [...]}
std::string report_summary_json(const TrajectoryReport& report);

// Parses a flat key = value (TOML subset) configuration. Vectors are
// written as [a, b, ...] and matrices as [[...], [...]] in row order.
SimConfig parse_sim_config(const std::string& text);
SimConfig load_sim_config(const std::filesystem::path& path);

}  // namespace sadis
