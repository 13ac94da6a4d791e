// Acceptance gate: one PASS/FAIL line per primary criterion. Exits nonzero
// if any criterion fails. Lines tagged [info] are diagnostics only.

#include <chrono>
#include <cstdio>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <string>

#include "cli_harness.hpp"
#include "oracles.hpp"
#include "sadis/cte.hpp"
#include "sadis/imageops.hpp"
#include "sadis/metrics.hpp"
#include "sadis/regwct.hpp"
#include "sadis/sandbox.hpp"

using namespace sadis;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Verdict()>& check)
{
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = check();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::printf("%s  %-28s %s (%.2fs)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- sandbox sweeps ---------------------------------------------------------

constexpr int kSeeds = 16;

std::vector<TrajectoryReport> run_seeds(const SimConfig& base)
{
    std::vector<std::future<TrajectoryReport>> jobs;
    for (int k = 0; k < kSeeds; ++k) {
        SimConfig cfg = base;
        cfg.seed = static_cast<std::uint64_t>(k);
        cfg.regwct.seed = cfg.seed;
        jobs.push_back(std::async(std::launch::async, [cfg] { return run_trajectory(cfg); }));
    }
    std::vector<TrajectoryReport> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

double mean_cov_to_ref(const std::vector<TrajectoryReport>& reports)
{
    double s = 0.0;
    for (const auto& r : reports) s += r.cov_distance_to_ref;
    return s / static_cast<double>(reports.size());
}

// High-radius half of the bins, averaged over checkpoints and seeds.
double mean_high_gap(const std::vector<TrajectoryReport>& arm, const std::vector<TrajectoryReport>& control)
{
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < arm.size(); ++k) {
        for (std::size_t c = 0; c < arm[k].spectrum_profiles.size(); ++c) {
            const auto& a = arm[k].spectrum_profiles[c].profile;
            const auto& b = control[k].spectrum_profiles[c].profile;
            s += spectrum_gap(a, b, a.radial_bins.size() / 2, a.radial_bins.size());
            ++n;
        }
    }
    return s / static_cast<double>(n);
}

struct Sweep {
    std::vector<TrajectoryReport> control, wct, regwct;
};

Sweep run_sweep(const SimConfig& base)
{
    SimConfig control = base;
    control.regwct.omega = 0.0;
    SimConfig plain = base;
    plain.regwct.lambda = 0.0;
    return {run_seeds(control), run_seeds(plain), run_seeds(base)};
}

// Strongly separated moments: identity data covariance against the
// correlated default reference (condition number 13 at C = 4).
SimConfig sandbox_defaults()
{
    SimConfig cfg;
    cfg.data_cov = Matrix::Identity(4, 4);
    cfg.ref_cov = SimConfig::default_reference_covariance(4);
    return cfg;
}

// ---- CLI determinism matrix ------------------------------------------------

std::vector<std::string> cli_matrix(const fs::path& in, const fs::path& out)
{
    auto p = [](const fs::path& x) { return "'" + x.string() + "'"; };
    return {
        "embed color-extract --color " + p(in / "e1.npy") + " --gray " + p(in / "e2.npy") + " --scale 1.4 --out " + p(out / "color.npy"),
        "embed texture-extract --gray-texture " + p(in / "e1.npy") + " --avg-gray " + p(in / "e2.npy") + " --out " + p(out / "texture.npy"),
        "embed combine --texture " + p(in / "e1.npy") + " --color " + p(in / "e2.npy") + " --precision f64 --out " + p(out / "cond.npy"),
        "image gs --in " + p(in / "img.png") + " --out " + p(out / "gs.png"),
        "image avg --in " + p(in / "img.png") + " --out " + p(out / "avg.ppm"),
        "wct --latent " + p(in / "z.npy") + " --ref " + p(in / "ref.npy") + " --seed 7 --out " + p(out / "blend.npy"),
        "wct --latent " + p(in / "z.npy") + " --ref " + p(in / "ref.npy") + " --seed 7 --t 700 --T 1000 --out " + p(out / "gated.npy"),
        "wct --latent " + p(in / "z.npy") + " --ref " + p(in / "ref.npy") + " --omega 1 --no-noise --out " + p(out / "plain.npy"),
        "metrics chist " + p(in / "img.png") + " " + p(in / "img2.png"),
        "metrics swd " + p(in / "img.png") + " " + p(in / "img2.png") + " --seed 3",
        "metrics covdist " + p(in / "z.npy") + " " + p(in / "ref.npy"),
        "metrics spectrum " + p(in / "z.npy") + " --out " + p(out / "spectrum.csv"),
        "sim --seeds 2 --seed 5 --out-dir " + p(out / "sim"),
    };
}

Verdict cli_determinism()
{
    const fs::path root = cli::fresh_dir("sadis_acceptance_cli");
    const fs::path in = root / "in";
    fs::create_directories(in);
    std::mt19937_64 rng(99);
    write_npy(in / "e1.npy", to_array(Embedding(oracle::random_matrix(rng, 4, 16))));
    write_npy(in / "e2.npy", to_array(Embedding(oracle::random_matrix(rng, 4, 16))));
    write_npy(in / "z.npy", to_array(oracle::random_latent(rng, 4, 8, 8)));
    write_npy(in / "ref.npy", to_array(oracle::random_latent(rng, 4, 8, 8)));
    write_image(in / "img.png", oracle::random_image(rng, 16, 16));
    write_image(in / "img2.png", oracle::random_image(rng, 16, 16));

    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; ++r) {
        const fs::path out = root / ("run" + std::to_string(r));
        fs::create_directories(out);
        const auto cmds = cli_matrix(in, out);
        for (std::size_t i = 0; i < cmds.size(); ++i) {
            const cli::Result res = cli::run(cmds[i], root);
            if (res.code != 0) return {false, "command failed (exit " + std::to_string(res.code) + "): " + cmds[i]};
            runs[r]["stdout/" + std::to_string(i)] = res.out;
        }
        for (auto& [name, bytes] : cli::snapshot(out)) runs[r]["file/" + name] = bytes;
    }
    std::size_t differing = 0;
    for (const auto& [name, bytes] : runs[0]) {
        const auto it = runs[1].find(name);
        if (it == runs[1].end() || it->second != bytes) ++differing;
    }
    const bool pass = differing == 0 && runs[0].size() == runs[1].size();
    return {pass, std::to_string(runs[0].size()) + " outputs compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main()
{
    report("wct-moment-contract", [] {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(1);
        RegWctConfig cfg;
        cfg.lambda = 0.0;
        double worst_white = 0.0, worst_gram = 0.0, worst_mean = 0.0;
        const Eigen::Index channels[] = {2, 4, 8};
        const Eigen::Index sizes[] = {8, 16};
        for (int i = 0; i < 100; ++i) {
            const Eigen::Index c = channels[i % 3];
            const Eigen::Index s = sizes[(i / 3) % 2];
            const LatentTensor z = oracle::random_latent(rng, c, s, s);
            const LatentTensor ref = oracle::random_latent(rng, c, s, s);
            const LatentTensor white = whiten(z, cfg);
            worst_white = std::max(worst_white, (oracle::gram(white) - Matrix::Identity(c, c)).cwiseAbs().maxCoeff());
            const LatentTensor colored = color(white, ref, cfg);
            worst_gram = std::max(worst_gram, oracle::rel_frobenius(oracle::gram(colored), oracle::gram(ref)));
            worst_mean = std::max(worst_mean, (oracle::mean(colored) - oracle::mean(ref)).cwiseAbs().maxCoeff());
        }
        const double secs = seconds_since(t0);
        return Verdict{worst_white <= 1e-6 && worst_gram <= 1e-5 && worst_mean <= 1e-10 && secs < 10.0,
                       fmt("white %.2e <= 1e-6, gram %.2e <= 1e-5, mean %.2e <= 1e-10", worst_white, worst_gram,
                           worst_mean)};
    });

    report("cte-identity-and-damping", [] {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(2);
        std::uniform_int_distribution<int> nt_dist(1, 16), c_dist(1, 64);
        std::uniform_real_distribution<double> gamma_dist(1e-3, 0.1);
        double worst_identity = 0.0, worst_excess = -1.0;
        for (int i = 0; i < 100; ++i) {
            const int nt = nt_dist(rng), c = c_dist(rng);
            const Embedding gray_tx(oracle::random_matrix(rng, nt, c, 5.0));
            const Embedding avg(oracle::random_matrix(rng, nt, c, 5.0));
            CteConfig identity;
            identity.gamma = 0.0;
            identity.beta = 1.0;
            const Matrix same = extract_texture_embedding(gray_tx, avg, identity).tokens();
            worst_identity = std::max(worst_identity, (same - gray_tx.tokens()).norm() / gray_tx.tokens().norm());

            // Damped output is gray_tx times a contraction, so each singular
            // value is bounded by the original one.
            CteConfig damp;
            damp.gamma = gamma_dist(rng);
            const Vector before = oracle::singular_values(gray_tx.tokens());
            const Vector after = oracle::singular_values(extract_texture_embedding(gray_tx, avg, damp).tokens());
            for (Eigen::Index k = 0; k < before.size(); ++k) {
                worst_excess = std::max(worst_excess, (after[k] - before[k]) / std::max(1.0, before[0]));
            }
        }
        const double secs = seconds_since(t0);
        return Verdict{worst_identity <= 1e-8 && worst_excess <= 1e-12 && secs < 5.0,
                       fmt("identity %.2e <= 1e-8, max singular-value growth %.2e <= 0", worst_identity, worst_excess)};
    });

    report("reweight-point-check", [] {
        CteConfig cfg;
        cfg.gamma = 0.003;
        cfg.beta = 1.0;
        const double got = reweight_singular_values(Vector::Constant(1, 100.0), cfg)[0];
        return Verdict{std::abs(got - 74.081822) <= 1e-5, fmt("sigma 100 -> %.9f, want 74.081822 +- 1e-5", got)};
    });

    report("linear-encoder-additivity", [] {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> dim(1, 16);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const int n = dim(rng), c = dim(rng), d = dim(rng);
            const Matrix encoder = oracle::random_matrix(rng, n, d);
            const Matrix color_img = oracle::random_matrix(rng, d, c);
            const Matrix gray_img = oracle::random_matrix(rng, d, c);
            const Matrix target = oracle::random_matrix(rng, d, c);
            const Matrix lhs =
                extract_color_embedding(Embedding(encoder * color_img), Embedding(encoder * gray_img)).tokens() +
                encoder * target;
            const Matrix rhs = encoder * (color_img - gray_img + target);
            worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        }
        return Verdict{worst <= 1e-10, fmt("max |extract+add - encode(composition)| %.2e <= 1e-10", worst)};
    });

    const auto sweep_t0 = std::chrono::steady_clock::now();
    const Sweep sweep = run_sweep(sandbox_defaults());
    const double sweep_secs = seconds_since(sweep_t0);

    report("sandbox-color-alignment", [&] {
        const double control = mean_cov_to_ref(sweep.control);
        const double regwct = mean_cov_to_ref(sweep.regwct);
        return Verdict{regwct <= 0.5 * control && sweep_secs < 120.0,
                       fmt("regwct/control cov_to_ref %.4f / %.4f = %.4f, want <= 0.5; sweep %.2fs < 120s", regwct,
                           control, regwct / control, sweep_secs)};
    });

    report("sandbox-frequency-preservation", [&] {
        const double with_noise = mean_high_gap(sweep.regwct, sweep.control);
        const double without = mean_high_gap(sweep.wct, sweep.control);
        return Verdict{with_noise < without,
                       fmt("high-radius gap to control: lambda=0.01 %.6f vs lambda=0 %.6f, want strictly smaller",
                           with_noise, without)};
    });

    report("monotone-omega", [] {
        std::string detail = "cov_to_ref";
        double prev = std::numeric_limits<double>::infinity();
        bool pass = true;
        for (double omega : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            SimConfig cfg = sandbox_defaults();
            cfg.regwct.omega = omega;
            const double v = mean_cov_to_ref(run_seeds(cfg));
            pass = pass && v <= prev;
            prev = v;
            detail += fmt(" %.4f", v);
        }
        return Verdict{pass, detail + " over omega 0..1, want non-increasing"};
    });

    report("metric-correctness", [] {
        std::mt19937_64 rng(4);
        std::uniform_int_distribution<int> side(4, 12);
        double worst_chist = 0.0, worst_swd = 0.0, worst_parseval = 0.0;
        for (int i = 0; i < 20; ++i) {
            const auto h = static_cast<std::size_t>(side(rng)), w = static_cast<std::size_t>(side(rng));
            const RgbImage a = oracle::random_image(rng, h, w);
            const RgbImage b = oracle::random_image(rng, h, w);
            for (std::size_t bins : {16u, 256u}) {
                worst_chist = std::max(worst_chist, std::abs(chist_distance(a, b, bins) - oracle::chist(a, b, bins)));
            }
            const auto dirs = swd_directions(16, static_cast<std::uint64_t>(i));
            worst_swd = std::max(worst_swd, std::abs(swd_color_distance(a, b, dirs, 1) - oracle::swd_single_scale(a, b, dirs)));
            const double two_scale = (oracle::swd_single_scale(a, b, dirs) +
                                      oracle::swd_single_scale(downsample2x(a), downsample2x(b), dirs)) / 2.0;
            worst_swd = std::max(worst_swd, std::abs(swd_color_distance(a, b, dirs, 2) - two_scale));

            const Matrix z = oracle::random_matrix(rng, side(rng), side(rng), 3.0);
            const double expect = static_cast<double>(z.size()) * z.squaredNorm();
            worst_parseval = std::max(worst_parseval, std::abs(radial_spectrum(z).total_power() - expect) / expect);
        }
        return Verdict{worst_chist <= 1e-10 && worst_swd <= 1e-10 && worst_parseval <= 1e-6,
                       fmt("chist %.2e, swd %.2e <= 1e-10; Parseval rel %.2e <= 1e-6", worst_chist, worst_swd,
                           worst_parseval)};
    });

    report("cli-determinism", cli_determinism);

    // Diagnostics: the same sweep under a ten times shallower noise schedule,
    // where the gate window sits at a much higher alpha_bar.
    {
        SimConfig shallow = sandbox_defaults();
        shallow.beta_max = 0.002;
        const Sweep s = run_sweep(shallow);
        std::printf("[info] beta_max=0.002: regwct/control cov_to_ref %.4f; high-radius gap lambda=0.01 %.6f vs lambda=0 %.6f\n",
                    mean_cov_to_ref(s.regwct) / mean_cov_to_ref(s.control), mean_high_gap(s.regwct, s.control),
                    mean_high_gap(s.wct, s.control));
    }

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
