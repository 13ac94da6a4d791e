// sadis: command-line front end for color/texture embedding extraction,
// regularized whitening-coloring on latents, color metrics and the Gaussian
// diffusion sandbox.
//
// Exit codes: 0 success, 2 validation or domain error, 3 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sadis/cte.hpp"
#include "sadis/error.hpp"
#include "sadis/format.hpp"
#include "sadis/imageops.hpp"
#include "sadis/metrics.hpp"
#include "sadis/regwct.hpp"
#include "sadis/sandbox.hpp"
#include "sadis/tensorio.hpp"

namespace fs = std::filesystem;
using namespace sadis;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct Output {
    std::string path;
    std::string precision = "f32";

    Precision mode() const { return precision == "f64" ? Precision::f64 : Precision::f32; }
};

void add_output(CLI::App* cmd, Output& out)
{
    cmd->add_option("--out,-o", out.path, "Output path")->required();
    cmd->add_option("--precision", out.precision, "NPY storage precision")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();
}

// Seed from --seed, else $SADIS_SEED, else 0 with a notice on stderr.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag)
{
    if (flag) return *flag;
    if (const char* env = std::getenv("SADIS_SEED"); env && *env) {
        try {
            return std::stoull(env);
        } catch (const std::logic_error&) {
            throw ValidationError(std::string("SADIS_SEED is not an unsigned integer: ") + env);
        }
    }
    std::cerr << "notice: no --seed given and SADIS_SEED unset; using seed 0\n";
    return 0;
}

std::string shape_json(const Matrix& m)
{
    return "[" + std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + "]";
}

void print_embedding_summary(const std::string& op, const Matrix& m)
{
    std::cout << "{\"op\": \"" << op << "\", \"shape\": " << shape_json(m)
              << ", \"frobenius\": " << format_number(m.norm()) << "}\n";
}

void print_metric(const std::string& key, double value, bool pretty)
{
    if (pretty) {
        std::cout << key << "  " << format_number(value) << "\n";
    } else {
        std::cout << "{\"" << key << "\": " << format_number(value) << "}\n";
    }
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

struct ArmResult {
    std::string name;
    std::vector<TrajectoryReport> reports;

    double mean_cov_to_ref() const
    {
        double s = 0.0;
        for (const auto& r : reports) s += r.cov_distance_to_ref;
        return s / static_cast<double>(reports.size());
    }
    double mean_cov_to_data() const
    {
        double s = 0.0;
        for (const auto& r : reports) s += r.cov_distance_to_data;
        return s / static_cast<double>(reports.size());
    }
};

ArmResult run_arm(const std::string& name, const SimConfig& base, std::uint64_t first_seed, int seeds)
{
    std::vector<std::future<TrajectoryReport>> jobs;
    for (int k = 0; k < seeds; ++k) {
        SimConfig cfg = base;
        cfg.seed = first_seed + static_cast<std::uint64_t>(k);
        cfg.regwct.seed = cfg.seed;
        jobs.push_back(std::async(std::launch::async, [cfg] { return run_trajectory(cfg); }));
    }
    ArmResult arm{name, {}};
    for (auto& job : jobs) arm.reports.push_back(job.get());
    return arm;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Color/texture disentanglement toolkit: embedding extraction (CTE), regularized "
                 "whitening-coloring (RegWCT), color metrics and a Gaussian diffusion sandbox"};
    app.require_subcommand(1);
    bool pretty = false;
    app.add_flag("--pretty", pretty, "Human-readable output instead of JSON lines");

    // ---- embed -------------------------------------------------------------
    auto* embed = app.add_subcommand("embed", "Embedding-space color/texture extraction");
    embed->require_subcommand(1);

    std::string color_in, gray_in;
    double color_scale = 1.0;
    Output color_out;
    auto* color_cmd = embed->add_subcommand("color-extract", "Emb_clr = scale * (Emb(I_clr) - Emb(GS(I_clr)))");
    color_cmd->add_option("--color", color_in, "Embedding of the color reference image (n_t, c) NPY")->required();
    color_cmd->add_option("--gray", gray_in, "Embedding of its grayscale version (n_t, c) NPY")->required();
    color_cmd->add_option("--scale", color_scale, "Color embedding scale (0 .. 1.8 ablation range)")->capture_default_str();
    add_output(color_cmd, color_out);

    std::string gray_tx_in, avg_gray_in;
    CteConfig cte;
    Output texture_out;
    auto* texture_cmd = embed->add_subcommand(
        "texture-extract", "Emb_tx: concat(Emb(GS(I_tx)), Emb(Avg(GS(I_tx)))), SVD reweight, first n_t rows");
    texture_cmd->add_option("--gray-texture", gray_tx_in, "Embedding of the grayscale texture image (n_t, c) NPY")
        ->required();
    texture_cmd->add_option("--avg-gray", avg_gray_in, "Embedding of the averaged gray image (n_t, c) NPY")->required();
    texture_cmd->add_option("--gamma", cte.gamma, "γ: singular-value decay, sigma -> beta*exp(-gamma*sigma)*sigma")
        ->capture_default_str();
    texture_cmd->add_option("--beta", cte.beta, "β: singular-value gain")->capture_default_str();
    add_output(texture_cmd, texture_out);

    std::string combine_tx, combine_clr;
    Output combine_out;
    auto* combine_cmd = embed->add_subcommand("combine", "Emb_tx ⊕ Emb_clr as token-axis concatenation");
    combine_cmd->add_option("--texture", combine_tx, "Texture embedding (n_t, c) NPY")->required();
    combine_cmd->add_option("--color", combine_clr, "Color embedding (n_t, c) NPY")->required();
    add_output(combine_cmd, combine_out);

    // ---- image -------------------------------------------------------------
    auto* image = app.add_subcommand("image", "Image-domain primitives (PNG / PPM)");
    image->require_subcommand(1);
    std::string image_in, image_out;
    auto* gs_cmd = image->add_subcommand("gs", "GS: BT.601 grayscale, replicated to RGB");
    auto* avg_cmd = image->add_subcommand("avg", "Avg(GS(I)): uniform image at the mean gray level");
    for (auto* cmd : {gs_cmd, avg_cmd}) {
        cmd->add_option("--in,-i", image_in, "Input image (.png or .ppm)")->required();
        cmd->add_option("--out,-o", image_out, "Output image (.png or .ppm)")->required();
    }

    // ---- wct ---------------------------------------------------------------
    std::string latent_in, ref_in;
    RegWctConfig wct_cfg;
    std::optional<std::uint64_t> wct_seed;
    bool no_noise = false;
    std::optional<long> step_t, step_total;
    Output wct_out;
    auto* wct_cmd = app.add_subcommand(
        "wct", "z = (1-ω) z' + ω RegWCT(z'), RegWCT(z') = WCT(z', z^c) + λ δ; gated to t/T in [T_end, T_start]");
    wct_cmd->add_option("--latent", latent_in, "Latent z' (C, H, W) NPY")->required();
    wct_cmd->add_option("--ref", ref_in, "Color reference latent z^c (C, H', W') NPY")->required();
    wct_cmd->add_option("--omega", wct_cfg.omega, "ω: blend weight in [0, 1]")->capture_default_str();
    wct_cmd->add_option("--lambda", wct_cfg.lambda, "λ: noise regularization scale")->capture_default_str();
    wct_cmd->add_option("--t-start", wct_cfg.t_start_frac, "T_start as a fraction of T")->capture_default_str();
    wct_cmd->add_option("--t-end", wct_cfg.t_end_frac, "T_end as a fraction of T")->capture_default_str();
    wct_cmd->add_option("--eig-floor", wct_cfg.eig_floor, "Relative eigenvalue floor for whitening")
        ->capture_default_str();
    wct_cmd->add_option("--seed", wct_seed, "Seed for δ (falls back to $SADIS_SEED, then 0)");
    wct_cmd->add_flag("--no-noise", no_noise, "Force λ = 0 (plain WCT)");
    auto* t_opt = wct_cmd->add_option("--t", step_t, "Current timestep t (enables gating)");
    auto* total_opt = wct_cmd->add_option("--T", step_total, "Total timesteps T (enables gating)");
    t_opt->needs(total_opt);
    total_opt->needs(t_opt);
    add_output(wct_cmd, wct_out);

    // ---- metrics -----------------------------------------------------------
    auto* metrics = app.add_subcommand("metrics", "Color and frequency metrics");
    metrics->require_subcommand(1);
    std::string metric_a, metric_b;
    std::size_t bins = 256;
    auto* chist_cmd = metrics->add_subcommand("chist", "C-Hist: summed per-channel Bhattacharyya distance");
    chist_cmd->add_option("--bins", bins, "Histogram bins per channel")->capture_default_str();
    SwdOptions swd;
    std::optional<std::uint64_t> swd_seed;
    auto* swd_cmd = metrics->add_subcommand("swd", "Sliced Wasserstein color distance (RGB variant, multi-scale)");
    swd_cmd->add_option("--projections", swd.projections, "Random projection directions")->capture_default_str();
    swd_cmd->add_option("--scales", swd.scales, "Pyramid scales")->capture_default_str();
    swd_cmd->add_option("--seed", swd_seed, "Direction seed (falls back to $SADIS_SEED, then 0)");
    for (auto* cmd : {chist_cmd, swd_cmd}) {
        cmd->add_option("a", metric_a, "First image")->required();
        cmd->add_option("b", metric_b, "Second image")->required();
    }
    auto* cov_cmd = metrics->add_subcommand("covdist", "Relative Frobenius distance of channel covariances");
    cov_cmd->add_option("a", metric_a, "Latent (C, H, W) NPY")->required();
    cov_cmd->add_option("b", metric_b, "Reference latent (C, H, W) NPY")->required();
    std::string spectrum_in, spectrum_out;
    auto* spectrum_cmd = metrics->add_subcommand("spectrum", "Radial power spectrum as CSV radius,power");
    spectrum_cmd->add_option("input", spectrum_in, "(H, W) array or (C, H, W) latent NPY")->required();
    spectrum_cmd->add_option("--out,-o", spectrum_out, "CSV output path (stdout when omitted)");

    // ---- sim ---------------------------------------------------------------
    std::string sim_config, sim_out_dir;
    int sim_seeds = 16;
    std::optional<std::uint64_t> sim_seed;
    auto* sim_cmd = app.add_subcommand(
        "sim", "Gaussian diffusion sandbox: control (ω=0), wct (λ=0) and regwct arms over N seeds");
    sim_cmd->add_option("--config", sim_config, "SimConfig file (key = value / TOML subset)");
    sim_cmd->add_option("--out-dir", sim_out_dir, "Directory for per-arm CSV and summary JSON")->required();
    sim_cmd->add_option("--seeds", sim_seeds, "Trajectories per arm")->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--seed", sim_seed, "First seed (falls back to config, $SADIS_SEED, then 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (color_cmd->parsed()) {
            CteConfig cfg;
            cfg.color_scale = color_scale;
            const Embedding out = extract_color_embedding(read_embedding(color_in), read_embedding(gray_in), cfg);
            write_npy(color_out.path, to_array(out), color_out.mode());
            print_embedding_summary("color-extract", out.tokens());
        } else if (texture_cmd->parsed()) {
            const Embedding out = extract_texture_embedding(read_embedding(gray_tx_in), read_embedding(avg_gray_in), cte);
            write_npy(texture_out.path, to_array(out), texture_out.mode());
            print_embedding_summary("texture-extract", out.tokens());
        } else if (combine_cmd->parsed()) {
            const StyleCondition cond = combine(read_embedding(combine_tx), read_embedding(combine_clr));
            write_npy(combine_out.path, to_array(Embedding(cond.tokens())), combine_out.mode());
            print_embedding_summary("combine", cond.tokens());
        } else if (gs_cmd->parsed()) {
            write_image(image_out, gray_to_rgb(grayscale(read_image(image_in))));
        } else if (avg_cmd->parsed()) {
            write_image(image_out, gray_to_rgb(average_gray(grayscale(read_image(image_in)))));
        } else if (wct_cmd->parsed()) {
            if (no_noise) wct_cfg.lambda = 0.0;
            wct_cfg.seed = resolve_seed(wct_seed);
            wct_cfg.validate();
            const LatentTensor z = read_latent(latent_in);
            const LatentTensor ref = read_latent(ref_in);
            Rng rng(wct_cfg.seed);
            const LatentTensor out = step_t ? blend_step(z, ref, *step_t, *step_total, wct_cfg, rng)
                                            : blend(z, ref, wct_cfg, rng);
            write_npy(wct_out.path, to_array(out), wct_out.mode());
            const bool applied = !step_t || gate_fires(*step_t, *step_total, wct_cfg);
            std::cout << "{\"op\": \"wct\", \"applied\": " << (applied ? "true" : "false")
                      << ", \"cov_to_ref\": " << format_number(covariance_distance(out, ref)) << "}\n";
        } else if (chist_cmd->parsed()) {
            print_metric("chist", chist_distance(read_image(metric_a), read_image(metric_b), bins), pretty);
        } else if (swd_cmd->parsed()) {
            swd.seed = resolve_seed(swd_seed);
            print_metric("swd", swd_color_distance(read_image(metric_a), read_image(metric_b), swd), pretty);
        } else if (cov_cmd->parsed()) {
            print_metric("covdist", covariance_distance(read_latent(metric_a), read_latent(metric_b)), pretty);
        } else if (spectrum_cmd->parsed()) {
            const NdArray arr = read_npy(spectrum_in);
            SpectrumProfile profile;
            if (arr.rank() == 2) {
                Matrix m(static_cast<Eigen::Index>(arr.shape[0]), static_cast<Eigen::Index>(arr.shape[1]));
                for (Eigen::Index r = 0; r < m.rows(); ++r)
                    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = arr.data[static_cast<std::size_t>(r * m.cols() + c)];
                profile = radial_spectrum(m);
            } else {
                profile = radial_spectrum(to_latent(arr));
            }
            std::string csv = "radius,power\n";
            for (std::size_t r = 0; r < profile.radial_bins.size(); ++r) {
                csv += std::to_string(r) + "," + format_number(profile.radial_bins[r]) + "\n";
            }
            if (spectrum_out.empty()) {
                std::cout << csv;
            } else {
                write_text(spectrum_out, csv);
            }
        } else if (sim_cmd->parsed()) {
            SimConfig base = sim_config.empty() ? parse_sim_config("") : load_sim_config(sim_config);
            // An explicit config file carries its own seed (default 0).
            const std::uint64_t first_seed = sim_seed ? *sim_seed
                                             : !sim_config.empty() ? base.seed
                                                                   : resolve_seed(std::nullopt);

            SimConfig control = base;
            control.regwct.omega = 0.0;
            SimConfig plain = base;
            plain.regwct.lambda = 0.0;
            const std::vector<std::pair<std::string, SimConfig>> arms = {
                {"control", control}, {"wct", plain}, {"regwct", base}};

            fs::create_directories(sim_out_dir);
            std::vector<ArmResult> results;
            for (const auto& [name, cfg] : arms) {
                results.push_back(run_arm(name, cfg, first_seed, sim_seeds));
                const fs::path dir = fs::path(sim_out_dir) / name;
                fs::create_directories(dir);
                std::string summary = "{\"arm\": \"" + name + "\", \"seeds\": [";
                for (std::size_t k = 0; k < results.back().reports.size(); ++k) {
                    const auto& report = results.back().reports[k];
                    const std::string stem = "seed_" + std::to_string(first_seed + k);
                    report_to_csv(report, dir / (stem + ".csv"));
                    write_text(dir / (stem + ".json"), report_summary_json(report) + "\n");
                    summary += (k ? ", " : "") + report_summary_json(report);
                }
                summary += "], \"mean_cov_to_ref\": " + format_number(results.back().mean_cov_to_ref()) +
                           ", \"mean_cov_to_data\": " + format_number(results.back().mean_cov_to_data()) + "}\n";
                write_text(fs::path(sim_out_dir) / (name + "_summary.json"), summary);
            }

            const double control_ref = results[0].mean_cov_to_ref();
            const double regwct_ref = results[2].mean_cov_to_ref();
            const double ratio = regwct_ref / control_ref;
            std::cout << "{\"control_cov_to_ref\": " << format_number(control_ref)
                      << ", \"wct_cov_to_ref\": " << format_number(results[1].mean_cov_to_ref())
                      << ", \"regwct_cov_to_ref\": " << format_number(regwct_ref)
                      << ", \"ratio\": " << format_number(ratio) << "}\n";
            std::cout << "verdict: regwct/control cov_to_ref ratio " << format_number(ratio)
                      << (ratio <= 0.5 ? " <= 0.5: color alignment reduced by >= 50%"
                                       : " > 0.5: color alignment reduced by < 50%")
                      << "\n";
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
