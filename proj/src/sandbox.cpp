#include "sadis/sandbox.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>

#include "sadis/error.hpp"
#include "sadis/format.hpp"

namespace sadis {

namespace {

// Independent generator streams per trajectory.
enum class Stream : std::uint64_t { initial_noise = 1, reference_sample = 2, reference_noise = 3, regwct_noise = 4 };

Rng stream_rng(std::uint64_t seed, Stream stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

bool is_spd(const Matrix& m)
{
    if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
    if (!m.isApprox(m.transpose(), 1e-12)) return false;
    Eigen::LLT<Matrix> llt(m);
    return llt.info() == Eigen::Success;
}

}  // namespace

Matrix SimConfig::default_reference_covariance(Eigen::Index channels)
{
    Matrix cov = Matrix::Constant(channels, channels, 0.75);
    cov.diagonal().setOnes();
    return cov;
}

void SimConfig::validate() const
{
    if (channels < 1 || height < 1 || width < 1 || height * width < 2) {
        throw ValidationError("sim latent needs C >= 1 and H*W >= 2");
    }
    if (train_steps < 1 || steps < 1 || steps > train_steps) {
        throw ValidationError("sim needs 1 <= steps <= train_steps");
    }
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
        throw ValidationError("sim needs 0 < beta_min <= beta_max < 1");
    }
    if (data_mean.size() != channels || ref_mean.size() != channels) {
        throw ValidationError("sim mean vectors must have one entry per channel");
    }
    if (data_cov.rows() != channels || ref_cov.rows() != channels) {
        throw ValidationError("sim covariance matrices must be C x C");
    }
    if (!is_spd(data_cov)) throw DomainError("data_cov is not symmetric positive definite");
    if (!is_spd(ref_cov)) throw DomainError("ref_cov is not symmetric positive definite");
    regwct.validate();
}

Schedule make_schedule(const SimConfig& config)
{
    config.validate();
    Schedule s;
    const long n = config.train_steps;
    s.alpha_bar.resize(static_cast<std::size_t>(n));
    double prod = 1.0;
    for (long i = 0; i < n; ++i) {
        const double beta =
            n == 1 ? config.beta_min
                   : config.beta_min + (config.beta_max - config.beta_min) * static_cast<double>(i) / static_cast<double>(n - 1);
        prod *= 1.0 - beta;
        s.alpha_bar[static_cast<std::size_t>(i)] = prod;
    }
    const long stride = n / config.steps;
    for (long k = config.steps - 1; k >= 0; --k) s.timesteps.push_back(k * stride);
    return s;
}

LatentTensor sample_gaussian(const Vector& mean, const Matrix& cov, Eigen::Index height, Eigen::Index width, Rng& rng)
{
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        throw DimensionError("sample_gaussian: mean and covariance sizes differ");
    }
    Eigen::LLT<Matrix> llt(cov);
    if (!cov.allFinite() || llt.info() != Eigen::Success || !cov.isApprox(cov.transpose(), 1e-12)) {
        throw DomainError("covariance is not symmetric positive definite; Cholesky failed");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix white(mean.size(), height * width);
    for (Eigen::Index c = 0; c < white.rows(); ++c) {
        for (Eigen::Index p = 0; p < white.cols(); ++p) white(c, p) = normal(rng);
    }
    Matrix flat = llt.matrixL() * white;
    flat.colwise() += mean;
    return LatentTensor(std::move(flat), height, width);
}

LatentTensor sample_data(const SimConfig& config, Rng& rng)
{
    return sample_gaussian(config.data_mean, config.data_cov, config.height, config.width, rng);
}

LatentTensor exact_eps(const LatentTensor& z_t, double alpha_bar, const SimConfig& config)
{
    if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
        throw DomainError("alpha_bar must lie in (0, 1]");
    }
    if (z_t.channels() != config.data_cov.rows()) {
        throw DimensionError("exact_eps: latent channels do not match data covariance");
    }
    const Eigen::Index c = z_t.channels();
    const Matrix sigma_t = alpha_bar * config.data_cov + (1.0 - alpha_bar) * Matrix::Identity(c, c);
    Eigen::LLT<Matrix> llt(sigma_t);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("noised data covariance is singular");
    }
    const Matrix centered = z_t.flat().colwise() - std::sqrt(alpha_bar) * config.data_mean;
    return LatentTensor(std::sqrt(1.0 - alpha_bar) * llt.solve(centered), z_t.height(), z_t.width());
}

LatentTensor exact_eps(const LatentTensor& z_t, long t, const SimConfig& config, const Schedule& schedule)
{
    if (t < 0 || t >= static_cast<long>(schedule.alpha_bar.size())) {
        throw DomainError("timestep " + std::to_string(t) + " outside the schedule");
    }
    return exact_eps(z_t, schedule.alpha_bar[static_cast<std::size_t>(t)], config);
}

LatentTensor ddim_update(const LatentTensor& z_t, const LatentTensor& eps, double alpha_bar, double alpha_bar_prev)
{
    const Matrix x0 = (z_t.flat() - std::sqrt(1.0 - alpha_bar) * eps.flat()) / std::sqrt(alpha_bar);
    Matrix next = std::sqrt(alpha_bar_prev) * x0 + std::sqrt(1.0 - alpha_bar_prev) * eps.flat();
    return LatentTensor(std::move(next), z_t.height(), z_t.width());
}

std::vector<long> checkpoint_timesteps(long train_steps)
{
    std::vector<long> out;
    for (long k = 4; k >= 0; --k) out.push_back(k * train_steps / 5);
    return out;
}

TrajectoryReport run_trajectory(const SimConfig& config)
{
    const Schedule schedule = make_schedule(config);
    const long total = config.train_steps;

    Rng init_rng = stream_rng(config.seed, Stream::initial_noise);
    Rng ref_rng = stream_rng(config.seed, Stream::reference_sample);
    Rng ref_noise_rng = stream_rng(config.seed, Stream::reference_noise);
    Rng wct_rng = stream_rng(config.seed, Stream::regwct_noise);

    const Eigen::Index c = config.channels;
    LatentTensor z = sample_gaussian(Vector::Zero(c), Matrix::Identity(c, c), config.height, config.width, init_rng);
    const LatentTensor ref_clean = sample_gaussian(config.ref_mean, config.ref_cov, config.height, config.width, ref_rng);
    const LatentTensor ref_noise =
        sample_gaussian(Vector::Zero(c), Matrix::Identity(c, c), config.height, config.width, ref_noise_rng);

    const std::vector<long> checkpoints = checkpoint_timesteps(total);
    auto next_checkpoint = checkpoints.begin();

    TrajectoryReport report;
    for (std::size_t i = 0; i < schedule.timesteps.size(); ++i) {
        const long t = schedule.timesteps[i];
        const double ab = schedule.alpha_bar[static_cast<std::size_t>(t)];
        const double ab_prev =
            i + 1 < schedule.timesteps.size() ? schedule.alpha_bar[static_cast<std::size_t>(schedule.timesteps[i + 1])] : 1.0;

        const LatentTensor eps = exact_eps(z, ab, config);
        z = ddim_update(z, eps, ab, ab_prev);

        if (gate_fires(t, total, config.regwct)) {
            // Reference latent forward-diffused to the noise level of z.
            const Matrix ref_t = std::sqrt(ab_prev) * ref_clean.flat() + std::sqrt(1.0 - ab_prev) * ref_noise.flat();
            z = blend_step(z, LatentTensor(ref_t, config.height, config.width), t, total, config.regwct, wct_rng);
            report.gated_steps.push_back(t);
        }

        while (next_checkpoint != checkpoints.end() && t <= *next_checkpoint) {
            report.spectrum_profiles.push_back({*next_checkpoint, radial_spectrum(z)});
            ++next_checkpoint;
        }
    }

    report.cov_distance_to_ref = covariance_distance(z, config.ref_cov);
    report.cov_distance_to_data = covariance_distance(z, config.data_cov);
    report.final_sample = std::move(z);
    return report;
}

std::string report_csv(const TrajectoryReport& report)
{
    std::string out = "step,radius,power\n";
    for (const auto& cp : report.spectrum_profiles) {
        for (std::size_t r = 0; r < cp.profile.radial_bins.size(); ++r) {
            out += std::to_string(cp.step) + "," + std::to_string(r) + "," + format_number(cp.profile.radial_bins[r]) + "\n";
        }
    }
    return out;
}

void report_to_csv(const TrajectoryReport& report, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << report_csv(report);
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

std::string report_summary_json(const TrajectoryReport& report)
{
    return "{\"cov_to_ref\": " + format_number(report.cov_distance_to_ref) +
           ", \"cov_to_data\": " + format_number(report.cov_distance_to_data) +
           ", \"gated_steps\": " + format_list(report.gated_steps) + "}";
}

namespace {

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& text)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::logic_error&) {
        throw ValidationError("config key '" + key + "' expects a number, got '" + text + "'");
    }
    if (trim(text.substr(used)).size()) {
        throw ValidationError("config key '" + key + "' expects a number, got '" + text + "'");
    }
    return v;
}

long parse_integer(const std::string& key, const std::string& text)
{
    const double v = parse_real(key, text);
    if (v != std::floor(v)) {
        throw ValidationError("config key '" + key + "' expects an integer, got '" + text + "'");
    }
    return static_cast<long>(v);
}

std::vector<double> parse_list(const std::string& key, std::string text)
{
    text = trim(text);
    if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
        throw ValidationError("config key '" + key + "' expects a [..] list");
    }
    std::vector<double> out;
    std::stringstream body(text.substr(1, text.size() - 2));
    std::string item;
    while (std::getline(body, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_real(key, item));
    }
    return out;
}

Matrix parse_matrix(const std::string& key, std::string text)
{
    text = trim(text);
    if (text.size() < 4 || text.front() != '[' || text.back() != ']') {
        throw ValidationError("config key '" + key + "' expects a [[..], ..] matrix");
    }
    std::vector<std::vector<double>> rows;
    std::string inner = text.substr(1, text.size() - 2);
    std::size_t pos = 0;
    while ((pos = inner.find('[', pos)) != std::string::npos) {
        const auto close = inner.find(']', pos);
        if (close == std::string::npos) {
            throw ValidationError("config key '" + key + "' has an unterminated matrix row");
        }
        rows.push_back(parse_list(key, inner.substr(pos, close - pos + 1)));
        pos = close + 1;
    }
    if (rows.empty()) {
        throw ValidationError("config key '" + key + "' has no matrix rows");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) {
            throw ValidationError("config key '" + key + "' has ragged matrix rows");
        }
        for (std::size_t k = 0; k < rows[r].size(); ++k) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
    }
    return m;
}

Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

SimConfig parse_sim_config(const std::string& text)
{
    SimConfig cfg;
    bool data_mean_set = false;
    bool data_cov_set = false;
    bool ref_mean_set = false;
    bool ref_cov_set = false;

    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || (line.front() == '[' && line.find('=') == std::string::npos)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) + " is not key = value");
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (const auto dot = key.rfind('.'); dot != std::string::npos) key = key.substr(dot + 1);

        if (key == "channels") cfg.channels = parse_integer(key, value);
        else if (key == "height") cfg.height = parse_integer(key, value);
        else if (key == "width") cfg.width = parse_integer(key, value);
        else if (key == "train_steps" || key == "T_train") cfg.train_steps = parse_integer(key, value);
        else if (key == "steps") cfg.steps = parse_integer(key, value);
        else if (key == "beta_min") cfg.beta_min = parse_real(key, value);
        else if (key == "beta_max") cfg.beta_max = parse_real(key, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_integer(key, value));
        else if (key == "data_mean") { cfg.data_mean = to_vector(parse_list(key, value)); data_mean_set = true; }
        else if (key == "ref_mean") { cfg.ref_mean = to_vector(parse_list(key, value)); ref_mean_set = true; }
        else if (key == "data_cov") { cfg.data_cov = parse_matrix(key, value); data_cov_set = true; }
        else if (key == "ref_cov") { cfg.ref_cov = parse_matrix(key, value); ref_cov_set = true; }
        else if (key == "lambda") cfg.regwct.lambda = parse_real(key, value);
        else if (key == "omega") cfg.regwct.omega = parse_real(key, value);
        else if (key == "t_start" || key == "t_start_frac") cfg.regwct.t_start_frac = parse_real(key, value);
        else if (key == "t_end" || key == "t_end_frac") cfg.regwct.t_end_frac = parse_real(key, value);
        else if (key == "eig_floor") cfg.regwct.eig_floor = parse_real(key, value);
        else throw ValidationError("unknown config key '" + key + "' on line " + std::to_string(lineno));
    }

    const Eigen::Index c = cfg.channels;
    if (!data_mean_set) cfg.data_mean = Vector::Zero(c);
    if (!ref_mean_set) cfg.ref_mean = Vector::Zero(c);
    if (!data_cov_set) cfg.data_cov = Matrix::Identity(c, c);
    if (!ref_cov_set) cfg.ref_cov = SimConfig::default_reference_covariance(c);
    cfg.regwct.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

SimConfig load_sim_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_sim_config(buf.str());
}

}  // namespace sadis
