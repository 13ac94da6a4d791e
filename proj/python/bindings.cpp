#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sadis/cte.hpp"
#include "sadis/error.hpp"
#include "sadis/imageops.hpp"
#include "sadis/metrics.hpp"
#include "sadis/regwct.hpp"
#include "sadis/sandbox.hpp"
#include "sadis/tensorio.hpp"

namespace py = pybind11;
using namespace sadis;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

NdArray to_nd(const Array& a)
{
    std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
    return NdArray(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_py(const NdArray& a)
{
    Array out(std::vector<py::ssize_t>(a.shape.begin(), a.shape.end()));
    std::copy(a.data.begin(), a.data.end(), out.mutable_data());
    return out;
}

Embedding embedding(const Array& a) { return to_embedding(to_nd(a)); }
LatentTensor latent(const Array& a) { return to_latent(to_nd(a)); }

RgbImage image(const Array& a)
{
    if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionError("image must be shaped (H, W, 3)");
    return RgbImage(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                    std::vector<double>(a.data(), a.data() + a.size()));
}

Array image_to_py(const RgbImage& img)
{
    Array out({static_cast<py::ssize_t>(img.height()), static_cast<py::ssize_t>(img.width()), py::ssize_t{3}});
    std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
    return out;
}

Array gray_to_py(const GrayImage& img)
{
    Array out({static_cast<py::ssize_t>(img.height()), static_cast<py::ssize_t>(img.width())});
    std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
    return out;
}

RegWctConfig wct_config(double omega, double lambda, double t_start, double t_end, std::uint64_t seed, double eig_floor)
{
    RegWctConfig cfg;
    cfg.omega = omega;
    cfg.lambda = lambda;
    cfg.t_start_frac = t_start;
    cfg.t_end_frac = t_end;
    cfg.seed = seed;
    cfg.eig_floor = eig_floor;
    cfg.validate();
    return cfg;
}

CteConfig cte_config(double gamma, double beta, double color_scale)
{
    CteConfig cfg{gamma, beta, color_scale};
    cfg.validate();
    return cfg;
}

py::dict spectrum_dict(const SpectrumProfile& p)
{
    py::dict d;
    d["radial_bins"] = p.radial_bins;
    d["bin_counts"] = p.bin_counts;
    d["max_radius"] = p.max_radius;
    return d;
}

}  // namespace

PYBIND11_MODULE(_sadis, m)
{
    m.doc() = "Color/texture extraction, regularized whitening-coloring and color metrics";

    static py::exception<Error> base(m, "SadisError", PyExc_ValueError);
    static py::exception<IoError> io(m, "SadisIoError", PyExc_OSError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const IoError& e) {
            io(e.what());
        } catch (const Error& e) {
            base(e.what());
        }
    });

    // Tensor I/O
    m.def("read_npy", [](const std::filesystem::path& p) { return to_py(read_npy(p)); }, py::arg("path"));
    m.def(
        "write_npy",
        [](const std::filesystem::path& p, const Array& a, const std::string& precision) {
            if (precision != "f32" && precision != "f64") throw ValidationError("precision must be f32 or f64");
            write_npy(p, to_nd(a), precision == "f64" ? Precision::f64 : Precision::f32);
        },
        py::arg("path"), py::arg("array"), py::arg("precision") = "f32");
    m.def("read_image", [](const std::filesystem::path& p) { return image_to_py(read_image(p)); }, py::arg("path"));
    m.def(
        "write_image", [](const std::filesystem::path& p, const Array& a) { write_image(p, image(a)); },
        py::arg("path"), py::arg("image"));

    // Image ops
    m.def("grayscale", [](const Array& a) { return gray_to_py(grayscale(image(a))); }, py::arg("image"));
    m.def(
        "average_gray", [](const Array& a) { return gray_to_py(average_gray(grayscale(image(a)))); },
        py::arg("image"));

    // CTE
    m.def(
        "extract_color_embedding",
        [](const Array& color, const Array& gray, double scale) {
            return to_py(to_array(extract_color_embedding(embedding(color), embedding(gray), cte_config(0.003, 1.0, scale))));
        },
        py::arg("emb_color"), py::arg("emb_gray"), py::arg("color_scale") = 1.0);
    m.def(
        "extract_texture_embedding",
        [](const Array& gray_tx, const Array& avg, double gamma, double beta) {
            return to_py(to_array(extract_texture_embedding(embedding(gray_tx), embedding(avg), cte_config(gamma, beta, 1.0))));
        },
        py::arg("emb_gray_tx"), py::arg("emb_avg_gray"), py::arg("gamma") = 0.003, py::arg("beta") = 1.0);
    m.def(
        "reweight_singular_values",
        [](const std::vector<double>& sigma, double gamma, double beta) {
            const Vector v = reweight_singular_values(Eigen::Map<const Vector>(sigma.data(), static_cast<Eigen::Index>(sigma.size())),
                                                      cte_config(gamma, beta, 1.0));
            return std::vector<double>(v.data(), v.data() + v.size());
        },
        py::arg("sigma"), py::arg("gamma") = 0.003, py::arg("beta") = 1.0);
    m.def(
        "combine",
        [](const Array& tx, const Array& clr) {
            return to_py(to_array(Embedding(combine(embedding(tx), embedding(clr)).tokens())));
        },
        py::arg("emb_tx"), py::arg("emb_clr"));

    // RegWCT
    m.def(
        "whiten", [](const Array& z, double eig_floor) { return to_py(to_array(whiten(latent(z), wct_config(0.5, 0.0, 0.8, 0.6, 0, eig_floor)))); },
        py::arg("z"), py::arg("eig_floor") = 1e-8);
    m.def(
        "color",
        [](const Array& zw, const Array& ref, double eig_floor) {
            return to_py(to_array(color(latent(zw), latent(ref), wct_config(0.5, 0.0, 0.8, 0.6, 0, eig_floor))));
        },
        py::arg("z_white"), py::arg("ref"), py::arg("eig_floor") = 1e-8);
    m.def(
        "wct",
        [](const Array& z, const Array& ref, double eig_floor) {
            return to_py(to_array(wct(latent(z), latent(ref), wct_config(0.5, 0.0, 0.8, 0.6, 0, eig_floor))));
        },
        py::arg("z"), py::arg("ref"), py::arg("eig_floor") = 1e-8);
    m.def(
        "reg_wct",
        [](const Array& z, const Array& ref, double lambda, std::uint64_t seed) {
            const RegWctConfig cfg = wct_config(0.5, lambda, 0.8, 0.6, seed, 1e-8);
            Rng rng(seed);
            return to_py(to_array(reg_wct(latent(z), latent(ref), cfg, rng)));
        },
        py::arg("z"), py::arg("ref"), py::arg("lam") = 0.01, py::arg("seed") = 0);
    m.def(
        "blend_step",
        [](const Array& z, const Array& ref, long t, long total, double omega, double lambda, double t_start,
           double t_end, std::uint64_t seed) {
            const RegWctConfig cfg = wct_config(omega, lambda, t_start, t_end, seed, 1e-8);
            Rng rng(seed);
            return to_py(to_array(blend_step(latent(z), latent(ref), t, total, cfg, rng)));
        },
        py::arg("z"), py::arg("ref"), py::arg("t"), py::arg("T"), py::arg("omega") = 0.5, py::arg("lam") = 0.01,
        py::arg("t_start") = 0.8, py::arg("t_end") = 0.6, py::arg("seed") = 0);

    // Metrics
    m.def(
        "chist_distance", [](const Array& a, const Array& b, std::size_t bins) { return chist_distance(image(a), image(b), bins); },
        py::arg("a"), py::arg("b"), py::arg("bins") = 256);
    m.def(
        "swd_color_distance",
        [](const Array& a, const Array& b, std::size_t projections, std::size_t scales, std::uint64_t seed) {
            return swd_color_distance(image(a), image(b), SwdOptions{projections, scales, seed});
        },
        py::arg("a"), py::arg("b"), py::arg("projections") = 64, py::arg("scales") = 3, py::arg("seed") = 0);
    m.def(
        "covariance_distance", [](const Array& a, const Array& b) { return covariance_distance(latent(a), latent(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "radial_spectrum",
        [](const Array& z) {
            if (z.ndim() == 2) {
                Matrix mz(z.shape(0), z.shape(1));
                for (py::ssize_t y = 0; y < z.shape(0); ++y)
                    for (py::ssize_t x = 0; x < z.shape(1); ++x) mz(y, x) = z.at(y, x);
                return spectrum_dict(radial_spectrum(mz));
            }
            return spectrum_dict(radial_spectrum(latent(z)));
        },
        py::arg("z"));

    // Sandbox
    m.def(
        "run_trajectory",
        [](std::uint64_t seed, double omega, double lambda, long steps, double beta_max, const std::string& config_text) {
            SimConfig cfg = parse_sim_config(config_text);
            cfg.seed = seed;
            cfg.steps = steps;
            cfg.beta_max = beta_max;
            cfg.regwct.seed = seed;
            cfg.regwct.omega = omega;
            cfg.regwct.lambda = lambda;
            const TrajectoryReport r = run_trajectory(cfg);
            py::dict out;
            out["final_sample"] = to_py(to_array(r.final_sample));
            out["cov_to_ref"] = r.cov_distance_to_ref;
            out["cov_to_data"] = r.cov_distance_to_data;
            out["gated_steps"] = r.gated_steps;
            py::list profiles;
            for (const auto& cp : r.spectrum_profiles) {
                py::dict d = spectrum_dict(cp.profile);
                d["step"] = cp.step;
                profiles.append(d);
            }
            out["spectrum_profiles"] = profiles;
            return out;
        },
        py::arg("seed") = 0, py::arg("omega") = 0.5, py::arg("lam") = 0.01, py::arg("steps") = 50,
        py::arg("beta_max") = 0.02, py::arg("config") = "");
}
