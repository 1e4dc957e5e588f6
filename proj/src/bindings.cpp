#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "moblur/blur_effects.hpp"
#include "moblur/color_transfer.hpp"
#include "moblur/hdr.hpp"
#include "moblur/image_io.hpp"
#include "moblur/layer_separation.hpp"
#include "moblur/optical_flow.hpp"
#include "moblur/pipeline.hpp"
#include "moblur/synth.hpp"
#include "moblur/tracking.hpp"

namespace py = pybind11;
using namespace moblur;

namespace {

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3 || a.shape(2) != 3)
        throw py::value_error("expected an array of shape (H, W, 3)");
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

py::array_t<double> array_from_image(const Image& img) {
    py::array_t<double> a({img.height, img.width, 3});
    std::copy(img.data.begin(), img.data.end(), a.mutable_data());
    return a;
}

Plane plane_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw py::value_error("expected an array of shape (H, W)");
    Plane p(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), p.data.begin());
    return p;
}

py::array_t<double> array_from_plane(const Plane& p) {
    py::array_t<double> a({p.height, p.width});
    std::copy(p.data.begin(), p.data.end(), a.mutable_data());
    return a;
}

std::vector<Image> images_from_list(const py::iterable& list) {
    std::vector<Image> out;
    for (py::handle h : list)
        out.push_back(image_from_array(
            py::cast<py::array_t<double, py::array::c_style | py::array::forcecast>>(h)));
    return out;
}

Kernel kernel_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D kernel array");
    Kernel k;
    k.height = static_cast<int>(a.shape(0));
    k.width = static_cast<int>(a.shape(1));
    k.weights.assign(a.data(), a.data() + a.size());
    return k;
}

py::array_t<double> array_from_kernel(const Kernel& k) {
    py::array_t<double> a({k.height, k.width});
    std::copy(k.weights.begin(), k.weights.end(), a.mutable_data());
    return a;
}

BorderPolicy border_from_string(const std::string& name) {
    if (name == "replicate") return BorderPolicy::Replicate;
    if (name == "reflect") return BorderPolicy::Reflect;
    throw py::value_error("border must be 'replicate' or 'reflect'");
}

FlowParams flow_params(int levels, double scale, int window, int iterations, int poly_n,
                       double poly_sigma) {
    FlowParams p;
    p.pyramid_levels = levels;
    p.pyramid_scale = scale;
    p.window = window;
    p.iterations = iterations;
    p.poly_n = poly_n;
    p.poly_sigma = poly_sigma;
    return p;
}

py::array_t<double> flow_to_array(const FlowField& flow) {
    py::array_t<double> a({flow.height, flow.width, 2});
    auto view = a.mutable_unchecked<3>();
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            view(y, x, 0) = flow.dx[flow.index(x, y)];
            view(y, x, 1) = flow.dy[flow.index(x, y)];
        }
    }
    return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Per-object motion blur, panning shots, cinemagraphs and HDR merging "
              "from fast-shutter frame bursts";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);

    m.def("read_png", [](const std::string& path) { return array_from_image(read_image_png(path)); },
          py::arg("path"), "Read an 8-bit PNG into a linear-light (H, W, 3) float array.");
    m.def("write_png",
          [](const std::string& path, const py::array_t<double, py::array::c_style |
                                                                    py::array::forcecast>& img) {
              write_image_png(path, image_from_array(img));
          },
          py::arg("path"), py::arg("image"),
          "Write a linear-light (H, W, 3) array as an 8-bit PNG.");
    m.def("write_pfm",
          [](const std::string& path, const py::array_t<double, py::array::c_style |
                                                                    py::array::forcecast>& img) {
              write_pfm(path, image_from_array(img));
          },
          py::arg("path"), py::arg("image"));
    m.def("read_pfm", [](const std::string& path) { return array_from_image(read_pfm(path)); },
          py::arg("path"));

    m.def("luminance",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img) {
              return array_from_plane(luminance(image_from_array(img)));
          },
          py::arg("image"), "Rec.709 luma of a linear-light image.");
    m.def("convolve2d",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& kernel,
             const std::string& border) {
              return array_from_image(convolve2d(image_from_array(img),
                                                 kernel_from_array(kernel),
                                                 border_from_string(border)));
          },
          py::arg("image"), py::arg("kernel"), py::arg("border") = "replicate");

    m.def("match_colors",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& ref) {
              Image source = image_from_array(img);
              AffineColorMap map =
                  mk_transform(channel_stats(source), channel_stats(image_from_array(ref)));
              return array_from_image(apply_color_map(source, map));
          },
          py::arg("image"), py::arg("reference"),
          "Transfer the reference's color statistics onto the image via the "
          "closed-form linear optimal-transport map.");
    m.def("color_map",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& ref) {
              AffineColorMap map = mk_transform(channel_stats(image_from_array(img)),
                                                channel_stats(image_from_array(ref)));
              py::array_t<double> t({3, 3});
              Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(t.mutable_data()) = map.T;
              py::array_t<double> ms(3), mr(3);
              Eigen::Map<Eigen::Vector3d>(ms.mutable_data()) = map.mean_src;
              Eigen::Map<Eigen::Vector3d>(mr.mutable_data()) = map.mean_ref;
              return py::make_tuple(t, ms, mr);
          },
          py::arg("image"), py::arg("reference"),
          "Return (T, mean_src, mean_ref) of the color transfer map.");

    m.def("rank1_backgrounds",
          [](const py::iterable& frames) {
              LowRankResult r = rank1_background(stack_frames(images_from_list(frames)));
              py::list backgrounds;
              for (const Image& b : r.background) backgrounds.append(array_from_image(b));
              return py::make_tuple(backgrounds, r.singular_value);
          },
          py::arg("frames"),
          "Rank-1 background reconstruction per frame; returns (backgrounds, sigma1).");
    m.def("extract_mask",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& frame,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& background,
             double tau, int feather) {
              return array_from_plane(extract_mask(image_from_array(frame),
                                                   image_from_array(background), tau, feather));
          },
          py::arg("frame"), py::arg("background"), py::arg("tau") = 0.08,
          py::arg("feather") = 2);

    m.def("farneback_flow",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& prev,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& next,
             int levels, double scale, int window, int iterations, int poly_n,
             double poly_sigma) {
              FlowParams p = flow_params(levels, scale, window, iterations, poly_n, poly_sigma);
              FlowField flow =
                  prev.ndim() == 2
                      ? farneback_flow(plane_from_array(prev), plane_from_array(next), p)
                      : farneback_flow(image_from_array(prev), image_from_array(next), p);
              return flow_to_array(flow);
          },
          py::arg("prev"), py::arg("next"), py::arg("levels") = 3, py::arg("scale") = 0.5,
          py::arg("window") = 15, py::arg("iterations") = 3, py::arg("poly_n") = 7,
          py::arg("poly_sigma") = 1.5,
          "Dense optical flow as an (H, W, 2) array of (dx, dy).");

    m.def("track_sequence",
          [](const py::iterable& frames, std::array<double, 4> bbox, int levels, double scale,
             int window, int iterations, int poly_n, double poly_sigma, bool median) {
              FlowParams p = flow_params(levels, scale, window, iterations, poly_n, poly_sigma);
              TrackResult track =
                  track_sequence(images_from_list(frames),
                                 BoundingBox{bbox[0], bbox[1], bbox[2], bbox[3]}, p, median);
              py::array_t<double> boxes({static_cast<py::ssize_t>(track.boxes.size()),
                                         static_cast<py::ssize_t>(4)});
              auto bv = boxes.mutable_unchecked<2>();
              for (std::size_t i = 0; i < track.boxes.size(); ++i) {
                  bv(static_cast<py::ssize_t>(i), 0) = track.boxes[i].x;
                  bv(static_cast<py::ssize_t>(i), 1) = track.boxes[i].y;
                  bv(static_cast<py::ssize_t>(i), 2) = track.boxes[i].w;
                  bv(static_cast<py::ssize_t>(i), 3) = track.boxes[i].h;
              }
              py::array_t<double> motions({static_cast<py::ssize_t>(track.motions.size()),
                                           static_cast<py::ssize_t>(2)});
              auto mv = motions.mutable_unchecked<2>();
              for (std::size_t i = 0; i < track.motions.size(); ++i) {
                  mv(static_cast<py::ssize_t>(i), 0) = track.motions[i].x;
                  mv(static_cast<py::ssize_t>(i), 1) = track.motions[i].y;
              }
              return py::make_tuple(boxes, motions);
          },
          py::arg("frames"), py::arg("bbox"), py::arg("levels") = 3, py::arg("scale") = 0.5,
          py::arg("window") = 15, py::arg("iterations") = 3, py::arg("poly_n") = 7,
          py::arg("poly_sigma") = 1.5, py::arg("median") = false,
          "Propagate a first-frame box through the clip; returns (boxes, motions).");

    m.def("line_kernel",
          [](double length, double angle) { return array_from_kernel(line_kernel(length, angle)); },
          py::arg("length"), py::arg("angle"),
          "Normalized anti-aliased line kernel for motion blur.");
    m.def("compute_sigma",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& frame,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& background,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& mask) {
              return compute_sigma(image_from_array(frame), image_from_array(background),
                                   plane_from_array(mask))
                  .sigma;
          },
          py::arg("frame"), py::arg("background"), py::arg("mask"));
    m.def("composite",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& effect,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& background,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& mask,
             double sigma) {
              return array_from_image(composite(image_from_array(effect),
                                                image_from_array(background),
                                                plane_from_array(mask), CompositeParams{sigma}));
          },
          py::arg("effect_layer"), py::arg("background_layer"), py::arg("mask"),
          py::arg("sigma") = 1.0,
          "out = (1 - M) * sigma * background + M * effect, per pixel.");

    m.def("recover_response",
          [](const py::iterable& images, const std::vector<double>& evs, int n_samples,
             double lam) {
              ExposureStack stack{images_from_list(images), evs};
              ResponseCurve r = recover_response(stack, n_samples, lam);
              py::array_t<double> a({3, 256});
              auto view = a.mutable_unchecked<2>();
              for (int c = 0; c < 3; ++c)
                  for (int z = 0; z < 256; ++z)
                      view(c, z) = r.log_exposure[static_cast<std::size_t>(c)]
                                                 [static_cast<std::size_t>(z)];
              return a;
          },
          py::arg("images"), py::arg("evs"), py::arg("n_samples") = 200,
          py::arg("lambda") = 50.0,
          "Per-channel log-exposure curve as a (3, 256) array.");
    m.def("merge_radiance",
          [](const py::iterable& images, const std::vector<double>& evs,
             const py::object& response) {
              ExposureStack stack{images_from_list(images), evs};
              ResponseCurve curve;
              if (response.is_none()) {
                  curve = linear_response();
              } else {
                  auto a = py::cast<py::array_t<double, py::array::c_style |
                                                            py::array::forcecast>>(response);
                  if (a.ndim() != 2 || a.shape(0) != 3 || a.shape(1) != 256)
                      throw py::value_error("response must have shape (3, 256)");
                  auto view = a.unchecked<2>();
                  for (int c = 0; c < 3; ++c)
                      for (int z = 0; z < 256; ++z)
                          curve.log_exposure[static_cast<std::size_t>(c)]
                                            [static_cast<std::size_t>(z)] = view(c, z);
              }
              return array_from_image(merge_radiance(stack, curve));
          },
          py::arg("images"), py::arg("evs"), py::arg("response") = py::none(),
          "Weighted log-radiance merge; response=None assumes a linear sensor.");
    m.def("tone_map",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& radiance,
             double key, std::optional<double> white) {
              Image r = image_from_array(radiance);
              double w = white ? *white : default_white(r, key);
              return array_from_image(tone_map(r, key, w));
          },
          py::arg("radiance"), py::arg("key") = 0.18, py::arg("white") = py::none());

    m.def("render_effect",
          [](const py::iterable& frames, const py::iterable& masks,
             const py::iterable& backgrounds,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& boxes,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& motions,
             const std::string& mode, double blur_scale, bool fix_anchor) {
              TrackResult track;
              if (boxes.ndim() != 2 || boxes.shape(1) != 4)
                  throw py::value_error("boxes must have shape (F, 4)");
              if (motions.ndim() != 2 || motions.shape(1) != 2)
                  throw py::value_error("motions must have shape (F - 1, 2)");
              auto bv = boxes.unchecked<2>();
              for (py::ssize_t i = 0; i < boxes.shape(0); ++i)
                  track.boxes.push_back({bv(i, 0), bv(i, 1), bv(i, 2), bv(i, 3)});
              auto mv = motions.unchecked<2>();
              for (py::ssize_t i = 0; i < motions.shape(0); ++i)
                  track.motions.push_back({mv(i, 0), mv(i, 1)});
              EffectConfig cfg;
              if (mode == "panning") cfg.mode = EffectMode::PanningShot;
              else if (mode == "cinemagraph") cfg.mode = EffectMode::Cinemagraph;
              else if (mode == "blur") cfg.mode = EffectMode::GlobalBlur;
              else throw py::value_error("mode must be panning|cinemagraph|blur");
              cfg.blur_scale = blur_scale;
              cfg.fix_anchor = fix_anchor;
              std::vector<Mask> mask_planes;
              for (py::handle h : masks)
                  mask_planes.push_back(plane_from_array(
                      py::cast<py::array_t<double, py::array::c_style | py::array::forcecast>>(
                          h)));
              std::vector<Image> out =
                  render_effect(images_from_list(frames), mask_planes,
                                images_from_list(backgrounds), track, cfg);
              py::list result;
              for (const Image& img : out) result.append(array_from_image(img));
              return result;
          },
          py::arg("frames"), py::arg("masks"), py::arg("backgrounds"), py::arg("boxes"),
          py::arg("motions"), py::arg("mode") = "panning", py::arg("blur_scale") = 1.0,
          py::arg("fix_anchor") = false);

    m.def("generate_scene",
          [](int width, int height, int frames, std::array<double, 2> start,
             std::array<double, 2> velocity, std::array<double, 2> object_size,
             double noise_sigma, std::uint64_t seed) {
              SceneSpec spec;
              spec.width = width;
              spec.height = height;
              spec.frame_count = frames;
              spec.object_start = {start[0], start[1]};
              spec.velocity = {velocity[0], velocity[1]};
              spec.object_w = object_size[0];
              spec.object_h = object_size[1];
              spec.noise_sigma = noise_sigma;
              SyntheticScene scene = generate(spec, seed);
              py::list frame_list, mask_list;
              for (const Image& f : scene.frames) frame_list.append(array_from_image(f));
              for (const Mask& msk : scene.truth.masks) mask_list.append(array_from_plane(msk));
              py::dict truth;
              truth["background"] = array_from_image(scene.truth.background);
              truth["masks"] = mask_list;
              return py::make_tuple(frame_list, truth);
          },
          py::arg("width") = 96, py::arg("height") = 96, py::arg("frames") = 10,
          py::arg("start") = std::array<double, 2>{12.0, 40.0},
          py::arg("velocity") = std::array<double, 2>{2.0, 0.0},
          py::arg("object_size") = std::array<double, 2>{16.0, 16.0},
          py::arg("noise_sigma") = 0.0, py::arg("seed") = 7,
          "Deterministic synthetic clip with ground truth, for experimentation.");

    m.def("run_pipeline",
          [](const std::string& config_text) {
              PipelineReport report = run_pipeline(parse_config(config_text));
              py::dict d;
              d["frames_written"] = report.frames_written;
              d["warnings"] = report.warnings;
              return d;
          },
          py::arg("config_text"),
          "Run the full pipeline from a 'key = value' config document.");
}
