// roomlayout command-line front end.
//
// Exit codes: 0 success, 2 input error (bad arguments, missing or corrupt
// files), 3 numerical failure. Errors are reported on stderr as one JSON line.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <thread>

#include "roomlayout/config.hpp"
#include "roomlayout/eval_metrics.hpp"
#include "roomlayout/io.hpp"
#include "roomlayout/random.hpp"
#include "roomlayout/serialization.hpp"

using namespace roomlayout;
namespace fs = std::filesystem;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct Resolution {
  int width = 0;
  int height = 0;
};

Resolution parse_resolution(const std::string& text) {
  const auto x = text.find('x');
  Resolution r;
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    r.width = std::stoi(text.substr(0, x));
    r.height = std::stoi(text.substr(x + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "resolution must look like WIDTHxHEIGHT, got '" + text + "'");
  }
  if (r.width < 1 || r.height < 1) fail(ErrorCode::InvalidArgument, "resolution must be positive");
  return r;
}

// Intrinsics of the same camera sampled on a different pixel grid.
CameraIntrinsics scale_intrinsics(const CameraIntrinsics& cam, int width, int height) {
  const double sx = static_cast<double>(width) / cam.width;
  const double sy = static_cast<double>(height) / cam.height;
  return {cam.fx * sx, cam.fy * sy, (cam.u0 + 0.5) * sx - 0.5, (cam.v0 + 0.5) * sy - 0.5, width,
          height};
}

// Runs fn(i) for i in [0, n) on a small thread pool. Every item runs even if
// others fail; the first failure (by index) is rethrown afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void emit(const Json& report, const std::string& out_file) {
  const std::string text = report.dump(2) + "\n";
  if (out_file.empty()) {
    std::cout << text;
  } else {
    write_text_atomic(out_file, text);
  }
}

struct ParamSource {
  std::string params;
  std::string record;
  std::string resolution;

  void bind(CLI::App* cmd) {
    cmd->add_option("--params", params, "parameter map (.rast)");
    cmd->add_option("--record", record, "record directory; supplies params.rast and intrinsics");
    cmd->add_option("--resolution", resolution, "resample the parameter map to WIDTHxHEIGHT");
  }

  std::pair<ParamMap, std::optional<CameraIntrinsics>> load() const {
    if (params.empty() && record.empty()) {
      fail(ErrorCode::InvalidArgument, "one of --params or --record is required");
    }
    const fs::path path = params.empty() ? fs::path(record) / "params.rast" : fs::path(params);
    ParamMap pm = load_params(path);
    std::optional<CameraIntrinsics> cam;
    if (!record.empty()) {
      cam = read_record(record).cam;
      if (!pm.same_shape(cam->width, cam->height)) {
        fail(ErrorCode::IntrinsicsMismatch, path.string() + " does not match the record intrinsics");
      }
    }
    if (!resolution.empty()) {
      const auto res = parse_resolution(resolution);
      pm = resample_params(pm, res.width, res.height);
      if (cam) cam = scale_intrinsics(*cam, res.width, res.height);
    }
    return {std::move(pm), cam};
  }
};

void write_layout(const LayoutResult& layout, const std::optional<CameraIntrinsics>& cam,
                  const fs::path& out) {
  fs::create_directories(out);
  write_text_atomic(out / "layout.json", to_json(layout).dump(2) + "\n");
  save_segmentation(out / "segmentation.png", layout.seg);
  save_segmentation(out / "clustered.png", layout.clustered_seg);
  save_depth(out / "depth.rast", layout.depth);
  write_bytes_atomic(out / "preview.png", encode_color_png(colorize(layout.seg)));
  if (cam) write_text_atomic(out / "cloud.ply", ply_text(layout_point_cloud(layout, *cam)));
}

LayoutPrediction load_prediction(const fs::path& dir, int width, int height) {
  LayoutPrediction pred;
  pred.seg = load_segmentation(dir / "segmentation.png");
  pred.depth = load_depth(dir / "depth.rast");
  const auto bytes = read_bytes(dir / "layout.json", "layout");
  const Json layout = Json::parse(bytes.begin(), bytes.end());
  const std::string ctx = (dir / "layout.json").string();
  for (const auto& c : require(layout, "corners", ctx)) pred.corners.push_back(corner_from_json(c, ctx));
  if (!pred.seg.same_shape(width, height)) {
    const double sx = static_cast<double>(width) / pred.seg.width();
    const double sy = static_cast<double>(height) / pred.seg.height();
    for (auto& c : pred.corners) {
      c.u = (c.u + 0.5) * sx - 0.5;
      c.v = (c.v + 0.5) * sy - 0.5;
    }
    pred.seg = resample_nearest(pred.seg, width, height);
    pred.depth = resample_bilinear(pred.depth, width, height);
  }
  return pred;
}

void add_engine_options(CLI::App& app, EngineConfig& c) {
  app.add_option("--seed", c.seed, "seed for every stochastic stage")->capture_default_str();
  auto* loss = "Loss";
  app.add_option("--delta_v", c.loss.delta_v, "pull margin")->group(loss)->capture_default_str();
  app.add_option("--delta_d", c.loss.delta_d, "push margin")->group(loss)->capture_default_str();
  app.add_option("--k", c.loss.k, "stretch sharpness")->group(loss)->capture_default_str();
  app.add_option("--alpha", c.loss.alpha, "discriminative weight")->group(loss)->capture_default_str();
  app.add_option("--beta", c.loss.beta, "depth weight")->group(loss)->capture_default_str();
  app.add_option("--eta", c.loss.eta, "stretch weight")->group(loss)->capture_default_str();
  app.add_option("--theta", c.loss.theta, "parameter weight")->group(loss)->capture_default_str();

  auto* cl = "Clustering";
  app.add_option("--bandwidth", c.cluster.bandwidth, "mean shift bandwidth")->group(cl)->capture_default_str();
  app.add_option("--min_fraction", c.cluster.min_fraction, "smallest kept cluster, fraction of pixels")
      ->group(cl)
      ->capture_default_str();
  app.add_option("--max_seeds", c.cluster.max_seeds, "mean shift seed budget")->group(cl)->capture_default_str();

  auto* rs = "Fitting";
  app.add_option("--ransac_iterations", c.ransac.iterations)->group(rs)->capture_default_str();
  app.add_option("--inlier_tol", c.ransac.inlier_tol, "inverse depth tolerance (1/m)")
      ->group(rs)
      ->capture_default_str();
  app.add_option("--min_inlier_ratio", c.ransac.min_inlier_ratio)->group(rs)->capture_default_str();

  auto* ly = "Layout";
  app.add_option("--min_region_fraction", c.resolve.min_region_fraction)->group(ly)->capture_default_str();
  app.add_option("--junction_radius", c.corners.junction_radius_px, "pixels")->group(ly)->capture_default_str();
  app.add_option("--min_determinant", c.corners.min_determinant)->group(ly)->capture_default_str();
  app.add_option("--min_inverse_depth", c.corners.min_inverse_depth)->group(ly)->capture_default_str();

  auto* op = "Optimizer";
  app.add_option("--steps", c.optimize.steps)->group(op)->capture_default_str();
  app.add_option("--learning_rate", c.optimize.learning_rate)->group(op)->capture_default_str();

  auto* sy = "Synthesis";
  app.add_option("--tilt", c.synth.tilt_deg, "camera pitch/roll range (degrees)")->group(sy)->capture_default_str();
  app.add_option("--noise", c.synth.noise_sigma, "depth noise sigma (m)")->group(sy)->capture_default_str();
  app.add_option("--clutter", c.synth.clutter_fraction, "occluded pixel fraction")->group(sy)->capture_default_str();
}

int report_error(const std::string& command, const std::string& code, const std::string& message,
                 int exit_code) {
  const Json j = {{"error", code}, {"message", message}, {"command", command}};
  std::cerr << j.dump() << "\n";
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometry-driven room layout engine"};
  app.set_config("--config", "", "TOML or INI file with option values");
  app.require_subcommand(1, 1);
  app.fallthrough();

  EngineConfig cfg;
  add_engine_options(app, cfg);
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "write synthetic dataset records");
  std::string synth_out = "synth";
  std::string synth_res = "64x64";
  std::string synth_type = "cuboid";
  std::string synth_format = "float64";
  int synth_count = 1;
  int synth_walls = 5;
  double synth_fx = 0.0;
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth->add_option("--resolution", synth_res, "WIDTHxHEIGHT")->capture_default_str();
  synth->add_option("--count", synth_count, "number of scenes; scene i uses seed + i")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--type", synth_type)->check(CLI::IsMember({"cuboid", "noncuboid"}))->capture_default_str();
  synth->add_option("--walls", synth_walls, "walls of non-cuboid footprints")->capture_default_str();
  synth->add_option("--fx", synth_fx, "focal length in pixels (default 0.625 x width)");
  synth->add_option("--format", synth_format, "depth raster format")
      ->check(CLI::IsMember({"float64", "png16"}))
      ->capture_default_str();
  synth->callback([&] {
    action = [&] {
      const auto res = parse_resolution(synth_res);
      const double f = synth_fx > 0.0 ? synth_fx : 0.625 * res.width;
      const CameraIntrinsics cam{f, f, 0.5 * (res.width - 1), 0.5 * (res.height - 1), res.width,
                                 res.height};
      cam.validate();
      const auto encoding =
          synth_format == "png16" ? DepthEncoding::Png16Millimeters : DepthEncoding::Float64;
      Json index = Json::array();
      std::vector<Json> entries(synth_count);
      parallel_for(synth_count, [&](std::size_t i) {
        const std::uint64_t seed = cfg.seed + i;
        const SceneSpec spec = synth_type == "cuboid"
                                   ? generate_cuboid(seed, cam, cfg.synth)
                                   : generate_noncuboid(seed, cam, synth_walls, cfg.synth);
        const RenderedScene scene = render_scene(spec);
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04zu", i);
        const fs::path dir = fs::path(synth_out) / name;
        write_record(make_record(spec, scene, encoding), dir);
        save_params(dir / "params.rast", scene.params);
        entries[i] = {{"record", name}, {"seed", seed}, {"surfaces", spec.surfaces.size()},
                      {"corners", spec.gt_corners.size()}};
      });
      for (auto& e : entries) index.push_back(std::move(e));
      write_text_atomic(fs::path(synth_out) / "index.json", index.dump(2) + "\n");
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "fit surface parameters to annotated regions");
  std::string fit_record;
  std::string fit_out;
  std::string fit_depth = "original";
  std::string fit_depth_file;
  std::string fit_annotations;
  std::string fit_frame = "normalized";
  auto* fit_record_opt = fit->add_option("--record", fit_record, "record directory");
  fit->add_option("--depth", fit_depth, "record depth raster to fit")
      ->check(CLI::IsMember({"original", "layout"}))
      ->capture_default_str();
  auto* fit_file_opt = fit->add_option("--depth-file", fit_depth_file, "depth raster (.png or .rast)");
  auto* fit_ann_opt = fit->add_option("--annotations", fit_annotations, "region annotation JSON");
  fit->add_option("--frame", fit_frame, "parameter frame for --depth-file input")
      ->check(CLI::IsMember({"normalized", "raw"}))
      ->capture_default_str();
  fit_file_opt->needs(fit_ann_opt);
  fit_ann_opt->needs(fit_file_opt);
  fit_record_opt->excludes(fit_file_opt);
  fit->add_option("--out", fit_out, "JSON output file (default stdout)");
  fit->callback([&] {
    action = [&] {
      DepthMap depth;
      std::vector<RegionAnnotation> annotations;
      PixelFrame frame;
      if (!fit_record.empty()) {
        DatasetRecord rec = read_record(fit_record);
        depth = fit_depth == "original" ? std::move(rec.original_depth) : std::move(rec.layout_depth);
        annotations = std::move(rec.annotations);
        frame = rec.frame;
      } else if (!fit_depth_file.empty()) {
        depth = load_depth(fit_depth_file);
        const auto bytes = read_bytes(fit_annotations, "annotations");
        annotations = annotations_from_json(Json::parse(bytes.begin(), bytes.end()), fit_annotations);
        frame = fit_frame == "raw" ? PixelFrame::raw() : PixelFrame::normalized(depth.width(), depth.height());
      } else {
        fail(ErrorCode::MissingField, "record: pass --record or --depth-file with --annotations");
      }
      const auto fits = fit_annotated(depth, annotations, cfg.ransac, frame);
      Json regions = Json::array();
      std::sort(annotations.begin(), annotations.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
      for (std::size_t i = 0; i < fits.size(); ++i) {
        Json j = to_json(fits[i]);
        j["id"] = annotations[i].id;
        j["semantic"] = to_string(annotations[i].semantic);
        regions.push_back(j);
      }
      emit({{"param_unit_px", frame.unit}, {"regions", regions}}, fit_out);
    };
  });

  // cluster
  auto* cluster = app.add_subcommand("cluster", "group a parameter map into surface instances");
  ParamSource cluster_src;
  std::string cluster_out = "cluster";
  cluster_src.bind(cluster);
  cluster->add_option("--out", cluster_out, "output directory")->capture_default_str();
  cluster->callback([&] {
    action = [&] {
      const auto [pm, cam] = cluster_src.load();
      const ClusterSet set = cluster_param_map(pm, cfg.cluster);
      fs::create_directories(cluster_out);
      write_text_atomic(fs::path(cluster_out) / "clusters.json", to_json(set).dump(2) + "\n");
      save_segmentation(fs::path(cluster_out) / "clustered.png", set.clustered_seg);
    };
  });

  // stitch
  auto* stitch = app.add_subcommand("stitch", "cluster, then stitch instance depth maps");
  ParamSource stitch_src;
  std::string stitch_out = "stitch";
  bool stitch_resolve = false;
  stitch_src.bind(stitch);
  stitch->add_option("--out", stitch_out, "output directory")->capture_default_str();
  stitch->add_flag("--resolve", stitch_resolve, "walk depth layers until labels agree with the clusters");
  stitch->callback([&] {
    action = [&] {
      const auto [pm, cam] = stitch_src.load();
      const ClusterSet set = cluster_param_map(pm, cfg.cluster);
      const auto instances = set.params();
      SegmentationMap seg;
      DepthMap depth;
      Json summary = to_json(set);
      if (stitch_resolve) {
        const auto resolved = resolve_layers(instances, set.clustered_seg, pm.frame, cfg.resolve);
        seg = resolved.seg;
        depth = depth_from_labels(instances, seg, pm.frame);
        summary["iterations"] = resolved.iterations;
        summary["layer_fallback"] = resolved.fallback;
      } else {
        auto st = stitch_min_depth(instances, pm.width(), pm.height(), pm.frame);
        seg = std::move(st.seg);
        depth = std::move(st.depth);
      }
      fs::create_directories(stitch_out);
      write_text_atomic(fs::path(stitch_out) / "stitch.json", summary.dump(2) + "\n");
      save_segmentation(fs::path(stitch_out) / "segmentation.png", seg);
      save_depth(fs::path(stitch_out) / "depth.rast", depth);
    };
  });

  // corners
  auto* corners = app.add_subcommand("corners", "layout corners of a parameter map");
  ParamSource corners_src;
  std::string corners_out;
  corners_src.bind(corners);
  corners->add_option("--out", corners_out, "JSON output file (default stdout)");
  corners->callback([&] {
    action = [&] {
      const auto [pm, cam] = corners_src.load();
      const LayoutResult layout = full_pipeline(pm, cfg.pipeline(), cam);
      Json list = Json::array();
      for (const auto& c : layout.corners.corners) list.push_back(to_json(c));
      Json ill = Json::array();
      for (const auto& c : layout.corners.ill_conditioned) {
        ill.push_back({{"surfaces", c.surfaces}, {"determinant", c.determinant}});
      }
      emit({{"corners", list}, {"ill_conditioned_corners", ill}}, corners_out);
    };
  });

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "parameter map to full layout");
  ParamSource pipeline_src;
  std::string pipeline_out = "layout";
  pipeline_src.bind(pipeline);
  pipeline->add_option("--out", pipeline_out, "output directory")->capture_default_str();
  pipeline->callback([&] {
    action = [&] {
      const auto [pm, cam] = pipeline_src.load();
      write_layout(full_pipeline(pm, cfg.pipeline(), cam), cam, pipeline_out);
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "score layout predictions against records");
  std::vector<std::string> eval_pred;
  std::vector<std::string> eval_gt;
  std::string eval_out;
  std::string eval_format = "json";
  bool eval_identity = false;
  eval->add_option("--pred", eval_pred, "pipeline output directories")->required();
  eval->add_option("--gt", eval_gt, "record directories, same order as --pred")->required();
  eval->add_flag("--identity-labels", eval_identity, "labels carry fixed meaning; no matching");
  eval->add_option("--out", eval_out, "output file (default stdout)");
  eval->add_option("--format", eval_format)->check(CLI::IsMember({"json", "text"}))->capture_default_str();
  eval->callback([&] {
    action = [&] {
      if (eval_pred.size() != eval_gt.size()) {
        fail(ErrorCode::InvalidArgument, "--pred and --gt need the same number of entries");
      }
      std::vector<MetricReport> reports(eval_pred.size());
      parallel_for(reports.size(), [&](std::size_t i) {
        const DatasetRecord rec = read_record(eval_gt[i]);
        const LayoutPrediction gt{rec.segmentation, rec.layout_depth, rec.corners};
        const auto pred = load_prediction(eval_pred[i], rec.cam.width, rec.cam.height);
        reports[i] = evaluate_layout(pred, gt, rec.cam,
                                     eval_identity ? LabelMatching::Identity : LabelMatching::Optimal);
      });
      const MetricSummary summary = aggregate(reports);
      if (eval_format == "json") {
        Json images = Json::array();
        for (std::size_t i = 0; i < reports.size(); ++i) {
          Json j = to_json(reports[i]);
          j["pred"] = eval_pred[i];
          j["gt"] = eval_gt[i];
          images.push_back(j);
        }
        emit({{"images", images}, {"summary", to_json(summary)}}, eval_out);
        return;
      }
      char line[256];
      std::string text;
      for (std::size_t i = 0; i < reports.size(); ++i) {
        std::snprintf(line, sizeof line, "%-32s e_pix %7.3f  e_cor %7.3f  e_3d_cor %.4f m  rms %.4f\n",
                      eval_pred[i].c_str(), reports[i].e_pix, reports[i].e_cor,
                      reports[i].e_3d_cor.mean, reports[i].depth.rms);
        text += line;
      }
      std::snprintf(line, sizeof line,
                    "mean over %zu: e_pix %.3f  e_cor %.3f  e_3d_cor %.4f m (per corner %.4f)  rel %.4f\n",
                    summary.images, summary.e_pix, summary.e_cor, summary.e_3d_cor_per_image,
                    summary.e_3d_cor_per_corner, summary.depth.rel);
      text += line;
      if (eval_out.empty()) {
        std::cout << text;
      } else {
        write_text_atomic(eval_out, text);
      }
    };
  });

  // train-toy
  auto* train = app.add_subcommand("train-toy", "fit a perturbed parameter map with the training losses");
  std::string train_res = "16x16";
  std::string train_mode = "3d";
  std::string train_out;
  double train_sigma = 0.05;
  train->add_option("--resolution", train_res, "WIDTHxHEIGHT")->capture_default_str();
  train->add_option("--mode", train_mode)->check(CLI::IsMember({"3d", "2d"}))->capture_default_str();
  train->add_option("--sigma", train_sigma, "per-channel perturbation of the target map")->capture_default_str();
  train->add_option("--out", train_out, "JSON output file (default stdout)");
  train->callback([&] {
    action = [&] {
      const auto res = parse_resolution(train_res);
      const double f = 0.75 * res.width;
      const CameraIntrinsics cam{f, f, 0.5 * (res.width - 1), 0.5 * (res.height - 1), res.width,
                                 res.height};
      const SceneSpec spec = generate_cuboid(cfg.seed, cam, cfg.synth);
      const RenderedScene scene = render_scene(spec);
      Rng rng(cfg.seed, 7);
      ParamMap init = scene.params;
      for (std::size_t i = 0; i < init.size(); ++i) {
        auto a = init[i].as_array();
        for (double& x : a) x += rng.normal(0.0, train_sigma);
        init[i] = SurfaceParams::from_array(a);
      }
      const TrainTarget target{scene.params, scene.segmentation, scene.layout_depth};
      const TrainMode mode = train_mode == "3d" ? TrainMode::Supervised3D : TrainMode::Weak2D;
      const auto result = optimize_param_map(init, target, mode, cfg.loss, cfg.optimize);

      const auto centers = instance_centers(result.params, scene.segmentation);
      const auto stitched = stitch_min_depth(centers, res.width, res.height, spec.frame);
      Json report = {{"mode", train_mode},
                     {"seed", cfg.seed},
                     {"initial_loss", result.trace.front()},
                     {"final_loss", result.trace.back()},
                     {"accepted_steps", result.accepted_steps},
                     {"ordering_accuracy",
                      1.0 - pixel_error(stitched.seg, scene.segmentation, LabelMatching::Identity) / 100.0},
                     {"trace", result.trace}};
      if (mode == TrainMode::Supervised3D) {
        const auto layout = full_pipeline(result.params, cfg.pipeline(), cam);
        report["e_pix"] = pixel_error(layout.seg, scene.segmentation);
        const auto breakdown = loss_total_3d(result.params, scene.params, scene.segmentation,
                                             scene.layout_depth, cfg.loss);
        report["final_terms"] = to_json(breakdown);
      } else {
        report["final_terms"] = to_json(loss_total_2d(result.params, scene.segmentation, cfg.loss));
      }
      emit(report, train_out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  std::string command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
  try {
    cfg.apply_seed();
    cfg.validate();
    if (action) action();
  } catch (const Error& e) {
    return report_error(command, std::string(to_string(e.code())), e.what(),
                        is_input_error(e.code()) ? kExitInput : kExitNumeric);
  } catch (const fs::filesystem_error& e) {
    return report_error(command, "FileSystem", e.what(), kExitInput);
  } catch (const Json::exception& e) {
    return report_error(command, "InvalidJson", e.what(), kExitInput);
  } catch (const std::exception& e) {
    return report_error(command, "Internal", e.what(), kExitNumeric);
  }
  return 0;
}
