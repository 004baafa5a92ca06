#include <atomic>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fistasep/data_gen.hpp"
#include "fistasep/esp.hpp"
#include "fistasep/io.hpp"
#include "fistasep/pdhg.hpp"
#include "fistasep/svm.hpp"

namespace {

using namespace fistasep;

constexpr const char* kVersion = "fistasep 0.1.0";

struct ManifestScope {
  io::RunManifest mf;
  explicit ManifestScope(std::string command, long long seed) {
    mf.command = std::move(command);
    mf.seed = seed;
    mf.version = kVersion;
    mf.started_at = io::iso8601_utc_now();
  }
  void param(const std::string& key, const std::string& value) { mf.parameters[key] = value; }
  void param(const std::string& key, double value) { mf.parameters[key] = io::format_g17(value); }
  void param(const std::string& key, long value) { mf.parameters[key] = std::to_string(value); }
  void write(const std::string& artifact) {
    mf.finished_at = io::iso8601_utc_now();
    io::write_manifest(artifact, mf);
  }
};

int thread_count() {
  if (const char* env = std::getenv("FISTASEP_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::vector<std::vector<double>> esp_trace_rows(const std::vector<esp::TraceRow>& trace) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.size());
  for (const auto& r : trace)
    rows.push_back({static_cast<double>(r.iteration), r.f_value, r.residual_norm,
                    static_cast<double>(r.separator_found), r.elapsed_seconds});
  return rows;
}

const std::vector<std::string> kEspTraceHeader = {"iteration", "f_value", "residual_norm",
                                                  "separator_found", "elapsed_seconds"};

int cmd_esp_solve(const std::string& instance_path, const std::string& mode, double tol,
                  long max_iter, const std::string& out) {
  const auto ells = io::read_esp_instance(instance_path);
  const auto inst = esp::normalize_instance(ells);
  const auto stop_mode = mode == "early" ? esp::StopMode::EarlyStop : esp::StopMode::Tolerance;

  ManifestScope ms("esp solve", 0);
  ms.param("instance", instance_path);
  ms.param("mode", mode);
  ms.param("tol", tol);
  ms.param("max_iter", max_iter);

  const auto outcome = esp::solve_esp(inst, stop_mode, tol, max_iter, !out.empty());
  if (outcome.separator) {
    const auto& sep = *outcome.separator;
    std::cout << "separator found at iteration " << sep.found_at_iteration << " (orientation "
              << (sep.orientation == esp::SeparationCheck::SeparatesCBelow ? "C-below" : "C-above")
              << ", offset " << io::format_g17(sep.offset * inst.normalization_factor()) << ")\n";
  } else {
    std::cout << "no separator found within " << outcome.report.iterations << " iterations\n";
  }
  std::cout << "iterations " << outcome.report.iterations << ", residual_norm "
            << io::format_g17(outcome.final_residual.norm) << ", delta_estimate "
            << io::format_g17(esp::delta_estimate(outcome.final_residual)) << "\n";

  if (!out.empty()) {
    io::write_csv(out, kEspTraceHeader, esp_trace_rows(outcome.trace));
    ms.write(out);
  }
  return 0;
}

int cmd_esp_sweep(double d_min, double d_max, double d_step, long long seed, double omega,
                  double eps, long max_iter, const std::string& out) {
  datagen::SweepConfig cfg;
  cfg.omega = omega;
  cfg.eps = eps;
  cfg.seed = static_cast<std::uint64_t>(seed);

  std::vector<double> ds;
  for (double d = d_min; d <= d_max + 1e-12; d += d_step) ds.push_back(d);

  struct Point {
    double d;
    long iterations;
    int found;
    double f_value;
    double residual_norm;
  };
  std::vector<Point> points(ds.size());

  const int workers = std::min<int>(thread_count(), static_cast<int>(ds.size()));
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next.fetch_add(1); i < ds.size(); i = next.fetch_add(1)) {
      const auto inst = datagen::gen_sweep_instance(cfg, ds[i]);
      const auto outcome = esp::solve_esp(inst, esp::StopMode::EarlyStop, 0.0, max_iter);
      points[i] = {ds[i], outcome.report.iterations, outcome.separator ? 1 : 0,
                   0.5 * outcome.final_residual.norm * outcome.final_residual.norm,
                   outcome.final_residual.norm};
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  ManifestScope ms("esp sweep", seed);
  ms.param("d_min", d_min);
  ms.param("d_max", d_max);
  ms.param("d_step", d_step);
  ms.param("omega", omega);
  ms.param("eps", eps);
  ms.param("max_iter", max_iter);
  ms.param("rng", datagen::kRngAlgorithm);

  std::vector<std::vector<double>> rows;
  for (const auto& p : points)
    rows.push_back({p.d, static_cast<double>(p.iterations), static_cast<double>(p.found),
                    p.f_value, p.residual_norm});
  io::write_csv(out, {"d", "iterations", "separator_found", "f_value", "residual_norm"}, rows);
  ms.write(out);

  long solved = 0;
  for (const auto& p : points) solved += p.found;
  std::cout << "sweep: " << solved << "/" << points.size() << " distances solved within "
            << max_iter << " iterations\n";
  return 0;
}

int cmd_esp_diagnose(const std::string& instance_path, long iters) {
  const auto inst = esp::normalize_instance(io::read_esp_instance(instance_path));
  const auto disp = pdhg::displacement_estimate(inst, iters);
  const double splust = disp.v_d[0] + disp.v_d[1];
  const double gap = std::abs(splust - disp.v_d.squaredNorm());
  std::cout << "v_R_norm " << io::format_g17(disp.v_r.norm()) << "\n";
  std::cout << "v_D_norm " << io::format_g17(disp.v_d.norm()) << "\n";
  std::cout << "v_D_s " << io::format_g17(disp.v_d[0]) << "\n";
  std::cout << "v_D_t " << io::format_g17(disp.v_d[1]) << "\n";
  std::cout << "splust_gap " << io::format_g17(gap) << "\n";
  return 0;
}

int cmd_esp_mnist(const std::string& images_path, const std::string& labels_path, long per_class,
                  long long seed, double eps, double alpha, const std::string& out) {
  const auto images = datagen::read_idx_images(images_path);
  const auto labels = datagen::read_idx_labels(labels_path);
  const auto ells = datagen::mnist_ellipsoids(images, labels, per_class,
                                              static_cast<std::uint64_t>(seed), eps, alpha);
  io::write_esp_instance(out, ells);
  ManifestScope ms("esp mnist", seed);
  ms.param("images", images_path);
  ms.param("labels", labels_path);
  ms.param("per_class", per_class);
  ms.param("eps", eps);
  ms.param("alpha", alpha);
  ms.param("rng", datagen::kRngAlgorithm);
  ms.write(out);
  std::cout << "wrote " << ells.size() << " ellipsoids to " << out << "\n";
  return 0;
}

int cmd_svm_train(const std::string& data_path, double delta_min, long max_iter,
                  const std::string& model_out, const std::string& trace_out) {
  const auto data = io::read_libsvm(data_path);
  const auto raw = io::to_dataset(data);
  const auto [ds, scale] = svm::scale_to_unit_radius(raw);
  const auto result = svm::train(ds, delta_min, max_iter, !trace_out.empty());

  io::ModelFile mf;
  mf.w = result.model.w / scale;  // maps raw features directly
  mf.t = result.model.t;
  mf.scale = scale;
  mf.iteration = result.model.found_at_iteration;
  io::write_model(model_out, mf);

  ManifestScope ms("svm train", 0);
  ms.param("data", data_path);
  ms.param("delta_min", delta_min);
  ms.param("max_iter", max_iter);
  ms.param("scale", scale);
  ms.write(model_out);

  if (!trace_out.empty()) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : result.trace)
      rows.push_back({static_cast<double>(r.iteration), r.projected_step_norm, r.delta, r.p,
                      r.g_value});
    io::write_csv(trace_out,
                  {"iteration", "projected_step_norm", "Delta", "p_properly_classified",
                   "g_value"},
                  rows);
    ms.write(trace_out);
  }

  svm::Model raw_model{mf.w, mf.t, mf.iteration};
  const auto predicted = svm::predict(raw_model, data.x);
  std::cout << "iterations " << result.report.iterations << ", properly_classified "
            << io::format_g17(result.tracker.best_fraction()) << ", training_accuracy "
            << io::format_g17(svm::accuracy(predicted, data.y)) << "\n";
  return 0;
}

int cmd_svm_predict(const std::string& model_path, const std::string& data_path,
                    const std::string& out) {
  const auto mf = io::read_model(model_path);
  auto data = io::read_libsvm(data_path);
  if (data.x.cols() > mf.w.size())
    throw io::ParseError("predict: data has " + std::to_string(data.x.cols()) +
                         " features but the model has " + std::to_string(mf.w.size()));
  if (data.x.cols() < mf.w.size()) {
    // sparse files omit trailing all-zero features
    Matrix padded = Matrix::Zero(data.x.rows(), mf.w.size());
    padded.leftCols(data.x.cols()) = data.x;
    data.x = std::move(padded);
  }
  svm::Model model{mf.w, mf.t, mf.iteration};
  const auto predicted = svm::predict(model, data.x);
  std::cout << "accuracy " << io::format_g17(svm::accuracy(predicted, data.y)) << "\n";
  if (!out.empty()) {
    std::vector<std::vector<double>> rows;
    for (Index i = 0; i < predicted.size(); ++i)
      rows.push_back({static_cast<double>(i), static_cast<double>(predicted[i]),
                      static_cast<double>(data.y[i])});
    io::write_csv(out, {"index", "predicted", "label"}, rows);
    ManifestScope ms("svm predict", 0);
    ms.param("model", model_path);
    ms.param("data", data_path);
    ms.write(out);
  }
  return 0;
}

int cmd_svm_synth(double sigma1, double sigma2, double rho, double nu, long n, int dim,
                  long long seed, const std::string& out, const std::string& planted_out) {
  datagen::TwoBallModel model;
  model.sigma1 = sigma1;
  model.sigma2 = sigma2;
  model.rho = rho;
  model.nu = nu;
  model.n = n;
  model.dim = dim;
  model.seed = static_cast<std::uint64_t>(seed);
  const auto [ds, planted] = datagen::gen_two_ball(model);

  io::LabeledData data;
  data.x.resize(ds.n(), ds.dim());
  data.y.resize(ds.n());
  data.x.topRows(ds.j()) = ds.c_points;
  data.x.bottomRows(ds.l()) = ds.d_points;
  data.y.head(ds.j()).setConstant(1);
  data.y.tail(ds.l()).setConstant(-1);
  io::write_libsvm(out, data);

  ManifestScope ms("svm synth", seed);
  ms.param("sigma1", sigma1);
  ms.param("sigma2", sigma2);
  ms.param("rho", rho);
  ms.param("nu", nu);
  ms.param("n", n);
  ms.param("dim", static_cast<long>(dim));
  ms.param("rng", datagen::kRngAlgorithm);
  ms.write(out);

  if (!planted_out.empty()) {
    nlohmann::json doc;
    doc["j0"] = planted.j0;
    doc["l0"] = planted.l0;
    doc["n_noise"] = planted.n_noise;
    doc["c_indices"] = planted.c_indices;
    doc["d_indices"] = planted.d_indices;
    doc["rng"] = datagen::kRngAlgorithm;
    doc["seed"] = seed;
    std::ofstream f(planted_out);
    if (!f) throw io::WriteError("cannot open " + planted_out + " for writing");
    f << doc.dump(2) << "\n";
    ms.write(planted_out);
  }
  std::cout << "wrote " << ds.n() << " samples (" << planted.j0 << " + " << planted.l0
            << " planted, " << planted.n_noise << " noise)\n";
  return 0;
}

int cmd_svm_psi_curve(long n, double theta_min, double theta_max, long points,
                      const std::string& out) {
  const auto hp = svm::Hyperparams::for_size_radius(n, 1.0);
  std::vector<std::vector<double>> rows;
  for (long i = 0; i < points; ++i) {
    const double theta =
        theta_min + (theta_max - theta_min) * static_cast<double>(i) / static_cast<double>(points - 1);
    rows.push_back({theta, svm::psi(theta, hp), svm::psi_prime(theta, hp)});
  }
  io::write_csv(out, {"theta", "psi", "psi_prime"}, rows);
  ManifestScope ms("svm psi-curve", 0);
  ms.param("n", n);
  ms.param("theta_min", theta_min);
  ms.param("theta_max", theta_max);
  ms.param("points", points);
  ms.write(out);
  std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
  return 0;
}

int cmd_bench_compare(const std::string& instance_path, double tol, long max_iter,
                      const std::string& out) {
  const auto inst = esp::normalize_instance(io::read_esp_instance(instance_path));
  const auto early = esp::solve_esp(inst, esp::StopMode::EarlyStop, 0.0, max_iter);
  const auto tolerance = esp::solve_esp(inst, esp::StopMode::Tolerance, tol, max_iter);

  std::cout << "mode          iterations  separator_found\n";
  std::cout << "early-stop    " << early.report.iterations << "  " << (early.separator ? 1 : 0)
            << "\n";
  std::cout << "tolerance     " << tolerance.report.iterations << "  "
            << (tolerance.separator ? 1 : 0) << "\n";

  if (!out.empty()) {
    io::write_csv(out, {"mode", "iterations", "separator_found"},
                  {{0.0, static_cast<double>(early.report.iterations),
                    early.separator ? 1.0 : 0.0},
                   {1.0, static_cast<double>(tolerance.report.iterations),
                    tolerance.separator ? 1.0 : 0.0}});
    ManifestScope ms("bench compare", 0);
    ms.param("instance", instance_path);
    ms.param("tol", tol);
    ms.param("max_iter", max_iter);
    ms.write(out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FISTA solvers for ellipsoid separation and soft-margin SVMs with "
               "data-dependent early stopping"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // esp
  auto* esp_cmd = app.add_subcommand("esp", "ellipsoid separation problem");
  esp_cmd->require_subcommand(1);

  std::string solve_instance, solve_mode = "early", solve_out;
  double solve_tol = 1e-6;
  long solve_max_iter = 100000;
  auto* esp_solve = esp_cmd->add_subcommand("solve", "solve one instance");
  esp_solve->add_option("--instance", solve_instance, "instance JSON file")->required();
  esp_solve->add_option("--mode", solve_mode, "stopping rule")
      ->check(CLI::IsMember({"early", "tol"}))
      ->capture_default_str();
  esp_solve->add_option("--tol", solve_tol, "projected-step tolerance (tol mode)")
      ->capture_default_str();
  esp_solve->add_option("--max-iter", solve_max_iter, "iteration cap")->capture_default_str();
  esp_solve->add_option("--out", solve_out, "per-iteration report CSV");

  double sw_dmin = 0.01, sw_dmax = 1.0, sw_dstep = 0.01, sw_omega = 0.1, sw_eps = 1e-3;
  long long sw_seed = 1;
  long sw_max_iter = 100;
  std::string sw_out;
  auto* esp_sweep = esp_cmd->add_subcommand("sweep", "2D distance sweep");
  esp_sweep->add_option("--d-min", sw_dmin, "first center distance")->capture_default_str();
  esp_sweep->add_option("--d-max", sw_dmax, "last center distance")->capture_default_str();
  esp_sweep->add_option("--d-step", sw_dstep, "distance increment")->capture_default_str();
  esp_sweep->add_option("--seed", sw_seed, "shape-matrix seed")->capture_default_str();
  esp_sweep->add_option("--omega", sw_omega, "shape scale omega")->capture_default_str();
  esp_sweep->add_option("--eps", sw_eps, "shape regularization eps")->capture_default_str();
  esp_sweep->add_option("--max-iter", sw_max_iter, "per-point iteration cap")
      ->capture_default_str();
  esp_sweep->add_option("--out", sw_out, "sweep CSV")->required();

  std::string diag_instance;
  long diag_iters = 10000;
  auto* esp_diag = esp_cmd->add_subcommand("diagnose", "PDHG displacement estimate");
  esp_diag->add_option("--instance", diag_instance, "instance JSON file")->required();
  esp_diag->add_option("--iters", diag_iters, "PDHG iterations")->capture_default_str();

  std::string mn_images, mn_labels, mn_out;
  long mn_per_class = 1;
  long long mn_seed = 1;
  double mn_eps = 1e-10, mn_alpha = 0.5;
  auto* esp_mnist = esp_cmd->add_subcommand("mnist", "build an instance from IDX digit files");
  esp_mnist->add_option("--images", mn_images, "IDX image file")->required();
  esp_mnist->add_option("--labels", mn_labels, "IDX label file")->required();
  esp_mnist->add_option("--per-class", mn_per_class, "digits per class")->capture_default_str();
  esp_mnist->add_option("--seed", mn_seed, "sampling seed")->capture_default_str();
  esp_mnist->add_option("--eps", mn_eps, "shape floor")->capture_default_str();
  esp_mnist->add_option("--alpha", mn_alpha, "confidence stretch")->capture_default_str();
  esp_mnist->add_option("--out", mn_out, "instance JSON output")->required();

  // svm
  auto* svm_cmd = app.add_subcommand("svm", "soft-margin SVM via the perturbed dual");
  svm_cmd->require_subcommand(1);

  std::string tr_data, tr_model, tr_trace;
  double tr_delta_min = 1e-4;
  long tr_max_iter = 100000;
  auto* svm_train = svm_cmd->add_subcommand("train", "train on LIBSVM data");
  svm_train->add_option("--data", tr_data, "LIBSVM data file")->required();
  svm_train->add_option("--delta-min", tr_delta_min, "minimum acceptable improvement in p")
      ->capture_default_str();
  svm_train->add_option("--max-iter", tr_max_iter, "iteration cap")->capture_default_str();
  svm_train->add_option("--model", tr_model, "model JSON output")->required();
  svm_train->add_option("--trace", tr_trace, "per-iteration trace CSV");

  std::string pr_model, pr_data, pr_out;
  auto* svm_predict = svm_cmd->add_subcommand("predict", "evaluate a model on LIBSVM data");
  svm_predict->add_option("--model", pr_model, "model JSON file")->required();
  svm_predict->add_option("--data", pr_data, "LIBSVM data file")->required();
  svm_predict->add_option("--out", pr_out, "per-sample prediction CSV");

  double sy_sigma1 = 0.75, sy_sigma2 = 0.75, sy_rho = 0.05, sy_nu = 0.01;
  long sy_n = 300;
  int sy_dim = 2;
  long long sy_seed = 1;
  std::string sy_out, sy_planted;
  auto* svm_synth = svm_cmd->add_subcommand("synth", "generate two-ball data");
  svm_synth->add_option("--sigma1", sy_sigma1, "first cluster center distance")
      ->capture_default_str();
  svm_synth->add_option("--sigma2", sy_sigma2, "second cluster center distance")
      ->capture_default_str();
  svm_synth->add_option("--rho", sy_rho, "cluster radius")->capture_default_str();
  svm_synth->add_option("--nu", sy_nu, "noise fraction bound")->capture_default_str();
  svm_synth->add_option("--n", sy_n, "sample count")->capture_default_str();
  svm_synth->add_option("--dim", sy_dim, "feature dimension")->capture_default_str();
  svm_synth->add_option("--seed", sy_seed, "generator seed")->capture_default_str();
  svm_synth->add_option("--out", sy_out, "LIBSVM output file")->required();
  svm_synth->add_option("--planted-out", sy_planted, "planted index JSON");

  long pc_n = 100, pc_points = 1001;
  double pc_tmin = -2.0, pc_tmax = 3.0;
  std::string pc_out;
  auto* svm_psi = svm_cmd->add_subcommand("psi-curve", "tabulate psi and psi'");
  svm_psi->add_option("--n", pc_n, "sample count defining gamma and mu")->capture_default_str();
  svm_psi->add_option("--theta-min", pc_tmin, "first margin value")->capture_default_str();
  svm_psi->add_option("--theta-max", pc_tmax, "last margin value")->capture_default_str();
  svm_psi->add_option("--points", pc_points, "row count")->capture_default_str();
  svm_psi->add_option("--out", pc_out, "CSV output")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "comparisons");
  bench_cmd->require_subcommand(1);
  std::string bc_instance, bc_out;
  double bc_tol = 1e-6;
  long bc_max_iter = 100000;
  auto* bench_compare = bench_cmd->add_subcommand("compare", "early-stop vs tolerance-based");
  bench_compare->add_option("--instance", bc_instance, "instance JSON file")->required();
  bench_compare->add_option("--tol", bc_tol, "tolerance-mode threshold")->capture_default_str();
  bench_compare->add_option("--max-iter", bc_max_iter, "iteration cap")->capture_default_str();
  bench_compare->add_option("--out", bc_out, "two-row CSV");

  if (argc <= 1) {
    std::cout << app.help();
    return 1;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (esp_solve->parsed())
      return cmd_esp_solve(solve_instance, solve_mode, solve_tol, solve_max_iter, solve_out);
    if (esp_sweep->parsed())
      return cmd_esp_sweep(sw_dmin, sw_dmax, sw_dstep, sw_seed, sw_omega, sw_eps, sw_max_iter,
                           sw_out);
    if (esp_diag->parsed()) return cmd_esp_diagnose(diag_instance, diag_iters);
    if (esp_mnist->parsed())
      return cmd_esp_mnist(mn_images, mn_labels, mn_per_class, mn_seed, mn_eps, mn_alpha, mn_out);
    if (svm_train->parsed())
      return cmd_svm_train(tr_data, tr_delta_min, tr_max_iter, tr_model, tr_trace);
    if (svm_predict->parsed()) return cmd_svm_predict(pr_model, pr_data, pr_out);
    if (svm_synth->parsed())
      return cmd_svm_synth(sy_sigma1, sy_sigma2, sy_rho, sy_nu, sy_n, sy_dim, sy_seed, sy_out,
                           sy_planted);
    if (svm_psi->parsed()) return cmd_svm_psi_curve(pc_n, pc_tmin, pc_tmax, pc_points, pc_out);
    if (bench_compare->parsed()) return cmd_bench_compare(bc_instance, bc_tol, bc_max_iter, bc_out);
  } catch (const io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const datagen::BadImage& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const datagen::InvalidDataModel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const svm::InvalidDataModel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
