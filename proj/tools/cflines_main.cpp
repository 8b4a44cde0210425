// cflines: bounded-line curves (1 + a y^2) y = m x, their continued-fraction
// convergents, and the sigma(y(w.x)) image classifier with its plain
// logistic baseline.  Every subcommand is deterministic given its flags and
// writes plot-ready CSV files.

#include <CLI11.hpp>

#include "cflines/classifier.hpp"
#include "cflines/contfrac.hpp"
#include "cflines/curve.hpp"
#include "cflines/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(long double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.21Lg", v);
  return buf;
}

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

struct DataFlags {
  std::string train_images, train_labels, test_images, test_labels;
  long long train_n = -1, test_n = -1;
};

cflines::ImageSet load_subset(const std::string& images, const std::string& labels,
                              long long n) {
  cflines::ImageSet set = cflines::load_image_set(images, labels);
  if (n >= 0) set = cflines::subset_prefix(set, static_cast<Eigen::Index>(n));
  return set;
}

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

// Expands `--config file` into `--key value` flags appended after the
// existing arguments.  Keys already given on the command line are skipped,
// so explicit flags win.
void expand_config(std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::domain_error(path + ": cannot open config file");
  std::string line;
  while (std::getline(in, line)) {
    line = trimmed(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::domain_error(path + ": expected key=value, got '" + line + "'");
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    const std::string flag = "--" + key;
    bool given = false;
    for (const std::string& arg : args)
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) given = true;
    if (given) continue;
    args.push_back(flag);
    if (!value.empty()) args.push_back(value);
  }
}

void cmd_solve(double a, double m, double x) {
  const auto s = cflines::solve_y<double>({a, m}, x);
  std::printf("y = %s\n", fmt(s.y).c_str());
  std::printf("t = %s\n", fmt(s.t).c_str());
  std::printf("comp_i = %s\n", fmt(s.comp_i).c_str());
  std::printf("comp_ii = %s\n", fmt(s.comp_ii).c_str());
  std::printf("residual = %s\n", fmt(cflines::residual<double>({a, m}, x, s.y)).c_str());
}

void cmd_curve(const std::vector<double>& a_list, const std::vector<double>& m_list,
               double x_min, double x_max, long long points, const std::string& out_dir) {
  auto out = open_csv(out_dir, "curve.csv");
  out << "a,m,x,y\n";
  for (double a : a_list)
    for (double m : m_list) {
      const auto grid =
          cflines::sample_curve<double>({a, m}, x_min, x_max, static_cast<Eigen::Index>(points));
      for (Eigen::Index i = 0; i < grid.rows(); ++i)
        out << fmt(a) << "," << fmt(m) << "," << fmt(grid(i, 0)) << "," << fmt(grid(i, 1))
            << "\n";
    }
}

void cmd_polar(double m_min, double m_max, double m_step, const std::string& out_dir) {
  if (!(m_step > 0.0)) throw std::domain_error("polar: --m-step must be positive");
  if (!(m_min <= m_max)) throw std::domain_error("polar: requires m-min <= m-max");
  auto out = open_csv(out_dir, "polar.csv");
  out << "m,theta,residual\n";
  // long double end to end: a double theta cannot hold the root tightly
  // enough for residuals at the 1e-12 scale once |m| reaches the hundreds
  const long long steps = static_cast<long long>(std::floor((m_max - m_min) / m_step + 0.5));
  for (long long k = 0; k <= steps; ++k) {
    const long double m = static_cast<long double>(m_min) + static_cast<long double>(k) *
                                                                static_cast<long double>(m_step);
    const long double theta = cflines::polar_theta(m);
    out << fmt(static_cast<double>(m)) << "," << fmt(theta) << ","
        << fmt(cflines::polar_residual(m, theta)) << "\n";
  }
}

void cmd_components(double a, const std::vector<double>& m_list, double x,
                    const std::string& out_dir) {
  const auto pairs = cflines::sample_i_ii(a, m_list, x);
  auto out = open_csv(out_dir, "components.csv");
  out << "a,m,x,comp_i,comp_ii\n";
  for (Eigen::Index i = 0; i < pairs.rows(); ++i)
    out << fmt(a) << "," << fmt(m_list[static_cast<std::size_t>(i)]) << "," << fmt(x) << ","
        << fmt(pairs(i, 0)) << "," << fmt(pairs(i, 1)) << "\n";
}

void cmd_converge(double a, double m, double x, long long k, const std::string& out_dir) {
  if (k < 1) throw std::domain_error("converge: --k must be >= 1");
  const double y_star = cflines::solve_y<double>({a, m}, x).y;
  const double a_hat = a * m * m * x * x;
  const auto iterates = cflines::fixed_point_iterates<double>({a, m}, x, static_cast<int>(k) + 1);
  const auto conv = cflines::convergents(a_hat, static_cast<int>(k));
  const auto terms = cflines::series_terms(a_hat, static_cast<int>(k));

  auto out = open_csv(out_dir, "converge.csv");
  out << "index,iterate_y,convergent_ratio,series_sum,abs_err\n";
  double sum = 0.0;
  double final_err = 0.0;
  for (long long j = 0; j < k; ++j) {
    sum += terms[static_cast<std::size_t>(j)].value;
    final_err = std::abs(iterates[static_cast<std::size_t>(j) + 1] - y_star);
    out << j << "," << fmt(iterates[static_cast<std::size_t>(j) + 1]) << ","
        << fmt(conv[static_cast<std::size_t>(j)].ratio) << "," << fmt(sum) << ","
        << fmt(final_err) << "\n";
  }
  std::printf("final_abs_error = %s\n", fmt(final_err).c_str());
}

void cmd_train(const DataFlags& data, const std::string& mode_str, double a0, double m0,
               double alpha0, long long iterations, long long batch_size, long long seed,
               bool shuffle, const std::string& out_dir) {
  cflines::TrainConfig cfg;
  cfg.mode = cflines::mode_from_string(mode_str);
  cfg.a0 = a0;
  cfg.m0 = m0;
  cfg.alpha0 = alpha0;
  cfg.iterations = static_cast<int>(iterations);
  cfg.batch.batch_size = static_cast<Eigen::Index>(batch_size);
  cfg.batch.shuffled = shuffle;
  cfg.batch.seed = static_cast<std::uint64_t>(seed);
  cfg.seed = static_cast<std::uint64_t>(seed);

  const cflines::ImageSet train_set =
      load_subset(data.train_images, data.train_labels, data.train_n);
  const cflines::ImageSet test_set = load_subset(data.test_images, data.test_labels, data.test_n);

  const cflines::TrainResult result = cflines::train(cfg, train_set, test_set);

  std::filesystem::create_directories(out_dir);
  const std::string tag = cflines::to_string(cfg.mode);
  const std::string trace_path =
      (std::filesystem::path(out_dir) / ("trace_" + tag + ".csv")).string();
  const std::string params_path =
      (std::filesystem::path(out_dir) / ("params_" + tag + ".txt")).string();
  cflines::write_trace_csv(trace_path, result.trace);
  cflines::write_params(params_path, {cfg.mode, cfg.iterations, cfg.seed, result.params});

  std::printf("trace = %s\n", trace_path.c_str());
  std::printf("params = %s\n", params_path.c_str());
  if (!result.trace.empty())
    std::printf("final_accuracy_percent = %s\n",
                fmt(result.trace.back().accuracy_percent).c_str());
}

void cmd_eval(const std::string& params_path, const DataFlags& data) {
  const cflines::ParamsFile file = cflines::read_params(params_path);
  const cflines::ImageSet test_set = load_subset(data.test_images, data.test_labels, data.test_n);
  const double acc = cflines::evaluate(file.params, file.mode, test_set);
  std::printf("accuracy_percent = %s\n", fmt(acc).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounded-line curves, their continued fractions, and the curve classifier"};
  app.require_subcommand(1);

  // solve
  double a = 1.0, m = 1.0, x = 1.0;
  auto* solve = app.add_subcommand("solve", "real root of a y^3 + y = m x");
  solve->add_option("--a", a, "bound strength (> 0)")->required();
  solve->add_option("--m", m, "slope")->required();
  solve->add_option("--x", x, "input")->required();

  // curve
  std::vector<double> a_list{0.1, 1.0};
  std::vector<double> m_list{-2.0, -1.0, 0.0, 1.0, 2.0};
  double x_min = -5.0, x_max = 5.0;
  long long points = 201;
  std::string out_dir = ".";
  auto* curve = app.add_subcommand("curve", "sample curves into curve.csv");
  curve->add_option("--a", a_list, "a values (a = 0 samples the plain line)")->delimiter(',');
  curve->add_option("--m", m_list, "m values")->delimiter(',');
  curve->add_option("--x-min", x_min);
  curve->add_option("--x-max", x_max);
  curve->add_option("--points", points, "samples per curve");
  curve->add_option("--out-dir", out_dir);

  // polar
  double m_min = -200.0, m_max = 200.0, m_step = 1.0;
  std::string polar_out = ".";
  auto* polar = app.add_subcommand("polar", "polar angles into polar.csv");
  polar->add_option("--m-min", m_min);
  polar->add_option("--m-max", m_max);
  polar->add_option("--m-step", m_step);
  polar->add_option("--out-dir", polar_out);

  // components
  double comp_a = 1.0, comp_x = 1.0;
  std::vector<double> comp_m{1.0};
  std::string comp_out = ".";
  auto* components = app.add_subcommand("components", "root components into components.csv");
  components->add_option("--a", comp_a, "bound strength (> 0)")->required();
  components->add_option("--m", comp_m, "m values")->delimiter(',');
  components->add_option("--x", comp_x);
  components->add_option("--out-dir", comp_out);

  // converge
  double cv_a = 1.0, cv_m = 1.0, cv_x = 1.0;
  long long cv_k = 40;
  std::string cv_out = ".";
  auto* converge =
      app.add_subcommand("converge", "iterates, convergents and series sums into converge.csv");
  converge->add_option("--a", cv_a, "bound strength (> 0)")->required();
  converge->add_option("--m", cv_m)->required();
  converge->add_option("--x", cv_x)->required();
  converge->add_option("--k", cv_k, "number of convergents");
  converge->add_option("--out-dir", cv_out);

  // train
  DataFlags data;
  std::string mode_str = "cf";
  double a0 = 1.0, m0 = 0.0, alpha0 = 1.0;
  long long iterations = 50, batch_size = 600, seed = 0;
  bool shuffle = false;
  std::string train_out = ".";
  std::string config_doc;
  auto* train = app.add_subcommand("train", "train the classifier and export trace + params");
  train->add_option("--config", config_doc,
                    "plain key=value file with these options; explicit flags win");
  train->add_option("--mode", mode_str, "cf | linear")->check(CLI::IsMember({"cf", "linear"}));
  train->add_option("--a0", a0, "initial a (continued-fraction mode)");
  train->add_option("--m0", m0, "initial m (continued-fraction mode)");
  train->add_option("--alpha0", alpha0, "initial step size for a");
  train->add_option("--iterations", iterations);
  train->add_option("--batch-size", batch_size);
  train->add_option("--seed", seed, "weight init and shuffle seed");
  train->add_flag("--shuffle", shuffle, "reshuffle batches each iteration");
  train->add_option("--train-images", data.train_images)->required();
  train->add_option("--train-labels", data.train_labels)->required();
  train->add_option("--test-images", data.test_images)->required();
  train->add_option("--test-labels", data.test_labels)->required();
  train->add_option("--train-n", data.train_n, "use only the first n training samples");
  train->add_option("--test-n", data.test_n, "use only the first n test samples");
  train->add_option("--out-dir", train_out);

  // eval
  std::string params_path;
  DataFlags eval_data;
  auto* eval = app.add_subcommand("eval", "evaluate a parameter dump on a test set");
  eval->add_option("--params", params_path)->required();
  eval->add_option("--test-images", eval_data.test_images)->required();
  eval->add_option("--test-labels", eval_data.test_labels)->required();
  eval->add_option("--test-n", eval_data.test_n);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    expand_config(args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 2;
  }

  try {
    if (solve->parsed()) cmd_solve(a, m, x);
    if (curve->parsed()) cmd_curve(a_list, m_list, x_min, x_max, points, out_dir);
    if (polar->parsed()) cmd_polar(m_min, m_max, m_step, polar_out);
    if (components->parsed()) cmd_components(comp_a, comp_m, comp_x, comp_out);
    if (converge->parsed()) cmd_converge(cv_a, cv_m, cv_x, cv_k, cv_out);
    if (train->parsed())
      cmd_train(data, mode_str, a0, m0, alpha0, iterations, batch_size, seed, shuffle, train_out);
    if (eval->parsed()) cmd_eval(params_path, eval_data);
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
