#include "cflines/classifier.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cflines {

namespace {

void format_double(std::string& buf, double v) {
  char tmp[40];
  std::snprintf(tmp, sizeof(tmp), "%.17g", v);
  buf += tmp;
}

int argmax_class(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (int c = 1; c < v.size(); ++c)
    if (v(c) > v(best)) best = c;  // strict, so ties keep the lowest index
  return best;
}

void check_model_shape(const ModelParams& p) {
  if (p.W.rows() != kClasses || p.W.cols() != kFeatures || p.m.size() != kClasses ||
      p.a.size() != kClasses)
    throw std::domain_error("model parameters have the wrong shape");
}

}  // namespace

Mode mode_from_string(const std::string& s) {
  if (s == "cf") return Mode::ContinuedFraction;
  if (s == "linear") return Mode::Linear;
  throw std::domain_error("unknown mode '" + s + "' (expected cf or linear)");
}

std::string to_string(Mode mode) {
  return mode == Mode::ContinuedFraction ? "cf" : "linear";
}

ForwardResult forward(const ModelParams& params, Mode mode,
                      const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_model_shape(params);
  if (x.size() != kFeatures)
    throw std::domain_error("forward: x must have " + std::to_string(kFeatures) + " components");
  if (!x.allFinite() || x(0) != 1.0)
    throw std::domain_error("forward: x must be finite with bias component 1");
  ForwardResult r;
  r.wx.noalias() = params.W * x;
  if (mode == Mode::Linear) {
    r.y = r.wx;
  } else {
    r.y.resize(kClasses);
    for (int c = 0; c < kClasses; ++c)
      r.y(c) = solve_y<double>({params.a(c), params.m(c)}, r.wx(c)).y;
  }
  r.sigma = r.y.unaryExpr([](double v) { return sigmoid(v); });
  return r;
}

BatchEval forward_batch(const ModelParams& params, Mode mode,
                        const Eigen::Ref<const Eigen::MatrixXd>& X) {
  check_model_shape(params);
  BatchEval ev;
  ev.wx.noalias() = X * params.W.transpose();
  if (mode == Mode::Linear) {
    ev.y = ev.wx;
  } else {
    ev.y.resize(ev.wx.rows(), ev.wx.cols());
    for (int c = 0; c < kClasses; ++c) {
      const CurveParams<double> curve{params.a(c), params.m(c)};
      for (Eigen::Index j = 0; j < ev.wx.rows(); ++j)
        ev.y(j, c) = solve_y(curve, ev.wx(j, c)).y;
    }
  }
  ev.sigma = ev.y.unaryExpr([](double v) { return sigmoid(v); });
  return ev;
}

double loss(const ModelParams& params, Mode mode, const Eigen::Ref<const Eigen::MatrixXd>& X,
            const Eigen::Ref<const Eigen::VectorXi>& labels) {
  if (X.rows() == 0) throw std::domain_error("loss: empty batch");
  if (X.rows() != labels.size()) throw std::domain_error("loss: feature/label count mismatch");
  const BatchEval ev = forward_batch(params, mode, X);
  double total = 0.0;
  for (Eigen::Index j = 0; j < X.rows(); ++j) total += log_sigmoid(ev.y(j, labels(j)));
  return -total / static_cast<double>(X.rows());
}

GradY grad_y_components(const ModelParams& params, int cls, double y, double wx, double x_i) {
  check_model_shape(params);
  if (cls < 0 || cls >= kClasses) throw std::domain_error("grad_y_components: class out of range");
  if (!(params.a(cls) > 0.0))
    throw std::domain_error("grad_y_components: requires a > 0 (continued-fraction mode)");
  const double den = 1.0 + 3.0 * params.a(cls) * y * y;
  return {params.m(cls) * x_i / den, wx / den, -y * y * y / den};
}

Eigen::VectorXd a_gradient(const ModelParams& params, const BatchEval& eval,
                           const Eigen::Ref<const Eigen::MatrixXd>& P) {
  const double n = static_cast<double>(eval.y.rows());
  Eigen::VectorXd g(kClasses);
  for (int c = 0; c < kClasses; ++c) {
    const auto y = eval.y.col(c).array();
    const auto r = eval.sigma.col(c).array() - P.col(c).array();
    g(c) = (r * (-y.cube()) / (1.0 + 3.0 * params.a(c) * y.square())).sum() / n;
  }
  return g;
}

Eigen::VectorXd m_gradient(const ModelParams& params, const BatchEval& eval,
                           const Eigen::Ref<const Eigen::MatrixXd>& P) {
  const double n = static_cast<double>(eval.y.rows());
  Eigen::VectorXd g(kClasses);
  for (int c = 0; c < kClasses; ++c) {
    const auto y = eval.y.col(c).array();
    const auto r = eval.sigma.col(c).array() - P.col(c).array();
    g(c) = (r * eval.wx.col(c).array() / (1.0 + 3.0 * params.a(c) * y.square())).sum() / n;
  }
  return g;
}

Eigen::MatrixXd w_gradient(const ModelParams& params, Mode mode, const BatchEval& eval,
                           const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::MatrixXd>& P) {
  Eigen::MatrixXd G = eval.sigma - P;
  if (mode == Mode::ContinuedFraction) {
    for (int c = 0; c < kClasses; ++c) {
      const auto y = eval.y.col(c).array();
      G.col(c).array() *= params.m(c) / (1.0 + 3.0 * params.a(c) * y.square());
    }
  }
  return (G.transpose() * X) / static_cast<double>(X.rows());
}

void backtrack_a(Eigen::VectorXd& a, double& alpha, const Eigen::Ref<const Eigen::VectorXd>& g,
                 int cap) {
  const Eigen::VectorXd prev = a;
  int reductions = 0;
  for (;;) {
    const Eigen::VectorXd proposed = prev - alpha * g;
    if ((proposed.array() > 0.0).all()) {
      a = proposed;
      return;
    }
    if (reductions >= cap) {
      int bad = 0;
      while (bad < proposed.size() && proposed(bad) > 0.0) ++bad;
      throw std::runtime_error("update_a: backtracking cap (" + std::to_string(cap) +
                               ") exceeded, a[" + std::to_string(bad) + "] still not positive");
    }
    alpha /= 1.1;
    ++reductions;
  }
}

void update_a(ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::MatrixXd>& P, int backtrack_cap) {
  const BatchEval ev = forward_batch(params, Mode::ContinuedFraction, X);
  const Eigen::VectorXd g = a_gradient(params, ev, P);
  backtrack_a(params.a, params.alpha, g, backtrack_cap);
}

void update_m(ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::MatrixXd>& P) {
  // y carries the a set earlier in this batch
  const BatchEval ev = forward_batch(params, Mode::ContinuedFraction, X);
  params.m -= m_gradient(params, ev, P);
}

void update_w(ModelParams& params, Mode mode, const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::MatrixXd>& P) {
  const BatchEval ev = forward_batch(params, mode, X);
  params.W -= w_gradient(params, mode, ev, X, P);
}

double evaluate(const ModelParams& params, Mode mode, const ImageSet& test) {
  if (test.n() == 0) throw std::domain_error("evaluate: empty test set");
  const BatchEval ev = forward_batch(params, mode, test.features);
  Eigen::Index correct = 0;
  for (Eigen::Index j = 0; j < test.n(); ++j)
    if (argmax_class(ev.sigma.row(j).transpose()) == test.labels(j)) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.n());
}

ModelParams initial_params(const TrainConfig& config) {
  if (config.mode == Mode::ContinuedFraction && !(config.a0 > 0.0))
    throw std::domain_error("train: a0 must be positive in continued-fraction mode");
  if (!(config.alpha0 > 0.0)) throw std::domain_error("train: alpha0 must be positive");
  ModelParams p;
  p.W.resize(kClasses, kFeatures);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < kClasses; ++r)
    for (int c = 0; c < kFeatures; ++c) p.W(r, c) = normal(rng);
  if (config.mode == Mode::Linear) {
    p.m = Eigen::VectorXd::Ones(kClasses);
    p.a = Eigen::VectorXd::Zero(kClasses);
  } else {
    p.m = Eigen::VectorXd::Constant(kClasses, config.m0);
    p.a = Eigen::VectorXd::Constant(kClasses, config.a0);
  }
  p.alpha = config.alpha0;
  return p;
}

TrainResult train(const TrainConfig& config, const ImageSet& train_set,
                  const ImageSet& test_set) {
  if (config.iterations < 0) throw std::domain_error("train: iterations must be >= 0");
  TrainResult result;
  result.params = initial_params(config);
  ModelParams& p = result.params;

  for (int iter = 1; iter <= config.iterations; ++iter) {
    BatchPlan plan = config.batch;
    if (plan.shuffled) plan.seed = config.batch.seed + static_cast<std::uint64_t>(iter - 1);
    for (const auto& rows : batches(train_set, plan)) {
      const Eigen::MatrixXd X = gather_rows(train_set.features, rows);
      const Eigen::MatrixXd P = one_hot_rows(train_set, rows);
      if (config.mode == Mode::ContinuedFraction) {
        update_a(p, X, P, config.backtrack_cap);
        update_m(p, X, P);
      }
      update_w(p, config.mode, X, P);
    }
    TraceRow row;
    row.iteration = iter;
    row.loss = loss(p, config.mode, train_set.features, train_set.labels);
    row.accuracy_percent = evaluate(p, config.mode, test_set);
    row.alpha = p.alpha;
    row.a = p.a;
    row.m = p.m;
    row.w_min = p.W.rowwise().minCoeff();
    row.w_max = p.W.rowwise().maxCoeff();
    result.trace.push_back(std::move(row));
  }
  return result;
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  std::string line = "iteration,loss,accuracy_percent,alpha";
  for (const char* name : {"a", "m", "wmin", "wmax"})
    for (int c = 0; c < kClasses; ++c) line += "," + std::string(name) + "_" + std::to_string(c);
  out << line << "\n";
  for (const TraceRow& row : trace) {
    line = std::to_string(row.iteration);
    for (double v : {row.loss, row.accuracy_percent, row.alpha}) {
      line += ",";
      format_double(line, v);
    }
    for (const Eigen::VectorXd* vec : {&row.a, &row.m, &row.w_min, &row.w_max})
      for (int c = 0; c < kClasses; ++c) {
        line += ",";
        format_double(line, (*vec)(c));
      }
    out << line << "\n";
  }
}

void write_trace_csv(const std::string& path, const TrainTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_trace_csv(out, trace);
  if (!out.good()) throw std::runtime_error(path + ": write failed");
}

void write_params(const std::string& path, const ParamsFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  std::string buf = "cflines-params v1\n";
  buf += "mode " + to_string(file.mode) + "\n";
  buf += "iterations " + std::to_string(file.iterations) + "\n";
  buf += "seed " + std::to_string(file.seed) + "\n";
  buf += "alpha ";
  format_double(buf, file.params.alpha);
  buf += "\na";
  for (int c = 0; c < kClasses; ++c) {
    buf += " ";
    format_double(buf, file.params.a(c));
  }
  buf += "\nm";
  for (int c = 0; c < kClasses; ++c) {
    buf += " ";
    format_double(buf, file.params.m(c));
  }
  buf += "\nW " + std::to_string(kClasses) + " " + std::to_string(kFeatures) + "\n";
  for (int r = 0; r < kClasses; ++r) {
    for (int c = 0; c < kFeatures; ++c) {
      if (c > 0) buf += " ";
      format_double(buf, file.params.W(r, c));
    }
    buf += "\n";
  }
  out << buf;
  if (!out.good()) throw std::runtime_error(path + ": write failed");
}

ParamsFile read_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  auto fail = [&path](const std::string& what) {
    return std::runtime_error(path + ": " + what);
  };
  std::string line, word;
  if (!std::getline(in, line) || line != "cflines-params v1") throw fail("not a parameter file");
  ParamsFile file;
  std::string mode_word;
  if (!(in >> word >> mode_word) || word != "mode") throw fail("missing mode");
  file.mode = mode_from_string(mode_word);
  if (!(in >> word >> file.iterations) || word != "iterations") throw fail("missing iterations");
  if (!(in >> word >> file.seed) || word != "seed") throw fail("missing seed");
  if (!(in >> word >> file.params.alpha) || word != "alpha") throw fail("missing alpha");
  file.params.a.resize(kClasses);
  if (!(in >> word) || word != "a") throw fail("missing a");
  for (int c = 0; c < kClasses; ++c)
    if (!(in >> file.params.a(c))) throw fail("truncated a vector");
  file.params.m.resize(kClasses);
  if (!(in >> word) || word != "m") throw fail("missing m");
  for (int c = 0; c < kClasses; ++c)
    if (!(in >> file.params.m(c))) throw fail("truncated m vector");
  int rows = 0, cols = 0;
  if (!(in >> word >> rows >> cols) || word != "W" || rows != kClasses || cols != kFeatures)
    throw fail("bad W header");
  file.params.W.resize(kClasses, kFeatures);
  for (int r = 0; r < kClasses; ++r)
    for (int c = 0; c < kFeatures; ++c)
      if (!(in >> file.params.W(r, c))) throw fail("truncated W matrix");
  return file;
}

}  // namespace cflines
