#pragma once

#include "cflines/curve.hpp"
#include "cflines/dataset.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cflines {

// sigma(y(w.x)) classifier with one bounded curve per class.  Linear mode
// freezes m = 1 and a = 0, which makes the model plain logistic regression.
enum class Mode { ContinuedFraction, Linear };

Mode mode_from_string(const std::string& s);  // "cf" | "linear"
std::string to_string(Mode mode);

struct ModelParams {
  Eigen::MatrixXd W;   // kClasses x kFeatures, per-class weights incl. bias
  Eigen::VectorXd m;   // kClasses
  Eigen::VectorXd a;   // kClasses, strictly positive in continued-fraction mode
  double alpha = 1.0;  // step size for a; only ever decreases
};

inline double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// log(sigmoid(v)) through softplus; stays finite for |v| in the hundreds,
// which linear-mode w.x reaches.
inline double log_sigmoid(double v) {
  return v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
}

struct ForwardResult {
  Eigen::VectorXd wx;     // per-class w.x
  Eigen::VectorXd y;      // curve root (CF) or wx (linear)
  Eigen::VectorXd sigma;  // 1 / (1 + exp(-y))
};

ForwardResult forward(const ModelParams& params, Mode mode,
                      const Eigen::Ref<const Eigen::VectorXd>& x);

// Batch counterpart of forward; each matrix is n x kClasses.
struct BatchEval {
  Eigen::MatrixXd wx, y, sigma;
};

BatchEval forward_batch(const ModelParams& params, Mode mode,
                        const Eigen::Ref<const Eigen::MatrixXd>& X);

// Mean true-class negative log likelihood, -(1/n) sum_j log sigma_j at the
// label class, computed from y through log_sigmoid.
double loss(const ModelParams& params, Mode mode, const Eigen::Ref<const Eigen::MatrixXd>& X,
            const Eigen::Ref<const Eigen::VectorXi>& labels);

struct GradY {
  double dy_dw;  // m x_i / (1 + 3 a y^2)
  double dy_dm;  // w.x / (1 + 3 a y^2)
  double dy_da;  // -y^3 / (1 + 3 a y^2)
};

GradY grad_y_components(const ModelParams& params, int cls, double y, double wx, double x_i);

// Batch-mean loss gradients evaluated at eval, one entry per class.
Eigen::VectorXd a_gradient(const ModelParams& params, const BatchEval& eval,
                           const Eigen::Ref<const Eigen::MatrixXd>& P);
Eigen::VectorXd m_gradient(const ModelParams& params, const BatchEval& eval,
                           const Eigen::Ref<const Eigen::MatrixXd>& P);
Eigen::MatrixXd w_gradient(const ModelParams& params, Mode mode, const BatchEval& eval,
                           const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::MatrixXd>& P);

// a <- a - alpha * g, re-proposed with alpha / 1.1 whenever any component
// would leave (0, inf).  Reverts the whole vector per violation.  Throws
// after cap reductions, naming the offending class.
void backtrack_a(Eigen::VectorXd& a, double& alpha, const Eigen::Ref<const Eigen::VectorXd>& g,
                 int cap);

// The three-stage per-batch schedule.  Each stage recomputes y (and sigma)
// with the parameters left by the previous stage before taking its step.
void update_a(ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::MatrixXd>& P, int backtrack_cap = 500);
void update_m(ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::MatrixXd>& P);
void update_w(ModelParams& params, Mode mode, const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::MatrixXd>& P);

// Percent of test samples whose argmax sigma matches the label
// (ties resolve to the lowest class index).
double evaluate(const ModelParams& params, Mode mode, const ImageSet& test);

struct TraceRow {
  int iteration = 0;
  double loss = 0.0;
  double accuracy_percent = 0.0;
  double alpha = 0.0;
  Eigen::VectorXd a, m, w_min, w_max;  // kClasses each
};
using TrainTrace = std::vector<TraceRow>;

struct TrainConfig {
  Mode mode = Mode::ContinuedFraction;
  double a0 = 1.0;
  double m0 = 0.0;
  double alpha0 = 1.0;
  int iterations = 50;
  BatchPlan batch;
  std::uint64_t seed = 0;  // weight init seed
  int backtrack_cap = 500;
};

// W entries drawn from a standard normal seeded by config.seed (row by
// row); m and a from m0/a0, or frozen to 1 and 0 in linear mode.
ModelParams initial_params(const TrainConfig& config);

struct TrainResult {
  TrainTrace trace;
  ModelParams params;
};

// Mini-batch gradient descent over the training set.  Per batch, in order:
// update a (with backtracking), recompute y, update m, recompute y,
// update w.  Per iteration (one pass over all batches) records training
// loss, test accuracy and parameter snapshots.  Deterministic given the
// config.
TrainResult train(const TrainConfig& config, const ImageSet& train_set,
                  const ImageSet& test_set);

// CSV with columns iteration,loss,accuracy_percent,alpha,a_0..a_9,
// m_0..m_9,wmin_0..wmin_9,wmax_0..wmax_9; values printed with %.17g so
// equal runs produce byte-identical files.
void write_trace_csv(std::ostream& out, const TrainTrace& trace);
void write_trace_csv(const std::string& path, const TrainTrace& trace);

// Parameter dump with a small header (mode, iteration count, seed); %.17g
// text round-trips doubles exactly, so evaluate on a reloaded file
// reproduces the recorded accuracy.
struct ParamsFile {
  Mode mode = Mode::ContinuedFraction;
  int iterations = 0;
  std::uint64_t seed = 0;
  ModelParams params;
};

void write_params(const std::string& path, const ParamsFile& file);
ParamsFile read_params(const std::string& path);

}  // namespace cflines
