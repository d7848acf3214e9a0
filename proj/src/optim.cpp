#include "hip/optim.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "hip/core.hpp"
#include "hip/losses.hpp"

namespace hip {

namespace {

constexpr double kStepFloor = 1e-20;
constexpr double kRateFloor = 1e-16;

void check_finite(double v, const char* where) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << where << ": objective became non-finite";
    throw NumericalError(os.str());
  }
}

void standardize_columns(Eigen::MatrixXd& Z) {
  const Index n = Z.rows();
  if (n < 2) return;  // variance undefined; leave untouched
  for (Index k = 0; k < Z.cols(); ++k) {
    const double mean = Z.col(k).mean();
    Z.col(k).array() -= mean;
    const double sd = std::sqrt(Z.col(k).squaredNorm() / static_cast<double>(n - 1));
    if (sd > 1e-12) Z.col(k) /= sd;
  }
}

/// Gradient descent with backtracking line search; FISTA momentum when
/// accelerate is set, with a monotone safeguard that restarts momentum rather
/// than accept an objective increase.
template <class ValueFn, class GradFn>
InnerResult backtracking_descent(Eigen::MatrixXd& x, ValueFn&& value,
                                 GradFn&& grad, const SolverSettings& st,
                                 bool accelerate, InnerTrace* trace) {
  double fx = value(x);
  check_finite(fx, "backtracking_descent");
  if (trace) trace->objective.push_back(fx);

  Eigen::MatrixXd y = x;
  double t = 1.0;
  double step = st.step0;
  bool momentum = false;
  InnerResult result;

  for (int it = 1; it <= st.max_iter; ++it) {
    result.iterations = it;
    const double fy = momentum ? value(y) : fx;
    const Eigen::MatrixXd g = grad(y);
    const double gnorm2 = g.squaredNorm();

    Eigen::MatrixXd z;
    double fz;
    for (;;) {
      z = y - step * g;
      fz = value(z);
      const bool ok = std::isfinite(fz) &&
                      fz <= fy - 0.5 * step * gnorm2 + 1e-12 * (1.0 + std::abs(fy));
      if (ok) break;
      step *= st.shrink;
      if (step < kStepFloor) {  // numerically stationary at y
        z = y;
        fz = fy;
        break;
      }
    }

    if (fz > fx + 1e-12 * (1.0 + std::abs(fx))) {
      if (momentum) {  // discard extrapolation, restart from the best iterate
        y = x;
        t = 1.0;
        momentum = false;
        continue;
      }
      break;  // plain step cannot decrease: stationary
    }

    const double rel = (fx - fz) / std::max(1.0, std::abs(fx));
    if (accelerate) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = z + ((t - 1.0) / t_next) * (z - x);
      t = t_next;
      momentum = true;
    } else {
      y = z;
    }
    x = z;
    fx = fz;
    if (trace) {
      trace->objective.push_back(fx);
      trace->step.push_back(step);
    }
    if (rel < st.tol) return result;
  }
  result.hit_cap = result.iterations >= st.max_iter;
  return result;
}

/// Adagrad with a monotonicity safeguard: a step that raises the objective
/// beyond the slack is undone and the base rate is shrunk.
template <class ValueFn, class GradFn>
InnerResult adagrad_descent(Eigen::MatrixXd& x, ValueFn&& value, GradFn&& grad,
                            const SolverSettings& st, InnerTrace* trace) {
  double fx = value(x);
  check_finite(fx, "adagrad_descent");
  if (trace) {
    trace->objective.push_back(fx);
    trace->iterates.push_back(x);
  }

  Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(x.rows(), x.cols());
  double rate = st.adagrad_rate;
  InnerResult result;

  for (int it = 1; it <= st.max_iter; ++it) {
    result.iterations = it;
    const Eigen::MatrixXd g = grad(x);
    const Eigen::ArrayXXd acc_new = acc + g.array().square();
    const Eigen::MatrixXd xn =
        x - (rate * g.array() / (acc_new + st.adagrad_floor).sqrt()).matrix();
    const double fn = value(xn);
    if (!std::isfinite(fn) || fn > fx + 1e-10 * (1.0 + std::abs(fx))) {
      rate *= st.shrink;
      if (rate < kRateFloor) return result;
      continue;
    }
    acc = acc_new;
    const double rel = (fx - fn) / std::max(1.0, std::abs(fx));
    x = xn;
    fx = fn;
    if (trace) {
      trace->objective.push_back(fx);
      trace->iterates.push_back(x);
    }
    if (rel < st.tol) return result;
  }
  result.hit_cap = true;
  return result;
}

/// Association term for fixed loadings, as a quadratic in Z:
/// sum_d |X - Z B^T|^2 = xnorm2 - 2<P, Z> + <Z Q, Z>.
struct ZQuadratic {
  Eigen::MatrixXd P;  // sum_d X^{d,s} B^{d,s}
  Eigen::MatrixXd Q;  // sum_d B^T B
  double xnorm2 = 0.0;

  double value(const Eigen::MatrixXd& Z) const {
    return xnorm2 - 2.0 * P.cwiseProduct(Z).sum() +
           (Z * Q).cwiseProduct(Z).sum();
  }
  Eigen::MatrixXd grad(const Eigen::MatrixXd& Z) const {
    return 2.0 * (Z * Q - P);
  }
};

}  // namespace

InnerResult update_z(const MultiViewDataset& data, HipParams& params,
                     const FitConfig& config, const SolverSettings& settings,
                     double prediction_weight, InnerTrace* trace) {
  (void)config;
  InnerResult total;
  for (Index s = 0; s < data.num_subgroups(); ++s) {
    ZQuadratic quad;
    quad.P = Eigen::MatrixXd::Zero(data.n(s), params.k());
    quad.Q = Eigen::MatrixXd::Zero(params.k(), params.k());
    for (Index d = 0; d < data.num_views(); ++d) {
      const Eigen::MatrixXd B = params.loading(d, s);
      quad.P.noalias() += data.x(d, s) * B;
      quad.Q.noalias() += B.transpose() * B;
      quad.xnorm2 += data.x(d, s).squaredNorm();
    }
    const OutcomeData& outcome = data.outcome[s];
    const auto value = [&](const Eigen::MatrixXd& Z) {
      double v = quad.value(Z);
      if (prediction_weight != 0.0)
        v += prediction_weight *
             prediction_loss(outcome, Z, params.theta, params.beta0, params.tau);
      return v;
    };
    const auto grad = [&](const Eigen::MatrixXd& Z) -> Eigen::MatrixXd {
      Eigen::MatrixXd g = quad.grad(Z);
      if (prediction_weight != 0.0)
        g += prediction_weight *
             prediction_grad_z(outcome, Z, params.theta, params.beta0, params.tau);
      return g;
    };
    const InnerResult r =
        backtracking_descent(params.Z[s], value, grad, settings, true, trace);
    total.iterations += r.iterations;
    total.hit_cap = total.hit_cap || r.hit_cap;
    standardize_columns(params.Z[s]);
  }
  return total;
}

namespace {

/// Shared quadratic pieces of the G and Xi sub-problems for one (d,s):
/// |X - Z B^T|^2 = xnorm2 - 2<C, B> + <B M, B> with B = G .* Xi.
struct LoadingQuadratic {
  Eigen::MatrixXd C;  // X^T Z
  Eigen::MatrixXd M;  // Z^T Z
  double xnorm2 = 0.0;

  double value(const Eigen::MatrixXd& B) const {
    return xnorm2 - 2.0 * C.cwiseProduct(B).sum() +
           (B * M).cwiseProduct(B).sum();
  }
  // gradient with respect to B; chain rule to G or Xi multiplies elementwise
  Eigen::MatrixXd grad_b(const Eigen::MatrixXd& B) const {
    return -2.0 * (C - B * M);
  }
};

LoadingQuadratic make_loading_quadratic(const Eigen::MatrixXd& X,
                                        const Eigen::MatrixXd& Z) {
  LoadingQuadratic q;
  q.C.noalias() = X.transpose() * Z;
  q.M.noalias() = Z.transpose() * Z;
  q.xnorm2 = X.squaredNorm();
  return q;
}

}  // namespace

InnerResult update_g(const MultiViewDataset& data, HipParams& params,
                     const FitConfig& config, const SolverSettings& settings,
                     InnerTrace* trace) {
  InnerResult total;
  for (Index d = 0; d < data.num_views(); ++d) {
    std::vector<LoadingQuadratic> quads;
    quads.reserve(data.num_subgroups());
    for (Index s = 0; s < data.num_subgroups(); ++s)
      quads.push_back(make_loading_quadratic(data.x(d, s), params.Z[s]));
    const double lambda = config.gamma_for(d) == 1 ? config.lambda_g : 0.0;

    const auto value = [&](const Eigen::MatrixXd& G) {
      double v = lambda > 0.0 ? lambda * l21_norm(G) : 0.0;
      for (Index s = 0; s < data.num_subgroups(); ++s)
        v += quads[s].value(G.cwiseProduct(params.Xi[d][s]));
      return v;
    };
    const auto grad = [&](const Eigen::MatrixXd& G) -> Eigen::MatrixXd {
      Eigen::MatrixXd g = lambda > 0.0
                              ? l21_smoothed_gradient(G, lambda)
                              : Eigen::MatrixXd::Zero(G.rows(), G.cols());
      for (Index s = 0; s < data.num_subgroups(); ++s)
        g += quads[s]
                 .grad_b(G.cwiseProduct(params.Xi[d][s]))
                 .cwiseProduct(params.Xi[d][s]);
      return g;
    };
    const InnerResult r = adagrad_descent(params.G[d], value, grad, settings, trace);
    total.iterations += r.iterations;
    total.hit_cap = total.hit_cap || r.hit_cap;
  }
  return total;
}

InnerResult update_xi(const MultiViewDataset& data, HipParams& params,
                      const FitConfig& config, const SolverSettings& settings,
                      InnerTrace* trace) {
  InnerResult total;
  for (Index d = 0; d < data.num_views(); ++d) {
    const double lambda = config.gamma_for(d) == 1 ? config.lambda_xi : 0.0;
    for (Index s = 0; s < data.num_subgroups(); ++s) {
      const LoadingQuadratic quad =
          make_loading_quadratic(data.x(d, s), params.Z[s]);
      const Eigen::MatrixXd& G = params.G[d];

      const auto value = [&](const Eigen::MatrixXd& Xi) {
        double v = quad.value(G.cwiseProduct(Xi));
        if (lambda > 0.0) v += lambda * l21_norm(Xi);
        return v;
      };
      const auto grad = [&](const Eigen::MatrixXd& Xi) -> Eigen::MatrixXd {
        Eigen::MatrixXd g = quad.grad_b(G.cwiseProduct(Xi)).cwiseProduct(G);
        if (lambda > 0.0) g += l21_smoothed_gradient(Xi, lambda);
        return g;
      };
      const InnerResult r =
          adagrad_descent(params.Xi[d][s], value, grad, settings, trace);
      total.iterations += r.iterations;
      total.hit_cap = total.hit_cap || r.hit_cap;
    }
  }
  return total;
}

InnerResult update_theta(const MultiViewDataset& data, HipParams& params,
                         const FitConfig& config, const SolverSettings& settings,
                         InnerTrace* trace) {
  (void)config;
  const Index K = params.theta.rows();
  Eigen::MatrixXd v(K + 1, params.theta.cols());
  v.row(0) = params.beta0;
  v.bottomRows(K) = params.theta;

  const auto value = [&](const Eigen::MatrixXd& V) {
    double total = 0.0;
    const Eigen::RowVectorXd beta0 = V.row(0);
    const Eigen::MatrixXd theta = V.bottomRows(K);
    for (Index s = 0; s < data.num_subgroups(); ++s)
      total += prediction_loss(data.outcome[s], params.Z[s], theta, beta0,
                               params.tau);
    return total;
  };
  const auto grad = [&](const Eigen::MatrixXd& V) -> Eigen::MatrixXd {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(V.rows(), V.cols());
    const Eigen::RowVectorXd beta0 = V.row(0);
    const Eigen::MatrixXd theta = V.bottomRows(K);
    for (Index s = 0; s < data.num_subgroups(); ++s)
      g += prediction_grad_theta_beta(data.outcome[s], params.Z[s], theta, beta0,
                                      params.tau);
    return g;
  };

  const InnerResult r = backtracking_descent(v, value, grad, settings, false, trace);
  params.beta0 = v.row(0);
  params.theta = v.bottomRows(K);
  return r;
}

double update_tau(const MultiViewDataset& data, const HipParams& params) {
  double zeros = 0.0;
  double predicted = 0.0;
  double n = 0.0;
  for (Index s = 0; s < data.num_subgroups(); ++s) {
    const Eigen::VectorXd& y = data.outcome[s].counts;
    const Eigen::ArrayXd eta =
        (params.Z[s] * params.theta).col(0).array() + params.beta0(0);
    zeros += static_cast<double>((y.array() == 0.0).count());
    predicted += (-detail::exp_clipped(eta)).exp().sum();
    n += static_cast<double>(y.size());
  }
  const double raw = (zeros - predicted) / n;
  return std::min(1.0 - kTauEpsilon, std::max(kTauEpsilon, raw));
}

std::pair<HipParams, FitTrace> fit(const MultiViewDataset& data,
                                   const FitConfig& config) {
  config.validate(data.num_views());
  const long clips_before = exp_clip_count();

  HipParams params = initialize_params(data, config);
  FitTrace trace;
  trace.initial = total_objective(data, params, config);
  check_finite(trace.initial.total, "fit (initial objective)");

  double prev = trace.initial.total;
  int z_caps = 0, g_caps = 0, xi_caps = 0, theta_caps = 0;
  for (int t = 1; t <= config.iter_max; ++t) {
    const auto started = std::chrono::steady_clock::now();
    IterationStat stat;

    const InnerResult zr = update_z(data, params, config, config.z_solver);
    const InnerResult gr = update_g(data, params, config, config.g_solver);
    const InnerResult xr = update_xi(data, params, config, config.xi_solver);
    const InnerResult tr = update_theta(data, params, config, config.theta_solver);
    if (config.family == Family::Zip) params.tau = update_tau(data, params);

    z_caps += zr.hit_cap;
    g_caps += gr.hit_cap;
    xi_caps += xr.hit_cap;
    theta_caps += tr.hit_cap;

    stat.objective = total_objective(data, params, config);
    check_finite(stat.objective.total, "fit");
    stat.tau = params.tau;
    stat.z_iterations = zr.iterations;
    stat.g_iterations = gr.iterations;
    stat.xi_iterations = xr.iterations;
    stat.theta_iterations = tr.iterations;
    stat.rel_change =
        std::abs(prev - stat.objective.total) / std::max(std::abs(prev), 1e-12);
    stat.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    trace.iterations.push_back(stat);

    if (stat.rel_change < config.epsilon_conv) {
      trace.converged = true;
      trace.reason = "converged";
      break;
    }
    prev = stat.objective.total;
  }
  if (!trace.converged) trace.reason = "iter_max";

  const auto warn = [&](int count, const char* what) {
    if (count > 0) {
      std::ostringstream os;
      os << what << " hit its iteration cap in " << count << " outer iteration(s)";
      trace.warnings.push_back(os.str());
    }
  };
  warn(z_caps, "Z update");
  warn(g_caps, "G update");
  warn(xi_caps, "Xi update");
  warn(theta_caps, "Theta update");
  trace.exp_clips = exp_clip_count() - clips_before;
  return {std::move(params), std::move(trace)};
}

}  // namespace hip
