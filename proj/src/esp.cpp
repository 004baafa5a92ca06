#include "fistasep/esp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fistasep/projections.hpp"

namespace fistasep::esp {

namespace {

bool is_diagonal(const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

double spectral_norm_dense(const Matrix& m) {
  if (is_diagonal(m)) return m.diagonal().cwiseAbs().maxCoeff();
  return Eigen::BDCSVD<Matrix>(m).singularValues()(0);
}

Ellipsoid make_ellipsoid(Vector center, Matrix shape, Label label) {
  if (shape.rows() != shape.cols() || shape.rows() != center.size())
    throw std::invalid_argument("make_ellipsoid: shape must be d x d with d = center length");
  double smin, smax;
  if (is_diagonal(shape)) {
    smin = shape.diagonal().cwiseAbs().minCoeff();
    smax = shape.diagonal().cwiseAbs().maxCoeff();
  } else {
    const auto sv = Eigen::BDCSVD<Matrix>(shape).singularValues();
    smax = sv(0);
    smin = sv(sv.size() - 1);
  }
  if (!(smin > 1e-12 * smax) || smax == 0.0)
    throw std::invalid_argument("make_ellipsoid: shape matrix is numerically singular");
  return Ellipsoid{std::move(center), std::move(shape), label};
}

Instance normalize_instance(std::vector<Ellipsoid> ellipsoids) {
  Instance inst;
  if (ellipsoids.empty()) throw std::invalid_argument("normalize_instance: empty instance");
  inst.dim_ = static_cast<int>(ellipsoids.front().center.size());

  double factor = 0.0;
  for (const auto& e : ellipsoids) {
    if (e.center.size() != inst.dim_ || e.shape.rows() != inst.dim_ || e.shape.cols() != inst.dim_)
      throw std::invalid_argument("normalize_instance: inconsistent dimensions");
    factor = std::max({factor, e.center.norm(), spectral_norm_dense(e.shape)});
  }
  if (factor == 0.0) throw DegenerateInstance("normalize_instance: all centers and shapes are zero");

  for (auto& e : ellipsoids) {
    e.center /= factor;
    e.shape /= factor;
    if (e.label == Label::ClassC)
      inst.cs_.push_back(std::move(e));
    else
      inst.ds_.push_back(std::move(e));
  }
  if (inst.cs_.empty() || inst.ds_.empty())
    throw std::invalid_argument("normalize_instance: need at least one ellipsoid per class");

  for (const auto& e : inst.cs_) inst.c_diag_.push_back(is_diagonal(e.shape) ? 1 : 0);
  for (const auto& e : inst.ds_) inst.d_diag_.push_back(is_diagonal(e.shape) ? 1 : 0);

  inst.factor_ = factor;
  inst.rhs_ = Vector::Zero(inst.dim_ + 2);
  inst.rhs_[0] = 1.0;
  inst.rhs_[1] = 1.0;

  fista::LinearOperator op;
  op.rows = inst.rows();
  op.cols = inst.cols();
  op.apply = [&inst](const Vector& x) { return inst.apply(x); };
  op.apply_t = [&inst](const Vector& r) { return inst.apply_t(r); };
  inst.op_norm_ = fista::spectral_norm(op, 1e-6);
  inst.lipschitz_ = inst.op_norm_ * inst.op_norm_ * 1.01;
  return inst;
}

Vector Instance::apply(const Vector& x) const {
  const Index bd = dim_ + 1;
  Vector out = Vector::Zero(dim_ + 2);
  auto w = out.segment(2, dim_);
  Index off = 0;
  for (size_t i = 0; i < cs_.size(); ++i, off += bd) {
    const double lam = x[off];
    const auto p = x.segment(off + 1, dim_);
    out[0] += lam;
    w += lam * cs_[i].center;
    if (c_diag_[i])
      w += cs_[i].shape.diagonal().cwiseProduct(p);
    else
      w.noalias() += cs_[i].shape * p;
  }
  for (size_t i = 0; i < ds_.size(); ++i, off += bd) {
    const double mu = x[off];
    const auto q = x.segment(off + 1, dim_);
    out[1] += mu;
    w -= mu * ds_[i].center;
    if (d_diag_[i])
      w += ds_[i].shape.diagonal().cwiseProduct(q);
    else
      w.noalias() += ds_[i].shape * q;
  }
  return out;
}

Vector Instance::apply_t(const Vector& r) const {
  const Index bd = dim_ + 1;
  Vector out(cols());
  const auto rw = r.segment(2, dim_);
  Index off = 0;
  for (size_t i = 0; i < cs_.size(); ++i, off += bd) {
    out[off] = r[0] + cs_[i].center.dot(rw);
    if (c_diag_[i])
      out.segment(off + 1, dim_) = cs_[i].shape.diagonal().cwiseProduct(rw);
    else
      out.segment(off + 1, dim_).noalias() = cs_[i].shape.transpose() * rw;
  }
  for (size_t i = 0; i < ds_.size(); ++i, off += bd) {
    out[off] = r[1] - ds_[i].center.dot(rw);
    if (d_diag_[i])
      out.segment(off + 1, dim_) = ds_[i].shape.diagonal().cwiseProduct(rw);
    else
      out.segment(off + 1, dim_).noalias() = ds_[i].shape.transpose() * rw;
  }
  return out;
}

std::pair<Matrix, Vector> assemble_operator(const Instance& inst) {
  const int d = inst.dim();
  Matrix a = Matrix::Zero(d + 2, inst.cols());
  Index off = 0;
  for (const auto& e : inst.class_c()) {
    a(0, off) = 1.0;
    a.block(2, off, d, 1) = e.center;
    a.block(2, off + 1, d, d) = e.shape;
    off += d + 1;
  }
  for (const auto& e : inst.class_d()) {
    a(1, off) = 1.0;
    a.block(2, off, d, 1) = -e.center;
    a.block(2, off + 1, d, d) = e.shape;
    off += d + 1;
  }
  return {std::move(a), inst.rhs()};
}

Residual residual(const Instance& inst, const Vector& x) {
  const Vector v = inst.rhs() - inst.apply(x);
  Residual r;
  r.s = v[0];
  r.t = v[1];
  r.w = v.segment(2, inst.dim());
  r.norm = v.norm();
  return r;
}

std::pair<Vector, double> candidate_separator(const Residual& r) {
  return {r.w, 0.5 * (-r.s + r.t)};
}

SeparationCheck verify_separator(const Instance& inst, const Vector& w, double m) {
  if (w.isZero(0.0)) return SeparationCheck::NotSeparating;

  bool below = true, above = true;
  for (size_t i = 0; i < inst.class_c().size() && (below || above); ++i) {
    const auto& e = inst.class_c()[i];
    const double ctr = e.center.dot(w);
    const double ext = (e.shape.transpose() * w).norm();
    below = below && (ctr + ext < m);
    above = above && (ctr - ext > m);
  }
  for (size_t i = 0; i < inst.class_d().size() && (below || above); ++i) {
    const auto& e = inst.class_d()[i];
    const double ctr = e.center.dot(w);
    const double ext = (e.shape.transpose() * w).norm();
    below = below && (ctr - ext > m);
    above = above && (ctr + ext < m);
  }
  if (below) return SeparationCheck::SeparatesCBelow;
  if (above) return SeparationCheck::SeparatesCAbove;
  return SeparationCheck::NotSeparating;
}

namespace {

fista::SmoothProblem make_problem(const Instance& inst) {
  fista::SmoothProblem prob;
  prob.lipschitz = inst.lipschitz();
  prob.gradient = [&inst](const Vector& x) { return inst.apply_t(inst.apply(x) - inst.rhs()); };
  const Index bd = inst.dim() + 1;
  prob.projector = [bd](Vector& x) { proj::project_product_cone_inplace(x, bd); };
  return prob;
}

}  // namespace

SolveOutcome solve_esp(const Instance& inst, StopMode mode, double tol, long max_iter,
                       bool record_trace) {
  SolveOutcome out;
  const auto prob = make_problem(inst);
  const auto start = std::chrono::steady_clock::now();

  auto observer = [&](const fista::State& st) {
    const Residual v = residual(inst, st.x);
    const auto [w, m] = candidate_separator(v);
    const SeparationCheck chk = verify_separator(inst, w, m);
    const bool found = chk != SeparationCheck::NotSeparating;

    if (record_trace) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out.trace.push_back({st.k, 0.5 * v.norm * v.norm, v.norm, found ? 1 : 0, elapsed});
    }
    out.final_residual = v;

    if (mode == StopMode::EarlyStop && found) {
      out.separator = SeparatorModel{w, m, st.k, chk};
      return fista::Signal::StopEarly;
    }
    if (mode == StopMode::Tolerance && st.last_projected_step_norm <= tol)
      return fista::Signal::StopTolerance;
    return fista::Signal::Continue;
  };

  auto res = fista::solve(prob, Vector::Zero(inst.cols()), max_iter, observer);
  out.report = std::move(res.report);
  out.final_x = std::move(res.state.x);

  if (mode == StopMode::Tolerance && !out.separator) {
    const auto [w, m] = candidate_separator(out.final_residual);
    const SeparationCheck chk = verify_separator(inst, w, m);
    if (chk != SeparationCheck::NotSeparating)
      out.separator = SeparatorModel{w, m, out.report.iterations, chk};
  }
  return out;
}

Reference reference_solve(const Instance& inst, long max_iter, double tol) {
  const auto prob = make_problem(inst);
  auto observer = [tol](const fista::State& st) {
    return st.last_projected_step_norm < tol ? fista::Signal::StopTolerance
                                             : fista::Signal::Continue;
  };
  auto res = fista::solve(prob, Vector::Zero(inst.cols()), max_iter, observer);
  Reference ref;
  ref.v_d = residual(inst, res.state.x);
  ref.f_bar = 0.5 * ref.v_d.norm * ref.v_d.norm;
  ref.x_bar = std::move(res.state.x);
  ref.iterations = res.report.iterations;
  return ref;
}

double delta_estimate(const Residual& r) { return 3.0 * r.norm; }

double iteration_bound(double op_norm, double x0_distance, double delta) {
  return 54.0 * std::sqrt(2.0) * op_norm * x0_distance / (delta * delta) - 1.0;
}

}  // namespace fistasep::esp
