#include "sceneflow/refiner.hpp"

#include <algorithm>
#include <cmath>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

struct Derivatives {
  Grid<double> x, y, xx, xy, yy;
};

Grid<double> central_x(const Grid<double>& g) {
  Grid<double> out(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      out(x, y) = 0.5 * (g.clamped(x + 1, y) - g.clamped(x - 1, y));
    }
  }
  return out;
}

Grid<double> central_y(const Grid<double>& g) {
  Grid<double> out(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      out(x, y) = 0.5 * (g.clamped(x, y + 1) - g.clamped(x, y - 1));
    }
  }
  return out;
}

Derivatives derivatives(const GrayImage& image) {
  Grid<double> g(image.width(), image.height());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = image[i];
  Derivatives d;
  d.x = central_x(g);
  d.y = central_y(g);
  d.xx = central_x(d.x);
  d.xy = central_y(d.x);
  d.yy = central_y(d.y);
  return d;
}

double bilinear(const Grid<double>& g, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const double a = g.clamped(x0, y0) * (1.0 - fx) + g.clamped(x0 + 1, y0) * fx;
  const double b = g.clamped(x0, y0 + 1) * (1.0 - fx) + g.clamped(x0 + 1, y0 + 1) * fx;
  return a * (1.0 - fy) + b * fy;
}

bool inside(double x, double y, int w, int h) {
  return x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1;
}

double charbonnier(double s, double eps) { return std::sqrt(s + eps * eps); }
double charbonnier_derivative(double s, double eps) { return 0.5 / std::sqrt(s + eps * eps); }

void check_inputs(const MotionField& field, const Grid<double>& d0,
                  const RefineImages& images, const EdgeMap& edges) {
  require_same_size(field.u, field.v, "refiner: v");
  require_same_size(field.u, field.dp, "refiner: d'");
  require_same_size(field.u, field.frozen, "refiner: frozen mask");
  require_same_size(field.u, d0, "refiner: d0");
  require_same_size(field.u, images.left0, "refiner: left0");
  require_same_size(field.u, images.left1, "refiner: left1");
  require_same_size(field.u, images.right1, "refiner: right1");
  require_same_size(field.u, edges.strength(), "refiner: edge map");
  for (std::size_t i = 0; i < field.u.size(); ++i) {
    if (!std::isfinite(field.u[i]) || !std::isfinite(field.v[i]) ||
        !std::isfinite(field.dp[i]) || !std::isfinite(d0[i])) {
      throw_error(ErrorKind::kInvalidArgument, "refiner: non-finite input field");
    }
  }
}

// Data term sample at a warped position; beta = 0 outside the image.
template <typename Term>
Term sample_term(const Derivatives& target, const Derivatives& ref, int x, int y,
                 double tx, double ty, int w, int h) {
  Term t;
  if (!inside(tx, ty, w, h)) return t;
  t.beta = 1.0;
  t.gx = bilinear(target.x, tx, ty) - ref.x(x, y);
  t.gy = bilinear(target.y, tx, ty) - ref.y(x, y);
  t.hxx = bilinear(target.xx, tx, ty);
  t.hxy = bilinear(target.xy, tx, ty);
  t.hyy = bilinear(target.yy, tx, ty);
  return t;
}

struct WarpTerm {
  double beta = 0.0, gx = 0.0, gy = 0.0, hxx = 0.0, hxy = 0.0, hyy = 0.0;
};

double smoothness_at(const Grid<double>& u, const Grid<double>& v, const Grid<double>& dp,
                     double lambda, int x, int y) {
  double s = 0.0;
  const std::size_t i = u.index(x, y);
  if (x + 1 < u.width()) {
    const std::size_t j = i + 1;
    const double a = u[j] - u[i], b = v[j] - v[i], c = dp[j] - dp[i];
    s += a * a + b * b + lambda * c * c;
  }
  if (y + 1 < u.height()) {
    const std::size_t j = i + u.width();
    const double a = u[j] - u[i], b = v[j] - v[i], c = dp[j] - dp[i];
    s += a * a + b * b + lambda * c * c;
  }
  return s;
}

}  // namespace

void RefineParams::validate() const {
  if (!(epsilon > 0.0)) throw_error(ErrorKind::kInvalidArgument, "refiner: epsilon must be positive");
  if (!(omega > 0.0 && omega < 2.0)) throw_error(ErrorKind::kInvalidArgument, "refiner: omega must lie in (0, 2)");
  if (!(gamma >= 0.0) || !(lambda >= 0.0) || !std::isfinite(kappa)) {
    throw_error(ErrorKind::kInvalidArgument, "refiner: gamma and lambda must be non-negative, kappa finite");
  }
  if (outer_iterations < 0 || inner_iterations < 1 || sor_iterations < 1 || max_step_halvings < 0) {
    throw_error(ErrorKind::kInvalidArgument, "refiner: invalid iteration counts");
  }
}

EnergyTerms energy_terms(const MotionField& field, const Grid<double>& d0,
                         const RefineImages& images, const EdgeMap& edges,
                         const RefineParams& params) {
  check_inputs(field, d0, images, edges);
  const int w = field.width();
  const int h = field.height();
  const Derivatives ref = derivatives(images.left0);
  const Derivatives tl = derivatives(images.left1);
  const Derivatives tr = derivatives(images.right1);
  const double eps = params.epsilon;
  EnergyTerms e;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = field.u.index(x, y);
      const double fx = x + field.u[i];
      const double fy = y + field.v[i];
      if (inside(fx, fy, w, h)) {
        const double gx = bilinear(tl.x, fx, fy) - ref.x(x, y);
        const double gy = bilinear(tl.y, fx, fy) - ref.y(x, y);
        e.flow += charbonnier(params.gamma * (gx * gx + gy * gy), eps);
      }
      const double cx = x + field.u[i] - d0[i] - field.dp[i];
      if (inside(cx, fy, w, h)) {
        const double gx = bilinear(tr.x, cx, fy) - ref.x(x, y);
        const double gy = bilinear(tr.y, cx, fy) - ref.y(x, y);
        e.cross += charbonnier(params.gamma * (gx * gx + gy * gy), eps);
      }
      const double phi = std::exp(-params.kappa * edges(x, y));
      e.smooth += phi * charbonnier(smoothness_at(field.u, field.v, field.dp, params.lambda, x, y), eps);
    }
  }
  return e;
}

double energy(const MotionField& field, const Grid<double>& d0, const RefineImages& images,
              const EdgeMap& edges, const RefineParams& params) {
  return energy_terms(field, d0, images, edges, params).total();
}

LinearizedSystem::LinearizedSystem(const MotionField& base, const Grid<double>& d0,
                                   const RefineImages& images, const EdgeMap& edges,
                                   const RefineParams& params)
    : base_(base), params_(params) {
  params.validate();
  check_inputs(base, d0, images, edges);
  const int w = base.width();
  const int h = base.height();
  const Derivatives ref = derivatives(images.left0);
  const Derivatives tl = derivatives(images.left1);
  const Derivatives tr = derivatives(images.right1);
  flow_.resize(base.u.size());
  cross_.resize(base.u.size());
  phi_.resize(base.u.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = base.u.index(x, y);
      const double fy = y + base.v[i];
      const WarpTerm f = sample_term<WarpTerm>(tl, ref, x, y, x + base.u[i], fy, w, h);
      const WarpTerm c = sample_term<WarpTerm>(tr, ref, x, y, x + base.u[i] - d0[i] - base.dp[i], fy, w, h);
      flow_[i] = {f.beta, f.gx, f.gy, f.hxx, f.hxy, f.hyy};
      cross_[i] = {c.beta, c.gx, c.gy, c.hxx, c.hxy, c.hyy};
      phi_[i] = std::exp(-params.kappa * edges(x, y));
    }
  }
  weights_ = weights_at(Increments(w, h));
}

double LinearizedSystem::smooth_arg(const Increments& x, int px, int py) const {
  const int w = width();
  const int h = height();
  const std::size_t i = base_.u.index(px, py);
  auto value = [&](const Grid<double>& b, const Grid<double>& d, std::size_t k) { return b[k] + d[k]; };
  double s = 0.0;
  auto add = [&](std::size_t j) {
    const double a = value(base_.u, x.du, j) - value(base_.u, x.du, i);
    const double b = value(base_.v, x.dv, j) - value(base_.v, x.dv, i);
    const double c = value(base_.dp, x.ddp, j) - value(base_.dp, x.ddp, i);
    s += a * a + b * b + params_.lambda * c * c;
  };
  if (px + 1 < w) add(i + 1);
  if (py + 1 < h) add(i + w);
  return s;
}

LinearizedSystem::Weights LinearizedSystem::weights_at(const Increments& x) const {
  const int w = width();
  const int h = height();
  const double eps = params_.epsilon;
  const double g = params_.gamma;
  Weights out;
  out.flow.resize(flow_.size());
  out.cross.resize(flow_.size());
  out.edge.resize(flow_.size());
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const std::size_t i = base_.u.index(px, py);
      const double du = x.du[i], dv = x.dv[i], dd = x.ddp[i];
      const DataTerm& f = flow_[i];
      const double rx = f.gx + f.hxx * du + f.hxy * dv;
      const double ry = f.gy + f.hxy * du + f.hyy * dv;
      out.flow[i] = charbonnier_derivative(g * (rx * rx + ry * ry), eps);
      const DataTerm& c = cross_[i];
      const double a = du - dd;
      const double cx = c.gx + c.hxx * a + c.hxy * dv;
      const double cy = c.gy + c.hxy * a + c.hyy * dv;
      out.cross[i] = charbonnier_derivative(g * (cx * cx + cy * cy), eps);
      out.edge[i] = phi_[i] * charbonnier_derivative(smooth_arg(x, px, py), eps);
    }
  }
  return out;
}

double LinearizedSystem::energy(const Increments& x) const {
  const double eps = params_.epsilon;
  const double g = params_.gamma;
  double e = 0.0;
  for (int py = 0; py < height(); ++py) {
    for (int px = 0; px < width(); ++px) {
      const std::size_t i = base_.u.index(px, py);
      const double du = x.du[i], dv = x.dv[i], dd = x.ddp[i];
      const DataTerm& f = flow_[i];
      if (f.beta > 0.0) {
        const double rx = f.gx + f.hxx * du + f.hxy * dv;
        const double ry = f.gy + f.hxy * du + f.hyy * dv;
        e += f.beta * charbonnier(g * (rx * rx + ry * ry), eps);
      }
      const DataTerm& c = cross_[i];
      if (c.beta > 0.0) {
        const double a = du - dd;
        const double cx = c.gx + c.hxx * a + c.hxy * dv;
        const double cy = c.gy + c.hxy * a + c.hyy * dv;
        e += c.beta * charbonnier(g * (cx * cx + cy * cy), eps);
      }
      e += phi_[i] * charbonnier(smooth_arg(x, px, py), eps);
    }
  }
  return e;
}

void LinearizedSystem::pixel_residual(const Weights& wt, const Increments& x, int px, int py,
                                      double r[3], double diag[3]) const {
  const int w = width();
  const int h = height();
  const std::size_t i = base_.u.index(px, py);
  const double du = x.du[i], dv = x.dv[i], dd = x.ddp[i];
  const double g = params_.gamma;

  const DataTerm& f = flow_[i];
  const double F = g * f.beta * wt.flow[i];
  const double rx = f.gx + f.hxx * du + f.hxy * dv;
  const double ry = f.gy + f.hxy * du + f.hyy * dv;
  const DataTerm& c = cross_[i];
  const double C = g * c.beta * wt.cross[i];
  const double a = du - dd;
  const double cx = c.gx + c.hxx * a + c.hxy * dv;
  const double cy = c.gy + c.hxy * a + c.hyy * dv;

  const double cross_u = C * (cx * c.hxx + cy * c.hxy);
  r[0] = F * (rx * f.hxx + ry * f.hxy) + cross_u;
  r[1] = F * (rx * f.hxy + ry * f.hyy) + C * (cx * c.hxy + cy * c.hyy);
  r[2] = -cross_u;
  diag[0] = F * (f.hxx * f.hxx + f.hxy * f.hxy) + C * (c.hxx * c.hxx + c.hxy * c.hxy);
  diag[1] = F * (f.hxy * f.hxy + f.hyy * f.hyy) + C * (c.hxy * c.hxy + c.hyy * c.hyy);
  diag[2] = C * (c.hxx * c.hxx + c.hxy * c.hxy);

  const double ui = base_.u[i] + du;
  const double vi = base_.v[i] + dv;
  const double di = base_.dp[i] + dd;
  auto couple = [&](std::size_t j, double weight) {
    r[0] += weight * (ui - base_.u[j] - x.du[j]);
    r[1] += weight * (vi - base_.v[j] - x.dv[j]);
    r[2] += params_.lambda * weight * (di - base_.dp[j] - x.ddp[j]);
    diag[0] += weight;
    diag[1] += weight;
    diag[2] += params_.lambda * weight;
  };
  if (px + 1 < w) couple(i + 1, wt.edge[i]);
  if (px > 0) couple(i - 1, wt.edge[i - 1]);
  if (py + 1 < h) couple(i + w, wt.edge[i]);
  if (py > 0) couple(i - w, wt.edge[i - w]);
}

Increments LinearizedSystem::gradient(const Increments& x) const {
  const Weights wt = weights_at(x);
  Increments out(width(), height());
  double r[3], diag[3];
  for (int py = 0; py < height(); ++py) {
    for (int px = 0; px < width(); ++px) {
      const std::size_t i = base_.u.index(px, py);
      if (base_.frozen[i]) continue;
      pixel_residual(wt, x, px, py, r, diag);
      out.du[i] = 2.0 * r[0];
      out.dv[i] = 2.0 * r[1];
      out.ddp[i] = 2.0 * r[2];
    }
  }
  return out;
}

void LinearizedSystem::update_weights(const Increments& x) { weights_ = weights_at(x); }

double LinearizedSystem::residual_norm(const Increments& x) const {
  double sum = 0.0;
  double r[3], diag[3];
  for (int py = 0; py < height(); ++py) {
    for (int px = 0; px < width(); ++px) {
      if (base_.frozen(px, py)) continue;
      pixel_residual(weights_, x, px, py, r, diag);
      sum += r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    }
  }
  return std::sqrt(sum);
}

void LinearizedSystem::sor(Increments& x, int sweeps) const {
  const double omega = params_.omega;
  double r[3], diag[3];
  for (int s = 0; s < sweeps; ++s) {
    for (int color = 0; color < 2; ++color) {
      for (int py = 0; py < height(); ++py) {
        for (int px = (py + color) % 2; px < width(); px += 2) {
          const std::size_t i = base_.u.index(px, py);
          if (base_.frozen[i]) continue;
          Grid<double>* comps[3] = {&x.du, &x.dv, &x.ddp};
          for (int k = 0; k < 3; ++k) {
            pixel_residual(weights_, x, px, py, r, diag);
            if (diag[k] > 1e-300) (*comps[k])[i] -= omega * r[k] / diag[k];
          }
        }
      }
    }
  }
}

Grid<std::uint8_t> out_of_bounds_mask(const MotionField& field) {
  Grid<std::uint8_t> mask(field.width(), field.height());
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < field.width(); ++x) {
      mask(x, y) = inside(x + field.u(x, y), y + field.v(x, y), field.width(), field.height()) ? 0 : 1;
    }
  }
  return mask;
}

MotionField refine_variational(const MotionField& field, const Grid<double>& d0,
                               const RefineImages& images, const EdgeMap& edges,
                               const RefineParams& params, RefineDiagnostics* diagnostics) {
  params.validate();
  check_inputs(field, d0, images, edges);
  RefineDiagnostics local;
  RefineDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag = RefineDiagnostics{};

  MotionField current = field;
  const Grid<std::uint8_t> oob = out_of_bounds_mask(field);
  for (std::size_t i = 0; i < current.frozen.size(); ++i) {
    current.frozen[i] = (field.frozen[i] || oob[i]) ? 1 : 0;
    if (current.frozen[i]) ++diag.frozen;
  }
  double e_current = energy(current, d0, images, edges, params);
  diag.energies.push_back(e_current);
  if (diag.frozen == current.frozen.size()) return field;

  for (int outer = 0; outer < params.outer_iterations; ++outer) {
    LinearizedSystem system(current, d0, images, edges, params);
    Increments x(field.width(), field.height());
    for (int inner = 0; inner < params.inner_iterations; ++inner) {
      system.update_weights(x);
      system.sor(x, 1);
      diag.residual_first.push_back(system.residual_norm(x));
      system.sor(x, params.sor_iterations - 1);
      diag.residual_last.push_back(system.residual_norm(x));
    }
    for (std::size_t i = 0; i < x.du.size(); ++i) {
      if (!std::isfinite(x.du[i]) || !std::isfinite(x.dv[i]) || !std::isfinite(x.ddp[i])) {
        diag.aborted = true;
        return field;
      }
    }

    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving <= params.max_step_halvings; ++halving) {
      MotionField candidate = current;
      for (std::size_t i = 0; i < x.du.size(); ++i) {
        if (current.frozen[i]) continue;
        candidate.u[i] += step * x.du[i];
        candidate.v[i] += step * x.dv[i];
        candidate.dp[i] += step * x.ddp[i];
      }
      const double e = energy(candidate, d0, images, edges, params);
      if (e <= e_current) {
        current = std::move(candidate);
        e_current = e;
        accepted = true;
        break;
      }
      step *= 0.5;
      ++diag.step_halvings;
    }
    diag.energies.push_back(e_current);
    if (!accepted) {
      ++diag.rejected_steps;
      break;
    }
  }
  current.frozen = field.frozen;
  return current;
}

}  // namespace sceneflow
