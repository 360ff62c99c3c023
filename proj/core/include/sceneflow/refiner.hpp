#pragma once

#include <cstdint>
#include <vector>

#include "sceneflow/edges.hpp"
#include "sceneflow/grid.hpp"
#include "sceneflow/image.hpp"

namespace sceneflow {

struct RefineParams {
  double kappa = 5.0;     // edge weight exp(-kappa * B)
  double gamma = 0.77;    // gradient constancy weight
  double lambda = 10.0;   // smoothness weight of d'
  double epsilon = 0.001; // Charbonnier
  int outer_iterations = 2;
  int inner_iterations = 1;
  int sor_iterations = 30;
  double omega = 1.9;
  /// Step halvings tried when a full update raises the energy.
  int max_step_halvings = 5;

  /// Throws kInvalidArgument on out-of-range values.
  void validate() const;
  bool operator==(const RefineParams&) const = default;
};

/// Image-space motion (u, v, d' = d1 - d0).  Frozen pixels keep their values.
struct MotionField {
  Grid<double> u;
  Grid<double> v;
  Grid<double> dp;
  Grid<std::uint8_t> frozen;

  MotionField() = default;
  MotionField(int width, int height)
      : u(width, height), v(width, height), dp(width, height), frozen(width, height) {}
  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }
};

/// Grayscale views used by the data terms.
struct RefineImages {
  GrayImage left0;
  GrayImage left1;
  GrayImage right1;
};

struct EnergyTerms {
  double flow = 0.0;
  double cross = 0.0;
  double smooth = 0.0;  // already weighted by exp(-kappa * B)
  double total() const noexcept { return flow + cross + smooth; }
};

/// Discrete energy: gradient constancy data terms for (u, v) into left1 and
/// (u - d0 - d', v) into right1, each dropped where the target leaves the
/// image, plus exp(-kappa B) * Psi(|grad u|^2 + |grad v|^2 + lambda |grad d'|^2)
/// with forward differences.  Psi(s) = sqrt(s + eps^2) on every term.
EnergyTerms energy_terms(const MotionField& field, const Grid<double>& d0,
                         const RefineImages& images, const EdgeMap& edges,
                         const RefineParams& params);
double energy(const MotionField& field, const Grid<double>& d0,
              const RefineImages& images, const EdgeMap& edges,
              const RefineParams& params);

/// Increments (du, dv, dd') of one linearization.
struct Increments {
  Grid<double> du;
  Grid<double> dv;
  Grid<double> ddp;
  Increments() = default;
  Increments(int width, int height) : du(width, height), dv(width, height), ddp(width, height) {}
};

/// Energy with both data terms linearized around a fixed base field
/// (warped first and second image derivatives, inclusion masks frozen at
/// the base).  The smoothness term stays exact in base + increment.
class LinearizedSystem {
 public:
  LinearizedSystem(const MotionField& base, const Grid<double>& d0,
                   const RefineImages& images, const EdgeMap& edges,
                   const RefineParams& params);

  double energy(const Increments& x) const;
  /// Exact gradient of energy() at x; zero at frozen pixels.
  Increments gradient(const Increments& x) const;
  /// Freezes the Charbonnier derivatives at x (lagged diffusivity).
  void update_weights(const Increments& x);
  /// Norm of the residual of the lagged linear system at x over free pixels.
  double residual_norm(const Increments& x) const;
  /// Red-black SOR sweeps on the lagged linear system.
  void sor(Increments& x, int sweeps) const;

  int width() const noexcept { return base_.width(); }
  int height() const noexcept { return base_.height(); }

 private:
  struct DataTerm {
    double beta = 0.0;
    double gx = 0.0;   // warped target gradient minus reference gradient
    double gy = 0.0;
    double hxx = 0.0;  // warped target second derivatives
    double hxy = 0.0;
    double hyy = 0.0;
  };
  struct Weights {
    std::vector<double> flow;
    std::vector<double> cross;
    std::vector<double> edge;  // phi(a) * Psi'(S(a)), owner of the forward differences at a
  };
  Weights weights_at(const Increments& x) const;
  double smooth_arg(const Increments& x, int px, int py) const;
  void pixel_residual(const Weights& w, const Increments& x, int px, int py,
                      double r[3], double diag[3]) const;

  MotionField base_;
  RefineParams params_;
  std::vector<DataTerm> flow_;
  std::vector<DataTerm> cross_;
  std::vector<double> phi_;
  Weights weights_;
};

struct RefineDiagnostics {
  std::vector<double> energies;        // before refinement, then after each outer step
  std::vector<double> residual_first;  // after the first SOR sweep, per solve
  std::vector<double> residual_last;   // after the last SOR sweep, per solve
  int step_halvings = 0;
  int rejected_steps = 0;
  bool aborted = false;
  std::size_t frozen = 0;
};

/// Pixels whose flow target (x + u, y + v) lies outside the image.
Grid<std::uint8_t> out_of_bounds_mask(const MotionField& field);

/// Refines (u, v, d') with d0 fixed.  Pixels whose flow target leaves the
/// image are frozen in addition to field.frozen.  Every outer step solves
/// the linearized system by SOR and is accepted only if the energy does not
/// increase, halving the step otherwise; non-finite increments abort and
/// return the input.
MotionField refine_variational(const MotionField& field, const Grid<double>& d0,
                               const RefineImages& images, const EdgeMap& edges,
                               const RefineParams& params,
                               RefineDiagnostics* diagnostics = nullptr);

}  // namespace sceneflow
