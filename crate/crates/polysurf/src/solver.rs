//! Damped Newton minimization for the convex prescription energies.
//!
//! Models expose the energy only through its gradient, which for every
//! problem in this crate equals the curvature residual at the current
//! point. The Hessian is estimated by finite differences of the gradient,
//! regularized by a diagonal boost, and the line search tests the
//! directional derivative rather than energy values, so no quadrature runs
//! inside the iteration.

use nalgebra::{DMatrix, DVector};

/// Iteration limits shared by the prescription solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Convergence threshold on the sup-norm of the curvature residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Residual sup-norm reached the tolerance.
    Success,
    MaxIterations,
    /// The residual plateaued, or the iterate escaped toward the domain
    /// boundary or infinity: no metric in the domain realizes the target.
    TargetUnattainable,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Success => "Success",
            SolveStatus::MaxIterations => "MaxIterations",
            SolveStatus::TargetUnattainable => "TargetUnattainable",
        })
    }
}

/// Outcome of a prescription solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Newton steps accepted.
    pub iterations: usize,
    /// Sup-norm of the (gauge-projected) gradient at the final point.
    pub grad_sup_norm: f64,
    /// Curvature residual per element at the final point.
    pub residual: Vec<f64>,
    /// Constant removed by gauge normalization; zero for models without a
    /// scaling gauge.
    pub gauge: f64,
    /// Accepted iterates (including the start) at which at least one
    /// triangle was degenerate.
    pub degenerate_visits: usize,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn residual_sup_norm(&self) -> f64 {
        sup_norm(&self.residual)
    }
}

impl std::fmt::Display for SolveReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "iter {}", self.iterations)?;
        writeln!(f, "grad-norm {:.16e}", self.grad_sup_norm)?;
        writeln!(f, "residual {:.16e}", self.residual_sup_norm())?;
        writeln!(f, "gauge {:.16e}", self.gauge)?;
        writeln!(f, "degenerate-visits {}", self.degenerate_visits)?;
        writeln!(f, "status {}", self.status)
    }
}

/// A gradient evaluation at a trial point.
pub(crate) enum Probe {
    Grad(Vec<f64>),
    /// Point outside the domain or on an infinite-energy stratum; the line
    /// search backs off, the Hessian estimator falls back to one-sided
    /// differences.
    Rejected,
}

pub(crate) trait EnergyModel {
    type Error;

    /// Gradient of the energy, equal to the curvature residual. `Rejected`
    /// marks points where the extended energy is infinite or undefined;
    /// `Err` is reserved for genuine evaluation failures.
    fn gradient(&self, u: &[f64]) -> Result<Probe, Self::Error>;

    /// Largest multiplier `t` such that `u + s*d` stays in the domain for
    /// all `s <= t`; `f64::INFINITY` when unconstrained.
    fn max_step(&self, _u: &[f64], _d: &[f64]) -> f64 {
        f64::INFINITY
    }

    /// Remove the gauge component of a vector, when the model has one.
    fn project(&self, _v: &mut [f64]) {}

    /// Whether any triangle is degenerate at this point.
    fn is_degenerate_at(&self, u: &[f64]) -> bool;
}

#[derive(Debug)]
pub(crate) enum MinimizeError<E> {
    /// The initial point was rejected by the model.
    StartRejected,
    Model(E),
}

impl<E> From<E> for MinimizeError<E> {
    fn from(e: E) -> Self {
        MinimizeError::Model(e)
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Iterations without a 0.1% relative residual improvement before the
/// target is declared unattainable.
const STAGNATION_WINDOW: usize = 60;
/// Sup-norm bound on the iterate; beyond it the minimum is at infinity.
const ESCAPE_BOUND: f64 = 80.0;
const LINE_SEARCH_FLOOR: f64 = 1e-14;
/// Trust radius: the regularization is raised until the step fits this
/// sup-norm bound. On a degenerate stratum the finite-difference Hessian
/// has vanishing columns and a barely regularized direction explodes along
/// them, starving every healthy coordinate of step length; raising lambda
/// until the step fits rebalances the direction instead.
const MAX_MOVE: f64 = 10.0;

fn probe_gradient<M: EnergyModel>(
    model: &M,
    u: &[f64],
) -> Result<Option<Vec<f64>>, MinimizeError<M::Error>> {
    match model.gradient(u)? {
        Probe::Grad(g) => Ok(Some(g)),
        Probe::Rejected => Ok(None),
    }
}

/// Central differences of the gradient, one-sided next to the domain
/// boundary, zero column when neither probe is evaluable. Symmetrized.
fn fd_hessian<M: EnergyModel>(
    model: &M,
    u: &[f64],
    g0: &[f64],
) -> Result<DMatrix<f64>, MinimizeError<M::Error>> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let step = 1e-5 * (1.0 + u[j].abs());
        let mut up = u.to_vec();
        up[j] += step;
        let mut um = u.to_vec();
        um[j] -= step;
        let gp = probe_gradient(model, &up)?;
        let gm = probe_gradient(model, &um)?;
        let col: Option<Vec<f64>> = match (gp, gm) {
            (Some(gp), Some(gm)) => {
                Some(gp.iter().zip(&gm).map(|(p, m)| (p - m) / (2.0 * step)).collect())
            }
            (Some(gp), None) => Some(gp.iter().zip(g0).map(|(p, c)| (p - c) / step).collect()),
            (None, Some(gm)) => Some(g0.iter().zip(&gm).map(|(c, m)| (c - m) / step).collect()),
            (None, None) => None,
        };
        if let Some(col) = col {
            for i in 0..n {
                h[(i, j)] = col[i];
            }
        }
    }
    let sym = (&h + h.transpose()) * 0.5;
    Ok(sym)
}

/// Minimize the model's energy starting from `u0`, which the caller has
/// already placed in the gauge slice if the model has one. Returns the
/// final point and a report; the report's `gauge` is left at zero.
pub(crate) fn minimize<M: EnergyModel>(
    model: &M,
    u0: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), MinimizeError<M::Error>> {
    let n = u0.len();
    let mut u = u0;
    let mut g = match model.gradient(&u)? {
        Probe::Grad(g) => g,
        Probe::Rejected => return Err(MinimizeError::StartRejected),
    };
    let mut degenerate_visits = usize::from(model.is_degenerate_at(&u));
    let mut iterations = 0usize;
    let mut best_sup = f64::INFINITY;
    let mut best_iter = 0usize;
    let status = loop {
        let mut gp = g.clone();
        model.project(&mut gp);
        let raw_sup = sup_norm(&g);
        if raw_sup <= cfg.tol {
            break SolveStatus::Success;
        }
        if iterations >= cfg.max_iter {
            break SolveStatus::MaxIterations;
        }
        if sup_norm(&u) > ESCAPE_BOUND {
            break SolveStatus::TargetUnattainable;
        }
        if raw_sup < best_sup * (1.0 - 1e-3) {
            best_sup = raw_sup;
            best_iter = iterations;
        } else if iterations - best_iter >= STAGNATION_WINDOW {
            break SolveStatus::TargetUnattainable;
        }

        let h = fd_hessian(model, &u, &g)?;
        let scale = (0..n).fold(0.0f64, |m, i| m.max(h[(i, i)].abs()));
        let mut lambda = 1e-12 * (1.0 + scale);
        let rhs = DVector::from_iterator(n, gp.iter().map(|x| -x));
        let mut boosts = 0;
        let d = loop {
            let reg = &h + DMatrix::identity(n, n) * lambda;
            if let Some(sol) = reg.lu().solve(&rhs) {
                let mut d: Vec<f64> = sol.iter().copied().collect();
                model.project(&mut d);
                let descent = dot(&gp, &d);
                let bound = -1e-14 * sup_norm(&gp) * sup_norm(&d) * n as f64;
                if d.iter().all(|x| x.is_finite()) && descent < bound && sup_norm(&d) <= MAX_MOVE
                {
                    break d;
                }
            }
            boosts += 1;
            if boosts > 40 {
                // steepest descent as a last resort
                let mut d: Vec<f64> = gp.iter().map(|x| -x).collect();
                model.project(&mut d);
                break d;
            }
            lambda *= 10.0;
        };

        let slope0 = dot(&g, &d);
        let mut t = model.max_step(&u, &d).min(1.0).min(MAX_MOVE / sup_norm(&d));
        let mut accepted: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut fallback: Option<(Vec<f64>, Vec<f64>)> = None;
        while t >= LINE_SEARCH_FLOOR {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(x, s)| x + t * s).collect();
            match probe_gradient(model, &trial)? {
                None => {}
                Some(gt) => {
                    let dgt = dot(&gt, &d);
                    // two-sided slope window: far enough that the directional
                    // derivative has recovered, not so far that the step has
                    // climbed the opposite wall of the valley
                    if dgt >= 0.5 * slope0 && dgt <= -0.5 * slope0 {
                        accepted = Some((trial, gt));
                        break;
                    }
                    // still strictly descending at the trial; keep the longest
                    // such step in case no trial lands inside the window
                    if dgt < 0.5 * slope0 && fallback.is_none() {
                        fallback = Some((trial, gt));
                    }
                }
            }
            t *= 0.5;
        }
        match accepted.or(fallback) {
            Some((unew, gnew)) => {
                u = unew;
                g = gnew;
                iterations += 1;
                if model.is_degenerate_at(&u) {
                    degenerate_visits += 1;
                }
            }
            // pinned against the domain boundary with no admissible step
            None => break SolveStatus::TargetUnattainable,
        }
    };
    let mut gp = g.clone();
    model.project(&mut gp);
    let report = SolveReport {
        iterations,
        grad_sup_norm: sup_norm(&gp),
        residual: g,
        gauge: 0.0,
        degenerate_visits,
        status,
    };
    Ok((u, report))
}
