//! Multi-start certification that a curvature target pins down its metric.
//!
//! The prescription energies are convex, so a target with any solution has
//! exactly one (up to the Euclidean scaling freedom). The numerical
//! counterpart run here: draw initial points from a seeded box around the
//! unit metric's chart image, solve from each start concurrently, and
//! compare the solutions pairwise after removing the gauge. Agreement
//! within a small multiple of the solver tolerance certifies uniqueness
//! over the sampled basin; a failed start or an outlier solution is
//! reported, never masked.
//!
//! Distances are measured where the gauge acts by translation: packing
//! solutions compare in radius chart coordinates (mean-aligned for E2),
//! Euclidean prescription solutions compare log-lengths after an optimal
//! common shift (scaling acts as `l -> λl` for every exponent), and
//! spherical or hyperbolic prescription solutions compare lengths directly.

use std::fmt;
use std::thread;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curvature::PolyhedralMetric;
use crate::geom::GeometryTag;
use crate::integrals;
use crate::mesh::{Field, FieldSupport, Mesh};
use crate::packing::{self, PackingData, PackingError, UCoords};
use crate::schlaefli::{self, EdgeUCoords, FunctionalSpec, SchlaefliError};
use crate::solver::SolverConfig;

/// How many solves a rigidity run makes and where their initial points
/// come from. The seed fully determines the start list; `box_radius` is
/// the half-width of the sampling box in chart coordinates.
#[derive(Debug, Clone, Copy)]
pub struct MultiStartConfig {
    pub starts: usize,
    pub seed: u64,
    pub box_radius: f64,
}

impl MultiStartConfig {
    pub fn new(starts: usize, seed: u64) -> Self {
        MultiStartConfig { starts, seed, box_radius: 2.0 }
    }
}

/// One solve attempt inside a multi-start run.
#[derive(Debug, Clone, PartialEq)]
pub enum StartOutcome {
    Converged { residual: f64 },
    Failed { message: String },
}

/// Per-start outcomes plus the pairwise solution distances among the
/// converged starts, aligned as the problem's gauge requires.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidityReport {
    pub outcomes: Vec<StartOutcome>,
    /// `(i, j, distance)` with `i < j` indexing converged starts.
    pub distances: Vec<(usize, usize, f64)>,
    pub max_distance: f64,
}

impl RigidityReport {
    pub fn all_converged(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| matches!(o, StartOutcome::Converged { .. }))
    }

    /// The uniqueness verdict: every start converged and every pairwise
    /// distance lies within `10 * tol`.
    pub fn agrees(&self, tol: f64) -> bool {
        self.all_converged() && self.max_distance <= 10.0 * tol
    }
}

impl fmt::Display for RigidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, outcome) in self.outcomes.iter().enumerate() {
            match outcome {
                StartOutcome::Converged { residual } => {
                    writeln!(f, "start {i} residual {residual:.16e}")?;
                }
                StartOutcome::Failed { message } => {
                    writeln!(f, "start {i} failed {message}")?;
                }
            }
        }
        for (i, j, d) in &self.distances {
            writeln!(f, "distance {i} {j} {d:.16e}")?;
        }
        write!(f, "max-distance {:.16e}", self.max_distance)
    }
}

/// Sample one start: each coordinate uniform in a box around `center`,
/// clamped into the open wall interval.
fn sample_box(rng: &mut ChaCha8Rng, center: &[f64], radius: f64, lo: f64, hi: f64) -> Vec<f64> {
    center
        .iter()
        .map(|c| (c + rng.random_range(-radius..radius)).clamp(lo, hi))
        .collect()
}

/// Resampling budget per start. Divergent coefficient exponents leave
/// degenerate faces outside the energy's domain, so box candidates are
/// probed and redrawn until the gradient exists at the start; candidates
/// always pass on the first draw when the coefficients extend to the
/// whole box. The box halves every [`SHRINK_EVERY`] rejections, closing in
/// on the unit metric, which is admissible on every mesh; this reaches
/// thin admissible regions that a full-size box would almost never hit.
const SAMPLE_ATTEMPTS: usize = 400;
const SHRINK_EVERY: usize = 50;
/// Reject candidate starts whose residual already exceeds this bound. A
/// draw squeezed against a divergent stratum is technically admissible but
/// sits where the barrier dwarfs every curvature scale and the Hessian
/// differencing breaks down; since the energy is convex, such starts add
/// nothing to a uniqueness certificate.
const START_RESIDUAL_BOUND: f64 = 1e3;

/// Run `solve` on every start point concurrently; results keep start order.
fn fan_out<T: Send>(
    points: &[Vec<f64>],
    solve: impl Fn(&[f64]) -> Result<(T, f64), String> + Sync,
) -> Vec<Result<(T, f64), String>> {
    thread::scope(|s| {
        let solve = &solve;
        let handles: Vec<_> = points
            .iter()
            .map(|p| s.spawn(move || solve(p)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    })
}

/// Fold per-start results into a report, measuring converged pairs with
/// `dist`.
fn assemble<T>(
    results: Vec<Result<(T, f64), String>>,
    dist: impl Fn(&T, &T) -> f64,
) -> RigidityReport {
    let mut outcomes = Vec::with_capacity(results.len());
    let mut solutions: Vec<(usize, T)> = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((sol, residual)) => {
                outcomes.push(StartOutcome::Converged { residual });
                solutions.push((i, sol));
            }
            Err(message) => outcomes.push(StartOutcome::Failed { message }),
        }
    }
    let mut distances = Vec::new();
    let mut max_distance = 0.0f64;
    for a in 0..solutions.len() {
        for b in a + 1..solutions.len() {
            let d = dist(&solutions[a].1, &solutions[b].1);
            max_distance = max_distance.max(d);
            distances.push((solutions[a].0, solutions[b].0, d));
        }
    }
    RigidityReport { outcomes, distances, max_distance }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Sup distance after subtracting each vector's mean (translation gauge).
fn mean_aligned_sup(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max(((x - ma) - (y - mb)).abs()))
}

/// Sup distance after the optimal common shift: half the spread of the
/// differences. This is the distance between the shift orbits of `a` and
/// `b`.
fn shift_aligned_sup(a: &[f64], b: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo > hi {
        return 0.0;
    }
    (hi - lo) / 2.0
}

/// Multi-start uniqueness run for inversive-distance packings.
///
/// Radii are sampled in the packing's log chart around the unit packing
/// (`r = 1` at every vertex), with hyperbolic samples clamped below zero.
/// Distances compare chart coordinates of the solved radii: mean-aligned
/// for Euclidean packings (scaling gauge), plain sup-norm for hyperbolic
/// ones.
pub fn packing_rigidity(
    mesh: &Mesh,
    geometry: GeometryTag,
    inversive: &Field,
    allow_negative_inversive: bool,
    target: &Field,
    ms: &MultiStartConfig,
    cfg: &SolverConfig,
) -> Result<RigidityReport, PackingError> {
    if geometry == GeometryTag::S2 {
        return Err(PackingError::UnsupportedGeometry);
    }
    if !mesh.is_connected() {
        return Err(PackingError::DisconnectedMesh);
    }
    let unit = Field::uniform(FieldSupport::Vertices, mesh, 1.0);
    // also validates the inversive range under the caller's policy
    let unit_packing = if allow_negative_inversive {
        PackingData::new_with_negative_inversive(geometry, inversive.clone(), unit)?
    } else {
        PackingData::new(geometry, inversive.clone(), unit)?
    };
    let center = packing::to_u(&unit_packing)?;
    let hi_wall = match geometry {
        GeometryTag::E2 => f64::INFINITY,
        _ => -1e-3,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(ms.seed);
    let points: Vec<Vec<f64>> = (0..ms.starts)
        .map(|_| {
            sample_box(&mut rng, center.u.values(), ms.box_radius, f64::NEG_INFINITY, hi_wall)
        })
        .collect();

    let results = fan_out(&points, |p| {
        let coords = UCoords {
            geometry,
            u: Field::new(FieldSupport::Vertices, p.to_vec()),
        };
        let init = packing::from_u(&coords, inversive).map_err(|e| e.to_string())?;
        let (solution, report) =
            packing::solve_packing(mesh, &init, target, cfg).map_err(|e| e.to_string())?;
        let sol_u = packing::to_u(&solution).map_err(|e| e.to_string())?;
        Ok((sol_u.u.values().to_vec(), report.residual_sup_norm()))
    });

    Ok(assemble(results, |a: &Vec<f64>, b: &Vec<f64>| match geometry {
        GeometryTag::E2 => mean_aligned_sup(a, b),
        _ => sup_diff(a, b),
    }))
}

/// Multi-start uniqueness run for prescribed form curvatures.
///
/// Edge coordinates are sampled around the chart image of the unit metric
/// (`l = 1` on every edge), clamped into the chart image with a small
/// margin and redrawn, from boxes shrinking toward the unit metric, while
/// the energy gradient is undefined or barrier-dominated at the candidate.
/// Euclidean solutions compare log-lengths after an optimal
/// common shift, since a curvature target pins a Euclidean metric only up
/// to scale; spherical and hyperbolic solutions compare lengths directly.
pub fn prescribed_rigidity(
    mesh: &Mesh,
    spec: &FunctionalSpec,
    target: &Field,
    ms: &MultiStartConfig,
    cfg: &SolverConfig,
) -> Result<RigidityReport, SchlaefliError> {
    if !spec.solver_allowed() {
        return Err(SchlaefliError::UnsupportedSpec {
            which: spec.which(),
            geometry: spec.geometry(),
        });
    }
    if !mesh.is_connected() {
        return Err(SchlaefliError::DisconnectedMesh);
    }
    let center = integrals::chart(spec.chart(), 1.0)?;
    let image = spec.u_image();
    let lo_wall = if image.lo.is_finite() {
        image.lo + 1e-3 * (1.0 + image.lo.abs())
    } else {
        f64::NEG_INFINITY
    };
    let hi_wall = if image.hi.is_finite() {
        image.hi - 1e-3 * (1.0 + image.hi.abs())
    } else {
        f64::INFINITY
    };
    let centers = vec![center; mesh.edge_count()];

    let usable_start = |u: &[f64]| -> bool {
        let Ok(coords) = EdgeUCoords::new(*spec, Field::new(FieldSupport::Edges, u.to_vec()))
        else {
            return false;
        };
        match schlaefli::schlaefli_energy_gradient(mesh, &coords, target) {
            Ok(g) => g
                .values()
                .iter()
                .all(|x| x.is_finite() && x.abs() <= START_RESIDUAL_BOUND),
            Err(_) => false,
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ms.seed);
    let points: Vec<Vec<f64>> = (0..ms.starts)
        .map(|_| {
            let mut candidate = Vec::new();
            for attempt in 0..SAMPLE_ATTEMPTS {
                let radius = ms.box_radius * 0.5f64.powi((attempt / SHRINK_EVERY) as i32);
                candidate = sample_box(&mut rng, &centers, radius, lo_wall, hi_wall);
                if usable_start(&candidate) {
                    break;
                }
            }
            // an exhausted budget keeps the last draw; the solve then
            // reports the rejection rather than masking it
            candidate
        })
        .collect();

    let results = fan_out(&points, |p| {
        let coords = EdgeUCoords::new(*spec, Field::new(FieldSupport::Edges, p.to_vec()))
            .map_err(|e| e.to_string())?;
        let lengths = schlaefli::lengths_from_u(&coords).map_err(|e| e.to_string())?;
        let init = PolyhedralMetric::new(spec.geometry(), lengths);
        let (solution, report) = schlaefli::solve_prescribed(mesh, spec, target, &init, cfg)
            .map_err(|e| e.to_string())?;
        Ok((
            solution.lengths.values().to_vec(),
            report.residual_sup_norm(),
        ))
    });

    Ok(assemble(results, |a: &Vec<f64>, b: &Vec<f64>| {
        if spec.geometry() == GeometryTag::E2 {
            let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
            let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
            shift_aligned_sup(&la, &lb)
        } else {
            sup_diff(a, b)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::vertex_curvature;
    use crate::packing::lengths_from_radii;
    use crate::schlaefli::{form_curvature, Functional};
    use crate::shapes;

    fn tetra_packing_target(
        geometry: GeometryTag,
        inversive: &[f64],
        radii: &[f64],
    ) -> (Mesh, Field, Field) {
        let mesh = shapes::tetrahedron();
        let inversive = Field::new(FieldSupport::Edges, inversive.to_vec());
        let data = PackingData::new(
            geometry,
            inversive.clone(),
            Field::new(FieldSupport::Vertices, radii.to_vec()),
        )
        .unwrap();
        let lengths = lengths_from_radii(&mesh, &data).unwrap();
        let target =
            vertex_curvature(&mesh, &PolyhedralMetric::new(geometry, lengths)).unwrap();
        (mesh, inversive, target)
    }

    #[test]
    fn symmetric_euclidean_packing_agrees_across_starts() {
        let mesh = shapes::tetrahedron();
        let inversive = Field::uniform(FieldSupport::Edges, &mesh, 1.0);
        let target = Field::uniform(FieldSupport::Vertices, &mesh, std::f64::consts::PI);
        let report = packing_rigidity(
            &mesh,
            GeometryTag::E2,
            &inversive,
            false,
            &target,
            &MultiStartConfig::new(10, 1),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(report.all_converged(), "{report}");
        assert_eq!(report.distances.len(), 45);
        assert!(report.max_distance <= 1e-9, "{report}");
        assert!(report.agrees(1e-10));
    }

    #[test]
    fn hyperbolic_packing_round_trip_is_rigid() {
        let (mesh, inversive, target) = tetra_packing_target(
            GeometryTag::H2,
            &[1.0, 0.3, 0.7, 1.2, 0.5, 0.9],
            &[0.8, 1.1, 0.9, 1.2],
        );
        let report = packing_rigidity(
            &mesh,
            GeometryTag::H2,
            &inversive,
            false,
            &target,
            &MultiStartConfig::new(6, 11),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(report.agrees(1e-10), "{report}");
    }

    #[test]
    fn euclidean_prescription_agrees_after_scaling_alignment() {
        let mesh = shapes::tetrahedron();
        let spec = FunctionalSpec::new(Functional::Phi, GeometryTag::E2, 1.0).unwrap();
        let truth = Field::uniform(FieldSupport::Edges, &mesh, 1.0);
        let target = form_curvature(&mesh, &spec, &truth).unwrap();
        let report = prescribed_rigidity(
            &mesh,
            &spec,
            &target,
            &MultiStartConfig::new(6, 7),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(report.agrees(1e-10), "{report}");
    }

    #[test]
    fn spherical_prescription_agrees_without_alignment() {
        let mesh = shapes::tetrahedron();
        let spec = FunctionalSpec::new(Functional::Phi, GeometryTag::S2, 0.0).unwrap();
        let truth = Field::uniform(FieldSupport::Edges, &mesh, 1.0);
        let target = form_curvature(&mesh, &spec, &truth).unwrap();
        let report = prescribed_rigidity(
            &mesh,
            &spec,
            &target,
            &MultiStartConfig::new(5, 3),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(report.agrees(1e-10), "{report}");
    }

    #[test]
    fn divergent_exponent_starts_are_resampled_into_the_domain() {
        // h = -2 coefficients blow up on degenerate faces, so raw box
        // draws are not always admissible; the probe must still deliver
        // ten working starts
        let mesh = shapes::tetrahedron();
        let spec = FunctionalSpec::new(Functional::Phi, GeometryTag::E2, -2.0).unwrap();
        let truth = Field::uniform(FieldSupport::Edges, &mesh, 1.0);
        let target = form_curvature(&mesh, &spec, &truth).unwrap();
        let report = prescribed_rigidity(
            &mesh,
            &spec,
            &target,
            &MultiStartConfig::new(10, 5),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(report.agrees(1e-10), "{report}");
    }

    #[test]
    fn same_seed_reproduces_the_report() {
        let (mesh, inversive, target) = tetra_packing_target(
            GeometryTag::H2,
            &[1.0, 0.3, 0.7, 1.2, 0.5, 0.9],
            &[0.8, 1.1, 0.9, 1.2],
        );
        let cfg = SolverConfig::default();
        let ms = MultiStartConfig::new(4, 42);
        let a = packing_rigidity(&mesh, GeometryTag::H2, &inversive, false, &target, &ms, &cfg)
            .unwrap();
        let b = packing_rigidity(&mesh, GeometryTag::H2, &inversive, false, &target, &ms, &cfg)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outliers_and_failures_are_flagged() {
        // stand-in for a broken solver: one start lands on a different
        // answer, one start errors out
        let results: Vec<Result<(Vec<f64>, f64), String>> = vec![
            Ok((vec![0.0, 0.0], 1e-12)),
            Ok((vec![0.5, -0.5], 1e-12)),
            Err("iteration limit reached".into()),
        ];
        let report = assemble(results, |a: &Vec<f64>, b: &Vec<f64>| sup_diff(a, b));
        assert!(!report.all_converged());
        assert!(!report.agrees(1e-10));
        assert_eq!(report.distances, vec![(0, 1, 0.5)]);
        assert_eq!(report.max_distance, 0.5);
        assert_eq!(
            report.outcomes[2],
            StartOutcome::Failed {
                message: "iteration limit reached".into()
            }
        );
    }

    #[test]
    fn alignment_distances_quotient_the_gauges() {
        // same orbit, different representative
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![1.7, 2.7, 3.7];
        assert!(mean_aligned_sup(&a, &b) < 1e-15);
        assert!(shift_aligned_sup(&a, &b) < 1e-15);
        assert!((sup_diff(&a, &b) - 0.7).abs() < 1e-12);
        // genuinely different shapes keep a positive distance
        let c = vec![1.0, 2.5, 3.0];
        assert!(mean_aligned_sup(&a, &c) > 0.1);
        assert!(shift_aligned_sup(&a, &c) > 0.1);
    }
}
