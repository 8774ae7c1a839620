//! Inversive distance circle packings.
//!
//! A packing assigns a radius to every vertex; together with a fixed
//! inversive distance per edge this induces edge lengths
//!
//! * Euclidean: `l^2 = r^2 + r'^2 + 2 r r' I`,
//! * hyperbolic: `cosh l = cosh r cosh r' + I sinh r sinh r'`,
//! * spherical (length evaluation only): `cos l = cos r cos r' + I sin r sin r'`.
//!
//! In the log coordinates `u = ln r` (Euclidean) or `u = ln tanh(r/2)`
//! (hyperbolic), the total energy
//!
//! `W(u) = -sum_triangles F(u_i, u_j, u_k) + sum_i (2 pi - a_i) u_i`
//!
//! is convex, `F` being the integral of the extended angle form; its
//! gradient component at a vertex is the extended curvature minus the
//! target `a`. `solve_packing` minimizes `W` to prescribe curvature, and
//! `critical_radius` locates the degeneration threshold of a triangle in
//! one radius.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geom::{self, AngleTriple, DomainClass, GeometryTag, TriangleLengths};
use crate::integrals::{self, IntegralError};
use crate::mesh::{Field, FieldSupport, Mesh};
use crate::solver::{self, EnergyModel, MinimizeError, Probe, SolveReport, SolveStatus, SolverConfig};

#[derive(Debug, Error)]
pub enum PackingError {
    #[error(
        "inversive distance {value} at edge {edge} is negative; \
         use new_with_negative_inversive to allow I >= -1"
    )]
    NegativeInversive { edge: usize, value: f64 },
    #[error("inversive distance {value} at edge {edge} is below -1, where no length is defined")]
    InversiveBelowMinusOne { edge: usize, value: f64 },
    #[error("radius {value} at vertex {vertex} is not positive")]
    NonpositiveRadius { vertex: usize, value: f64 },
    #[error(
        "spherical cos-length {value} at edge {edge} is outside [-1, 1]; \
         the circles admit no spherical realization"
    )]
    SphericalLengthUndefined { edge: usize, value: f64 },
    #[error("u-coordinate {value} at vertex {vertex} is outside the domain")]
    RangeError { vertex: usize, value: f64 },
    #[error("edge {edge} has length zero (inversive distance -1 with equal radii)")]
    DegenerateEdge { edge: usize },
    #[error("spherical packings support length evaluation only")]
    UnsupportedGeometry,
    #[error("the mesh must be connected")]
    DisconnectedMesh,
    #[error(
        "total target curvature {total} differs from 2*pi*chi = {expected}; \
         no Euclidean packing realizes it"
    )]
    NoSolutionPossible { total: f64, expected: f64 },
    #[error("the initial point is outside the solver domain")]
    InvalidStart,
    #[error("iteration limit reached with curvature residual {:.3e}", .0.residual_sup_norm())]
    MaxIterations(Box<SolveReport>),
    #[error(
        "no packing attains the target curvature (residual {:.3e} after {} iterations)",
        .0.residual_sup_norm(), .0.iterations
    )]
    TargetUnattainable(Box<SolveReport>),
    #[error(transparent)]
    Integral(#[from] IntegralError),
}

/// Radii, inversive distances, and the geometry both live in.
#[derive(Debug, Clone)]
pub struct PackingData {
    pub geometry: GeometryTag,
    /// Edge field, each entry at least 0 (or at least -1 when built with
    /// `new_with_negative_inversive`).
    pub inversive: Field,
    /// Vertex field, positive.
    pub radii: Field,
}

impl PackingData {
    /// Packing with nonnegative inversive distances, the range the
    /// rigidity theory covers.
    pub fn new(
        geometry: GeometryTag,
        inversive: Field,
        radii: Field,
    ) -> Result<Self, PackingError> {
        for (e, &i) in inversive.values().iter().enumerate() {
            if !(i >= 0.0) {
                return Err(PackingError::NegativeInversive { edge: e, value: i });
            }
        }
        Self::validated(geometry, inversive, radii)
    }

    /// Admit inversive distances in [-1, 0) as well. Lengths remain
    /// defined, but no rigidity statement covers this range; callers opt
    /// in explicitly.
    pub fn new_with_negative_inversive(
        geometry: GeometryTag,
        inversive: Field,
        radii: Field,
    ) -> Result<Self, PackingError> {
        for (e, &i) in inversive.values().iter().enumerate() {
            if !(i >= -1.0) {
                return Err(PackingError::InversiveBelowMinusOne { edge: e, value: i });
            }
        }
        Self::validated(geometry, inversive, radii)
    }

    fn validated(
        geometry: GeometryTag,
        inversive: Field,
        radii: Field,
    ) -> Result<Self, PackingError> {
        assert_eq!(inversive.support(), FieldSupport::Edges);
        assert_eq!(radii.support(), FieldSupport::Vertices);
        for (v, &r) in radii.values().iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(PackingError::NonpositiveRadius { vertex: v, value: r });
            }
        }
        Ok(PackingData {
            geometry,
            inversive,
            radii,
        })
    }
}

/// Log coordinates of a packing: `u = ln r` (Euclidean, all of R) or
/// `u = ln tanh(r/2)` (hyperbolic, negative reals).
#[derive(Debug, Clone)]
pub struct UCoords {
    pub geometry: GeometryTag,
    pub u: Field,
}

fn u_from_radius(geometry: GeometryTag, r: f64) -> f64 {
    match geometry {
        GeometryTag::E2 => r.ln(),
        // ln tanh(r/2) = ln1p(-e^-r) - ln1p(e^-r), stable for large r
        GeometryTag::H2 => {
            let e = (-r).exp();
            let u = (-e).ln_1p() - e.ln_1p();
            // underflow of e^-r would round u up to -0.0
            u.min(-5e-324)
        }
        GeometryTag::S2 => unreachable!("checked by caller"),
    }
}

fn radius_from_u(geometry: GeometryTag, u: f64) -> f64 {
    match geometry {
        GeometryTag::E2 => u.exp(),
        // 2 artanh(e^u) = ln1p(e^u) - ln(-expm1(u)), stable near u = 0
        GeometryTag::H2 => u.exp().ln_1p() - (-u.exp_m1()).ln(),
        GeometryTag::S2 => unreachable!("checked by caller"),
    }
}

pub fn to_u(data: &PackingData) -> Result<UCoords, PackingError> {
    if data.geometry == GeometryTag::S2 {
        return Err(PackingError::UnsupportedGeometry);
    }
    let u = data
        .radii
        .values()
        .iter()
        .map(|&r| u_from_radius(data.geometry, r))
        .collect();
    Ok(UCoords {
        geometry: data.geometry,
        u: Field::new(FieldSupport::Vertices, u),
    })
}

pub fn from_u(coords: &UCoords, inversive: &Field) -> Result<PackingData, PackingError> {
    if coords.geometry == GeometryTag::S2 {
        return Err(PackingError::UnsupportedGeometry);
    }
    let mut radii = Vec::with_capacity(coords.u.len());
    for (v, &u) in coords.u.values().iter().enumerate() {
        let ok = u.is_finite() && (coords.geometry == GeometryTag::E2 || u < 0.0);
        if !ok {
            return Err(PackingError::RangeError { vertex: v, value: u });
        }
        radii.push(radius_from_u(coords.geometry, u));
    }
    PackingData::new_with_negative_inversive(
        coords.geometry,
        inversive.clone(),
        Field::new(FieldSupport::Vertices, radii),
    )
}

/// Length induced on one edge; `None` marks a spherical pair with no
/// realization or a degenerate (zero) length.
fn edge_length(geometry: GeometryTag, r1: f64, r2: f64, i: f64) -> Option<f64> {
    match geometry {
        GeometryTag::E2 => {
            let sq = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * i;
            (sq > 0.0).then(|| sq.sqrt())
        }
        GeometryTag::H2 => {
            let c = r1.cosh() * r2.cosh() + i * r1.sinh() * r2.sinh();
            (c > 1.0).then(|| c.acosh())
        }
        GeometryTag::S2 => {
            let c = r1.cos() * r2.cos() + i * r1.sin() * r2.sin();
            if c.abs() > 1.0 + 1e-12 {
                return None;
            }
            let l = c.clamp(-1.0, 1.0).acos();
            (l > 0.0).then_some(l)
        }
    }
}

/// Per-edge lengths of the packing. Degenerate triangles are allowed; the
/// only failures are spherical pairs without a realization.
pub fn lengths_from_radii(mesh: &Mesh, data: &PackingData) -> Result<Field, PackingError> {
    assert_eq!(data.radii.len(), mesh.vertex_count());
    assert_eq!(data.inversive.len(), mesh.edge_count());
    let mut lengths = Vec::with_capacity(mesh.edge_count());
    for (e, pair) in mesh.edges().iter().enumerate() {
        let r1 = data.radii.get(pair[0]);
        let r2 = data.radii.get(pair[1]);
        let i = data.inversive.get(e);
        match edge_length(data.geometry, r1, r2, i) {
            Some(l) => lengths.push(l),
            None if data.geometry == GeometryTag::S2 => {
                let c = r1.cos() * r2.cos() + i * r1.sin() * r2.sin();
                return Err(PackingError::SphericalLengthUndefined { edge: e, value: c });
            }
            None => return Err(PackingError::DegenerateEdge { edge: e }),
        }
    }
    Ok(Field::new(FieldSupport::Edges, lengths))
}

fn triangle_lengths(
    geometry: GeometryTag,
    i_triple: &[f64; 3],
    r_triple: &[f64; 3],
) -> Option<TriangleLengths> {
    let mut l = [0.0; 3];
    for k in 0..3 {
        let ri = r_triple[(k + 1) % 3];
        let rj = r_triple[(k + 2) % 3];
        l[k] = edge_length(geometry, ri, rj, i_triple[k])?;
    }
    Some(TriangleLengths { l })
}

/// Extended corner angles of one packing triangle. `i_triple[k]` is the
/// inversive distance of the edge opposite corner `k`, joining the circles
/// of radii `r_triple[(k+1)%3]` and `r_triple[(k+2)%3]`.
///
/// Total on all positive radii: degenerate length triples take the
/// constant boundary values instead of failing.
///
/// # Panics
///
/// On spherical input; the extension is a Euclidean/hyperbolic construction.
pub fn extended_triangle_angles(
    geometry: GeometryTag,
    i_triple: &[f64; 3],
    r_triple: &[f64; 3],
) -> AngleTriple {
    assert!(
        geometry != GeometryTag::S2,
        "spherical packings support length evaluation only"
    );
    let lengths = triangle_lengths(geometry, i_triple, r_triple)
        .expect("lengths are positive when all inversive distances exceed -1");
    geom::extended_angles(geometry, &lengths).expect("positive lengths")
}

/// Extended curvature at every vertex, or `None` when an edge length
/// degenerates to zero.
fn curvature_from_radii(
    mesh: &Mesh,
    geometry: GeometryTag,
    inversive: &Field,
    radii: &[f64],
) -> Option<Vec<f64>> {
    let mut k = vec![2.0 * PI; mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let i_triple = [
            inversive.get(mesh.opposite_edge(t, 0)),
            inversive.get(mesh.opposite_edge(t, 1)),
            inversive.get(mesh.opposite_edge(t, 2)),
        ];
        let r_triple = [radii[tri[0]], radii[tri[1]], radii[tri[2]]];
        let lengths = triangle_lengths(geometry, &i_triple, &r_triple)?;
        let angles = geom::extended_angles(geometry, &lengths).ok()?;
        for (c, &v) in tri.iter().enumerate() {
            k[v] -= angles.theta[c];
        }
    }
    Some(k)
}

struct PackingModel<'a> {
    mesh: &'a Mesh,
    geometry: GeometryTag,
    inversive: &'a Field,
    target: &'a [f64],
}

impl PackingModel<'_> {
    fn radii(&self, u: &[f64]) -> Option<Vec<f64>> {
        if self.geometry == GeometryTag::H2 && u.iter().any(|&x| x >= 0.0) {
            return None;
        }
        if u.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some(u.iter().map(|&x| radius_from_u(self.geometry, x)).collect())
    }
}

impl EnergyModel for PackingModel<'_> {
    type Error = std::convert::Infallible;

    fn gradient(&self, u: &[f64]) -> Result<Probe, Self::Error> {
        let Some(radii) = self.radii(u) else {
            return Ok(Probe::Rejected);
        };
        match curvature_from_radii(self.mesh, self.geometry, self.inversive, &radii) {
            Some(k) => Ok(Probe::Grad(
                k.iter().zip(self.target).map(|(k, a)| k - a).collect(),
            )),
            None => Ok(Probe::Rejected),
        }
    }

    fn max_step(&self, u: &[f64], d: &[f64]) -> f64 {
        match self.geometry {
            GeometryTag::E2 => f64::INFINITY,
            // keep max u_i <= -1e-12
            GeometryTag::H2 => u
                .iter()
                .zip(d)
                .filter(|(_, &s)| s > 0.0)
                .map(|(&x, &s)| (-1e-12 - x) / s)
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            GeometryTag::S2 => unreachable!(),
        }
    }

    fn project(&self, v: &mut [f64]) {
        if self.geometry == GeometryTag::E2 {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            for x in v {
                *x -= mean;
            }
        }
    }

    fn is_degenerate_at(&self, u: &[f64]) -> bool {
        let Some(radii) = self.radii(u) else {
            return true;
        };
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let i_triple = [
                self.inversive.get(self.mesh.opposite_edge(t, 0)),
                self.inversive.get(self.mesh.opposite_edge(t, 1)),
                self.inversive.get(self.mesh.opposite_edge(t, 2)),
            ];
            let r_triple = [radii[tri[0]], radii[tri[1]], radii[tri[2]]];
            let interior = triangle_lengths(self.geometry, &i_triple, &r_triple)
                .and_then(|l| geom::classify(self.geometry, &l, 0.0).ok())
                .is_some_and(|c| c == DomainClass::Interior);
            if !interior {
                return true;
            }
        }
        false
    }
}

/// Gradient of the packing energy: extended curvature minus target,
/// per vertex.
pub fn packing_energy_gradient(
    mesh: &Mesh,
    inversive: &Field,
    coords: &UCoords,
    target: &Field,
) -> Result<Field, PackingError> {
    if coords.geometry == GeometryTag::S2 {
        return Err(PackingError::UnsupportedGeometry);
    }
    let model = PackingModel {
        mesh,
        geometry: coords.geometry,
        inversive,
        target: target.values(),
    };
    match model.gradient(coords.u.values()).expect("infallible") {
        Probe::Grad(g) => Ok(Field::new(FieldSupport::Vertices, g)),
        Probe::Rejected => {
            // distinguish a bad coordinate from a degenerate edge
            for (v, &u) in coords.u.values().iter().enumerate() {
                let ok = u.is_finite() && (coords.geometry == GeometryTag::E2 || u < 0.0);
                if !ok {
                    return Err(PackingError::RangeError { vertex: v, value: u });
                }
            }
            let data = from_u(coords, inversive)?;
            match lengths_from_radii(mesh, &data) {
                Err(e) => Err(e),
                Ok(_) => unreachable!("gradient rejection implies an undefined length"),
            }
        }
    }
}

/// Energy difference `W(u) - W(base)`, by adaptive quadrature of the
/// gradient along the straight segment. The segment stays in the domain
/// whenever both endpoints do, the domain being convex. The quadrature is
/// split where a face's classification changes, since the extension leaves
/// a kink in the pullback there.
pub fn packing_energy(
    mesh: &Mesh,
    inversive: &Field,
    coords: &UCoords,
    target: &Field,
    base: &UCoords,
) -> Result<f64, PackingError> {
    assert_eq!(coords.geometry, base.geometry);
    if coords.geometry == GeometryTag::S2 {
        return Err(PackingError::UnsupportedGeometry);
    }
    for side in [coords, base] {
        for (v, &u) in side.u.values().iter().enumerate() {
            let ok = u.is_finite() && (side.geometry == GeometryTag::E2 || u < 0.0);
            if !ok {
                return Err(PackingError::RangeError { vertex: v, value: u });
            }
        }
    }
    let u1 = coords.u.values();
    let u0 = base.u.values();
    let delta: Vec<f64> = u1.iter().zip(u0).map(|(a, b)| a - b).collect();
    if delta.iter().all(|&d| d == 0.0) {
        return Ok(0.0);
    }
    let model = PackingModel {
        mesh,
        geometry: coords.geometry,
        inversive,
        target: target.values(),
    };
    let failed = std::cell::Cell::new(false);
    let integrand = |t: f64| -> f64 {
        let point: Vec<f64> = u0.iter().zip(&delta).map(|(b, d)| b + t * d).collect();
        match model.gradient(&point).expect("infallible") {
            Probe::Grad(g) => g.iter().zip(&delta).map(|(g, d)| g * d).sum(),
            Probe::Rejected => {
                failed.set(true);
                0.0
            }
        }
    };
    let geometry = coords.geometry;
    let class_signature = |t: f64| -> Vec<u8> {
        let point: Vec<f64> = u0.iter().zip(&delta).map(|(b, d)| b + t * d).collect();
        let Some(radii) = model.radii(&point) else {
            return vec![u8::MAX];
        };
        mesh.triangles()
            .iter()
            .enumerate()
            .map(|(f, tri)| {
                let i_triple = [
                    inversive.get(mesh.opposite_edge(f, 0)),
                    inversive.get(mesh.opposite_edge(f, 1)),
                    inversive.get(mesh.opposite_edge(f, 2)),
                ];
                let r_triple = [radii[tri[0]], radii[tri[1]], radii[tri[2]]];
                match triangle_lengths(geometry, &i_triple, &r_triple)
                    .and_then(|l| geom::classify(geometry, &l, 0.0).ok())
                {
                    Some(DomainClass::Interior) => 0,
                    Some(DomainClass::Degenerate(k)) => 1 + k as u8,
                    Some(DomainClass::SphericalOverflow) => 4,
                    Some(DomainClass::Boundary(_)) => 5,
                    None => u8::MAX,
                }
            })
            .collect()
    };
    let value = integrals::integrate_piecewise(&integrand, &class_signature, 1e-10)?;
    if failed.get() {
        // only reachable through a zero length inside the segment
        let data = from_u(coords, inversive)?;
        lengths_from_radii(mesh, &data)?;
        let data = from_u(base, inversive)?;
        lengths_from_radii(mesh, &data)?;
        return Err(PackingError::DegenerateEdge { edge: usize::MAX });
    }
    Ok(value)
}

/// Minimize the packing energy to prescribe vertex curvature. Returns the
/// solved packing (Euclidean solutions gauge-normalized to `sum u = 0`)
/// and the iteration report.
pub fn solve_packing(
    mesh: &Mesh,
    init: &PackingData,
    target: &Field,
    cfg: &SolverConfig,
) -> Result<(PackingData, SolveReport), PackingError> {
    if init.geometry == GeometryTag::S2 {
        return Err(PackingError::UnsupportedGeometry);
    }
    if !mesh.is_connected() {
        return Err(PackingError::DisconnectedMesh);
    }
    assert_eq!(target.support(), FieldSupport::Vertices);
    assert_eq!(target.len(), mesh.vertex_count());
    if init.geometry == GeometryTag::E2 {
        let total: f64 = target.values().iter().sum();
        let expected = 2.0 * PI * mesh.euler_characteristic() as f64;
        if (total - expected).abs() > 1e-9 {
            return Err(PackingError::NoSolutionPossible { total, expected });
        }
    }
    let coords = to_u(init)?;
    let mut u0 = coords.u.values().to_vec();
    let mut gauge = 0.0;
    if init.geometry == GeometryTag::E2 {
        gauge = u0.iter().sum::<f64>() / u0.len() as f64;
        for x in &mut u0 {
            *x -= gauge;
        }
    }
    let model = PackingModel {
        mesh,
        geometry: init.geometry,
        inversive: &init.inversive,
        target: target.values(),
    };
    let (mut u, mut report) = match solver::minimize(&model, u0, cfg) {
        Ok(done) => done,
        Err(MinimizeError::StartRejected) => return Err(PackingError::InvalidStart),
        Err(MinimizeError::Model(never)) => match never {},
    };
    report.gauge = gauge;
    if report.status == SolveStatus::Success {
        if init.geometry == GeometryTag::E2 {
            let mean = u.iter().sum::<f64>() / u.len() as f64;
            for x in &mut u {
                *x -= mean;
            }
        }
        if model.is_degenerate_at(&u) {
            report.status = SolveStatus::TargetUnattainable;
            return Err(PackingError::TargetUnattainable(Box::new(report)));
        }
        let solution = from_u(
            &UCoords {
                geometry: init.geometry,
                u: Field::new(FieldSupport::Vertices, u),
            },
            &init.inversive,
        )?;
        return Ok((solution, report));
    }
    match report.status {
        SolveStatus::MaxIterations => Err(PackingError::MaxIterations(Box::new(report))),
        _ => Err(PackingError::TargetUnattainable(Box::new(report))),
    }
}

/// Degeneration threshold of a packing triangle in the radius at corner
/// `k`: the root of `l_i(r_k) + l_j(r_k) = l_k`. For `r_k` at or below it
/// the triple violates the triangle inequality at `k`; above it the corner
/// is safe. `None` when `i_triple[k] <= 1`, in which case no radius
/// degenerates the triangle at `k`.
///
/// # Panics
///
/// On spherical input; the degeneration analysis covers the Euclidean and
/// hyperbolic packings only.
pub fn critical_radius(
    geometry: GeometryTag,
    i_triple: &[f64; 3],
    k: usize,
    r_i: f64,
    r_j: f64,
) -> Option<f64> {
    assert!(
        geometry != GeometryTag::S2,
        "spherical packings support length evaluation only"
    );
    assert!(k < 3);
    assert!(r_i > 0.0 && r_j > 0.0);
    let i_ij = i_triple[k];
    if i_ij <= 1.0 {
        return None;
    }
    let i_ik = i_triple[(k + 2) % 3];
    let i_jk = i_triple[(k + 1) % 3];
    let l_k = edge_length(geometry, r_i, r_j, i_ij).expect("positive inputs");
    let g = |r_k: f64| -> f64 {
        edge_length(geometry, r_j, r_k, i_jk).expect("positive inputs")
            + edge_length(geometry, r_i, r_k, i_ik).expect("positive inputs")
    };
    // g is strictly increasing with g(0+) = r_i + r_j < l_k, so the root
    // brackets between 0 and a doubled upper bound
    let mut hi = r_i.max(r_j);
    let mut doublings = 0;
    while g(hi) < l_k {
        hi *= 2.0;
        doublings += 1;
        assert!(doublings < 200, "no bracket found");
    }
    let mut lo = 0.0_f64;
    while hi - lo > 1e-14 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < l_k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
