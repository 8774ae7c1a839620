//! Curvatures of a polyhedral metric on a closed triangulated surface.
//!
//! A metric assigns a length to every edge so that each triangle satisfies
//! the strict triangle inequalities of its geometry. From the resulting
//! corner angles we evaluate:
//!
//! * vertex curvature `k(v) = 2π − Σ` of the angles at `v`;
//! * the edge curvature family `φ_h(e) = i_sin(h, a) + i_sin(h, a′)`, with
//!   `a, a′` the two angles facing `e` (`φ_0` is the angle-sum defect,
//!   `φ_{−2}` the cotangent Laplacian weight);
//! * the edge curvature family `ψ_h(e) = i_cos(h, (b+c−a)/2) +
//!   i_cos(h, (b′+c′−a′)/2)`, with `b, c` (resp. `b′, c′`) the angles at the
//!   endpoints of `e` in each triangle;
//! * Gauss–Bonnet totals relating `Σ k` to the Euler characteristic and,
//!   in the non-Euclidean geometries, the metric's area.
//!
//! For Euclidean metrics `(b+c−a)/2 = π/2 − a`, which makes
//! `ψ_h(e) = −φ_h(e)` identically.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geom::{self, AngleTriple, DomainClass, GeometryTag, TriangleLengths};
use crate::integrals::{i_cos, i_sin, IntegralError};
use crate::mesh::{Field, FieldSupport, Mesh};

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("triangle {triangle} is not admissible, classified {class:?}")]
    InadmissibleMetric {
        triangle: usize,
        class: DomainClass,
    },
    #[error("edge {edge} has invalid length {value}")]
    InvalidLength { edge: usize, value: f64 },
    #[error(transparent)]
    Integral(#[from] IntegralError),
}

/// Edge lengths together with the geometry they are measured in.
#[derive(Debug, Clone)]
pub struct PolyhedralMetric {
    pub geometry: GeometryTag,
    pub lengths: Field,
}

impl PolyhedralMetric {
    pub fn new(geometry: GeometryTag, lengths: Field) -> Self {
        assert_eq!(lengths.support(), FieldSupport::Edges);
        PolyhedralMetric { geometry, lengths }
    }

    /// Length triple of a triangle, indexed so `l[i]` is opposite corner `i`.
    pub fn triangle_lengths(&self, mesh: &Mesh, t: usize) -> TriangleLengths {
        TriangleLengths {
            l: [
                self.lengths.get(mesh.opposite_edge(t, 0)),
                self.lengths.get(mesh.opposite_edge(t, 1)),
                self.lengths.get(mesh.opposite_edge(t, 2)),
            ],
        }
    }
}

/// Corner angles of every triangle, or the first inadmissibility found.
pub fn corner_angles(
    mesh: &Mesh,
    metric: &PolyhedralMetric,
) -> Result<Vec<AngleTriple>, CurvatureError> {
    assert_eq!(metric.lengths.len(), mesh.edge_count());
    for (e, &l) in metric.lengths.values().iter().enumerate() {
        let bad = !(l > 0.0) || !l.is_finite() || (metric.geometry == GeometryTag::S2 && l >= PI);
        if bad {
            return Err(CurvatureError::InvalidLength { edge: e, value: l });
        }
    }
    let mut angles = Vec::with_capacity(mesh.triangle_count());
    for t in 0..mesh.triangle_count() {
        let lengths = metric.triangle_lengths(mesh, t);
        let class = geom::classify(metric.geometry, &lengths, 0.0)
            .expect("lengths validated above");
        if class != DomainClass::Interior {
            return Err(CurvatureError::InadmissibleMetric { triangle: t, class });
        }
        angles.push(geom::angles(metric.geometry, &lengths).expect("classified Interior"));
    }
    Ok(angles)
}

fn k_from_angles(mesh: &Mesh, angles: &[AngleTriple]) -> Field {
    let mut values = vec![2.0 * PI; mesh.vertex_count()];
    for (v, value) in values.iter_mut().enumerate() {
        for &(t, corner) in mesh.corners_at(v) {
            *value -= angles[t].theta[corner];
        }
    }
    Field::new(FieldSupport::Vertices, values)
}

fn phi_from_angles(
    mesh: &Mesh,
    angles: &[AngleTriple],
    h: f64,
) -> Result<Field, CurvatureError> {
    let mut values = Vec::with_capacity(mesh.edge_count());
    for e in 0..mesh.edge_count() {
        let mut phi = 0.0;
        for (t, corner) in mesh.edge_sides(e) {
            phi += i_sin(h, angles[t].theta[corner])?;
        }
        values.push(phi);
    }
    Ok(Field::new(FieldSupport::Edges, values))
}

fn psi_from_angles(
    mesh: &Mesh,
    angles: &[AngleTriple],
    h: f64,
) -> Result<Field, CurvatureError> {
    let mut values = Vec::with_capacity(mesh.edge_count());
    for e in 0..mesh.edge_count() {
        let mut psi = 0.0;
        for (t, corner) in mesh.edge_sides(e) {
            let theta = angles[t].theta;
            let facing = theta[corner];
            let adjacent = theta[0] + theta[1] + theta[2] - facing;
            psi += i_cos(h, (adjacent - facing) / 2.0)?;
        }
        values.push(psi);
    }
    Ok(Field::new(FieldSupport::Edges, values))
}

/// `k(v) = 2π` minus the corner angles at `v`.
pub fn vertex_curvature(mesh: &Mesh, metric: &PolyhedralMetric) -> Result<Field, CurvatureError> {
    Ok(k_from_angles(mesh, &corner_angles(mesh, metric)?))
}

/// `φ_h(e)`: `i_sin(h, ·)` summed over the two angles facing `e`.
pub fn phi_curvature(
    mesh: &Mesh,
    metric: &PolyhedralMetric,
    h: f64,
) -> Result<Field, CurvatureError> {
    phi_from_angles(mesh, &corner_angles(mesh, metric)?, h)
}

/// `ψ_h(e)`: `i_cos(h, (b+c−a)/2)` summed over the two triangles at `e`.
pub fn psi_curvature(
    mesh: &Mesh,
    metric: &PolyhedralMetric,
    h: f64,
) -> Result<Field, CurvatureError> {
    psi_from_angles(mesh, &corner_angles(mesh, metric)?, h)
}

/// Totals of the Gauss–Bonnet identity for one metric.
#[derive(Debug, Clone, Copy)]
pub struct GaussBonnet {
    /// Sum of vertex curvatures.
    pub total_curvature: f64,
    /// Metric area; identically 0 in the Euclidean case, where area carries
    /// no curvature.
    pub area: f64,
    /// `Σk − 2πχ` corrected by `∓ area` in hyperbolic/spherical geometry;
    /// zero in exact arithmetic.
    pub residual: f64,
}

fn gauss_bonnet_from_angles(mesh: &Mesh, geometry: GeometryTag, angles: &[AngleTriple]) -> GaussBonnet {
    let total_curvature: f64 = 2.0 * PI * mesh.vertex_count() as f64
        - angles
            .iter()
            .map(|a| a.theta[0] + a.theta[1] + a.theta[2])
            .sum::<f64>();
    let chi_term = 2.0 * PI * mesh.euler_characteristic() as f64;
    let (area, residual) = match geometry {
        GeometryTag::E2 => (0.0, total_curvature - chi_term),
        GeometryTag::H2 => {
            let area: f64 = angles
                .iter()
                .map(|a| PI - (a.theta[0] + a.theta[1] + a.theta[2]))
                .sum();
            (area, total_curvature - chi_term - area)
        }
        GeometryTag::S2 => {
            let area: f64 = angles
                .iter()
                .map(|a| (a.theta[0] + a.theta[1] + a.theta[2]) - PI)
                .sum();
            (area, total_curvature - chi_term + area)
        }
    };
    GaussBonnet {
        total_curvature,
        area,
        residual,
    }
}

pub fn gauss_bonnet(mesh: &Mesh, metric: &PolyhedralMetric) -> Result<GaussBonnet, CurvatureError> {
    Ok(gauss_bonnet_from_angles(
        mesh,
        metric.geometry,
        &corner_angles(mesh, metric)?,
    ))
}

/// All curvatures of one metric, computed from a single angle pass.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub k: Field,
    /// `(h, φ_h)` when requested.
    pub phi: Option<(f64, Field)>,
    /// `(h, ψ_h)` when requested.
    pub psi: Option<(f64, Field)>,
    pub total_defect: f64,
    pub area: f64,
    pub gauss_bonnet_residual: f64,
}

pub fn curvature_report(
    mesh: &Mesh,
    metric: &PolyhedralMetric,
    phi_h: Option<f64>,
    psi_h: Option<f64>,
) -> Result<CurvatureReport, CurvatureError> {
    let angles = corner_angles(mesh, metric)?;
    let phi = match phi_h {
        Some(h) => Some((h, phi_from_angles(mesh, &angles, h)?)),
        None => None,
    };
    let psi = match psi_h {
        Some(h) => Some((h, psi_from_angles(mesh, &angles, h)?)),
        None => None,
    };
    let gb = gauss_bonnet_from_angles(mesh, metric.geometry, &angles);
    Ok(CurvatureReport {
        k: k_from_angles(mesh, &angles),
        phi,
        psi,
        total_defect: gb.total_curvature,
        area: gb.area,
        gauss_bonnet_residual: gb.residual,
    })
}
