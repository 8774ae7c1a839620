//! Triangle trigonometry in the three constant-curvature geometries and the
//! continuous extension of inner angles across degenerate length triples.
//!
//! A length triple need not satisfy the triangle inequalities: triples are
//! first classified into the open admissible region, a degenerate component
//! where one length dominates, or (spherically) the perimeter-overflow
//! region. On the admissible region the cosine laws give the angles; outside
//! it the angles extend continuously by the constant values 0 and π.

use thiserror::Error;

use std::f64::consts::PI;

/// Which constant-curvature geometry governs a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryTag {
    E2,
    H2,
    S2,
}

/// A triple of geodesic edge lengths, indexed so that angle i faces length i.
/// Deliberately admits degenerate triples; validity for a geometry (positive,
/// and below π spherically) is checked by the operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleLengths {
    pub l: [f64; 3],
}

impl TriangleLengths {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Self {
        TriangleLengths { l: [l1, l2, l3] }
    }
}

/// Which boundary stratum a triple sits on (within the caller's tolerance).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// |l_k − (l_i + l_j)| within tolerance for the carried index k.
    Tight(usize),
    /// Spherical only: perimeter within tolerance of 2π.
    Perimeter,
}

/// Stratum of a length triple relative to the admissible region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainClass {
    /// Strict triangle inequalities hold (and perimeter < 2π spherically).
    Interior,
    /// l_k ≥ l_i + l_j for the carried index k; at most one index can qualify.
    Degenerate(usize),
    /// Spherical perimeter ≥ 2π with no dominating length.
    SphericalOverflow,
    /// Within the caller-supplied tolerance of a boundary stratum.
    Boundary(BoundaryKind),
}

/// Inner angles, with angle i facing length i. Extended values off the
/// admissible region are exactly 0 or π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleTriple {
    pub theta: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("length {index} must be positive, got {value}")]
    NonpositiveLength { index: usize, value: f64 },
    #[error("spherical length {index} = {value} outside (0, π)")]
    SphericalRange { index: usize, value: f64 },
    #[error("triple is not admissible ({class:?}); use the extended angles")]
    DegenerateTriangle { class: DomainClass },
    #[error("triple is within {step} of the admissible boundary")]
    TooCloseToBoundary { step: f64 },
}

/// Cosine-law arguments may overshoot [−1, 1] by a few ulps on admissible
/// triples; anything further than this from the range is a logic error.
const ACOS_CLAMP: f64 = 1e-12;

fn acos_clamped(x: f64) -> f64 {
    debug_assert!(
        x.abs() <= 1.0 + ACOS_CLAMP,
        "cosine-law value {x} out of range on an admissible triple"
    );
    x.clamp(-1.0, 1.0).acos()
}

fn validate(geometry: GeometryTag, l: &TriangleLengths) -> Result<(), GeomError> {
    for (index, &value) in l.l.iter().enumerate() {
        if !(value > 0.0) {
            return Err(GeomError::NonpositiveLength { index, value });
        }
        if geometry == GeometryTag::S2 && value >= PI {
            return Err(GeomError::SphericalRange { index, value });
        }
    }
    Ok(())
}

/// Classify a length triple into its stratum.
///
/// With `tol = 0` the strict inequalities decide (triples exactly on a
/// stratum count as degenerate, matching the extension's constant values);
/// positive tolerances report `Boundary` for diagnostics.
pub fn classify(
    geometry: GeometryTag,
    l: &TriangleLengths,
    tol: f64,
) -> Result<DomainClass, GeomError> {
    validate(geometry, l)?;
    let [l1, l2, l3] = l.l;
    let opposite_sum = [l2 + l3, l1 + l3, l1 + l2];
    if tol > 0.0 {
        for k in 0..3 {
            if (l.l[k] - opposite_sum[k]).abs() <= tol {
                return Ok(DomainClass::Boundary(BoundaryKind::Tight(k)));
            }
        }
        if geometry == GeometryTag::S2 && (l1 + l2 + l3 - 2.0 * PI).abs() <= tol {
            return Ok(DomainClass::Boundary(BoundaryKind::Perimeter));
        }
    }
    for k in 0..3 {
        if l.l[k] >= opposite_sum[k] {
            return Ok(DomainClass::Degenerate(k));
        }
    }
    if geometry == GeometryTag::S2 && l1 + l2 + l3 >= 2.0 * PI {
        return Ok(DomainClass::SphericalOverflow);
    }
    Ok(DomainClass::Interior)
}

fn cosine_law(geometry: GeometryTag, li: f64, lj: f64, lk: f64) -> f64 {
    match geometry {
        GeometryTag::E2 => (lj * lj + lk * lk - li * li) / (2.0 * lj * lk),
        GeometryTag::H2 => (lj.cosh() * lk.cosh() - li.cosh()) / (lj.sinh() * lk.sinh()),
        GeometryTag::S2 => (li.cos() - lj.cos() * lk.cos()) / (lj.sin() * lk.sin()),
    }
}

/// Inner angles of an admissible triple via the geometry's cosine law.
pub fn angles(geometry: GeometryTag, l: &TriangleLengths) -> Result<AngleTriple, GeomError> {
    match classify(geometry, l, 0.0)? {
        DomainClass::Interior => {}
        class => return Err(GeomError::DegenerateTriangle { class }),
    }
    let [l1, l2, l3] = l.l;
    Ok(AngleTriple {
        theta: [
            acos_clamped(cosine_law(geometry, l1, l2, l3)),
            acos_clamped(cosine_law(geometry, l2, l3, l1)),
            acos_clamped(cosine_law(geometry, l3, l1, l2)),
        ],
    })
}

/// Angles extended continuously to all valid triples: the dominating index
/// gets π and the others 0 on a degenerate component, and every angle is π
/// on the spherical overflow region.
pub fn extended_angles(
    geometry: GeometryTag,
    l: &TriangleLengths,
) -> Result<AngleTriple, GeomError> {
    match classify(geometry, l, 0.0)? {
        DomainClass::Interior => angles(geometry, l),
        DomainClass::Degenerate(k) => {
            let mut theta = [0.0; 3];
            theta[k] = PI;
            Ok(AngleTriple { theta })
        }
        DomainClass::SphericalOverflow => Ok(AngleTriple { theta: [PI; 3] }),
        DomainClass::Boundary(_) => unreachable!("classification with tol = 0"),
    }
}

/// Central-difference Jacobian ∂θ_i/∂l_j with the given step. The triple must
/// be admissible with margin: every triangle-inequality slack, each length,
/// and (spherically) each gap to π and the gap to perimeter 2π must exceed
/// the step, so the whole stencil stays admissible.
pub fn angle_jacobian(
    geometry: GeometryTag,
    l: &TriangleLengths,
    step: f64,
) -> Result<[[f64; 3]; 3], GeomError> {
    match classify(geometry, l, 0.0)? {
        DomainClass::Interior => {}
        class => return Err(GeomError::DegenerateTriangle { class }),
    }
    let [l1, l2, l3] = l.l;
    let mut margin = f64::INFINITY;
    for k in 0..3 {
        let others = l1 + l2 + l3 - l.l[k];
        margin = margin.min(others - l.l[k]).min(l.l[k]);
    }
    if geometry == GeometryTag::S2 {
        margin = margin.min(2.0 * PI - (l1 + l2 + l3));
        for k in 0..3 {
            margin = margin.min(PI - l.l[k]);
        }
    }
    if margin <= step {
        return Err(GeomError::TooCloseToBoundary { step });
    }
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut plus = *l;
        let mut minus = *l;
        plus.l[j] += step;
        minus.l[j] -= step;
        let tp = angles(geometry, &plus)?.theta;
        let tm = angles(geometry, &minus)?.theta;
        for i in 0..3 {
            jac[i][j] = (tp[i] - tm[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}
