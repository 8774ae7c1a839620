//! Closed triangulated surfaces: incidence structure, manifold validation,
//! Euler characteristic, and the line-oriented text formats for meshes and
//! for vertex/edge-indexed value fields.
//!
//! Mesh files are UTF-8 with `#` comments:
//!
//! ```text
//! v <vertex count>
//! f <i> <j> <k>      # one line per triangle, 0-based indices
//! ```
//!
//! Field files carry one value per element: `v <i> <value>` lines for vertex
//! fields, `e <i> <j> <value>` lines (with i < j) for edge fields.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("edge ({0}, {1}) belongs to {2} triangles, expected exactly 2")]
    OpenEdge(usize, usize, usize),
    #[error("triangles around vertex {0} do not form a single cycle")]
    NonManifoldVertex(usize),
    #[error("triangle {0} repeats a vertex")]
    DegenerateTriangle(usize),
    #[error("triangles {0} and {1} have the same vertex set")]
    DuplicateTriangle(usize, usize),
    #[error("triangle {triangle} refers to vertex {vertex}, but only {count} vertices exist")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        count: usize,
    },
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("missing entry for {0}")]
    MissingEntry(String),
    #[error("line {line}: duplicate entry for {element}")]
    DuplicateEntry { line: usize, element: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable closed triangulated surface.
///
/// Edges are canonical sorted vertex pairs, indexed in lexicographic order,
/// so the edge numbering is a pure function of the triangle list's vertex
/// sets.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertex_count: usize,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_index: BTreeMap<[usize; 2], usize>,
    /// Per edge: the two (triangle, corner) pairs whose corner faces it.
    edge_sides: Vec<[(usize, usize); 2]>,
    /// Per triangle: the edge opposite each corner.
    opposite_edges: Vec<[usize; 3]>,
    /// Per vertex: every (triangle, corner) incident to it.
    corners: Vec<Vec<(usize, usize)>>,
    connected: bool,
}

impl Mesh {
    /// Validate a triangle soup as a closed surface and derive its incidence
    /// tables.
    pub fn build(vertex_count: usize, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut seen: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertex_count {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        vertex: v,
                        count: vertex_count,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateTriangle(t));
            }
            let mut key = *tri;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateTriangle(first, t));
            }
            seen.insert(key, t);
        }

        let mut sides: BTreeMap<[usize; 2], Vec<(usize, usize)>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for corner in 0..3 {
                let a = tri[(corner + 1) % 3];
                let b = tri[(corner + 2) % 3];
                let key = [a.min(b), a.max(b)];
                sides.entry(key).or_default().push((t, corner));
            }
        }
        let mut edges = Vec::with_capacity(sides.len());
        let mut edge_index = BTreeMap::new();
        let mut edge_sides = Vec::with_capacity(sides.len());
        let mut opposite_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (key, incident) in &sides {
            if incident.len() != 2 {
                return Err(MeshError::OpenEdge(key[0], key[1], incident.len()));
            }
            let e = edges.len();
            edges.push(*key);
            edge_index.insert(*key, e);
            edge_sides.push([incident[0], incident[1]]);
            for &(t, corner) in incident {
                opposite_edges[t][corner] = e;
            }
        }

        let mut corners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertex_count];
        for (t, tri) in triangles.iter().enumerate() {
            for (corner, &v) in tri.iter().enumerate() {
                corners[v].push((t, corner));
            }
        }

        // Link condition: the triangles at each vertex must form one cycle.
        // Every link vertex already has degree 2 (each edge has 2 triangles),
        // so it suffices that the incident triangles are connected through
        // shared edges at the vertex.
        for (v, incident) in corners.iter().enumerate() {
            if incident.is_empty() {
                return Err(MeshError::NonManifoldVertex(v));
            }
            let mut reached = vec![false; incident.len()];
            let mut stack = vec![0usize];
            reached[0] = true;
            while let Some(idx) = stack.pop() {
                let (t, _) = incident[idx];
                for (jdx, &(t2, _)) in incident.iter().enumerate() {
                    if reached[jdx] || t2 == t {
                        continue;
                    }
                    if shares_edge(&triangles, t, t2) {
                        reached[jdx] = true;
                        stack.push(jdx);
                    }
                }
            }
            if reached.iter().any(|r| !r) {
                return Err(MeshError::NonManifoldVertex(v));
            }
        }

        // Component count over the vertex adjacency graph.
        let mut component = vec![usize::MAX; vertex_count];
        let mut next = 0usize;
        for start in 0..vertex_count {
            if component[start] != usize::MAX {
                continue;
            }
            component[start] = next;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &(t, _) in &corners[v] {
                    for &w in &triangles[t] {
                        if component[w] == usize::MAX {
                            component[w] = next;
                            stack.push(w);
                        }
                    }
                }
            }
            next += 1;
        }

        Ok(Mesh {
            vertex_count,
            triangles,
            edges,
            edge_index,
            edge_sides,
            opposite_edges,
            corners,
            connected: next <= 1,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Canonical edge list: sorted pairs in lexicographic order.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&[a.min(b), a.max(b)]).copied()
    }

    /// The two (triangle, corner) pairs facing an edge.
    pub fn edge_sides(&self, e: usize) -> [(usize, usize); 2] {
        self.edge_sides[e]
    }

    /// Edge opposite the given corner of a triangle.
    pub fn opposite_edge(&self, t: usize, corner: usize) -> usize {
        self.opposite_edges[t][corner]
    }

    /// All (triangle, corner) pairs at a vertex.
    pub fn corners_at(&self, v: usize) -> &[(usize, usize)] {
        &self.corners[v]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }
}

fn shares_edge(triangles: &[[usize; 3]], t1: usize, t2: usize) -> bool {
    // Both triangles come from one corner list, so they already share that
    // corner; duplicates are rejected earlier, so a second common vertex
    // means a common edge.
    let common = triangles[t1]
        .iter()
        .filter(|a| triangles[t2].contains(a))
        .count();
    common >= 2
}

/// What a field's values are indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSupport {
    Vertices,
    Edges,
}

/// A total assignment of one real per vertex or per edge of a mesh. Values
/// are stored in vertex order or canonical edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    support: FieldSupport,
    values: Vec<f64>,
}

impl Field {
    pub fn new(support: FieldSupport, values: Vec<f64>) -> Self {
        Field { support, values }
    }

    /// A field with every element set to the same value.
    pub fn uniform(support: FieldSupport, mesh: &Mesh, value: f64) -> Self {
        let n = match support {
            FieldSupport::Vertices => mesh.vertex_count(),
            FieldSupport::Edges => mesh.edge_count(),
        };
        Field { support, values: vec![value; n] }
    }

    pub fn support(&self) -> FieldSupport {
        self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_usize(token: &str, line: usize) -> Result<usize, MeshError> {
    token.parse().map_err(|_| MeshError::ParseError {
        line,
        message: format!("expected an integer, got {token:?}"),
    })
}

fn parse_f64(token: &str, line: usize) -> Result<f64, MeshError> {
    token.parse().map_err(|_| MeshError::ParseError {
        line,
        message: format!("expected a number, got {token:?}"),
    })
}

/// Parse the mesh text format. Line numbers in errors are 1-based.
pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut vertex_count: Option<usize> = None;
    let mut triangles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let tag = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        match tag {
            "v" if vertex_count.is_none() => {
                if rest.len() != 1 {
                    return Err(MeshError::ParseError {
                        line,
                        message: "vertex line must be `v <count>`".into(),
                    });
                }
                vertex_count = Some(parse_usize(rest[0], line)?);
            }
            "f" => {
                if vertex_count.is_none() {
                    return Err(MeshError::ParseError {
                        line,
                        message: "triangle before the `v <count>` header".into(),
                    });
                }
                if rest.len() != 3 {
                    return Err(MeshError::ParseError {
                        line,
                        message: "triangle line must be `f <i> <j> <k>`".into(),
                    });
                }
                triangles.push([
                    parse_usize(rest[0], line)?,
                    parse_usize(rest[1], line)?,
                    parse_usize(rest[2], line)?,
                ]);
            }
            other => {
                return Err(MeshError::ParseError {
                    line,
                    message: format!("unrecognized line tag {other:?}"),
                });
            }
        }
    }
    let vertex_count = vertex_count.ok_or(MeshError::ParseError {
        line: 0,
        message: "missing `v <count>` header".into(),
    })?;
    Mesh::build(vertex_count, triangles)
}

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "v {}", mesh.vertex_count());
    for tri in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", tri[0], tri[1], tri[2]);
    }
    out
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    Ok(std::fs::write(path, format_mesh(mesh))?)
}

/// Parse a field file against a mesh. Every element of the support must be
/// covered exactly once; edges are named by their two vertex indices.
pub fn parse_field(text: &str, mesh: &Mesh, support: FieldSupport) -> Result<Field, MeshError> {
    let n = match support {
        FieldSupport::Vertices => mesh.vertex_count(),
        FieldSupport::Edges => mesh.edge_count(),
    };
    let mut values = vec![f64::NAN; n];
    let mut filled = vec![false; n];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let (slot, element) = match (tokens[0], support) {
            ("v", FieldSupport::Vertices) => {
                if tokens.len() != 3 {
                    return Err(MeshError::ParseError {
                        line,
                        message: "vertex entry must be `v <i> <value>`".into(),
                    });
                }
                let i = parse_usize(tokens[1], line)?;
                if i >= n {
                    return Err(MeshError::ParseError {
                        line,
                        message: format!("vertex {i} out of range (count {n})"),
                    });
                }
                (i, format!("vertex {i}"))
            }
            ("e", FieldSupport::Edges) => {
                if tokens.len() != 4 {
                    return Err(MeshError::ParseError {
                        line,
                        message: "edge entry must be `e <i> <j> <value>`".into(),
                    });
                }
                let i = parse_usize(tokens[1], line)?;
                let j = parse_usize(tokens[2], line)?;
                let e = mesh.edge_between(i, j).ok_or_else(|| MeshError::ParseError {
                    line,
                    message: format!("no edge between {i} and {j}"),
                })?;
                (e, format!("edge ({i}, {j})"))
            }
            (tag, _) => {
                return Err(MeshError::ParseError {
                    line,
                    message: format!("unexpected {tag:?} entry for this field kind"),
                });
            }
        };
        if filled[slot] {
            return Err(MeshError::DuplicateEntry { line, element });
        }
        filled[slot] = true;
        values[slot] = parse_f64(tokens.last().unwrap(), line)?;
    }
    if let Some(missing) = filled.iter().position(|f| !f) {
        let name = match support {
            FieldSupport::Vertices => format!("vertex {missing}"),
            FieldSupport::Edges => {
                let [a, b] = mesh.edges()[missing];
                format!("edge ({a}, {b})")
            }
        };
        return Err(MeshError::MissingEntry(name));
    }
    Ok(Field { support, values })
}

/// Render a field in the text format, one element per line in canonical
/// order, with values printed to 17 significant digits.
pub fn format_field(field: &Field, mesh: &Mesh) -> String {
    let mut out = String::new();
    match field.support {
        FieldSupport::Vertices => {
            for (i, v) in field.values.iter().enumerate() {
                let _ = writeln!(out, "v {i} {v:.16e}");
            }
        }
        FieldSupport::Edges => {
            for (e, v) in field.values.iter().enumerate() {
                let [a, b] = mesh.edges()[e];
                let _ = writeln!(out, "e {a} {b} {v:.16e}");
            }
        }
    }
    out
}

pub fn load_field(
    path: impl AsRef<Path>,
    mesh: &Mesh,
    support: FieldSupport,
) -> Result<Field, MeshError> {
    parse_field(&std::fs::read_to_string(path)?, mesh, support)
}

pub fn save_field(field: &Field, mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    Ok(std::fs::write(path, format_field(field, mesh))?)
}
