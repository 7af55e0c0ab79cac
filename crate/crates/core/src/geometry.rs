//! Convex domains: boundary distance, area, perimeter, inradius and
//! rasterization onto the lattice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::par::{self, Exec};

/// Default cap on the number of nodes of a rasterized grid.
pub const DEFAULT_NODE_BUDGET: usize = 8_000_000;

/// Polygons with more edges than this are rejected by [`ConvexDomain::metrics`].
pub const MAX_POLYGON_EDGES: usize = 32;

/// A bounded convex domain in one or two dimensions.
///
/// Deserialized from `{"type":"interval","a":..,"b":..}`,
/// `{"type":"box","min":[..],"max":[..]}`, `{"type":"disk","center":[..],"radius":..}`
/// or `{"type":"polygon","vertices":[[x,y],...]}`; validation runs on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", try_from = "RawDomain")]
pub enum ConvexDomain {
    Interval { a: f64, b: f64 },
    Box { min: Point, max: Point },
    Disk { center: Point, radius: f64 },
    Polygon { vertices: Vec<Point> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawDomain {
    Interval { a: f64, b: f64 },
    Box { min: Point, max: Point },
    Disk { center: Point, radius: f64 },
    Polygon { vertices: Vec<Point> },
}

impl TryFrom<RawDomain> for ConvexDomain {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        let d = match raw {
            RawDomain::Interval { a, b } => ConvexDomain::Interval { a, b },
            RawDomain::Box { min, max } => ConvexDomain::Box { min, max },
            RawDomain::Disk { center, radius } => ConvexDomain::Disk { center, radius },
            RawDomain::Polygon { vertices } => ConvexDomain::Polygon { vertices },
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainMetrics {
    pub area: f64,
    pub perimeter: f64,
    pub inradius: f64,
    pub incenter: Point,
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Inward unit normal `n` and offset `c` of each edge, so that the signed
/// distance to the edge line is `n·x + c`.
fn edge_lines(vertices: &[Point]) -> Vec<(Point, f64)> {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let e = sub(b, a);
            let len = norm(e);
            let normal = [-e[1] / len, e[0] / len];
            (normal, -(normal[0] * a[0] + normal[1] * a[1]))
        })
        .collect()
}

impl ConvexDomain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let d = ConvexDomain::Interval { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn rect(min: Point, max: Point) -> Result<Self> {
        let d = ConvexDomain::Box { min, max };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        let d = ConvexDomain::Disk { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        let d = ConvexDomain::Polygon { vertices };
        d.validate()?;
        Ok(d)
    }

    /// The slab-type rectangle `(-L/2, L/2) × (-1, 1)`.
    pub fn slab(length: f64) -> Result<Self> {
        Self::rect([-0.5 * length, -1.0], [0.5 * length, 1.0])
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            ConvexDomain::Interval { a, b } => {
                if !finite(&[*a, *b]) || a >= b {
                    return Err(Error::InvalidDomain(format!("interval needs a < b, got ({a}, {b})")));
                }
            }
            ConvexDomain::Box { min, max } => {
                if !finite(min) || !finite(max) || min[0] >= max[0] || min[1] >= max[1] {
                    return Err(Error::InvalidDomain(format!(
                        "box needs min < max componentwise, got {min:?} / {max:?}"
                    )));
                }
            }
            ConvexDomain::Disk { center, radius } => {
                if !finite(center) || !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
                }
            }
            ConvexDomain::Polygon { vertices } => validate_polygon(vertices)?,
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Short human-readable identifier used in reports.
    pub fn label(&self) -> String {
        match self {
            ConvexDomain::Interval { a, b } => format!("interval({a},{b})"),
            ConvexDomain::Box { min, max } => {
                format!("box([{},{}],[{},{}])", min[0], min[1], max[0], max[1])
            }
            ConvexDomain::Disk { center, radius } => {
                format!("disk([{},{}],{radius})", center[0], center[1])
            }
            ConvexDomain::Polygon { vertices } => format!("polygon({} vertices)", vertices.len()),
        }
    }

    /// Signed distance to the boundary: exact inside, `<= 0` outside.
    /// For intervals only `x[0]` is read.
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        match self {
            ConvexDomain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            ConvexDomain::Box { min, max } => (x[0] - min[0])
                .min(max[0] - x[0])
                .min(x[1] - min[1])
                .min(max[1] - x[1]),
            ConvexDomain::Disk { center, radius } => radius - norm(sub(x, *center)),
            ConvexDomain::Polygon { vertices } => edge_lines(vertices)
                .iter()
                .map(|(n, c)| n[0] * x[0] + n[1] * x[1] + c)
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            ConvexDomain::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            ConvexDomain::Box { min, max } => (*min, *max),
            ConvexDomain::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            ConvexDomain::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Extreme points used to test containment in another convex domain.
    /// Disks are handled separately by [`ConvexDomain::contains_domain`].
    fn hull_points(&self) -> Vec<Point> {
        match self {
            ConvexDomain::Interval { a, b } => vec![[*a, 0.0], [*b, 0.0]],
            ConvexDomain::Box { min, max } => {
                vec![*min, [max[0], min[1]], *max, [min[0], max[1]]]
            }
            ConvexDomain::Disk { center, .. } => vec![*center],
            ConvexDomain::Polygon { vertices } => vertices.clone(),
        }
    }

    /// Whether `inner` lies in the closure of `self` (up to `1e-12`).
    pub fn contains_domain(&self, inner: &ConvexDomain) -> bool {
        if self.dim() != inner.dim() {
            return false;
        }
        let slack = 1e-12;
        match inner {
            ConvexDomain::Disk { center, radius } => {
                self.distance_to_boundary(*center) >= radius - slack
            }
            _ => inner
                .hull_points()
                .into_iter()
                .all(|v| self.distance_to_boundary(v) >= -slack),
        }
    }

    pub fn metrics(&self) -> Result<DomainMetrics> {
        self.validate()?;
        Ok(match self {
            ConvexDomain::Interval { a, b } => DomainMetrics {
                area: b - a,
                perimeter: 2.0,
                inradius: 0.5 * (b - a),
                incenter: [0.5 * (a + b), 0.0],
            },
            ConvexDomain::Box { min, max } => {
                let w = max[0] - min[0];
                let l = max[1] - min[1];
                DomainMetrics {
                    area: w * l,
                    perimeter: 2.0 * (w + l),
                    inradius: 0.5 * w.min(l),
                    incenter: [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])],
                }
            }
            ConvexDomain::Disk { center, radius } => DomainMetrics {
                area: PI * radius * radius,
                perimeter: 2.0 * PI * radius,
                inradius: *radius,
                incenter: *center,
            },
            ConvexDomain::Polygon { vertices } => polygon_metrics(vertices)?,
        })
    }

    /// Marks the lattice nodes `h·Z^N` lying strictly inside the domain.
    /// Nodes on the boundary are exterior.
    pub fn rasterize(&self, h: f64) -> Result<Grid> {
        self.rasterize_with(h, DEFAULT_NODE_BUDGET, Exec::default())
    }

    pub fn rasterize_with(&self, h: f64, node_budget: usize, exec: Exec) -> Result<Grid> {
        self.validate()?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param(format!("grid spacing must be positive, got {h}")));
        }
        let dim = self.dim();
        let (lo, hi) = self.bounding_box();
        let mut offset = [0i64; 2];
        let mut extents = [1usize; 2];
        for k in 0..dim {
            let first = (lo[k] / h).floor() as i64;
            let last = (hi[k] / h).ceil() as i64;
            offset[k] = first;
            extents[k] = (last - first + 1) as usize;
        }
        let total = extents[0]
            .checked_mul(extents[1])
            .filter(|&n| n <= node_budget)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "grid of {} x {} nodes exceeds the budget of {node_budget}",
                    extents[0], extents[1]
                ))
            })?;
        let threshold = 1e-9 * h;
        let rows: Vec<usize> = (0..extents[1]).collect();
        let mask_rows = par::map(exec, &rows, |&j| {
            (0..extents[0])
                .map(|i| {
                    let x = [(offset[0] + i as i64) as f64 * h, (offset[1] + j as i64) as f64 * h];
                    self.distance_to_boundary(x) > threshold
                })
                .collect::<Vec<bool>>()
        });
        let mask: Vec<bool> = mask_rows.into_iter().flatten().collect();
        debug_assert_eq!(mask.len(), total);
        if !mask.iter().any(|&b| b) {
            return Err(Error::param(format!("grid spacing {h} leaves no interior node")));
        }
        Ok(Grid::from_mask(dim, h, offset, extents, mask, self.metrics()?.inradius))
    }

    /// The image of the domain under `x ↦ scale·x`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        let s = |p: &Point| [scale * p[0], scale * p[1]];
        let d = match self {
            ConvexDomain::Interval { a, b } => ConvexDomain::Interval { a: scale * a, b: scale * b },
            ConvexDomain::Box { min, max } => ConvexDomain::Box { min: s(min), max: s(max) },
            ConvexDomain::Disk { center, radius } => ConvexDomain::Disk {
                center: s(center),
                radius: scale * radius,
            },
            ConvexDomain::Polygon { vertices } => ConvexDomain::Polygon {
                vertices: vertices.iter().map(s).collect(),
            },
        };
        d.validate()?;
        Ok(d)
    }
}

fn validate_polygon(vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidDomain(format!("polygon needs at least 3 vertices, got {n}")));
    }
    if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(Error::InvalidDomain("polygon has non-finite vertices".into()));
    }
    let scale = vertices
        .iter()
        .map(|v| v[0].abs().max(v[1].abs()))
        .fold(1.0_f64, f64::max);
    let mut turning = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let e1 = sub(b, a);
        let e2 = sub(c, b);
        if norm(e1) <= 1e-12 * scale {
            return Err(Error::InvalidDomain(format!("polygon has a repeated vertex at index {i}")));
        }
        let z = cross(e1, e2);
        if z <= 1e-12 * scale * scale {
            return Err(Error::InvalidDomain(format!(
                "polygon must be strictly convex and counterclockwise (turn at vertex {})",
                (i + 1) % n
            )));
        }
        turning += z.atan2(e1[0] * e2[0] + e1[1] * e2[1]);
    }
    if (turning - 2.0 * PI).abs() > 1e-6 {
        return Err(Error::InvalidDomain("polygon winds more than once".into()));
    }
    Ok(())
}

/// Area, perimeter and Chebyshev centre of a convex polygon.
///
/// The centre solves `max r` subject to `n_i·x + c_i >= r` for every edge. An
/// optimum is attained where three constraints are active, so all edge
/// triples are enumerated; ties go to the lexicographically smallest point.
fn polygon_metrics(vertices: &[Point]) -> Result<DomainMetrics> {
    let n = vertices.len();
    if n > MAX_POLYGON_EDGES {
        return Err(Error::InvalidDomain(format!(
            "polygon has {n} edges, at most {MAX_POLYGON_EDGES} are supported"
        )));
    }
    let mut area2 = 0.0;
    let mut perimeter = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        area2 += cross(a, b);
        perimeter += norm(sub(b, a));
    }
    let lines = edge_lines(vertices);
    let feasible_tol = 1e-10 * perimeter;
    let mut best: Option<(f64, Point)> = None;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                // n·x - r = -c for the three active constraints.
                let rows = [lines[i], lines[j], lines[k]];
                let Some(sol) = solve3(rows.map(|(nv, c)| ([nv[0], nv[1], -1.0], -c))) else {
                    continue;
                };
                let (x, r) = ([sol[0], sol[1]], sol[2]);
                if r <= 0.0 {
                    continue;
                }
                let ok = lines
                    .iter()
                    .all(|(nv, c)| nv[0] * x[0] + nv[1] * x[1] + c >= r - feasible_tol);
                if !ok {
                    continue;
                }
                best = match best {
                    None => Some((r, x)),
                    Some((rb, xb)) => {
                        if r > rb + 1e-12 * perimeter {
                            Some((r, x))
                        } else if (r - rb).abs() <= 1e-12 * perimeter && (x[0], x[1]) < (xb[0], xb[1]) {
                            Some((rb.max(r), x))
                        } else {
                            Some((rb, xb))
                        }
                    }
                };
            }
        }
    }
    let (inradius, incenter) =
        best.ok_or_else(|| Error::InvalidDomain("degenerate polygon: no interior ball".into()))?;
    Ok(DomainMetrics {
        area: 0.5 * area2,
        perimeter,
        inradius,
        incenter,
    })
}

/// Cramer's rule for a 3×3 system given as rows `(coefficients, rhs)`.
fn solve3(rows: [([f64; 3], f64); 3]) -> Option<[f64; 3]> {
    let m = rows.map(|(a, _)| a);
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][col] = rows[r].1;
        }
        *o = det(mc) / d;
    }
    Some(out)
}
