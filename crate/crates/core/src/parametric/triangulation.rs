//! Simplicial decomposition of scattered training parameters (segments for
//! one parameter, Delaunay triangles for two) and barycentric location.

use crate::error::{Error, Result};

/// Relative tolerance for orientation, in-circle, and containment tests.
const GEOM_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    dim: usize,
    points: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    /// Coordinate scale used to make tolerances relative.
    scale: f64,
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle (a, b, c).
fn in_circle(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

impl Triangulation {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("no training parameters".into()))?;
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch(
                "training parameters have differing dimensions".into(),
            ));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training parameters".into()));
        }
        let scale = points
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for (i, p) in points.iter().enumerate() {
            for q in &points[..i] {
                let dist = p
                    .iter()
                    .zip(q)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                if dist <= GEOM_EPS * scale {
                    return Err(Error::DuplicateParameter(p.clone()));
                }
            }
        }
        let simplices = match dim {
            1 => Self::segments(points)?,
            2 => Self::delaunay(points, scale)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "parameter dimension {dim} unsupported; only 1 or 2"
                )))
            }
        };
        Ok(Self {
            dim,
            points: points.to_vec(),
            simplices,
            scale,
        })
    }

    fn segments(points: &[Vec<f64>]) -> Result<Vec<Vec<usize>>> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "one-parameter interpolation needs at least two training points".into(),
            ));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
        Ok(order.windows(2).map(|w| vec![w[0], w[1]]).collect())
    }

    /// Empty-circumcircle enumeration over all triples, then a greedy pass
    /// in lexicographic vertex order that drops triangles overlapping an
    /// accepted one. Co-circular configurations therefore resolve to the
    /// lexicographically smallest vertex triples.
    fn delaunay(points: &[Vec<f64>], scale: f64) -> Result<Vec<Vec<usize>>> {
        let n = points.len();
        let area_eps = GEOM_EPS * scale * scale;
        let circle_eps = GEOM_EPS * scale.powi(4);
        if n < 3 {
            return Err(Error::CollinearParameters);
        }
        let mut accepted: Vec<[usize; 3]> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let orient = cross(&points[i], &points[j], &points[k]);
                    if orient.abs() <= area_eps {
                        continue;
                    }
                    let tri = if orient > 0.0 { [i, j, k] } else { [i, k, j] };
                    let [a, b, c] = tri.map(|v| points[v].as_slice());
                    let empty = (0..n)
                        .filter(|l| !tri.contains(l))
                        .all(|l| in_circle(a, b, c, &points[l]) <= circle_eps);
                    if !empty {
                        continue;
                    }
                    if accepted
                        .iter()
                        .all(|t| !interiors_overlap(points, t, &tri, area_eps))
                    {
                        accepted.push(tri);
                    }
                }
            }
        }
        if accepted.is_empty() {
            return Err(Error::CollinearParameters);
        }
        let covered: f64 = accepted
            .iter()
            .map(|t| cross(&points[t[0]], &points[t[1]], &points[t[2]]) * 0.5)
            .sum();
        let hull = hull_area(points);
        if (covered - hull).abs() > 1e-9 * hull.max(area_eps) {
            return Err(Error::SolverFailure(format!(
                "triangulation covers area {covered}, convex hull has {hull}"
            )));
        }
        Ok(accepted.into_iter().map(|t| t.to_vec()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// Barycentric weights of `p` in simplex `s`, in the simplex's vertex
    /// order.
    pub fn barycentric(&self, s: usize, p: &[f64]) -> Vec<f64> {
        let v = &self.simplices[s];
        match self.dim {
            1 => {
                let (a, b) = (self.points[v[0]][0], self.points[v[1]][0]);
                let wb = (p[0] - a) / (b - a);
                vec![1.0 - wb, wb]
            }
            _ => {
                let [a, b, c] = [v[0], v[1], v[2]].map(|i| self.points[i].as_slice());
                let det = cross(a, b, c);
                let wb = cross(a, p, c) / det;
                let wc = cross(a, b, p) / det;
                vec![1.0 - wb - wc, wb, wc]
            }
        }
    }

    /// First simplex (lowest index) containing `p`, with its clamped
    /// barycentric weights.
    pub fn locate(&self, p: &[f64]) -> Result<(usize, Vec<f64>)> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "query has {} components, training parameters have {}",
                p.len(),
                self.dim
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("query parameter".into()));
        }
        let tol = GEOM_EPS
            * self
                .scale
                .max(p.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
        for s in 0..self.simplices.len() {
            let mut w = self.barycentric(s, p);
            if w.iter().all(|&x| x >= -tol) {
                if w.iter().any(|&x| x < 0.0) {
                    w.iter_mut().for_each(|x| *x = x.max(0.0));
                    let total: f64 = w.iter().sum();
                    w.iter_mut().for_each(|x| *x /= total);
                }
                return Ok((s, w));
            }
        }
        Err(Error::OutsideHull(p.to_vec()))
    }
}

fn interiors_overlap(points: &[Vec<f64>], t: &[usize; 3], u: &[usize; 3], eps: f64) -> bool {
    // separating-axis test on the edges of both (counter-clockwise) triangles
    for (x, y) in [(t, u), (u, t)] {
        for e in 0..3 {
            let (a, b) = (&points[x[e]], &points[x[(e + 1) % 3]]);
            if y.iter().all(|&v| cross(a, b, &points[v]) <= eps) {
                return false;
            }
        }
    }
    true
}

fn hull_area(points: &[Vec<f64>]) -> f64 {
    let mut pts: Vec<&Vec<f64>> = points.iter().collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut lower: Vec<&Vec<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<&Vec<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    let hull: Vec<&Vec<f64>> = lower.into_iter().chain(upper).collect();
    let mut area = 0.0;
    for i in 0..hull.len() {
        let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
        area += p[0] * q[1] - q[0] * p[1];
    }
    area.abs() * 0.5
}
