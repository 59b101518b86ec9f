//! ε-packings, ε-nets and covering partitions of finite candidate sets.
//!
//! A continuous parameter set is represented by a finite list of candidate
//! points. All distance comparisons allow a slack of [`GEOM_TOL`] (scaled by
//! `max(1, ε)`) so that grid coordinates produced by floating-point stepping
//! behave like their exact values.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Absolute slack for distance comparisons.
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    /// Sum of coordinate-wise absolute differences; `|x − y|` in one dimension.
    AbsoluteDifference,
}

impl Metric {
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Metric::AbsoluteDifference => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    points: Vec<Vec<f64>>,
    metric: Metric,
    bounds: Vec<(f64, f64)>,
}

impl MetricSpace {
    pub fn new(points: Vec<Vec<f64>>, metric: Metric, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return invalid("space needs at least one coordinate");
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return invalid(format!("bounds[{k}] = [{lo}, {hi}] is not a closed interval"));
            }
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != bounds.len() {
                return invalid(format!(
                    "point {i} has {} coordinates, expected {}",
                    p.len(),
                    bounds.len()
                ));
            }
            if !within(p, &bounds) {
                return invalid(format!("point {i} = {p:?} lies outside the bounds"));
            }
        }
        Ok(Self {
            points,
            metric,
            bounds,
        })
    }

    /// Points `lo, lo + step, …` up to `hi` (inclusive within rounding).
    pub fn grid_1d(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) {
            return invalid("grid needs step > 0 and hi ≥ lo");
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let points = (0..n).map(|i| vec![lo + i as f64 * step]).collect();
        Self::new(points, Metric::AbsoluteDifference, vec![(lo, hi)])
    }

    /// Tensor grid with `counts[k]` equally spaced points on each interval,
    /// enumerated in row-major order.
    pub fn uniform_grid(bounds: Vec<(f64, f64)>, counts: &[usize], metric: Metric) -> Result<Self> {
        if counts.len() != bounds.len() || counts.contains(&0) {
            return invalid("need one positive count per coordinate");
        }
        let total: usize = counts.iter().product();
        let mut points = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut p = vec![0.0; counts.len()];
            for k in (0..counts.len()).rev() {
                let i = rem % counts[k];
                rem /= counts[k];
                let (lo, hi) = bounds[k];
                p[k] = if counts[k] == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (counts[k] - 1) as f64
                };
            }
            points.push(p);
        }
        Self::new(points, metric, bounds)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.metric.distance(x, y)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.bounds.len() && within(p, &self.bounds)
    }

    /// Largest pairwise distance among candidates.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.max(self.distance(p, q));
            }
        }
        d
    }
}

fn within(p: &[f64], bounds: &[(f64, f64)]) -> bool {
    p.iter()
        .zip(bounds)
        .all(|(&x, &(lo, hi))| x.is_finite() && x >= lo - GEOM_TOL && x <= hi + GEOM_TOL)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Packing,
    Net,
    Both,
}

impl Kind {
    pub fn is_packing(self) -> bool {
        matches!(self, Kind::Packing | Kind::Both)
    }

    pub fn is_net(self) -> bool {
        matches!(self, Kind::Net | Kind::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    space: MetricSpace,
    centers: Vec<Vec<f64>>,
    epsilon: f64,
    kind: Kind,
    /// For each candidate point, the index of its cell's center.
    cells: Option<Vec<usize>>,
}

impl Discretization {
    /// Discretization with caller-chosen centers. The claimed `kind` is not
    /// checked here; see [`validate_discretization`].
    pub fn new(space: MetricSpace, centers: Vec<Vec<f64>>, epsilon: f64, kind: Kind) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return invalid(format!("epsilon {epsilon} must be finite and nonnegative"));
        }
        if centers.is_empty() {
            return invalid("discretization needs at least one center");
        }
        for (i, c) in centers.iter().enumerate() {
            if !space.contains(c) {
                return invalid(format!("center {i} = {c:?} lies outside the space"));
            }
        }
        Ok(Self {
            space,
            centers,
            epsilon,
            kind,
            cells: None,
        })
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn cells(&self) -> Option<&[usize]> {
        self.cells.as_deref()
    }

    /// Candidate indices grouped by cell.
    pub fn cell_members(&self) -> Option<Vec<Vec<usize>>> {
        let cells = self.cells.as_ref()?;
        let mut out = vec![Vec::new(); self.centers.len()];
        for (p, &c) in cells.iter().enumerate() {
            out[c].push(p);
        }
        Some(out)
    }

    fn tol(&self) -> f64 {
        GEOM_TOL * self.epsilon.max(1.0)
    }

    /// Index of the nearest center to `point`, lowest index on ties.
    pub fn nearest_index(&self, point: &[f64]) -> Result<usize> {
        if !self.space.contains(point) {
            return invalid(format!("point {point:?} lies outside the space"));
        }
        Ok(self.nearest_unchecked(point))
    }

    fn nearest_unchecked(&self, point: &[f64]) -> usize {
        let tol = self.tol();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            let d = self.space.distance(c, point);
            if d < best_d - tol {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Greedy maximal ε-packing in candidate order. Maximality makes it an ε-net
/// of the candidates as well.
pub fn greedy_packing_net(space: &MetricSpace, epsilon: f64) -> Result<Discretization> {
    if space.is_empty() {
        return invalid("candidate set is empty");
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return invalid(format!("epsilon {epsilon} must be positive"));
    }
    let tol = GEOM_TOL * epsilon.max(1.0);
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for p in space.points() {
        if centers
            .iter()
            .all(|c| space.distance(c, p) >= epsilon - tol)
        {
            centers.push(p.clone());
        }
    }
    Discretization::new(space.clone(), centers, epsilon, Kind::Both)
}

/// Assigns every candidate to its nearest center.
pub fn covering_partition(disc: &Discretization) -> Result<Discretization> {
    if !disc.kind.is_net() {
        return invalid("covering partition requires a net");
    }
    let cells = disc
        .space
        .points()
        .iter()
        .map(|p| disc.nearest_unchecked(p))
        .collect();
    Ok(Discretization {
        cells: Some(cells),
        ..disc.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum Violation {
    Packing { i: usize, j: usize, distance: f64 },
    Coverage { point: usize, distance: f64 },
    CellCount { expected: usize, found: usize },
    CellIndex { point: usize, cell: usize },
    NotNearest { point: usize, cell: usize, nearer: usize },
}

/// Lists every invariant the discretization violates for its kind.
pub fn validate_discretization(disc: &Discretization) -> Vec<Violation> {
    let mut out = Vec::new();
    let tol = disc.tol();
    let eps = disc.epsilon;
    let space = &disc.space;
    if disc.kind.is_packing() {
        for i in 0..disc.centers.len() {
            for j in i + 1..disc.centers.len() {
                let d = space.distance(&disc.centers[i], &disc.centers[j]);
                if d < eps - tol {
                    out.push(Violation::Packing { i, j, distance: d });
                }
            }
        }
    }
    if disc.kind.is_net() {
        for (k, p) in space.points().iter().enumerate() {
            let d = disc
                .centers
                .iter()
                .map(|c| space.distance(c, p))
                .fold(f64::INFINITY, f64::min);
            if d > eps + tol {
                out.push(Violation::Coverage { point: k, distance: d });
            }
        }
    }
    if let Some(cells) = &disc.cells {
        if cells.len() != space.len() {
            out.push(Violation::CellCount {
                expected: space.len(),
                found: cells.len(),
            });
        }
        for (k, (&cell, p)) in cells.iter().zip(space.points()).enumerate() {
            if cell >= disc.centers.len() {
                out.push(Violation::CellIndex { point: k, cell });
                continue;
            }
            let own = space.distance(&disc.centers[cell], p);
            if let Some(nearer) = disc
                .centers
                .iter()
                .position(|c| space.distance(c, p) < own - tol)
            {
                out.push(Violation::NotNearest {
                    point: k,
                    cell,
                    nearer,
                });
            }
        }
    }
    out
}
