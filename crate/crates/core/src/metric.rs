//! Finite metric spaces backed by a dense distance matrix.
//!
//! Two constructions are supported: Euclidean point lists and positively
//! weighted undirected graphs (shortest-path distances). Points are always
//! addressed by dense 0-based indices; the graph constructor is the only
//! place that accepts 1-based vertex ids.

use crate::error::{Error, Result};

/// A point set with a symmetric distance function satisfying the triangle
/// inequality. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
    coords: Option<Vec<Vec<f64>>>,
}

impl MetricSpace {
    /// Builds the Euclidean (L2) metric over `points`.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("point list"))?;
        let dim = first.len();
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "point {index} has a non-finite coordinate"
                )));
            }
        }

        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for u in 0..n {
            for v in (u + 1)..n {
                let d = points[u]
                    .iter()
                    .zip(&points[v])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[u * n + v] = d;
                dist[v * n + u] = d;
            }
        }
        Ok(MetricSpace {
            n,
            dist,
            coords: Some(points.to_vec()),
        })
    }

    /// Builds the shortest-path metric of an undirected graph on `n` vertices.
    ///
    /// Edge endpoints are 1-based. Parallel edges are allowed; the cheapest one
    /// wins. Costs must be strictly positive and the graph connected.
    pub fn from_graph(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("graph"));
        }
        let mut dist = vec![f64::INFINITY; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        for &(u, v, cost) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(Error::InvalidEdge {
                    u,
                    v,
                    reason: format!("endpoint outside [1, {n}]"),
                });
            }
            if !(cost > 0.0) || !cost.is_finite() {
                return Err(Error::InvalidEdge {
                    u,
                    v,
                    reason: format!("cost {cost} is not a positive finite number"),
                });
            }
            let (a, b) = (u - 1, v - 1);
            if a == b {
                continue;
            }
            if cost < dist[a * n + b] {
                dist[a * n + b] = cost;
                dist[b * n + a] = cost;
            }
        }

        floyd_warshall(n, &mut dist);

        if let Some(pos) = dist.iter().position(|d| d.is_infinite()) {
            return Err(Error::Disconnected {
                from: pos / n + 1,
                to: pos % n + 1,
            });
        }
        Ok(MetricSpace {
            n,
            dist,
            coords: None,
        })
    }

    /// Wraps a precomputed row-major `n × n` matrix after validating the zero
    /// diagonal, symmetry and non-negativity. The triangle inequality is the
    /// caller's responsibility; see [`MetricSpace::triangle_violation`].
    pub fn from_matrix(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("distance matrix"));
        }
        if dist.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, found {}",
                n * n,
                dist.len()
            )));
        }
        for u in 0..n {
            if dist[u * n + u] != 0.0 {
                return Err(Error::InvalidMatrix(format!("d({u},{u}) != 0")));
            }
            for v in (u + 1)..n {
                let d = dist[u * n + v];
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::InvalidMatrix(format!("d({u},{v}) = {d}")));
                }
                if d != dist[v * n + u] {
                    return Err(Error::InvalidMatrix(format!("d({u},{v}) is not symmetric")));
                }
            }
        }
        Ok(MetricSpace {
            n,
            dist,
            coords: None,
        })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.n + v]
    }

    /// All distances from `u`, indexed by the other point.
    #[inline]
    pub fn row(&self, u: usize) -> &[f64] {
        &self.dist[u * self.n..(u + 1) * self.n]
    }

    /// Coordinates, when the space was built from points.
    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    /// Maximum pairwise distance over `members`; 0 for a singleton.
    pub fn diameter(&self, members: &[usize]) -> Result<f64> {
        if members.is_empty() {
            return Err(Error::Empty("member set"));
        }
        self.check_indices(members)?;
        let mut best = 0.0f64;
        for (i, &u) in members.iter().enumerate() {
            let row = self.row(u);
            for &v in &members[i + 1..] {
                best = best.max(row[v]);
            }
        }
        Ok(best)
    }

    /// Sorted, deduplicated list of all pairwise distances (including 0).
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut values: Vec<f64> = (0..self.n)
            .flat_map(|u| self.row(u)[u..].iter().copied())
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }

    /// Finds a triple `(u, v, w)` with `d(u,w) > d(u,v) + d(v,w)`, scanning
    /// every triple. Intended for validation at desk scale.
    pub fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.n;
        for u in 0..n {
            let ru = self.row(u);
            for v in 0..n {
                let rv = self.row(v);
                let duv = ru[v];
                for w in 0..n {
                    if ru[w] > duv + rv[w] {
                        return Some((u, v, w));
                    }
                }
            }
        }
        None
    }

    pub(crate) fn check_indices(&self, indices: &[usize]) -> Result<()> {
        match indices.iter().find(|&&i| i >= self.n) {
            Some(&index) => Err(Error::IndexOutOfRange { index, n: self.n }),
            None => Ok(()),
        }
    }
}

/// In-place all-pairs shortest paths on a row-major matrix.
fn floyd_warshall(n: usize, dist: &mut [f64]) {
    let mut row_k = vec![0.0; n];
    for k in 0..n {
        row_k.copy_from_slice(&dist[k * n..(k + 1) * n]);
        for i in 0..n {
            let dik = dist[i * n + k];
            if dik.is_infinite() {
                continue;
            }
            let row_i = &mut dist[i * n..(i + 1) * n];
            for (dij, &dkj) in row_i.iter_mut().zip(&row_k) {
                let through = dik + dkj;
                if through < *dij {
                    *dij = through;
                }
            }
        }
    }
}

/// A subset of points together with its exact diameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Community {
    members: Vec<usize>,
    diameter: f64,
}

impl Community {
    /// Members are sorted and deduplicated.
    pub fn new(space: &MetricSpace, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        let diameter = space.diameter(&members)?;
        Ok(Community { members, diameter })
    }

    /// Closed ball of the given radius around `center`.
    pub fn ball(space: &MetricSpace, center: usize, radius: f64) -> Result<Self> {
        space.check_indices(&[center])?;
        let members = space
            .row(center)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= radius)
            .map(|(i, _)| i);
        Community::new(space, members)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
