//! KD-tree spatial index over a point snapshot.
//!
//! The index is immutable after build: queries answer against the snapshot,
//! not later moves, and are safe to run concurrently. Radius queries are
//! boundary-inclusive; k-nearest-neighbor queries break distance ties by
//! ascending agent ID. Both are checked exactly against exhaustive scans in
//! the test suite.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, SimError};
use crate::value::AgentId;

#[derive(Debug, Clone)]
struct Node {
    /// Index into the point snapshot.
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    dim: usize,
    ids: Vec<AgentId>,
    /// Flattened coordinates, `dim` per point.
    coords: Vec<f64>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

/// Heap entry ordered by (distance², id); the heap keeps the k best under
/// that total order with the worst on top.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    id: AgentId,
    point: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SpatialIndex {
    /// Build a balanced tree over `(id, coordinates)` points. All points
    /// must share one dimensionality and be finite. An empty snapshot is
    /// allowed; radius queries on it are empty and knn queries error.
    pub fn build(points: &[(AgentId, Vec<f64>)]) -> Result<Self> {
        let dim = points.first().map(|(_, c)| c.len()).unwrap_or(0);
        let mut ids = Vec::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (id, point) in points {
            if point.len() != dim {
                return Err(SimError::DimensionMismatch {
                    expected: dim,
                    got: point.len(),
                });
            }
            if point.iter().any(|c| !c.is_finite()) {
                return Err(SimError::NonFinite("index point"));
            }
            ids.push(*id);
            coords.extend_from_slice(point);
        }
        let mut index = SpatialIndex {
            dim,
            ids,
            coords,
            nodes: Vec::with_capacity(points.len()),
            root: None,
        };
        if !points.is_empty() {
            let mut order: Vec<usize> = (0..points.len()).collect();
            index.root = Some(index.build_subtree(&mut order, 0));
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn coord(&self, point: usize, axis: usize) -> f64 {
        self.coords[point * self.dim + axis]
    }

    fn build_subtree(&mut self, order: &mut [usize], depth: usize) -> usize {
        let axis = depth % self.dim;
        let mid = order.len() / 2;
        // Median split; ties resolved by id so the tree shape is a pure
        // function of the snapshot.
        order.select_nth_unstable_by(mid, |&a, &b| {
            self.coord(a, axis)
                .total_cmp(&self.coord(b, axis))
                .then(self.ids[a].cmp(&self.ids[b]))
        });
        let point = order[mid];
        let node_id = self.nodes.len();
        self.nodes.push(Node {
            point,
            axis,
            left: None,
            right: None,
        });
        // Split borrows before recursing.
        let (left_half, rest) = order.split_at_mut(mid);
        let right_half = &mut rest[1..];
        if !left_half.is_empty() {
            let left = self.build_subtree(left_half, depth + 1);
            self.nodes[node_id].left = Some(left);
        }
        if !right_half.is_empty() {
            let right = self.build_subtree(right_half, depth + 1);
            self.nodes[node_id].right = Some(right);
        }
        node_id
    }

    fn dist_sq(&self, point: usize, center: &[f64]) -> f64 {
        let mut acc = 0.0;
        for axis in 0..self.dim {
            let d = self.coord(point, axis) - center[axis];
            acc += d * d;
        }
        acc
    }

    fn check_center(&self, center: &[f64]) -> Result<()> {
        if center.len() != self.dim {
            return Err(SimError::DimensionMismatch {
                expected: self.dim,
                got: center.len(),
            });
        }
        Ok(())
    }

    /// IDs of all points with Euclidean distance <= r from `center`,
    /// ascending by ID.
    pub fn radius(&self, center: &[f64], r: f64) -> Result<Vec<AgentId>> {
        if r < 0.0 || !r.is_finite() {
            return Err(SimError::InvalidArgument("radius must be finite and >= 0".into()));
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        self.check_center(center)?;
        let r_sq = r * r;
        let mut hits = Vec::new();
        let mut stack = vec![self.root.unwrap()];
        while let Some(node_id) = stack.pop() {
            let node = &self.nodes[node_id];
            if self.dist_sq(node.point, center) <= r_sq {
                hits.push(self.ids[node.point]);
            }
            let delta = center[node.axis] - self.coord(node.point, node.axis);
            // Descend the near side always; the far side only when the
            // splitting plane is within r of the center.
            let (near, far) = if delta <= 0.0 {
                (node.left, node.right)
            } else {
                (node.right, node.left)
            };
            if let Some(n) = near {
                stack.push(n);
            }
            if delta * delta <= r_sq {
                if let Some(f) = far {
                    stack.push(f);
                }
            }
        }
        hits.sort_unstable();
        Ok(hits)
    }

    /// The k nearest points to `center` by Euclidean distance, ordered
    /// nearest first; exact distance ties are broken by ascending ID. If
    /// k exceeds the snapshot size, every point is returned.
    pub fn knn(&self, center: &[f64], k: usize) -> Result<Vec<AgentId>> {
        if k == 0 {
            return Err(SimError::InvalidArgument("knn requires k >= 1".into()));
        }
        if self.is_empty() {
            return Err(SimError::EmptyIndex);
        }
        self.check_center(center)?;
        let mut best: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_descend(self.root.unwrap(), center, k, &mut best);
        let mut out: Vec<Candidate> = best.into_vec();
        out.sort_unstable();
        Ok(out.into_iter().map(|c| c.id).collect())
    }

    fn knn_descend(&self, node_id: usize, center: &[f64], k: usize, best: &mut BinaryHeap<Candidate>) {
        let node = &self.nodes[node_id];
        let candidate = Candidate {
            dist_sq: self.dist_sq(node.point, center),
            id: self.ids[node.point],
            point: node.point,
        };
        if best.len() < k {
            best.push(candidate);
        } else if candidate < *best.peek().unwrap() {
            best.pop();
            best.push(candidate);
        }
        let delta = center[node.axis] - self.coord(node.point, node.axis);
        let (near, far) = if delta <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.knn_descend(n, center, k, best);
        }
        if let Some(f) = far {
            // Prune only on a strict bound: an equal-distance point beyond
            // the plane could still win its ID tie-break.
            let worst = best.peek().map(|c| c.dist_sq).unwrap_or(f64::INFINITY);
            if best.len() < k || delta * delta <= worst {
                self.knn_descend(f, center, k, best);
            }
        }
    }
}
