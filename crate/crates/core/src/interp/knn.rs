//! Exact k-nearest-neighbor search over a fixed node set.
//!
//! Large sets use a kd-tree split at the median of the widest bounding-box
//! axis; small sets fall back to a linear scan. Both paths order results by
//! `(distance, node index)`, so ties always resolve to the lower index.

use crate::error::{FilterError, Result};
use crate::model::StateVector;

/// Node counts below this use a linear scan.
pub const LINEAR_SCAN_BELOW: usize = 256;
const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum KdNode {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KnnIndex {
    dim: usize,
    len: usize,
    /// Node coordinates in original order, row-major.
    points: Vec<f64>,
    /// Tree order: `order[p]` is the original index of the `p`-th stored point.
    order: Vec<usize>,
    /// Coordinates permuted into tree order.
    sorted: Vec<f64>,
    nodes: Vec<KdNode>,
    diameter: f64,
}

/// Query result buffer, sorted by `(squared distance, index)`.
#[derive(Debug, Clone, Default)]
pub struct Neighbors {
    items: Vec<(f64, usize)>,
    cap: usize,
}

impl Neighbors {
    pub fn with_capacity(cap: usize) -> Self {
        Self { items: Vec::with_capacity(cap + 1), cap }
    }

    fn reset(&mut self, cap: usize) {
        self.items.clear();
        self.cap = cap;
    }

    #[inline]
    fn worst(&self) -> f64 {
        if self.items.len() < self.cap {
            f64::INFINITY
        } else {
            self.items[self.items.len() - 1].0
        }
    }

    #[inline]
    fn offer(&mut self, d2: f64, idx: usize) {
        let full = self.items.len() == self.cap;
        if full {
            let (wd, wi) = self.items[self.cap - 1];
            if d2 > wd || (d2 == wd && idx > wi) {
                return;
            }
        }
        let mut pos = self.items.len();
        while pos > 0 {
            let (pd, pi) = self.items[pos - 1];
            if pd < d2 || (pd == d2 && pi < idx) {
                break;
            }
            pos -= 1;
        }
        self.items.insert(pos, (d2, idx));
        if self.items.len() > self.cap {
            self.items.pop();
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Node index of the `i`-th nearest neighbor.
    pub fn index(&self, i: usize) -> usize {
        self.items[i].1
    }

    /// Euclidean distance of the `i`-th nearest neighbor.
    pub fn distance(&self, i: usize) -> f64 {
        self.items[i].0.sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.items.iter().map(|&(d2, i)| (i, d2.sqrt()))
    }
}

impl KnnIndex {
    /// Builds an index, choosing the tree for sets of at least
    /// [`LINEAR_SCAN_BELOW`] nodes.
    pub fn new(nodes: &[StateVector]) -> Result<Self> {
        let dim = nodes.first().map(|n| n.len()).ok_or(FilterError::Empty("knn nodes"))?;
        let mut flat = Vec::with_capacity(nodes.len() * dim);
        for n in nodes {
            if n.len() != dim {
                return Err(FilterError::DimensionMismatch { expected: dim, got: n.len() });
            }
            flat.extend_from_slice(n);
        }
        Self::from_flat(dim, flat)
    }

    /// Builds from row-major coordinates.
    pub fn from_flat(dim: usize, points: Vec<f64>) -> Result<Self> {
        let tree = points.len() / dim.max(1) >= LINEAR_SCAN_BELOW;
        Self::build(dim, points, tree)
    }

    /// Always builds the tree, whatever the size.
    pub fn tree_from_flat(dim: usize, points: Vec<f64>) -> Result<Self> {
        Self::build(dim, points, true)
    }

    /// Never builds the tree.
    pub fn linear_from_flat(dim: usize, points: Vec<f64>) -> Result<Self> {
        Self::build(dim, points, false)
    }

    fn build(dim: usize, points: Vec<f64>, tree: bool) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return Err(FilterError::Empty("knn nodes"));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(FilterError::DimensionMismatch { expected: dim, got: points.len() % dim });
        }
        let len = points.len() / dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in points.chunks_exact(dim) {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let diameter = lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt();

        let mut index = Self {
            dim,
            len,
            points,
            order: (0..len).collect(),
            sorted: Vec::new(),
            nodes: Vec::new(),
            diameter,
        };
        if tree {
            let mut order = std::mem::take(&mut index.order);
            index.split(&mut order, 0, len);
            index.sorted = order.iter().flat_map(|&i| index.point(i).to_vec()).collect();
            index.order = order;
        }
        Ok(index)
    }

    fn split(&mut self, order: &mut [usize], start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(KdNode::Leaf { start, end });
            return id;
        }
        let dim = self.dim;
        let slice = &mut order[start..end];
        let mut axis = 0;
        let mut widest = -1.0;
        for a in 0..dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in slice.iter() {
                let v = self.points[i * dim + a];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > widest {
                widest = hi - lo;
                axis = a;
            }
        }
        let mid = slice.len() / 2;
        let pts = &self.points;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            pts[a * dim + axis].total_cmp(&pts[b * dim + axis]).then(a.cmp(&b))
        });
        let value = self.points[slice[mid] * dim + axis];
        self.nodes.push(KdNode::Leaf { start: 0, end: 0 });
        let left = self.split(order, start, start + mid);
        let right = self.split(order, start + mid, end);
        self.nodes[id] = KdNode::Split { axis, value, left, right };
        id
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bounding-box diagonal of the node set.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn uses_tree(&self) -> bool {
        !self.nodes.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// The `l` nearest nodes to `x` as `(node index, distance)`, nearest first.
    pub fn knn_query(&self, x: &[f64], l: usize) -> Result<Vec<(usize, f64)>> {
        let mut out = Neighbors::with_capacity(l);
        self.query_into(x, l, &mut out)?;
        Ok(out.iter().collect())
    }

    /// As [`knn_query`](Self::knn_query), reusing `out`.
    pub fn query_into(&self, x: &[f64], l: usize, out: &mut Neighbors) -> Result<()> {
        if x.len() != self.dim {
            return Err(FilterError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if l > self.len {
            return Err(FilterError::TooManyNeighbors { requested: l, available: self.len });
        }
        if l == 0 {
            return Err(FilterError::Empty("neighbor count"));
        }
        out.reset(l);
        if self.nodes.is_empty() {
            for (i, p) in self.points.chunks_exact(self.dim).enumerate() {
                out.offer(dist2(p, x), i);
            }
        } else {
            self.descend(0, x, out);
        }
        Ok(())
    }

    fn descend(&self, node: usize, x: &[f64], out: &mut Neighbors) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                let d = self.dim;
                for p in start..end {
                    let d2 = dist2(&self.sorted[p * d..(p + 1) * d], x);
                    out.offer(d2, self.order[p]);
                }
            }
            KdNode::Split { axis, value, left, right } => {
                let diff = x[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.descend(near, x, out);
                if diff * diff <= out.worst() {
                    self.descend(far, x, out);
                }
            }
        }
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}
