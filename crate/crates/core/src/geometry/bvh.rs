//! Median-split AABB hierarchy over triangle indices.

use super::{Aabb, Vec3};

const LEAF_SIZE: usize = 4;
// Boxes are inflated so rounding in the per-triangle routines can never push a
// true hit outside its node.
const BOX_PAD: f64 = 1e-9;

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub(crate) fn build(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Self {
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|t| {
                let mut b = Aabb::empty();
                for &i in t {
                    b.grow(&vertices[i]);
                }
                b.padded(BOX_PAD)
            })
            .collect();
        let centroids: Vec<Vec3> = boxes.iter().map(Aabb::center).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            build_node(&mut nodes, &mut order, 0, triangles.len(), &boxes, &centroids);
        }
        Self { nodes, order }
    }

    pub(crate) fn root_bounds(&self) -> Aabb {
        self.nodes.first().map(|n| *n.bounds()).unwrap_or_else(Aabb::empty)
    }

    /// Minimum of `eval(t) = (point, dist²)` over all triangles, lowest index
    /// winning ties.
    pub(crate) fn closest<F>(&self, q: &Vec3, eval: F) -> (Vec3, usize, f64)
    where
        F: Fn(usize) -> (Vec3, f64),
    {
        let mut best = (Vec3::zeros(), usize::MAX, f64::INFINITY);
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds().distance_squared(q) > best.2 {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[start..end] {
                        let (p, d2) = eval(t);
                        if d2 < best.2 || (d2 == best.2 && t < best.1) {
                            best = (p, t, d2);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_squared(q);
                    let dr = self.nodes[right].bounds().distance_squared(q);
                    // push the farther child first so the nearer one is visited first
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    /// Every triangle whose bounding box lies within `radius` of `q`, in
    /// ascending index order.
    pub(crate) fn candidates_within(&self, q: &Vec3, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let Some(node) = self.nodes.get(ni) else {
                break;
            };
            if node.bounds().distance_squared(q) > r2 {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => out.extend_from_slice(&self.order[start..end]),
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Smallest `t` returned by `hit` over all triangles, lowest index winning
    /// ties.
    pub(crate) fn ray<F>(&self, origin: &Vec3, dir: &Vec3, hit: F) -> Option<(usize, f64)>
    where
        F: Fn(usize) -> Option<f64>,
    {
        let mut best: Option<(usize, f64)> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let t_max = best.map_or(f64::INFINITY, |b| b.1);
            if node.bounds().ray_entry(origin, dir, t_max).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &tri in &self.order[start..end] {
                        if let Some(t) = hit(tri) {
                            let better = match best {
                                None => true,
                                Some((bi, bt)) => t < bt || (t == bt && tri < bi),
                            };
                            if better {
                                best = Some((tri, t));
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    boxes: &[Aabb],
    centroids: &[Vec3],
) -> usize {
    let mut bounds = Aabb::empty();
    for &t in &order[start..end] {
        bounds.merge(&boxes[t]);
    }
    let index = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return index;
    }
    let mut cbounds = Aabb::empty();
    for &t in &order[start..end] {
        cbounds.grow(&centroids[t]);
    }
    let ext = cbounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    // placeholder, patched once both children exist
    nodes.push(Node::Leaf {
        bounds,
        start: 0,
        end: 0,
    });
    let left = build_node(nodes, order, start, start + mid, boxes, centroids);
    let right = build_node(nodes, order, start + mid, end, boxes, centroids);
    nodes[index] = Node::Inner { bounds, left, right };
    index
}
