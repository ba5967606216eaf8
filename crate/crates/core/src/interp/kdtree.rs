//! Balanced kd-tree over points.

use crate::geom::Aabb;
use crate::Point3;

const LEAF: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb<f64>,
    /// Range into `KdTree::idx` for leaves, child indices otherwise.
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Immutable kd-tree. Queries return indices into the point slice the tree
/// was built from.
#[derive(Debug, Clone)]
pub struct KdTree {
    pts: Vec<Point3>,
    idx: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut t = Self {
            pts: points.to_vec(),
            idx: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            t.build(0, points.len());
        }
        t
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let bbox = Aabb::from_points(self.idx[start..end].iter().map(|&i| &self.pts[i]));
        let id = self.nodes.len();
        self.nodes.push(Node {
            bbox,
            start,
            end,
            children: None,
        });
        if end - start > LEAF {
            let ext = bbox.max - bbox.min;
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            let mid = (start + end) / 2;
            let pts = &self.pts;
            self.idx[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
            });
            let l = self.build(start, mid);
            let r = self.build(mid, end);
            self.nodes[id].children = Some((l, r));
        }
        id
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.pts
    }

    /// Depth of the tree (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn d(t: &KdTree, n: usize) -> usize {
            match t.nodes[n].children {
                None => 0,
                Some((l, r)) => 1 + d(t, l).max(d(t, r)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            d(self, 0)
        }
    }

    /// All points within distance `r` of `p` (inclusive), sorted by index.
    pub fn radius(&self, p: Point3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let r2 = r * r;
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bbox.dist2(p) > r2 {
                continue;
            }
            match node.children {
                Some((l, rr)) => {
                    stack.push(l);
                    stack.push(rr);
                }
                None => {
                    for &i in &self.idx[node.start..node.end] {
                        if self.pts[i].dist2(p) <= r2 {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest point to `p` other than those for which `skip` is true, with
    /// its distance. Ties go to the lower index.
    pub fn nearest_filtered(&self, p: Point3, skip: impl Fn(usize) -> bool) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bbox.dist2(p) > best.1 {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    let dl = self.nodes[l].bbox.dist2(p);
                    let dr = self.nodes[r].bbox.dist2(p);
                    if dl < dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                None => {
                    for &i in &self.idx[node.start..node.end] {
                        if skip(i) {
                            continue;
                        }
                        let d = self.pts[i].dist2(p);
                        if d < best.1 || (d == best.1 && i < best.0) {
                            best = (i, d);
                        }
                    }
                }
            }
        }
        (best.0 != usize::MAX).then(|| (best.0, best.1.sqrt()))
    }

    pub fn nearest(&self, p: Point3) -> Option<(usize, f64)> {
        self.nearest_filtered(p, |_| false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_node() {
        let t = KdTree::new(&[Point3::new(1.0, 1.0, 1.0)]);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.radius(Point3::zero(), 2.0), vec![0]);
        assert!(t.radius(Point3::zero(), 1.0).is_empty());
        assert_eq!(t.nearest(Point3::zero()).unwrap().0, 0);
    }

    #[test]
    fn queries_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..1000)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let t = KdTree::new(&pts);
        for _ in 0..100 {
            let q = Point3::new(rng.random(), rng.random(), rng.random());
            let r = rng.random::<f64>() * 0.2;
            let brute: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].dist(q) <= r).collect();
            assert_eq!(t.radius(q, r), brute);
            let (bi, bd) = (0..pts.len())
                .map(|i| (i, pts[i].dist(q)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert_eq!(t.nearest(q), Some((bi, bd)));
        }
    }
}
