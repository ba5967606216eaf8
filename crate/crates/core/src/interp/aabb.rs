//! Bounding-volume hierarchy over the tetrahedra of a mesh.

use crate::geom::Aabb;
use crate::mesh::TetMesh;
use crate::Point3;

const LEAF: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb<f64>,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Immutable AABB tree. Leaves hold up to four tets.
#[derive(Debug, Clone)]
pub struct AabbTree {
    boxes: Vec<Aabb<f64>>,
    idx: Vec<usize>,
    nodes: Vec<Node>,
}

impl AabbTree {
    pub fn new(mesh: &TetMesh) -> Self {
        let boxes = (0..mesh.tets.len())
            .map(|t| Aabb::from_points(&mesh.tet_points(t)))
            .collect();
        Self::from_boxes(boxes)
    }

    pub fn from_boxes(boxes: Vec<Aabb<f64>>) -> Self {
        let n = boxes.len();
        let mut t = Self {
            boxes,
            idx: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            t.build(0, n);
        }
        t
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let mut bbox = Aabb::empty();
        for &i in &self.idx[start..end] {
            bbox = bbox.merge(&self.boxes[i]);
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            bbox,
            start,
            end,
            children: None,
        });
        if end - start > LEAF {
            let mut cb = Aabb::empty();
            for &i in &self.idx[start..end] {
                let c = (self.boxes[i].min + self.boxes[i].max) * 0.5;
                cb = cb.merge(&Aabb { min: c, max: c });
            }
            let ext = cb.max - cb.min;
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            let mid = (start + end) / 2;
            let boxes = &self.boxes;
            self.idx[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                let ca = boxes[a].min[axis] + boxes[a].max[axis];
                let cb = boxes[b].min[axis] + boxes[b].max[axis];
                ca.total_cmp(&cb).then(a.cmp(&b))
            });
            let l = self.build(start, mid);
            let r = self.build(mid, end);
            self.nodes[id].children = Some((l, r));
        }
        id
    }

    pub fn root_box(&self) -> Aabb<f64> {
        self.nodes.first().map(|n| n.bbox).unwrap_or_else(Aabb::empty)
    }

    pub fn tet_box(&self, t: usize) -> Aabb<f64> {
        self.boxes[t]
    }

    /// Child boxes are contained in their parent; each tet's box is inside
    /// its leaf's box.
    pub fn is_consistent(&self) -> bool {
        self.nodes.iter().all(|n| match n.children {
            Some((l, r)) => [l, r].iter().all(|&c| {
                let b = self.nodes[c].bbox;
                n.bbox.contains(b.min, 0.0) && n.bbox.contains(b.max, 0.0)
            }),
            None => self.idx[n.start..n.end].iter().all(|&t| {
                n.bbox.contains(self.boxes[t].min, 0.0) && n.bbox.contains(self.boxes[t].max, 0.0)
            }),
        })
    }

    /// Tets whose box contains `p` within `tol`, sorted by index.
    pub fn candidates_point(&self, p: Point3, tol: f64) -> Vec<usize> {
        self.query(|b| b.contains(p, tol))
    }

    /// Tets whose box overlaps `bb` within `tol`, sorted by index.
    pub fn candidates_box(&self, bb: &Aabb<f64>, tol: f64) -> Vec<usize> {
        self.query(|b| b.overlaps(bb, tol))
    }

    fn query(&self, hit: impl Fn(&Aabb<f64>) -> bool) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !hit(&node.bbox) {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => {
                    for &t in &self.idx[node.start..node.end] {
                        if hit(&self.boxes[t]) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
