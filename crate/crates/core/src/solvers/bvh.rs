use crate::geometry::{Aabb, Vec3};

const LEAF_SIZE: usize = 4;

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

/// Median-split tree over particle centers.
///
/// All particles share one radius, so the nearest center is also the nearest
/// surface and the nearest silhouette; queries work on centers alone.
#[derive(Clone, Debug)]
pub struct SphereBvh {
    centers: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SphereBvh {
    pub fn build(centers: &[Vec3]) -> Self {
        let mut bvh = SphereBvh { centers: centers.to_vec(), order: (0..centers.len()).collect(), nodes: Vec::new() };
        if !centers.is_empty() {
            bvh.build_node(0, centers.len());
        }
        bvh
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let mut bounds = Aabb::empty();
        for &i in &self.order[start..end] {
            bounds.grow(self.centers[i]);
        }
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        self.nodes.push(Node::Leaf { bounds, start, end });
        let e = bounds.extent();
        let axis = if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        let centers = &self.centers;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centers[a][axis].total_cmp(&centers[b][axis]).then(a.cmp(&b))
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, i: usize) -> Vec3 {
        self.centers[i]
    }

    /// Nearest center to `x` as `(index, distance)`, skipping any center equal
    /// to `exclude`. Ties go to the lower index.
    pub fn nearest(&self, x: Vec3, exclude: Option<Vec3>) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if let Some((bd, _)) = best {
                if node.bounds().distance_squared(x) > bd {
                    continue;
                }
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &i in &self.order[start..end] {
                        let c = self.centers[i];
                        if Some(c) == exclude {
                            continue;
                        }
                        let d = x.distance_squared(c);
                        if best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                            best = Some((d, i));
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_squared(x);
                    let dr = self.nodes[right].bounds().distance_squared(x);
                    // visit the nearer child first
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
        best.map(|(d, i)| (i, d.sqrt()))
    }

    /// Indices of centers within distance `r` of `x`, ascending.
    pub fn within_radius(&self, x: Vec3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let r2 = r * r;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds().distance_squared(x) > r2 {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    out.extend(
                        self.order[start..end].iter().copied().filter(|&i| x.distance_squared(self.centers[i]) <= r2),
                    );
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        out.sort_unstable();
        out
    }
}
