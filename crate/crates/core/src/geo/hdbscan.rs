//! Density-based hierarchical clustering over a precomputed distance matrix.
//!
//! Pipeline: core distances, mutual-reachability graph, minimum spanning tree,
//! single-linkage hierarchy, condensed tree, stability-based flat extraction.
//!
//! Merges at exactly equal distance are collapsed into one k-ary merge, so the
//! hierarchy (and hence the partition) does not depend on input order.

use std::collections::BTreeMap;

use crate::Scalar;

/// Distances below this are treated as equal to it when converted to
/// density levels, keeping all lambdas finite.
const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterExtraction {
    /// Excess of mass.
    #[default]
    Eom,
    Leaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size`.
    pub min_samples: Option<usize>,
    pub extraction: ClusterExtraction,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        HdbscanParams {
            min_cluster_size: 3,
            min_samples: None,
            extraction: ClusterExtraction::Eom,
        }
    }
}

struct Node {
    children: Vec<usize>,
    distance: f64,
    size: usize,
}

struct CondensedEdge {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

fn lambda(d: f64) -> f64 {
    1.0 / d.max(MIN_DISTANCE)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Cluster `n` points given a row-major `n x n` symmetric distance matrix.
///
/// Returns one label per point: `Some(k)` for cluster `k` (numbered by the
/// smallest point index they contain) or `None` for noise.
pub fn hdbscan<T: Scalar>(distances: &[T], n: usize, params: &HdbscanParams) -> Vec<Option<usize>> {
    assert_eq!(distances.len(), n * n, "distance matrix must be n x n");
    let mcs = params.min_cluster_size.max(2);
    if n < mcs {
        return vec![None; n];
    }
    let d = |i: usize, j: usize| distances[i * n + j].to_f64_lossless();

    let k = params.min_samples.unwrap_or(mcs).clamp(1, n);
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| d(i, j)).collect();
            row.sort_by(f64::total_cmp);
            row[k - 1]
        })
        .collect();
    let mreach = |i: usize, j: usize| d(i, j).max(core[i]).max(core[j]);

    let mut edges = prim_mst(n, mreach);
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let nodes = linkage(n, &edges);
    let root = nodes.len() - 1;
    let tree = condense(&nodes, root, n, mcs);
    let selected = select(&tree, n, params.extraction);
    label(&tree, &selected, n)
}

fn prim_mst(n: usize, w: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize, f64)> {
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let dist = w(current, j);
            if dist < best[j] {
                best[j] = dist;
                from[j] = current;
            }
            if next == usize::MAX || best[j] < best[next] {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next].min(next), from[next].max(next), best[next]));
        current = next;
    }
    edges
}

/// Single-linkage hierarchy with equal-distance merges collapsed. Nodes
/// `0..n` are the points; the last node is the root.
fn linkage(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Node> {
    let mut nodes: Vec<Node> = (0..n)
        .map(|_| Node {
            children: Vec::new(),
            distance: 0.0,
            size: 1,
        })
        .collect();
    let mut uf: Vec<usize> = (0..n).collect();
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut i = 0;
    while i < edges.len() {
        let w = edges[i].2;
        let mut pending: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        while i < edges.len() && edges[i].2 == w {
            let (a, b, _) = edges[i];
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            let mut ca = pending.remove(&ra).unwrap_or_else(|| vec![node_of[ra]]);
            let cb = pending.remove(&rb).unwrap_or_else(|| vec![node_of[rb]]);
            ca.extend(cb);
            uf[rb] = ra;
            pending.insert(ra, ca);
            i += 1;
        }
        for (r, mut children) in pending {
            children.sort_unstable();
            let size = children.iter().map(|&c| nodes[c].size).sum();
            node_of[r] = nodes.len();
            nodes.push(Node {
                children,
                distance: w,
                size,
            });
        }
    }
    nodes
}

fn leaves(nodes: &[Node], node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if nodes[x].children.is_empty() {
            out.push(x);
        } else {
            stack.extend(nodes[x].children.iter().copied());
        }
    }
}

/// Condensed tree edges. Cluster labels start at `n` (the root).
fn condense(nodes: &[Node], root: usize, n: usize, mcs: usize) -> Vec<CondensedEdge> {
    let mut tree = Vec::new();
    let mut next_label = n + 1;
    let mut queue = std::collections::VecDeque::from([(root, n)]);
    while let Some((node, cluster)) = queue.pop_front() {
        let lam = lambda(nodes[node].distance);
        let children = &nodes[node].children;
        let big: Vec<usize> = children.iter().copied().filter(|&c| nodes[c].size >= mcs).collect();
        let fall_out = |c: usize, tree: &mut Vec<CondensedEdge>| {
            let mut pts = Vec::new();
            leaves(nodes, c, &mut pts);
            pts.sort_unstable();
            for p in pts {
                tree.push(CondensedEdge {
                    parent: cluster,
                    child: p,
                    lambda: lam,
                    size: 1,
                });
            }
        };
        match big.len() {
            0 => {
                for &c in children {
                    fall_out(c, &mut tree);
                }
            }
            1 => {
                for &c in children {
                    if c == big[0] {
                        queue.push_back((c, cluster));
                    } else {
                        fall_out(c, &mut tree);
                    }
                }
            }
            _ => {
                for &c in children {
                    if nodes[c].size >= mcs {
                        let label = next_label;
                        next_label += 1;
                        tree.push(CondensedEdge {
                            parent: cluster,
                            child: label,
                            lambda: lam,
                            size: nodes[c].size,
                        });
                        queue.push_back((c, label));
                    } else {
                        fall_out(c, &mut tree);
                    }
                }
            }
        }
    }
    tree
}

/// Flat cluster selection. The root is only eligible when it never splits.
fn select(tree: &[CondensedEdge], n: usize, extraction: ClusterExtraction) -> Vec<bool> {
    let n_clusters = tree
        .iter()
        .map(|e| e.parent.max(e.child))
        .max()
        .map_or(1, |m| m.max(n) - n + 1);
    let mut birth = vec![0.0f64; n_clusters];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for e in tree.iter().filter(|e| e.child >= n) {
        birth[e.child - n] = e.lambda;
        children[e.parent - n].push(e.child - n);
    }
    let mut stability = vec![0.0f64; n_clusters];
    for e in tree {
        let p = e.parent - n;
        stability[p] += (e.lambda - birth[p]) * e.size as f64;
    }

    let mut selected = vec![false; n_clusters];
    if children[0].is_empty() {
        selected[0] = true;
        return selected;
    }
    match extraction {
        ClusterExtraction::Leaf => {
            for c in 1..n_clusters {
                selected[c] = children[c].is_empty();
            }
        }
        ClusterExtraction::Eom => {
            // Children always carry larger labels than their parent.
            for c in (1..n_clusters).rev() {
                let child_sum: f64 = children[c].iter().map(|&k| stability[k]).sum();
                if child_sum > stability[c] {
                    stability[c] = child_sum;
                } else {
                    selected[c] = true;
                    let mut stack = children[c].clone();
                    while let Some(k) = stack.pop() {
                        selected[k] = false;
                        stack.extend(children[k].iter().copied());
                    }
                }
            }
        }
    }
    selected
}

fn label(tree: &[CondensedEdge], selected: &[bool], n: usize) -> Vec<Option<usize>> {
    let mut parent_of = vec![usize::MAX; selected.len()];
    let mut point_edge = vec![(usize::MAX, 0.0f64); n];
    let mut root_max_lambda = f64::NEG_INFINITY;
    for e in tree {
        if e.child >= n {
            parent_of[e.child - n] = e.parent - n;
        } else {
            point_edge[e.child] = (e.parent - n, e.lambda);
        }
        if e.parent == n {
            root_max_lambda = root_max_lambda.max(e.lambda);
        }
    }
    let mut raw: Vec<Option<usize>> = vec![None; n];
    for (p, &(mut c, lam)) in point_edge.iter().enumerate() {
        if c == usize::MAX {
            continue;
        }
        if c == 0 {
            // Single-cluster case: only points surviving to the last level join.
            if selected[0] && lam >= root_max_lambda {
                raw[p] = Some(0);
            }
            continue;
        }
        loop {
            if selected[c] {
                raw[p] = Some(c);
                break;
            }
            if c == 0 || parent_of[c] == usize::MAX {
                break;
            }
            c = parent_of[c];
            if c == 0 {
                break;
            }
        }
    }
    // Renumber by first member.
    let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
    raw.iter()
        .map(|l| {
            l.map(|c| {
                let next = renumber.len();
                *renumber.entry(c).or_insert(next)
            })
        })
        .collect()
}
