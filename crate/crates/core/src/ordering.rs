//! Nested-dissection ordering that also tracks interfaces between interiors.
//!
//! Every vertex carries a tag `(S, L, R)`: the separator it belongs to and the
//! separators on its left and right. Vertices with identical tags form a
//! cluster; as levels are eliminated, tags are coarsened and clusters merge.

use std::collections::BTreeMap;

use crate::error::OrderingError;
use crate::sparse::Graph;

/// Separator `(level, index)`, both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SepId {
    pub level: usize,
    pub index: usize,
}

impl SepId {
    pub const TOP: SepId = SepId { level: 1, index: 1 };

    pub fn new(level: usize, index: usize) -> Self {
        debug_assert!(level >= 1 && index >= 1 && index <= 1 << (level - 1));
        SepId { level, index }
    }

    pub fn left_child(self) -> SepId {
        SepId::new(self.level + 1, 2 * self.index - 1)
    }

    pub fn right_child(self) -> SepId {
        SepId::new(self.level + 1, 2 * self.index)
    }

    pub fn parent(self) -> SepId {
        SepId::new(self.level - 1, self.index.div_ceil(2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexTag {
    pub s: SepId,
    pub l: Option<SepId>,
    pub r: Option<SepId>,
}

impl VertexTag {
    /// Replaces left/right tags living at `level` by their parents.
    fn coarsen(self, level: usize) -> VertexTag {
        let up = |t: Option<SepId>| t.map(|id| if id.level == level { id.parent() } else { id });
        VertexTag { s: self.s, l: up(self.l), r: up(self.r) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub tag: VertexTag,
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
struct Stage {
    clusters: Vec<Cluster>,
    /// Index of the parent in the next (coarser) stage, `None` when the
    /// cluster is eliminated at this stage.
    parent: Vec<Option<usize>>,
}

/// Clusters for every elimination stage plus the merge tree linking them.
#[derive(Clone, Debug)]
pub struct ClusterHierarchy {
    pub tags: Vec<VertexTag>,
    pub levels: usize,
    stages: Vec<Stage>,
}

impl ClusterHierarchy {
    pub fn num_vertices(&self) -> usize {
        self.tags.len()
    }

    /// Clusters active when stage `level` begins.
    pub fn clusters(&self, level: usize) -> &[Cluster] {
        &self.stages[level - 1].clusters
    }

    /// Parent (in stage `level - 1`) of cluster `i` of stage `level`.
    pub fn parent(&self, level: usize, i: usize) -> Option<usize> {
        self.stages[level - 1].parent.get(i).copied().flatten()
    }

    /// Children of stage-`level - 1` cluster `p`, in merge order.
    pub fn children(&self, level: usize, p: usize) -> Vec<usize> {
        (0..self.clusters(level).len()).filter(|&i| self.parent(level, i) == Some(p)).collect()
    }
}

/// A vertex separation of some vertex subset.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Separation {
    pub left: Vec<usize>,
    pub mid: Vec<usize>,
    pub right: Vec<usize>,
}

/// `max(1, floor(log2(n / 64)))`.
pub fn default_levels(n: usize) -> usize {
    let ratio = n / 64;
    if ratio < 2 {
        1
    } else {
        (usize::BITS - 1 - ratio.leading_zeros()) as usize
    }
}

/// Local indexing of a vertex subset inside the full graph.
struct Workspace {
    local: Vec<usize>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace { local: vec![usize::MAX; n] }
    }

    fn enter(&mut self, subset: &[usize]) {
        for (i, &v) in subset.iter().enumerate() {
            self.local[v] = i;
        }
    }

    fn leave(&mut self, subset: &[usize]) {
        for &v in subset {
            self.local[v] = usize::MAX;
        }
    }

    /// Neighbors of `v` inside the current subset, as local indices.
    fn local_neighbors<'a>(&'a self, g: &'a Graph, v: usize) -> impl Iterator<Item = usize> + 'a {
        g.neighbors(v).iter().map(|&u| self.local[u]).filter(|&u| u != usize::MAX)
    }
}

fn finish(subset: &[usize], side: &[u8]) -> Separation {
    let mut out = Separation::default();
    for (i, &v) in subset.iter().enumerate() {
        match side[i] {
            0 => out.left.push(v),
            1 => out.mid.push(v),
            _ => out.right.push(v),
        }
    }
    out.left.sort_unstable();
    out.mid.sort_unstable();
    out.right.sort_unstable();
    out
}

/// Splits `order` (local indices) into a first part of size `cut` and the
/// rest; the first part's vertices adjacent to the rest become the separator.
/// Returns per-local-vertex sides (0 left, 1 mid, 2 right).
fn split_by_prefix(g: &Graph, ws: &Workspace, subset: &[usize], order: &[usize], cut: usize) -> Vec<u8> {
    let mut side = vec![2u8; subset.len()];
    for &i in &order[..cut] {
        side[i] = 0;
    }
    for &i in &order[..cut] {
        if ws.local_neighbors(g, subset[i]).any(|u| side[u] == 2) {
            side[i] = 1;
        }
    }
    side
}

/// Median split along the axis of largest coordinate span.
pub fn vertex_separator_geometric(g: &Graph, subset: &[usize], coords: &[Vec<f64>]) -> Separation {
    let mut ws = Workspace::new(g.num_vertices());
    separate_geometric(g, &mut ws, subset, coords)
}

fn separate_geometric(g: &Graph, ws: &mut Workspace, subset: &[usize], coords: &[Vec<f64>]) -> Separation {
    if subset.len() <= 1 {
        return Separation { left: subset.to_vec(), ..Default::default() };
    }
    let dim = coords[subset[0]].len();
    let mut axis = 0;
    let mut best_span = -1.0;
    for d in 0..dim {
        let (lo, hi) = subset
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(coords[v][d]), hi.max(coords[v][d])));
        if hi - lo > best_span {
            best_span = hi - lo;
            axis = d;
        }
    }
    if best_span <= 0.0 {
        return separate_graph(g, ws, subset);
    }
    let mut order: Vec<usize> = (0..subset.len()).collect();
    order.sort_by(|&a, &b| coords[subset[a]][axis].total_cmp(&coords[subset[b]][axis]).then(subset[a].cmp(&subset[b])));
    ws.enter(subset);
    let side = split_by_prefix(g, ws, subset, &order, subset.len().div_ceil(2));
    ws.leave(subset);
    finish(subset, &side)
}

/// BFS-based bisection with boundary extraction.
pub fn vertex_separator_graph(g: &Graph, subset: &[usize]) -> Separation {
    let mut ws = Workspace::new(g.num_vertices());
    separate_graph(g, &mut ws, subset)
}

const BALANCE: f64 = 0.25;

fn is_balanced(a: usize, b: usize) -> bool {
    (a as f64 - b as f64).abs() <= BALANCE * (a + b) as f64
}

fn separate_graph(g: &Graph, ws: &mut Workspace, subset: &[usize]) -> Separation {
    if subset.len() <= 1 {
        return Separation { left: subset.to_vec(), ..Default::default() };
    }
    ws.enter(subset);
    let side = graph_sides(g, ws, subset);
    ws.leave(subset);
    finish(subset, &side)
}

fn graph_sides(g: &Graph, ws: &Workspace, subset: &[usize]) -> Vec<u8> {
    let m = subset.len();
    let comps = components(g, ws, subset);
    if comps.len() == 1 {
        return bisect_connected(g, ws, subset, &comps[0]);
    }

    // First-fit decreasing into two bins.
    let mut by_size: Vec<usize> = (0..comps.len()).collect();
    by_size.sort_by(|&a, &b| comps[b].len().cmp(&comps[a].len()).then(a.cmp(&b)));
    let mut side = vec![0u8; m];
    let mut sizes = [0usize; 2];
    for &c in &by_size {
        let bin = if sizes[0] <= sizes[1] { 0 } else { 1 };
        sizes[bin] += comps[c].len();
        for &i in &comps[c] {
            side[i] = if bin == 0 { 0 } else { 2 };
        }
    }
    if is_balanced(sizes[0], sizes[1]) {
        return side;
    }

    // One component dominates: split it and pad the lighter side with the rest.
    let big = by_size[0];
    let inner = bisect_connected(g, ws, subset, &comps[big]);
    let mut left = comps[big].iter().filter(|&&i| inner[i] == 0).count();
    let mut right = comps[big].iter().filter(|&&i| inner[i] == 2).count();
    for &i in &comps[big] {
        side[i] = inner[i];
    }
    for &c in &by_size[1..] {
        let to_left = left <= right;
        for &i in &comps[c] {
            side[i] = if to_left { 0 } else { 2 };
        }
        if to_left {
            left += comps[c].len();
        } else {
            right += comps[c].len();
        }
    }
    side
}

fn components(g: &Graph, ws: &Workspace, subset: &[usize]) -> Vec<Vec<usize>> {
    let m = subset.len();
    let mut seen = vec![false; m];
    let mut comps = Vec::new();
    for start in 0..m {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for u in ws.local_neighbors(g, subset[v]) {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// BFS from `root` over local vertices; returns the visit order and the
/// start offset of each level (with a trailing sentinel).
fn bfs_levels(
    g: &Graph,
    ws: &Workspace,
    subset: &[usize],
    root: usize,
    dist: &mut [usize],
) -> (Vec<usize>, Vec<usize>) {
    let mut order = vec![root];
    let mut level_start = vec![0];
    dist[root] = 0;
    let mut head = 0;
    let mut nbrs = Vec::new();
    while head < order.len() {
        let v = order[head];
        head += 1;
        nbrs.clear();
        nbrs.extend(ws.local_neighbors(g, subset[v]).filter(|&u| dist[u] == usize::MAX));
        nbrs.sort_unstable_by_key(|&u| subset[u]);
        for &u in &nbrs {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                if dist[u] == level_start.len() {
                    level_start.push(order.len());
                }
                order.push(u);
            }
        }
    }
    level_start.push(order.len());
    (order, level_start)
}

fn bisect_connected(g: &Graph, ws: &Workspace, subset: &[usize], comp: &[usize]) -> Vec<u8> {
    let m = subset.len();
    let mut dist = vec![usize::MAX; m];
    let reset = |dist: &mut [usize]| comp.iter().for_each(|&i| dist[i] = usize::MAX);

    // Pseudo-peripheral root: repeat BFS from the farthest vertex while the
    // eccentricity grows.
    let mut root = *comp.iter().min_by_key(|&&i| subset[i]).unwrap();
    let (mut order, mut levels) = bfs_levels(g, ws, subset, root, &mut dist);
    for _ in 0..8 {
        let last = &order[levels[levels.len() - 2]..];
        let cand = *last.iter().min_by_key(|&&i| subset[i]).unwrap();
        reset(&mut dist);
        let (o, l) = bfs_levels(g, ws, subset, cand, &mut dist);
        if l.len() <= levels.len() {
            reset(&mut dist);
            let (o, l) = bfs_levels(g, ws, subset, root, &mut dist);
            order = o;
            levels = l;
            break;
        }
        root = cand;
        order = o;
        levels = l;
    }

    let mc = comp.len();
    let mut side = vec![2u8; m];
    let mut pos = vec![usize::MAX; m];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }

    // Separator size for a prefix cut, scanning only the levels that can touch it.
    let level_of = |p: usize| levels.partition_point(|&s| s <= p) - 1;
    let sep_size = |cut: usize| -> usize {
        if cut == 0 || cut >= mc {
            return 0;
        }
        let lv = level_of(cut - 1);
        let from = levels[lv.saturating_sub(1)];
        order[from..cut]
            .iter()
            .filter(|&&i| ws.local_neighbors(g, subset[i]).any(|u| pos[u] != usize::MAX && pos[u] >= cut))
            .count()
    };

    let mut candidates: Vec<usize> = levels[1..levels.len() - 1].to_vec();
    candidates.push(mc.div_ceil(2));
    let mut best: Option<(usize, usize, usize)> = None; // (sep, imbalance, cut)
    for &cut in &candidates {
        if cut == 0 || cut >= mc {
            continue;
        }
        let (lo, hi) = (mc as f64 * 0.25, mc as f64 * 0.75);
        if (cut as f64) < lo || (cut as f64) > hi {
            continue;
        }
        let s = sep_size(cut);
        let (l, r) = (cut - s, mc - cut);
        if !is_balanced(l, r) {
            continue;
        }
        let key = (s, l.abs_diff(r), cut);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    let cut = best.map(|b| b.2).unwrap_or(mc.div_ceil(2));
    for &i in &order[..cut] {
        side[i] = 0;
    }
    for &i in &order[..cut] {
        if ws.local_neighbors(g, subset[i]).any(|u| pos[u] != usize::MAX && pos[u] >= cut) {
            side[i] = 1;
        }
    }
    side
}

/// Builds tags and the cluster hierarchy for `levels` levels. Separators are
/// geometric when coordinates are given, graph-based otherwise.
pub fn order_and_cluster(
    g: &Graph,
    coords: Option<&[Vec<f64>]>,
    levels: usize,
) -> Result<ClusterHierarchy, OrderingError> {
    if levels == 0 {
        return Err(OrderingError::ZeroLevels);
    }
    let n = g.num_vertices();
    if let Some(c) = coords {
        if c.len() != n {
            return Err(OrderingError::CoordsMismatch { expected: n, got: c.len() });
        }
    }
    let mut tags = vec![VertexTag { s: SepId::TOP, l: None, r: None }; n];
    let mut ws = Workspace::new(n);

    for level in 1..levels {
        let width = 1usize << (level - 1);
        let mut interior = vec![Vec::new(); width];
        let mut boundary = vec![Vec::new(); width];
        for (v, t) in tags.iter().enumerate() {
            if t.s.level == level {
                interior[t.s.index - 1].push(v);
            }
            if let Some(l) = t.l.filter(|l| l.level == level) {
                boundary[l.index - 1].push(v);
            }
            if let Some(r) = t.r.filter(|r| r.level == level && Some(*r) != t.l) {
                boundary[r.index - 1].push(v);
            }
        }
        let mut in_b = vec![false; n];
        for k in 1..=width {
            let id = SepId::new(level, k);
            let (lchild, rchild) = (id.left_child(), id.right_child());
            let interior_k = &interior[k - 1];
            let boundary_k = &boundary[k - 1];
            let mut subset: Vec<usize> = interior_k.iter().chain(boundary_k).copied().collect();
            subset.sort_unstable();
            if subset.is_empty() {
                continue;
            }
            let sep = match coords {
                Some(c) => separate_geometric(g, &mut ws, &subset, c),
                None => separate_graph(g, &mut ws, &subset),
            };
            for &v in boundary_k {
                in_b[v] = true;
            }
            for &v in &sep.mid {
                if !in_b[v] {
                    tags[v].s = id;
                    tags[v].l = Some(lchild);
                    tags[v].r = Some(rchild);
                }
            }
            for (part, child) in [(&sep.left, lchild), (&sep.right, rchild)] {
                for &v in part {
                    if in_b[v] {
                        if tags[v].l == Some(id) {
                            tags[v].l = Some(child);
                        } else {
                            tags[v].r = Some(child);
                        }
                    } else {
                        tags[v].s = child;
                    }
                }
            }
            for &v in boundary_k {
                in_b[v] = false;
            }
        }
    }

    let mut stages = vec![Stage::default(); levels];
    let mut groups: BTreeMap<VertexTag, Vec<usize>> = BTreeMap::new();
    for (v, t) in tags.iter().enumerate() {
        groups.entry(*t).or_default().push(v);
    }
    stages[levels - 1].clusters = groups.into_iter().map(|(tag, vertices)| Cluster { tag, vertices }).collect();

    for level in (2..=levels).rev() {
        let mut parents: BTreeMap<VertexTag, Vec<usize>> = BTreeMap::new();
        for (i, c) in stages[level - 1].clusters.iter().enumerate() {
            if c.tag.s.level < level {
                parents.entry(c.tag.coarsen(level)).or_default().push(i);
            }
        }
        let mut parent_of = vec![None; stages[level - 1].clusters.len()];
        let mut next = Vec::with_capacity(parents.len());
        for (p, (tag, children)) in parents.into_iter().enumerate() {
            let mut vertices = Vec::new();
            for &c in &children {
                parent_of[c] = Some(p);
                vertices.extend_from_slice(&stages[level - 1].clusters[c].vertices);
            }
            next.push(Cluster { tag, vertices });
        }
        stages[level - 1].parent = parent_of;
        stages[level - 2].clusters = next;
    }

    Ok(ClusterHierarchy { tags, levels, stages })
}
