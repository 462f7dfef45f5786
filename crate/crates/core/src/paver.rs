//! Adaptive pavers: binary trees of boxes whose leaves partition the state
//! space, carry a classification tag, a uniform label mask, and (when
//! winning) the list of valid control indices.
//!
//! Construction pre-splits at label-region boundaries so every leaf ever
//! produced has a uniform label signature; bisection of a uniform leaf
//! yields uniform children, so no later split can straddle a region
//! boundary.

use crate::error::Error;
use crate::interval::{BoxSet, IntervalBox};
use crate::system::SystemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    Winning,
    Losing,
    Undetermined,
}

const NO_CHILD: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node {
    bx: IntervalBox,
    /// Child node ids; `NO_CHILD` marks a leaf. The lower-coordinate child
    /// is stored first.
    children: (u32, u32),
    tag: Tag,
    /// Uniform label mask of the leaf, in the paver's proposition order.
    label: u16,
    /// Valid control-grid indices; nonempty exactly when the leaf is
    /// winning (except on optimistic initialization, before the first
    /// recomputation assigns strategies).
    controls: Vec<u16>,
    /// Global sequence number at which the leaf was marked winning; lets
    /// queries see the winning union as of an earlier cutoff.
    mark_seq: u64,
}

/// One paver per automaton state. Leaves partition the root box.
#[derive(Clone, Debug)]
pub struct Paver {
    nodes: Vec<Node>,
    aps: Vec<String>,
}

impl Paver {
    /// Build a paver over `space`, pre-split so that every leaf is uniform
    /// with respect to the labeled regions of `spec`. Proposition order
    /// (bit order of label masks) is the sorted region-name order of the
    /// spec, restricted and reordered by `ap_order` when given.
    pub fn new(spec: &SystemSpec, ap_order: &[String]) -> Result<Self, Error> {
        for ap in ap_order {
            if !spec.ap_regions.contains_key(ap) {
                return Err(Error::UnknownAp {
                    name: ap.clone(),
                    context: "paver construction".into(),
                });
            }
        }
        let regions: Vec<&BoxSet> = ap_order.iter().map(|ap| &spec.ap_regions[ap]).collect();
        let mut paver = Self {
            nodes: vec![Node {
                bx: spec.state_space.clone(),
                children: (NO_CHILD, NO_CHILD),
                tag: Tag::Undetermined,
                label: 0,
                controls: Vec::new(),
                mark_seq: 0,
            }],
            aps: ap_order.to_vec(),
        };
        let mut work = vec![0u32];
        while let Some(id) = work.pop() {
            let bx = paver.nodes[id as usize].bx.clone();
            match uniform_label(&regions, &bx)? {
                Some(mask) => paver.nodes[id as usize].label = mask,
                None => {
                    let (dim, coord) = boundary_split(&regions, &bx)
                        .expect("non-uniform box must have a crossing boundary");
                    let (l, r) = bx.split_at(dim, coord);
                    let (a, b) = paver.attach(id, l, r);
                    work.push(a);
                    work.push(b);
                }
            }
        }
        Ok(paver)
    }

    /// Proposition order backing the label masks.
    pub fn ap_order(&self) -> &[String] {
        &self.aps
    }

    fn attach(&mut self, id: u32, l: IntervalBox, r: IntervalBox) -> (u32, u32) {
        let tag = self.nodes[id as usize].tag;
        let label = self.nodes[id as usize].label;
        let a = self.nodes.len() as u32;
        let b = a + 1;
        self.nodes.push(Node {
            bx: l,
            children: (NO_CHILD, NO_CHILD),
            tag,
            label,
            controls: Vec::new(),
            mark_seq: 0,
        });
        self.nodes.push(Node {
            bx: r,
            children: (NO_CHILD, NO_CHILD),
            tag,
            label,
            controls: Vec::new(),
            mark_seq: 0,
        });
        self.nodes[id as usize].children = (a, b);
        (a, b)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_leaf(&self, id: u32) -> bool {
        self.nodes[id as usize].children.0 == NO_CHILD
    }

    pub fn leaf_ids(&self) -> Vec<u32> {
        (0..self.nodes.len() as u32)
            .filter(|&id| self.is_leaf(id))
            .collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.0 == NO_CHILD).count()
    }

    pub fn root_box(&self) -> &IntervalBox {
        &self.nodes[0].bx
    }

    pub fn leaf_box(&self, id: u32) -> &IntervalBox {
        &self.nodes[id as usize].bx
    }

    pub fn tag(&self, id: u32) -> Tag {
        self.nodes[id as usize].tag
    }

    pub fn label(&self, id: u32) -> u16 {
        self.nodes[id as usize].label
    }

    pub fn controls(&self, id: u32) -> &[u16] {
        &self.nodes[id as usize].controls
    }

    /// Mark a leaf winning with its valid controls. A leaf is marked at
    /// most once per round; re-marking is a logic error.
    pub fn mark_winning(&mut self, id: u32, controls: Vec<u16>, seq: u64) {
        let node = &mut self.nodes[id as usize];
        assert!(node.children.0 == NO_CHILD, "cannot mark an inner node");
        assert!(
            node.tag != Tag::Winning,
            "leaf marked winning twice in one round"
        );
        node.tag = Tag::Winning;
        node.controls = controls;
        node.mark_seq = seq;
    }

    pub fn set_tag(&mut self, id: u32, tag: Tag) {
        let node = &mut self.nodes[id as usize];
        debug_assert!(node.children.0 == NO_CHILD);
        node.tag = tag;
        if tag != Tag::Winning {
            node.controls.clear();
            node.mark_seq = 0;
        }
    }

    /// Mark every current leaf winning without strategies: the optimistic
    /// initial iterate of the outer fixed point.
    pub fn mark_all_winning(&mut self, seq: u64) {
        for node in &mut self.nodes {
            if node.children.0 == NO_CHILD {
                node.tag = Tag::Winning;
                node.controls.clear();
                node.mark_seq = seq;
            }
        }
    }

    /// Reset every leaf to undetermined in place, keeping the refined tree
    /// structure and labels.
    pub fn reset_tags(&mut self) {
        for node in &mut self.nodes {
            node.tag = Tag::Undetermined;
            node.controls.clear();
            node.mark_seq = 0;
        }
    }

    /// Fresh paver with identical tree structure and labels, all leaves
    /// undetermined.
    pub fn clone_reset(&self) -> Self {
        let mut out = self.clone();
        for node in &mut out.nodes {
            node.tag = Tag::Undetermined;
            node.controls.clear();
            node.mark_seq = 0;
        }
        out
    }

    /// Bisect a leaf along its widest dimension (lowest index on ties).
    pub fn bisect_leaf(&mut self, id: u32) -> (u32, u32) {
        debug_assert!(self.is_leaf(id));
        let (l, r) = self.nodes[id as usize]
            .bx
            .bisect()
            .expect("bisecting a degenerate leaf");
        self.attach(id, l, r)
    }

    /// Leaf containing a point; descent prefers the lower-coordinate child
    /// on shared faces. `None` when the point is outside the root box.
    pub fn leaf_of_point(&self, x: &[f64]) -> Option<u32> {
        if !self.nodes[0].bx.contains_point(x) {
            return None;
        }
        let mut id = 0u32;
        while !self.is_leaf(id) {
            let (a, b) = self.nodes[id as usize].children;
            id = if self.nodes[a as usize].bx.contains_point(x) {
                a
            } else {
                debug_assert!(self.nodes[b as usize].bx.contains_point(x));
                b
            };
        }
        Some(id)
    }

    /// All leaves whose closed boxes contain the point (several when the
    /// point lies on shared faces). Empty when the point is outside the
    /// root box.
    pub fn leaves_of_point(&self, x: &[f64]) -> Vec<u32> {
        let mut out = Vec::new();
        if !self.nodes[0].bx.contains_point(x) {
            return out;
        }
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            if self.is_leaf(id) {
                out.push(id);
                continue;
            }
            let (a, b) = self.nodes[id as usize].children;
            for c in [a, b] {
                if self.nodes[c as usize].bx.contains_point(x) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Winning leaf certifying the point under closed-set semantics. The
    /// point's label is the union over all containing leaves (regions are
    /// closed boxes), and the certifying leaf must carry exactly that
    /// label so its strategy and automaton transition apply to the point
    /// verbatim. For interior points this is the unique containing leaf.
    pub fn winning_leaf_of_point(&self, x: &[f64]) -> Option<u32> {
        let ids = self.leaves_of_point(x);
        let label: u16 = ids
            .iter()
            .fold(0, |m, &id| m | self.nodes[id as usize].label);
        ids.into_iter()
            .find(|&id| self.tag(id) == Tag::Winning && self.nodes[id as usize].label == label)
    }

    /// Membership in the closed winning union.
    pub fn point_winning(&self, x: &[f64]) -> bool {
        self.winning_leaf_of_point(x).is_some()
    }

    /// View of the winning union as of `cutoff` (marks with a later
    /// sequence number are invisible). Use `u64::MAX` for the current
    /// union.
    pub fn winning_view(&self, cutoff: u64) -> WinningView<'_> {
        WinningView {
            paver: self,
            cutoff,
        }
    }

    pub fn winning_volume(&self) -> f64 {
        // Empty f64 sums are -0.0; clamp so empty unions report +0.0.
        self.nodes
            .iter()
            .filter(|n| n.children.0 == NO_CHILD && n.tag == Tag::Winning)
            .map(|n| n.bx.volume())
            .sum::<f64>()
            .max(0.0)
    }

    pub fn winning_boxes(&self) -> Vec<IntervalBox> {
        self.nodes
            .iter()
            .filter(|n| n.children.0 == NO_CHILD && n.tag == Tag::Winning)
            .map(|n| n.bx.clone())
            .collect()
    }

    /// Serialize-friendly flat view of the tree.
    pub(crate) fn raw_nodes(&self) -> Vec<RawNode<'_>> {
        self.nodes
            .iter()
            .map(|n| RawNode {
                bx: &n.bx,
                children: if n.children.0 == NO_CHILD {
                    None
                } else {
                    Some(n.children)
                },
                tag: n.tag,
                label: n.label,
                controls: &n.controls,
            })
            .collect()
    }

    pub(crate) fn from_raw(
        aps: Vec<String>,
        raw: Vec<(IntervalBox, Option<(u32, u32)>, Tag, u16, Vec<u16>)>,
    ) -> Result<Self, Error> {
        let n = raw.len() as u32;
        if n == 0 {
            return Err(Error::Corrupt("paver with no nodes".into()));
        }
        let mut nodes = Vec::with_capacity(raw.len());
        for (bx, children, tag, label, controls) in raw {
            if let Some((a, b)) = children {
                if a >= n || b >= n {
                    return Err(Error::Corrupt("paver child index out of range".into()));
                }
            }
            nodes.push(Node {
                bx,
                children: children.unwrap_or((NO_CHILD, NO_CHILD)),
                tag,
                label,
                controls,
                mark_seq: if tag == Tag::Winning { 1 } else { 0 },
            });
        }
        Ok(Self { nodes, aps })
    }
}

pub(crate) struct RawNode<'a> {
    pub bx: &'a IntervalBox,
    pub children: Option<(u32, u32)>,
    pub tag: Tag,
    pub label: u16,
    pub controls: &'a [u16],
}

/// Read-only view of a paver's winning union at a mark-sequence cutoff.
#[derive(Clone, Copy)]
pub struct WinningView<'a> {
    paver: &'a Paver,
    cutoff: u64,
}

impl<'a> WinningView<'a> {
    fn winning(&self, id: u32) -> bool {
        let n = &self.paver.nodes[id as usize];
        n.tag == Tag::Winning && n.mark_seq <= self.cutoff
    }

    /// Closed intersection of `b` with the winning union.
    pub fn intersects(&self, b: &IntervalBox) -> bool {
        if !self.paver.nodes[0].bx.intersects(b) {
            return false;
        }
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.paver.nodes[id as usize];
            if !node.bx.intersects(b) {
                continue;
            }
            if node.children.0 == NO_CHILD {
                if self.winning(id) {
                    return true;
                }
            } else {
                stack.push(node.children.0);
                stack.push(node.children.1);
            }
        }
        false
    }

    /// Whether the winning union covers `b` entirely (closed semantics:
    /// leaves sharing a face jointly cover probes spanning it).
    pub fn covers(&self, b: &IntervalBox) -> bool {
        if !self.paver.nodes[0].bx.contains_box(b) {
            return false;
        }
        self.covers_rec(0, b)
    }

    fn covers_rec(&self, id: u32, b: &IntervalBox) -> bool {
        let node = &self.paver.nodes[id as usize];
        if node.children.0 == NO_CHILD {
            return self.winning(id);
        }
        let (a, c) = node.children;
        let left = &self.paver.nodes[a as usize].bx;
        // The children split node.bx along one axis; recover it.
        let dim = (0..b.dim())
            .find(|&k| left.hi()[k] != node.bx.hi()[k])
            .expect("inner node children must split some axis");
        let mid = left.hi()[dim];
        if b.lo()[dim] == b.hi()[dim] {
            // Degenerate probe: when it lies on the split plane, either
            // side's closed winning region may cover it.
            if b.lo()[dim] < mid {
                return self.covers_rec(a, b);
            }
            if b.lo()[dim] > mid {
                return self.covers_rec(c, b);
            }
            return self.covers_rec(a, b) || self.covers_rec(c, b);
        }
        if b.hi()[dim] > mid && b.lo()[dim] < mid {
            let (lb, rb) = b.split_at(dim, mid);
            self.covers_rec(a, &lb) && self.covers_rec(c, &rb)
        } else if b.hi()[dim] <= mid {
            self.covers_rec(a, b)
        } else {
            self.covers_rec(c, b)
        }
    }
}

/// Uniform label mask of a box against ordered regions, `None` if some
/// region boundary crosses the box interior.
fn uniform_label(regions: &[&BoxSet], bx: &IntervalBox) -> Result<Option<u16>, Error> {
    let mut mask = 0u16;
    for (i, region) in regions.iter().enumerate() {
        if region.contains(bx)? {
            mask |= 1 << i;
        } else if region.interior_intersects(bx)? {
            return Ok(None);
        }
    }
    Ok(Some(mask))
}

/// Pick a split for a non-uniform box: among dimensions where some region
/// face crosses the interior, take the widest (lowest index on ties) and
/// split at the crossing coordinate nearest the box midpoint (smaller
/// coordinate on ties).
fn boundary_split(regions: &[&BoxSet], bx: &IntervalBox) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for k in 0..bx.dim() {
        let (lo, hi) = (bx.lo()[k], bx.hi()[k]);
        let mid = lo + 0.5 * (hi - lo);
        let mut nearest: Option<f64> = None;
        for region in regions {
            for member in region.boxes() {
                for c in [member.lo()[k], member.hi()[k]] {
                    if lo < c && c < hi {
                        let better = match nearest {
                            None => true,
                            Some(cur) => {
                                let (dc, dcur) = ((c - mid).abs(), (cur - mid).abs());
                                dc < dcur || (dc == dcur && c < cur)
                            }
                        };
                        if better {
                            nearest = Some(c);
                        }
                    }
                }
            }
        }
        if let Some(c) = nearest {
            let wider = match best {
                None => true,
                Some((bk, _)) => bx.side(k) > bx.side(bk),
            };
            if wider {
                best = Some((k, c));
            }
        }
    }
    best
}
