//! Axis-aligned interval boxes and finite box unions.
//!
//! Closed-interval semantics throughout: boxes that merely touch count as
//! intersecting, and a union of adjacent boxes covers a probe box spanning
//! their shared face. These conventions keep the branch-and-bound layers
//! conservative in the sound direction.

use crate::error::Error;

/// Nonempty axis-aligned box, `lo[k] <= hi[k]` in every dimension.
/// Zero-width (degenerate) dimensions are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, Error> {
        if lo.len() != hi.len() {
            return Err(Error::DimMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidParameter {
                name: "box",
                reason: "zero-dimensional box".into(),
            });
        }
        for k in 0..lo.len() {
            if !(lo[k] <= hi[k]) || !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(Error::InvalidParameter {
                    name: "box",
                    reason: format!("bad bounds [{}, {}] along dimension {k}", lo[k], hi[k]),
                });
            }
        }
        Ok(Self { lo, hi })
    }

    /// Convenience constructor; panics on invalid bounds.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        let lo = pairs.iter().map(|p| p.0).collect();
        let hi = pairs.iter().map(|p| p.1).collect();
        Self::new(lo, hi).expect("invalid interval bounds")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }

    /// Width of the box: its largest side.
    pub fn width(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.side(k))
            .fold(0.0, f64::max)
    }

    /// Index of the widest dimension; ties resolve to the lowest index.
    pub fn widest_dim(&self) -> usize {
        let mut best = 0;
        for k in 1..self.dim() {
            if self.side(k) > self.side(best) {
                best = k;
            }
        }
        best
    }

    pub fn midpoint(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.lo[k] + 0.5 * (self.hi[k] - self.lo[k]))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    /// Split along the widest dimension at its midpoint. Both children share
    /// the same split coordinate bit for bit, so their union is the parent.
    /// Errors on a degenerate box (zero width in every dimension).
    pub fn bisect(&self) -> Result<(Self, Self), Error> {
        let k = self.widest_dim();
        if self.side(k) == 0.0 {
            return Err(Error::InvalidParameter {
                name: "bisect",
                reason: "degenerate box".into(),
            });
        }
        let mid = self.lo[k] + 0.5 * (self.hi[k] - self.lo[k]);
        Ok(self.split_at(k, mid))
    }

    /// Split along dimension `k` at coordinate `c`, which must lie strictly
    /// inside the box's extent. The shared face coordinate is `c` in both
    /// children.
    pub fn split_at(&self, k: usize, c: f64) -> (Self, Self) {
        debug_assert!(self.lo[k] < c && c < self.hi[k]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[k] = c;
        right.lo[k] = c;
        (left, right)
    }

    /// Shrink every face inward by `delta >= 0`. Returns `None` when some
    /// dimension collapses past zero width.
    pub fn erode(&self, delta: f64) -> Option<Self> {
        debug_assert!(delta >= 0.0);
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        for k in 0..self.dim() {
            lo[k] += delta;
            hi[k] -= delta;
            if lo[k] > hi[k] {
                return None;
            }
        }
        Some(Self { lo, hi })
    }

    /// Grow every face outward by `delta >= 0`.
    pub fn inflate(&self, delta: f64) -> Self {
        debug_assert!(delta >= 0.0);
        let lo = self.lo.iter().map(|v| v - delta).collect();
        let hi = self.hi.iter().map(|v| v + delta).collect();
        Self { lo, hi }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        (0..self.dim()).all(|k| self.lo[k] <= x[k] && x[k] <= self.hi[k])
    }

    pub fn contains_box(&self, b: &Self) -> bool {
        debug_assert_eq!(b.dim(), self.dim());
        (0..self.dim()).all(|k| self.lo[k] <= b.lo[k] && b.hi[k] <= self.hi[k])
    }

    /// Closed-set intersection test: shared boundary points count.
    pub fn intersects(&self, b: &Self) -> bool {
        debug_assert_eq!(b.dim(), self.dim());
        (0..self.dim()).all(|k| self.lo[k] <= b.hi[k] && b.lo[k] <= self.hi[k])
    }

    /// Relative-interior overlap with probe `b`: dimensions where `b` is
    /// degenerate are tested closed, all others require strict overlap. A
    /// box that only touches a face of `b` along a non-degenerate dimension
    /// does not overlap in this sense.
    pub fn relative_interior_intersects(&self, b: &Self) -> bool {
        debug_assert_eq!(b.dim(), self.dim());
        (0..self.dim()).all(|k| {
            if b.lo[k] == b.hi[k] {
                self.lo[k] <= b.lo[k] && b.lo[k] <= self.hi[k]
            } else {
                self.lo[k] < b.hi[k] && b.lo[k] < self.hi[k]
            }
        })
    }

    pub fn intersection(&self, b: &Self) -> Option<Self> {
        if !self.intersects(b) {
            return None;
        }
        let lo = (0..self.dim()).map(|k| self.lo[k].max(b.lo[k])).collect();
        let hi = (0..self.dim()).map(|k| self.hi[k].min(b.hi[k])).collect();
        Some(Self { lo, hi })
    }
}

/// Finite union of same-dimension boxes. No disjointness is assumed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoxSet {
    boxes: Vec<IntervalBox>,
}

impl BoxSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(boxes: Vec<IntervalBox>) -> Result<Self, Error> {
        if let Some(first) = boxes.first() {
            let d = first.dim();
            for b in &boxes {
                if b.dim() != d {
                    return Err(Error::DimMismatch {
                        expected: d,
                        got: b.dim(),
                    });
                }
            }
        }
        Ok(Self { boxes })
    }

    pub fn push(&mut self, b: IntervalBox) -> Result<(), Error> {
        if let Some(first) = self.boxes.first() {
            if b.dim() != first.dim() {
                return Err(Error::DimMismatch {
                    expected: first.dim(),
                    got: b.dim(),
                });
            }
        }
        self.boxes.push(b);
        Ok(())
    }

    pub fn boxes(&self) -> &[IntervalBox] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.boxes.first().map(|b| b.dim())
    }

    fn check_dim(&self, b: &IntervalBox) -> Result<(), Error> {
        match self.dim() {
            Some(d) if d != b.dim() => Err(Error::DimMismatch {
                expected: d,
                got: b.dim(),
            }),
            _ => Ok(()),
        }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains_point(x))
    }

    /// Closed intersection with the union.
    pub fn intersects(&self, b: &IntervalBox) -> Result<bool, Error> {
        self.check_dim(b)?;
        Ok(self.boxes.iter().any(|m| m.intersects(b)))
    }

    /// Relative-interior intersection with the union (see
    /// [`IntervalBox::relative_interior_intersects`]).
    pub fn interior_intersects(&self, b: &IntervalBox) -> Result<bool, Error> {
        self.check_dim(b)?;
        Ok(self
            .boxes
            .iter()
            .any(|m| m.relative_interior_intersects(b)))
    }

    /// Whether the union covers `b` entirely, honoring adjacency: two boxes
    /// sharing a face jointly cover a probe spanning that face.
    pub fn contains(&self, b: &IntervalBox) -> Result<bool, Error> {
        self.check_dim(b)?;
        Ok(covers(&self.boxes, b))
    }
}

/// Recursive cover check: find a member overlapping the probe's relative
/// interior, clip the probe against it, and recurse on the remainder.
fn covers(members: &[IntervalBox], b: &IntervalBox) -> bool {
    if members.iter().any(|m| m.contains_box(b)) {
        return true;
    }
    let Some(m) = members.iter().find(|m| m.relative_interior_intersects(b)) else {
        return false;
    };
    // Clip b against m. The core shrinks to a sub-box of m; every shaving is
    // strictly smaller than b along some dimension, so recursion terminates.
    let mut core = b.clone();
    let mut pieces = Vec::new();
    for k in 0..b.dim() {
        if m.lo()[k] > core.lo()[k] {
            let (cut, rest) = core.split_at(k, m.lo()[k]);
            pieces.push(cut);
            core = rest;
        }
        if m.hi()[k] < core.hi()[k] {
            let (rest, cut) = core.split_at(k, m.hi()[k]);
            pieces.push(cut);
            core = rest;
        }
    }
    pieces.iter().all(|p| covers(members, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b1(lo: f64, hi: f64) -> IntervalBox {
        IntervalBox::from_pairs(&[(lo, hi)])
    }

    fn b2(x: (f64, f64), y: (f64, f64)) -> IntervalBox {
        IntervalBox::from_pairs(&[x, y])
    }

    #[test]
    fn bisect_splits_widest_dim_with_lowest_index_ties() {
        let (l, r) = b2((0.0, 2.0), (0.0, 1.0)).bisect().unwrap();
        assert_eq!(l, b2((0.0, 1.0), (0.0, 1.0)));
        assert_eq!(r, b2((1.0, 2.0), (0.0, 1.0)));

        // Equal sides: dimension 0 wins.
        let (l, _) = b2((0.0, 1.0), (5.0, 6.0)).bisect().unwrap();
        assert_eq!(l, b2((0.0, 0.5), (5.0, 6.0)));
    }

    #[test]
    fn bisect_shares_the_split_coordinate_exactly() {
        let b = b1(0.1, 0.30000000000000004);
        let (l, r) = b.bisect().unwrap();
        assert_eq!(l.hi()[0].to_bits(), r.lo()[0].to_bits());
        assert_eq!(l.lo()[0], b.lo()[0]);
        assert_eq!(r.hi()[0], b.hi()[0]);
    }

    #[test]
    fn bisect_rejects_degenerate() {
        assert!(b1(1.0, 1.0).bisect().is_err());
    }

    #[test]
    fn erode_shrinks_both_ends() {
        let e = b1(0.0, 1.0).erode(0.3).unwrap();
        assert_eq!(e, b1(0.3, 0.7));
        assert!(b1(0.0, 0.3).erode(0.2).is_none());
        // Collapse to a point is still nonempty.
        let p = b1(0.0, 1.0).erode(0.5).unwrap();
        assert_eq!(p.lo()[0], p.hi()[0]);
    }

    #[test]
    fn inflate_grows_both_ends() {
        assert_eq!(b1(0.25, 0.5).inflate(0.25), b1(0.0, 0.75));
    }

    #[test]
    fn width_is_max_side() {
        assert_eq!(b2((0.0, 0.5), (0.0, 2.0)).width(), 2.0);
    }

    #[test]
    fn closed_intersection_counts_touching() {
        assert!(b1(0.0, 1.0).intersects(&b1(1.0, 2.0)));
        assert!(!b1(0.0, 1.0).intersects(&b1(1.5, 2.0)));
        assert!(!b1(0.0, 1.0).relative_interior_intersects(&b1(1.0, 2.0)));
    }

    #[test]
    fn adjacent_boxes_cover_a_spanning_probe() {
        let s = BoxSet::new(vec![b1(0.0, 1.0), b1(1.0, 2.0)]).unwrap();
        assert!(s.contains(&b1(0.5, 1.5)).unwrap());
        assert!(!s.contains(&b1(0.5, 2.5)).unwrap());
        assert!(s.contains(&b1(1.0, 1.0)).unwrap());
    }

    #[test]
    fn cover_handles_two_dimensional_tilings() {
        let s = BoxSet::new(vec![
            b2((0.0, 1.0), (0.0, 2.0)),
            b2((1.0, 2.0), (0.0, 1.0)),
            b2((1.0, 2.0), (1.0, 2.0)),
        ])
        .unwrap();
        assert!(s.contains(&b2((0.25, 1.75), (0.25, 1.75))).unwrap());
        assert!(s.contains(&b2((0.0, 2.0), (0.0, 2.0))).unwrap());
        assert!(!s.contains(&b2((0.25, 2.25), (0.25, 1.75))).unwrap());

        // Remove one tile: the probe crossing into it is no longer covered.
        let holed = BoxSet::new(vec![
            b2((0.0, 1.0), (0.0, 2.0)),
            b2((1.0, 2.0), (0.0, 1.0)),
        ])
        .unwrap();
        assert!(!holed.contains(&b2((0.25, 1.75), (0.25, 1.75))).unwrap());
        assert!(holed.contains(&b2((0.25, 1.75), (0.25, 1.0))).unwrap());
    }

    #[test]
    fn degenerate_probe_across_a_face_is_covered() {
        let s = BoxSet::new(vec![
            b2((0.0, 1.0), (0.0, 1.0)),
            b2((1.0, 2.0), (0.0, 1.0)),
        ])
        .unwrap();
        assert!(s.contains(&b2((0.5, 1.5), (0.5, 0.5))).unwrap());
        assert!(!s.contains(&b2((0.5, 2.5), (0.5, 0.5))).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = BoxSet::new(vec![b1(0.0, 1.0)]).unwrap();
        assert!(s.contains(&b2((0.0, 1.0), (0.0, 1.0))).is_err());
        assert!(s.intersects(&b2((0.0, 1.0), (0.0, 1.0))).is_err());
    }
}
