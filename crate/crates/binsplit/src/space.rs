//! Axis-aligned geometry for bin-splitting policies.
//!
//! The search domain is a box which gets tiled by congruent cubic bins.
//! A fixed-grid policy builds the tiling once with [`make_grid`]; the
//! adaptive policy refines it by replacing a bin with its 2^d half-length
//! children via [`split_bin`]. Tilings are anchored at the lower corner of
//! the domain, so when the bin length does not divide a side exactly the
//! grid overhangs past the upper faces; the domain's `margin` says how much
//! overhang the objective can tolerate.
//!
//! Membership follows a half-open convention: a bin owns
//! `[corner, corner + length)` per coordinate, except on faces that lie on
//! the maximal boundary of the enclosing region, which are closed. Under
//! that rule every point of the tiled region belongs to exactly one bin.

use rand::{Rng, RngExt};

use crate::error::{Error, Result};

/// Absolute slack granted to floating-point tiling arithmetic.
const TILE_EPS: f64 = 1e-9;

/// A point in the search domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords)
    }
}

/// The box being searched, plus the overhang allowance past its upper faces.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    margin: f64,
}

impl DecisionSpace {
    /// Builds a `d`-dimensional box `[lower_i, upper_i]` with the given
    /// overhang allowance. Rejects empty or inverted sides, mismatched
    /// bounds, and negative margins.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, margin: f64) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::config("space.lower", "dimension must be at least 1"));
        }
        if lower.len() != upper.len() {
            return Err(Error::config(
                "space.upper",
                format!("lower has {} coordinates but upper has {}", lower.len(), upper.len()),
            ));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::config(
                    format!("space bounds, dimension {i}"),
                    "bounds must be finite",
                ));
            }
            if lo >= hi {
                return Err(Error::config(
                    format!("space bounds, dimension {i}"),
                    format!("lower {lo} must be strictly below upper {hi}"),
                ));
            }
        }
        if !(margin >= 0.0) {
            return Err(Error::config("space.margin", format!("margin {margin} must be >= 0")));
        }
        Ok(DecisionSpace { lower, upper, margin })
    }

    /// Symmetric box `[-half, half]^dim`, the domain used by the shipped
    /// benchmarks.
    pub fn symmetric(dim: usize, half: f64, margin: f64) -> Result<Self> {
        DecisionSpace::new(vec![-half; dim], vec![half; dim], margin)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn side(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Longest side of the box; the default initial bin length.
    pub fn max_side(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether `p` lies inside the box inflated by the margin, which is the
    /// region queries are allowed to land in.
    pub fn contains_inflated(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| x >= lo && x <= hi + self.margin)
    }
}

/// One cubic cell of a tiling, together with the query statistics the
/// policies accumulate in it.
///
/// A bin is identified by its lower corner and depth; children inherit
/// exact corner coordinates from their parent so that identity never
/// depends on re-derived arithmetic. `length == initial_length * 2^-depth`
/// always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    corner: Vec<f64>,
    length: f64,
    depth: u32,
    count: u64,
    loss_sum: f64,
    query_ids: Vec<u64>,
}

impl Bin {
    /// A fresh bin with no recorded queries.
    pub fn new(corner: Vec<f64>, length: f64, depth: u32) -> Self {
        Bin { corner, length, depth, count: 0, loss_sum: 0.0, query_ids: Vec::new() }
    }

    pub fn corner(&self) -> &[f64] {
        &self.corner
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    /// Number of queries recorded in this bin.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Sum of observed losses over this bin's queries.
    pub fn loss_sum(&self) -> f64 {
        self.loss_sum
    }

    /// Time indices of the queries recorded in this bin.
    pub fn query_ids(&self) -> &[u64] {
        &self.query_ids
    }

    /// Mean observed loss, or `None` before the first query.
    pub fn mean_loss(&self) -> Option<f64> {
        if self.count == 0 { None } else { Some(self.loss_sum / self.count as f64) }
    }

    /// Records the query issued at time `t` with observed loss `y`.
    pub(crate) fn record(&mut self, t: u64, y: f64) {
        self.count += 1;
        self.loss_sum += y;
        self.query_ids.push(t);
    }

    /// The midpoint of the bin, which is what a fixed-grid policy queries.
    pub fn center(&self) -> Point {
        Point::new(self.corner.iter().map(|&c| c + self.length / 2.0).collect())
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim() as i32)
    }

    /// Half-open membership test. `closed_max[i]` gives the coordinate at
    /// which the upper face counts as closed (the maximal face of the
    /// enclosing region); pass the parent's or the tiling's upper bounds.
    pub fn contains(&self, p: &Point, closed_max: &[f64]) -> bool {
        if p.dim() != self.dim() {
            return false;
        }
        p.coords().iter().enumerate().all(|(i, &x)| {
            let lo = self.corner[i];
            let hi = lo + self.length;
            x >= lo && (x < hi || (x == hi && hi == closed_max[i]))
        })
    }
}

/// Tiles the space with cubes of side `a`, anchored at the lower corner.
///
/// Each dimension gets `ceil(side / a)` cells, so the tiling covers the
/// space and overhangs each upper face by less than `a`. Overhang beyond
/// the space's margin is a configuration error naming the offending
/// dimension. Returns the bins in row-major order, all at depth 0.
pub fn make_grid(space: &DecisionSpace, a: f64) -> Result<Vec<Bin>> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::config("bin length", format!("length {a} must be positive and finite")));
    }
    let d = space.dim();
    let mut cells = Vec::with_capacity(d);
    for i in 0..d {
        let q = space.side(i) / a;
        // Guard against float noise pushing an exact division past the next
        // integer; q's true fractional part is either 0 or far above 1e-9.
        let m = (q - TILE_EPS).ceil().max(1.0) as usize;
        let overhang = m as f64 * a - space.side(i);
        if overhang > space.margin() + TILE_EPS {
            return Err(Error::config(
                format!("bin length vs dimension {i}"),
                format!(
                    "length {a} overhangs side [{}, {}] by {overhang:.6}, beyond margin {}",
                    space.lower()[i],
                    space.upper()[i],
                    space.margin()
                ),
            ));
        }
        cells.push(m);
    }
    let total: usize = cells.iter().product();
    let mut bins = Vec::with_capacity(total);
    for flat in 0..total {
        let mut corner = Vec::with_capacity(d);
        let mut rest = flat;
        for i in 0..d {
            let idx = rest % cells[i];
            rest /= cells[i];
            corner.push(space.lower()[i] + idx as f64 * a);
        }
        bins.push(Bin::new(corner, a, 0));
    }
    Ok(bins)
}

/// Splits a bin into its 2^d half-length children, depth one deeper.
///
/// Child `l` takes the upper half along dimension `i` exactly when bit `i`
/// of `l` is set, so the children tile the parent exactly. The parent is
/// left untouched; callers decide whether to retire it.
pub fn split_bin(parent: &Bin) -> Vec<Bin> {
    let d = parent.dim();
    debug_assert!(d < usize::BITS as usize);
    let half = parent.length / 2.0;
    let mut children = Vec::with_capacity(1 << d);
    for l in 0..(1usize << d) {
        let corner: Vec<f64> = (0..d)
            .map(|i| {
                let base = parent.corner[i];
                if l >> i & 1 == 1 { base + half } else { base }
            })
            .collect();
        children.push(Bin::new(corner, half, parent.depth + 1));
    }
    children
}

/// Draws a uniform point from the bin, one independent coordinate at a
/// time in dimension order, so the draw is reproducible from the generator
/// state alone.
pub fn sample_uniform<R: Rng + ?Sized>(bin: &Bin, rng: &mut R) -> Point {
    let coords = bin.corner.iter().map(|&c| c + rng.random::<f64>() * bin.length).collect();
    Point::new(coords)
}

/// Finds the unique child containing `p` among the children of one split.
///
/// Membership is half-open per coordinate except on the parent's maximal
/// faces, which are closed, so points on interior boundaries resolve to the
/// upper sibling and the parent's own upper boundary stays covered. A point
/// outside the parent is an internal-consistency error: the caller sampled
/// it from the parent's extent, so it must land in some child.
pub fn locate_child(children: &[Bin], p: &Point) -> Result<usize> {
    if children.is_empty() {
        return Err(Error::internal("locate_child called with no children"));
    }
    let d = children[0].dim();
    // Recover the parent's extent from the sibling corners.
    let mut parent_max = vec![f64::NEG_INFINITY; d];
    for child in children {
        for i in 0..d {
            parent_max[i] = parent_max[i].max(child.corner[i] + child.length);
        }
    }
    for (idx, child) in children.iter().enumerate() {
        if child.contains(p, &parent_max) {
            return Ok(idx);
        }
    }
    Err(Error::internal(format!(
        "point {:?} lies outside the union of the {} children",
        p.coords(),
        children.len()
    )))
}
