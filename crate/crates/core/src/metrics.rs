//! Object-level segmentation scores and leaderboard rank aggregation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer-labeled mask: 0 is background, every positive value is an object id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceMask {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl InstanceMask {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("mask must be nonempty".into()));
        }
        if labels.len() != width * height {
            return Err(Error::LengthMismatch { expected: width * height, actual: labels.len() });
        }
        Ok(Self { width, height, labels })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, labels: vec![0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Self { width, height, labels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count of every object, keyed by id.
    pub fn areas(&self) -> BTreeMap<u32, usize> {
        let mut areas = BTreeMap::new();
        for &l in self.labels.iter().filter(|&&l| l != 0) {
            *areas.entry(l).or_insert(0) += 1;
        }
        areas
    }

    pub fn object_ids(&self) -> Vec<u32> {
        self.areas().into_keys().collect()
    }

    /// `(x, y)` coordinates of object `id`.
    pub fn pixels(&self, id: u32) -> Vec<(usize, usize)> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == id)
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }

    /// Diagonal length of the image in pixels.
    pub fn diagonal(&self) -> f64 {
        ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    /// Applies `f` to every object id (0 stays background).
    pub fn relabel(&self, mut f: impl FnMut(u32) -> u32) -> InstanceMask {
        let labels = self.labels.iter().map(|&l| if l == 0 { 0 } else { f(l) }).collect();
        InstanceMask { width: self.width, height: self.height, labels }
    }

    fn ensure_same_dims(&self, other: &InstanceMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), actual: other.dims() });
        }
        Ok(())
    }
}

/// Pixel overlap counts between the objects of two masks.
struct Overlaps {
    a_areas: BTreeMap<u32, usize>,
    b_areas: BTreeMap<u32, usize>,
    /// a id -> (b id -> shared pixels)
    a_to_b: HashMap<u32, BTreeMap<u32, usize>>,
    b_to_a: HashMap<u32, BTreeMap<u32, usize>>,
}

impl Overlaps {
    fn new(a: &InstanceMask, b: &InstanceMask) -> Result<Self> {
        a.ensure_same_dims(b)?;
        let mut a_to_b: HashMap<u32, BTreeMap<u32, usize>> = HashMap::new();
        let mut b_to_a: HashMap<u32, BTreeMap<u32, usize>> = HashMap::new();
        for (&la, &lb) in a.labels.iter().zip(&b.labels) {
            if la != 0 && lb != 0 {
                *a_to_b.entry(la).or_default().entry(lb).or_insert(0) += 1;
                *b_to_a.entry(lb).or_default().entry(la).or_insert(0) += 1;
            }
        }
        Ok(Self { a_areas: a.areas(), b_areas: b.areas(), a_to_b, b_to_a })
    }

    /// Partner of maximal overlap, lowest id on ties; `None` without overlap.
    fn best(map: &HashMap<u32, BTreeMap<u32, usize>>, id: u32) -> Option<(u32, usize)> {
        let mut best: Option<(u32, usize)> = None;
        for (&other, &count) in map.get(&id)? {
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((other, count));
            }
        }
        best
    }

    fn best_in_b(&self, a_id: u32) -> Option<(u32, usize)> {
        Self::best(&self.a_to_b, a_id)
    }

    fn best_in_a(&self, b_id: u32) -> Option<(u32, usize)> {
        Self::best(&self.b_to_a, b_id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub segmented: u32,
    pub ground_truth: Option<u32>,
    /// Shared pixels over the segmented object's area.
    pub overlap: f64,
    pub true_positive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchTable {
    pub pairs: Vec<MatchPair>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Pairs each segmented object with the ground-truth object it overlaps
/// most. It counts as a true positive when the shared area exceeds half of
/// the segmented object. Ground-truth objects without a true-positive
/// partner are false negatives.
pub fn match_objects(seg: &InstanceMask, gt: &InstanceMask) -> Result<MatchTable> {
    let ov = Overlaps::new(seg, gt)?;
    let mut pairs = Vec::with_capacity(ov.a_areas.len());
    let mut hit = std::collections::BTreeSet::new();
    for (&s, &area) in &ov.a_areas {
        let (gt_id, overlap) = match ov.best_in_b(s) {
            Some((g, c)) => (Some(g), c as f64 / area as f64),
            None => (None, 0.0),
        };
        let true_positive = overlap > 0.5;
        if true_positive {
            hit.insert(gt_id.expect("positive overlap has a partner"));
        }
        pairs.push(MatchPair { segmented: s, ground_truth: gt_id, overlap, true_positive });
    }
    let tp = pairs.iter().filter(|p| p.true_positive).count();
    let fp = pairs.len() - tp;
    let fn_ = ov.b_areas.keys().filter(|g| !hit.contains(g)).count();
    Ok(MatchTable { pairs, tp, fp, fn_ })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Precision, recall and F1 of a match table; empty denominators give 0.
pub fn f1_score(table: &MatchTable) -> F1Score {
    let tp = table.tp as f64;
    let precision = ratio(tp, tp + table.fp as f64);
    let recall = ratio(tp, tp + table.fn_ as f64);
    F1Score { precision, recall, f1: ratio(2.0 * precision * recall, precision + recall) }
}

/// Dice coefficient `2|A∩B| / (|A| + |B|)` of two objects.
pub fn dice(shared: usize, area_a: usize, area_b: usize) -> f64 {
    ratio(2.0 * shared as f64, (area_a + area_b) as f64)
}

/// Area-weighted object Dice averaged over both directions. Each object is
/// paired with its maximal-overlap counterpart in the other mask; objects
/// without any overlap score 0. Two empty masks score 1.
pub fn object_dice(seg: &InstanceMask, gt: &InstanceMask) -> Result<f64> {
    let ov = Overlaps::new(seg, gt)?;
    if ov.a_areas.is_empty() && ov.b_areas.is_empty() {
        return Ok(1.0);
    }
    let directed = |areas: &BTreeMap<u32, usize>, other: &BTreeMap<u32, usize>, best: &dyn Fn(u32) -> Option<(u32, usize)>| {
        let total: usize = areas.values().sum();
        if total == 0 {
            return 0.0;
        }
        areas
            .iter()
            .map(|(&id, &area)| {
                let d = best(id).map_or(0.0, |(o, shared)| dice(shared, area, other[&o]));
                area as f64 * d
            })
            .sum::<f64>()
            / total as f64
    };
    let s = directed(&ov.a_areas, &ov.b_areas, &|id| ov.best_in_b(id));
    let g = directed(&ov.b_areas, &ov.a_areas, &|id| ov.best_in_a(id));
    Ok(0.5 * (s + g))
}

/// Exact squared Euclidean distance transform of a 1D sampled function
/// (lower envelope of parabolas).
fn dt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let mut started = f[0].is_finite();
    for q in 1..n {
        if !f[q].is_finite() {
            continue;
        }
        if !started {
            v[0] = q;
            started = true;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates everywhere.
                v[0] = q;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if !started {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance from every cell of a `w x h` box to the nearest set cell.
fn squared_edt(w: usize, h: usize, is_set: &[bool]) -> Vec<f64> {
    let n = w.max(h);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0f64; n + 1]);
    let mut grid: Vec<f64> = is_set.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        dt_1d(&col, &mut col_out, &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = col_out[y];
        }
    }
    let mut row_out = vec![0.0; w];
    for y in 0..h {
        let row = &mut grid[y * w..(y + 1) * w];
        dt_1d(row, &mut row_out, &mut v, &mut z);
        row.copy_from_slice(&row_out);
    }
    grid
}

/// Symmetric Hausdorff distance between two nonempty pixel sets.
pub fn hausdorff(a: &[(usize, usize)], b: &[(usize, usize)]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for &(x, y) in a.iter().chain(b) {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let directed = |from: &[(usize, usize)], to: &[(usize, usize)]| {
        let mut set = vec![false; w * h];
        for &(x, y) in to {
            set[(y - y0) * w + (x - x0)] = true;
        }
        let dt = squared_edt(w, h, &set);
        from.iter().map(|&(x, y)| dt[(y - y0) * w + (x - x0)]).fold(0.0f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)).sqrt())
}

/// Area-weighted object Hausdorff distance averaged over both directions,
/// with the same pairing as [`object_dice`]. An object without any overlap
/// is charged the image diagonal. Two empty masks score 0; one empty mask
/// charges every object of the other the diagonal.
pub fn object_hausdorff(seg: &InstanceMask, gt: &InstanceMask) -> Result<f64> {
    let ov = Overlaps::new(seg, gt)?;
    if ov.a_areas.is_empty() && ov.b_areas.is_empty() {
        return Ok(0.0);
    }
    let penalty = seg.diagonal();
    let seg_px = pixel_lists(seg);
    let gt_px = pixel_lists(gt);
    let directed = |areas: &BTreeMap<u32, usize>,
                    own: &HashMap<u32, Vec<(usize, usize)>>,
                    other: &HashMap<u32, Vec<(usize, usize)>>,
                    best: &dyn Fn(u32) -> Option<(u32, usize)>|
     -> Result<f64> {
        let total: usize = areas.values().sum();
        if total == 0 {
            return Ok(penalty);
        }
        let mut acc = 0.0;
        for (&id, &area) in areas {
            let d = match best(id) {
                Some((o, _)) => hausdorff(&own[&id], &other[&o])?,
                None => penalty,
            };
            acc += area as f64 * d;
        }
        Ok(acc / total as f64)
    };
    let s = directed(&ov.a_areas, &seg_px, &gt_px, &|id| ov.best_in_b(id))?;
    let g = directed(&ov.b_areas, &gt_px, &seg_px, &|id| ov.best_in_a(id))?;
    Ok(0.5 * (s + g))
}

fn pixel_lists(mask: &InstanceMask) -> HashMap<u32, Vec<(usize, usize)>> {
    let mut out: HashMap<u32, Vec<(usize, usize)>> = HashMap::new();
    for (i, &l) in mask.labels.iter().enumerate() {
        if l != 0 {
            out.entry(l).or_default().push((i % mask.width, i / mask.width));
        }
    }
    out
}

/// Score columns of a leaderboard row, in this order.
pub const SCORE_COLUMNS: [&str; 6] = ["f1_a", "f1_b", "dice_a", "dice_b", "hausdorff_a", "hausdorff_b"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub method: String,
    /// F1 A, F1 B, Dice A, Dice B, Hausdorff A, Hausdorff B.
    pub scores: [f64; 6],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieRule {
    /// Tied entries share the mean of the positions they occupy.
    #[default]
    Average,
    /// Tied entries all take the best position (competition ranking).
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub method: String,
    pub ranks: [f64; 6],
    pub rank_sum: f64,
    pub weighted_rank_sum: f64,
}

/// Plain and weighted rank sums of six column ranks. The weighted sum
/// gives the A columns (0, 2, 4) weight 3/4 and the B columns 1/4.
pub fn aggregate_ranks(ranks: &[f64; 6]) -> (f64, f64) {
    let a = ranks[0] + ranks[2] + ranks[4];
    let b = ranks[1] + ranks[3] + ranks[5];
    (a + b, 0.75 * a + 0.25 * b)
}

/// Ranks one column; higher is better unless `ascending`.
pub fn rank_column(values: &[f64], ascending: bool, rule: TieRule) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let better = |a: f64, b: f64| if ascending { a.total_cmp(&b) } else { b.total_cmp(&a) };
    order.sort_by(|&i, &j| better(values[i], values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = match rule {
            TieRule::Average => (start + 1 + end) as f64 / 2.0,
            TieRule::Min => (start + 1) as f64,
        };
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Ranks every score column (Hausdorff ascending, the rest descending) and
/// sums the ranks per method.
pub fn rank_aggregate(methods: &[MethodScores], rule: TieRule) -> Result<Vec<RankRow>> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods to rank".into()));
    }
    if let Some(m) = methods.iter().find(|m| m.scores.iter().any(|s| !s.is_finite())) {
        return Err(Error::InvalidInput(format!("non-finite score for method {}", m.method)));
    }
    let mut rows: Vec<RankRow> = methods
        .iter()
        .map(|m| RankRow { method: m.method.clone(), ranks: [0.0; 6], rank_sum: 0.0, weighted_rank_sum: 0.0 })
        .collect();
    for c in 0..6 {
        let column: Vec<f64> = methods.iter().map(|m| m.scores[c]).collect();
        for (row, r) in rows.iter_mut().zip(rank_column(&column, c >= 4, rule)) {
            row.ranks[c] = r;
        }
    }
    for row in &mut rows {
        (row.rank_sum, row.weighted_rank_sum) = aggregate_ranks(&row.ranks);
    }
    Ok(rows)
}
