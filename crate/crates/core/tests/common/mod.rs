//! Slow, direct reference implementations used as oracles. None of these
//! share numerical code paths with the library beyond reading filter
//! spectra out of a bank.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use frscat::metrics::InstanceMask;
use frscat::{FilterBank, RealImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64 as C;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_real(w: usize, h: usize, seed: u64) -> RealImage {
    let mut r = rng(seed);
    RealImage::from_fn(w, h, |_, _| r.random_range(-1.0..1.0))
}

/// Zero-mean texture: white noise smoothed by a small box filter, then
/// modulated by a random plane wave so it has oriented structure.
pub fn random_texture(n: usize, seed: u64) -> RealImage {
    let mut r = rng(seed);
    let white: Vec<f64> = (0..n * n).map(|_| r.random_range(-1.0..1.0)).collect();
    let (fx, fy) = (r.random_range(0.2..1.2), r.random_range(0.2..1.2));
    let smooth = RealImage::from_fn(n, n, |x, y| {
        let mut acc = 0.0;
        for dy in 0..3 {
            for dx in 0..3 {
                acc += white[((y + dy) % n) * n + (x + dx) % n];
            }
        }
        acc / 9.0 * (fx * x as f64 + fy * y as f64).cos()
    });
    let mean = smooth.mean();
    RealImage::from_fn(n, n, |x, y| smooth.get(x, y) - mean)
}

/// `n x n` DFT matrix `exp(-2 pi i k m / n)` (or its conjugate).
fn dft_matrix(n: usize, inverse: bool) -> Vec<C> {
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut m = Vec::with_capacity(n * n);
    for k in 0..n {
        for j in 0..n {
            let ph = sign * 2.0 * PI * ((k * j) % n) as f64 / n as f64;
            m.push(C::from_polar(1.0, ph));
        }
    }
    m
}

/// Plain 2D DFT by two dense matrix passes; the inverse carries `1/(w h)`.
pub struct NaiveDft {
    w: usize,
    h: usize,
    fw: Vec<C>,
    iw: Vec<C>,
    fh: Vec<C>,
    ih: Vec<C>,
}

impl NaiveDft {
    pub fn new(w: usize, h: usize) -> Self {
        Self { w, h, fw: dft_matrix(w, false), iw: dft_matrix(w, true), fh: dft_matrix(h, false), ih: dft_matrix(h, true) }
    }

    fn apply(&self, x: &[C], mw: &[C], mh: &[C], scale: f64) -> Vec<C> {
        let (w, h) = (self.w, self.h);
        let mut rows = vec![C::new(0.0, 0.0); w * h];
        for y in 0..h {
            for k in 0..w {
                let mut acc = C::new(0.0, 0.0);
                for j in 0..w {
                    acc += mw[k * w + j] * x[y * w + j];
                }
                rows[y * w + k] = acc;
            }
        }
        let mut out = vec![C::new(0.0, 0.0); w * h];
        for k in 0..h {
            for x_ in 0..w {
                let mut acc = C::new(0.0, 0.0);
                for j in 0..h {
                    acc += mh[k * h + j] * rows[j * w + x_];
                }
                out[k * w + x_] = acc * scale;
            }
        }
        out
    }

    pub fn forward(&self, x: &[C]) -> Vec<C> {
        self.apply(x, &self.fw, &self.fh, 1.0)
    }

    pub fn inverse(&self, x: &[C]) -> Vec<C> {
        self.apply(x, &self.iw, &self.ih, 1.0 / (self.w * self.h) as f64)
    }

    /// Circular convolution with the kernel whose plain DFT is `h_hat`.
    pub fn convolve_spectrum(&self, x_hat: &[C], h_hat: &[C]) -> Vec<C> {
        let prod: Vec<C> = x_hat.iter().zip(h_hat).map(|(a, b)| a * b).collect();
        self.inverse(&prod)
    }
}

/// Classical scattering computed recursively with dense DFTs: for every
/// path with strictly increasing scales up to `max_order`, `|U[p]x * phi|`.
/// Keys are the `(scale, angle)` sequences.
pub fn classical_scattering(x: &RealImage, bank: &FilterBank) -> BTreeMap<Vec<(usize, usize)>, Vec<f64>> {
    let (w, h) = x.dims();
    let dft = NaiveDft::new(w, h);
    let phi: Vec<C> = bank.phi_hat().data().to_vec();
    let max_order = bank.spec().max_order;
    let mut out = BTreeMap::new();
    let u0: Vec<C> = x.data().iter().map(|&v| C::new(v, 0.0)).collect();
    let mut stack = vec![(Vec::<(usize, usize)>::new(), u0)];
    while let Some((path, u)) = stack.pop() {
        let u_hat = dft.forward(&u);
        let s: Vec<f64> = dft.convolve_spectrum(&u_hat, &phi).iter().map(|z| z.norm()).collect();
        if path.len() < max_order {
            let first = path.last().map_or(0, |&(j, _)| j + 1);
            for j in first..bank.num_scales() {
                for k in 0..bank.num_angles() {
                    let psi = bank.psi_hat(j, k).data();
                    let child: Vec<C> =
                        dft.convolve_spectrum(&u_hat, psi).iter().map(|z| C::new(z.norm(), 0.0)).collect();
                    let mut p = path.clone();
                    p.push((j, k));
                    stack.push((p, child));
                }
            }
        }
        out.insert(path, s);
    }
    out
}

pub fn oracle_cot(alpha: f64) -> f64 {
    if alpha == 1.0 {
        0.0
    } else {
        let t = alpha * PI / 2.0;
        t.cos() / t.sin()
    }
}

/// `exp(sign * j/2 (u1^2 cot1 + u2^2 cot2))` at sample `(x, y)`.
pub fn oracle_chirp(x: usize, y: usize, w: usize, h: usize, a1: f64, a2: f64, sign: f64) -> C {
    let u1 = (x as f64 - (w / 2) as f64) / (w as f64).sqrt();
    let u2 = (y as f64 - (h / 2) as f64) / (h as f64).sqrt();
    C::from_polar(1.0, sign * 0.5 * (u1 * u1 * oracle_cot(a1) + u2 * u2 * oracle_cot(a2)))
}

/// Fractional convolution as an explicit double sum over the grid:
/// `y[n] = c-(n) sum_m c+(m) x[m] h[(n - m) mod N]`.
pub fn spatial_frac_convolve(x: &[C], kernel: &[C], w: usize, h: usize, a1: f64, a2: f64) -> Vec<C> {
    let modulated: Vec<C> =
        (0..w * h).map(|i| x[i] * oracle_chirp(i % w, i / w, w, h, a1, a2, 1.0)).collect();
    let mut out = vec![C::new(0.0, 0.0); w * h];
    for ny in 0..h {
        for nx in 0..w {
            let mut acc = C::new(0.0, 0.0);
            for my in 0..h {
                for mx in 0..w {
                    let k = kernel[((ny + h - my) % h) * w + (nx + w - mx) % w];
                    acc += modulated[my * w + mx] * k;
                }
            }
            out[ny * w + nx] = acc * oracle_chirp(nx, ny, w, h, a1, a2, -1.0);
        }
    }
    out
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn rel_l2_complex(a: &[C], b: &[C]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

pub fn brute_hausdorff(a: &[(usize, usize)], b: &[(usize, usize)]) -> f64 {
    let d = |p: (usize, usize), q: (usize, usize)| {
        ((p.0 as f64 - q.0 as f64).powi(2) + (p.1 as f64 - q.1 as f64).powi(2)).sqrt()
    };
    let directed = |s: &[(usize, usize)], t: &[(usize, usize)]| {
        s.iter().map(|&p| t.iter().map(|&q| d(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn objects(m: &InstanceMask) -> BTreeMap<u32, Vec<(usize, usize)>> {
    let mut out: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
    for y in 0..m.height() {
        for x in 0..m.width() {
            let l = m.get(x, y);
            if l != 0 {
                out.entry(l).or_default().push((x, y));
            }
        }
    }
    out
}

/// Partner with the most shared pixels, lowest id on ties, none if disjoint.
fn partner(obj: &[(usize, usize)], other: &InstanceMask) -> Option<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &(x, y) in obj {
        let l = other.get(x, y);
        if l != 0 {
            *counts.entry(l).or_default() += 1;
        }
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|&(_, c)| c == best).map(|(id, _)| id)
}

fn shared(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    a.iter().filter(|p| b.contains(p)).count()
}

/// Area-weighted per-object score averaged over both directions, with a
/// score function on paired objects and a value for unpaired ones.
fn object_score(
    seg: &InstanceMask,
    gt: &InstanceMask,
    paired: &dyn Fn(&[(usize, usize)], &[(usize, usize)]) -> f64,
    unpaired: f64,
) -> f64 {
    let so = objects(seg);
    let go = objects(gt);
    let direction = |own: &BTreeMap<u32, Vec<(usize, usize)>>, others: &BTreeMap<u32, Vec<(usize, usize)>>, other_mask| {
        let total: usize = own.values().map(Vec::len).sum();
        if total == 0 {
            return unpaired;
        }
        own.values()
            .map(|px| {
                let score = partner(px, other_mask).map_or(unpaired, |id| paired(px, &others[&id]));
                px.len() as f64 / total as f64 * score
            })
            .sum::<f64>()
    };
    0.5 * (direction(&so, &go, gt) + direction(&go, &so, seg))
}

pub fn brute_object_dice(seg: &InstanceMask, gt: &InstanceMask) -> f64 {
    if objects(seg).is_empty() && objects(gt).is_empty() {
        return 1.0;
    }
    object_score(seg, gt, &|a, b| 2.0 * shared(a, b) as f64 / (a.len() + b.len()) as f64, 0.0)
}

pub fn brute_object_hausdorff(seg: &InstanceMask, gt: &InstanceMask) -> f64 {
    if objects(seg).is_empty() && objects(gt).is_empty() {
        return 0.0;
    }
    let diag = ((seg.width().pow(2) + seg.height().pow(2)) as f64).sqrt();
    object_score(seg, gt, &brute_hausdorff, diag)
}

/// Random mask with up to `max_objects` rectangles painted in id order.
pub fn random_mask(w: usize, h: usize, max_objects: u32, r: &mut ChaCha8Rng) -> InstanceMask {
    let mut labels = vec![0u32; w * h];
    let count = r.random_range(0..=max_objects);
    for id in 1..=count {
        let (bw, bh) = (r.random_range(1..=w / 2), r.random_range(1..=h / 2));
        let (x0, y0) = (r.random_range(0..=w - bw), r.random_range(0..=h - bh));
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                if r.random_bool(0.85) {
                    labels[y * w + x] = id;
                }
            }
        }
    }
    InstanceMask::new(w, h, labels).unwrap()
}

/// Cyclic Jacobi eigensolver for a dense symmetric matrix (row-major).
/// Returns eigenvalues in decreasing order with matching unit eigenvectors.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j].powi(2)).sum();
        let scale: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> =
        (0..n).map(|i| (a[i * n + i], (0..n).map(|k| v[k * n + i]).collect())).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs.into_iter().unzip()
}

/// Solves `A z = b` for square `A` (row-major) by Gaussian elimination with
/// partial pivoting.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| {
        let mut row = a[i * n..(i + 1) * n].to_vec();
        row.push(b[i]);
        row
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut z = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * z[c]).sum();
        z[r] = (m[r][n] - s) / m[r][r];
    }
    z
}

/// Published gland-challenge leaderboard: method, six scores
/// (F1 A, F1 B, Dice A, Dice B, Hausdorff A, Hausdorff B), six printed
/// ranks in the same column order, printed rank sum and weighted rank sum.
pub type LeaderboardRow = (&'static str, [f64; 6], [f64; 6], f64, f64);

pub const LEADERBOARD: [LeaderboardRow; 14] = [
    ("CUM1", [0.868, 0.769, 0.867, 0.800, 74.596, 153.646], [9.0, 4.0, 12.0, 4.0, 12.0, 9.0], 50.0, 29.0),
    ("CUM2", [0.912, 0.716, 0.897, 0.781, 45.418, 160.347], [1.0, 7.0, 2.0, 9.0, 2.0, 11.0], 32.0, 10.5),
    ("ExB1", [0.891, 0.703, 0.882, 0.786, 57.413, 145.575], [6.0, 9.0, 6.0, 7.0, 9.0, 5.0], 42.0, 21.0),
    ("ExB2", [0.892, 0.686, 0.884, 0.754, 54.785, 187.442], [5.0, 11.0, 5.0, 12.0, 4.0, 12.0], 49.0, 19.25),
    ("ExB3", [0.896, 0.719, 0.886, 0.765, 57.350, 159.873], [3.0, 6.0, 4.0, 10.0, 8.0, 10.0], 41.0, 17.75),
    ("Fre1", [0.834, 0.605, 0.875, 0.783, 57.194, 146.607], [12.0, 13.0, 9.0, 8.0, 7.0, 7.0], 56.0, 28.0),
    ("Fre2", [0.870, 0.695, 0.876, 0.765, 57.093, 148.463], [8.0, 10.0, 8.0, 10.0, 6.0, 8.0], 50.0, 23.5),
    ("Dund", [0.863, 0.633, 0.870, 0.715, 58.339, 209.048], [10.0, 12.0, 11.0, 13.0, 10.0, 14.0], 70.0, 33.0),
    ("LIB", [0.797, 0.306, 0.801, 0.617, 101.167, 190.447], [13.0, 14.0, 14.0, 14.0, 14.0, 13.0], 82.0, 41.0),
    ("FCN", [0.788, 0.764, 0.813, 0.796, 95.054, 146.248], [14.0, 5.0, 13.0, 5.0, 13.0, 6.0], 56.0, 34.0),
    ("DFCN", [0.854, 0.798, 0.879, 0.825, 62.216, 118.734], [11.0, 3.0, 7.0, 3.0, 11.0, 3.0], 38.0, 24.0),
    ("DMNN", [0.893, 0.843, 0.908, 0.833, 44.129, 116.821], [4.0, 2.0, 1.0, 2.0, 1.0, 1.0], 11.0, 5.75),
    ("ScatNet", [0.874, 0.710, 0.875, 0.791, 56.593, 126.339], [7.0, 8.0, 9.0, 6.0, 6.0, 4.0], 40.0, 21.0),
    ("FrScatNet", [0.901, 0.858, 0.896, 0.842, 52.276, 117.100], [2.0, 1.0, 3.0, 1.0, 3.0, 2.0], 12.0, 7.0),
];
