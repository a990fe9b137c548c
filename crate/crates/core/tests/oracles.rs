//! Library results checked against slow, independently coded references.

mod common;

use std::f64::consts::PI;

use frscat::classifier::{decompose_class, train_pca};
use frscat::features::{extract_patches, normalize_patch, LabeledPatch, MultiImage, PatchConfig, PatchSource};
use frscat::filterbank::{build_morlet_bank, littlewood_paley, FilterBank, FilterBankSpec};
use frscat::frwt::frwt;
use frscat::grid::{chirp, modulus, ChirpSign};
use frscat::io::{load_tensor, save_tensor};
use frscat::metrics::{hausdorff, object_dice, object_hausdorff, InstanceMask};
use frscat::scattering::{enumerate_paths, propagate, Path};
use frscat::{ComplexImage, FeatureTensor, FractionalOrderPair, RealImage};
use rand::Rng;
use rustfft::num_complex::Complex64 as C;

use common::*;

fn order(a1: f64, a2: f64) -> FractionalOrderPair {
    FractionalOrderPair::new(a1, a2).unwrap()
}

/// Signed angular frequency of DFT bin `k` out of `n`.
fn freq(k: usize, n: usize) -> f64 {
    let s = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * s / n as f64
}

#[test]
fn chirp_matches_per_sample_scalar_evaluation() {
    let c = chirp(4, 4, order(1.0, 0.7), ChirpSign::Positive).unwrap();
    for y in 0..4 {
        let u2 = (y as f64 - 2.0) / 2.0;
        let scalar = C::from_polar(1.0, 0.5 * u2 * u2 * (0.35 * PI).cos() / (0.35 * PI).sin());
        for x in 0..4 {
            assert!((c.get(x, y) - scalar).norm() < 1e-15, "({x}, {y})");
            assert!((c.get(x, y) - oracle_chirp(x, y, 4, 4, 1.0, 0.7, 1.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn modulus_preserves_the_l2_norm() {
    let mut r = rng(21);
    let data: Vec<C> = (0..256).map(|_| C::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0))).collect();
    let direct = data.iter().map(|z| z.re * z.re + z.im * z.im).sum::<f64>().sqrt();
    let m = modulus(&ComplexImage::new(16, 16, data).unwrap());
    assert!((m.norm() - direct).abs() <= 1e-12 * direct);
}

/// Energy-weighted mean frequency of a filter.
fn centroid(h: &ComplexImage) -> (f64, f64) {
    let (w, ht) = h.dims();
    let (mut ex, mut ey, mut e) = (0.0, 0.0, 0.0);
    for y in 0..ht {
        for x in 0..w {
            let p = h.get(x, y).norm_sqr();
            ex += p * freq(x, w);
            ey += p * freq(y, ht);
            e += p;
        }
    }
    (ex / e, ey / e)
}

#[test]
fn atoms_are_rotations_of_the_first_angle() {
    let bank = build_morlet_bank(&FilterBankSpec::default()).unwrap();
    let kk = bank.num_angles();
    // The finest scale sits near the band edge, where periodic wrap-around
    // distorts centroids; compare the scales that fit inside the band.
    for j in 1..bank.num_scales() {
        let (cx, cy) = centroid(bank.psi_hat(j, 0));
        let radius = cx.hypot(cy);
        for k in 1..kk {
            let t = k as f64 * PI / kk as f64;
            let want = (cx * t.cos() - cy * t.sin(), cx * t.sin() + cy * t.cos());
            let got = centroid(bank.psi_hat(j, k));
            let err = (got.0 - want.0).hypot(got.1 - want.1);
            assert!(err <= 0.03 * radius, "j={j} k={k}: centroid {got:?} vs rotated {want:?}");
        }
    }
}

#[test]
fn lowpass_only_bank_minimum_is_the_disc_minimum() {
    let n = 32;
    let sigma = 0.9;
    let phi = ComplexImage::from_fn(n, n, |x, y| {
        let (wx, wy) = (freq(x, n), freq(y, n));
        C::new((-(wx * wx + wy * wy) / (2.0 * sigma * sigma)).exp(), 0.0)
    });
    let mut min = f64::INFINITY;
    for y in 0..n {
        for x in 0..n {
            if freq(x, n).hypot(freq(y, n)) <= 0.875 * PI {
                min = min.min(phi.get(x, y).norm_sqr());
            }
        }
    }
    let bank = FilterBank::from_filters(phi, vec![], 0).unwrap();
    let lp = littlewood_paley(&bank);
    assert!((lp.min_sum - min).abs() <= 1e-15, "{} vs {min}", lp.min_sum);
    assert!((lp.max_sum - 1.0).abs() <= 1e-15);
}

/// One-sided Littlewood-Paley sum recomputed from the filters.
fn one_sided_lp(bank: &FilterBank) -> Vec<f64> {
    let (w, h) = bank.dims();
    (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let mut s = bank.phi_hat().get(x, y).norm_sqr();
            for j in 0..bank.num_scales() {
                for k in 0..bank.num_angles() {
                    s += bank.psi_hat(j, k).get(x, y).norm_sqr();
                }
            }
            s
        })
        .collect()
}

#[test]
fn frwt_energy_lies_within_the_frame_bounds() {
    let bank = build_morlet_bank(&FilterBankSpec::default()).unwrap();
    let lp = littlewood_paley(&bank);
    let one_sided = one_sided_lp(&bank);
    let lo = one_sided.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = one_sided.iter().copied().fold(0.0f64, f64::max);
    for (seed, o) in [(1, order(1.0, 1.0)), (2, order(1.0, 0.7)), (3, order(0.4, 1.3))] {
        let x = random_texture(64, seed);
        let e_in = x.norm_sq();
        let out = frwt(&x.to_complex(), &bank, o).unwrap();
        let e_out = out.lowpass.norm_sq() + out.bandpass.iter().flatten().map(|b| b.norm_sq()).sum::<f64>();
        assert!(e_out <= e_in * (1.0 + 1e-9), "{o}: {e_out} > {e_in}");
        assert!(e_out <= hi * e_in * (1.0 + 1e-12));
        assert!(e_out >= lo * e_in * (1.0 - 1e-12), "{o}: {e_out} below {lo} * {e_in}");
        if o.is_classical() {
            // Smooth real textures keep their energy inside the disc where
            // the symmetrized bound is measured.
            assert!(e_out >= (1.0 - lp.epsilon) * e_in, "{e_out} vs {}", (1.0 - lp.epsilon) * e_in);
        }
    }
}

#[test]
fn two_scales_two_angles_give_nineteen_paths() {
    let (s, k) = (3, 2);
    let steps: Vec<(usize, usize)> = (0..s).flat_map(|j| (0..k).map(move |a| (j, a))).collect();
    let mut expected: Vec<Vec<(usize, usize)>> = vec![vec![]];
    for &a in &steps {
        expected.push(vec![a]);
        for &b in &steps {
            if b.0 > a.0 {
                expected.push(vec![a, b]);
            }
        }
    }
    assert_eq!(expected.len(), 19);
    let mut got: Vec<Vec<(usize, usize)>> = enumerate_paths(s, k, 2)
        .iter()
        .map(|p| p.steps().iter().map(|st| (st.scale, st.angle)).collect())
        .collect();
    got.sort();
    expected.sort();
    assert_eq!(got, expected);
}

#[test]
fn first_order_propagation_matches_the_spatial_sum() {
    let n = 32;
    let bank = build_morlet_bank(&FilterBankSpec { num_scales: 3, num_angles: 4, ..Default::default() }.with_grid(n, n))
        .unwrap();
    let x = random_real(n, n, 5);
    let dft = NaiveDft::new(n, n);
    for (j, k) in [(0, 1), (2, 3)] {
        let kernel = dft.inverse(bank.psi_hat(j, k).data());
        let xs: Vec<C> = x.data().iter().map(|&v| C::new(v, 0.0)).collect();
        let want: Vec<f64> = spatial_frac_convolve(&xs, &kernel, n, n, 1.0, 0.7).iter().map(|z| z.norm()).collect();
        let got = propagate(&x, &Path::from_pairs(&[(j, k)]).unwrap(), &bank, order(1.0, 0.7)).unwrap();
        let err = rel_l2(got.data(), &want);
        assert!(err <= 1e-9, "({j}, {k}): {err:e}");
    }
}

#[test]
fn half_plane_mask_gives_two_targets_and_two_backgrounds() {
    let n = 64;
    let image = MultiImage::gray(random_real(n, n, 6));
    let mask = InstanceMask::from_fn(n, n, |x, _| u32::from(x < n / 2));
    let cfg = PatchConfig { window: 32, stride: 32, overlap_threshold: 0.95 };
    let patches = extract_patches(&image, &mask, 0, &cfg).unwrap();
    assert_eq!(patches.len(), 4);
    for p in &patches {
        let (cx, cy) = (p.source.x, p.source.y);
        let mut fg = 0;
        for y in cy - 16..cy + 16 {
            for x in cx - 16..cx + 16 {
                fg += usize::from(mask.get(x, y) != 0);
            }
        }
        let overlap = fg as f64 / 1024.0;
        assert_eq!(p.overlap, overlap);
        assert_eq!(p.label, i32::from(overlap > 0.95));
        assert_eq!(p.channels[0].get(0, 0), image.channels()[0].get(cx - 16, cy - 16));
    }
    assert_eq!(patches.iter().filter(|p| p.label == 1).count(), 2);
}

#[test]
fn normalization_ignores_positive_affine_maps() {
    let base = random_real(12, 9, 7);
    let patch = |img: RealImage| LabeledPatch {
        channels: vec![img],
        label: 0,
        source: PatchSource { image_id: 0, x: 0, y: 0 },
        overlap: 0.0,
    };
    let reference = normalize_patch(&patch(base.clone()));
    for (a, b) in [(3.5, -2.0), (0.01, 100.0), (250.0, 0.3)] {
        let moved = RealImage::from_fn(12, 9, |x, y| a * base.get(x, y) + b);
        let out = normalize_patch(&patch(moved));
        let worst = out.channels[0]
            .data()
            .iter()
            .zip(reference.channels[0].data())
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(worst <= 1e-10, "a={a} b={b}: {worst:e}");
    }
}

fn class_data(l: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    // Anisotropic cloud so the leading eigenvalues are well separated.
    (0..n).map(|_| (0..l).map(|i| r.random_range(-1.0..1.0) * (1.0 + 3.0 / (1.0 + i as f64))).collect()).collect()
}

/// Sample covariance (`1/(n-1)`) of `data`, row-major `l x l`.
fn covariance(data: &[Vec<f64>]) -> Vec<f64> {
    let (n, l) = (data.len(), data[0].len());
    let mean: Vec<f64> = (0..l).map(|i| data.iter().map(|s| s[i]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![0.0; l * l];
    for s in data {
        for i in 0..l {
            for j in 0..l {
                cov[i * l + j] += (s[i] - mean[i]) * (s[j] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    cov
}

fn check_against_jacobi(l: usize, n: usize, seed: u64) {
    let data = class_data(l, n, seed);
    let refs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
    let dc = decompose_class(4, &refs).unwrap();
    let (vals, vecs) = jacobi_eigen(&covariance(&data), l);
    for d in 0..3 {
        assert!((dc.variances[d] - vals[d]).abs() <= 1e-8 * vals[0], "eigenvalue {d}: {} vs {}", dc.variances[d], vals[d]);
        let mut v = vecs[d].clone();
        let lead = (0..l).fold(0, |b, i| if v[i].abs() > v[b].abs() { i } else { b });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        for i in 0..l {
            assert!((dc.directions[(i, d)] - v[i]).abs() <= 1e-8, "vector {d} entry {i}");
        }
    }
}

#[test]
fn principal_axes_match_a_jacobi_eigensolver() {
    // More samples than features (covariance route), then the reverse (Gram route).
    check_against_jacobi(10, 50, 8);
    check_against_jacobi(50, 10, 9);
}

#[test]
fn approximation_error_matches_a_least_squares_projection() {
    let (l, n, d) = (12, 30, 4);
    let data = class_data(l, n, 10);
    let refs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
    let model = train_pca(0, &refs, d).unwrap();
    let basis: Vec<Vec<f64>> = (0..d).map(|c| (0..l).map(|i| model.basis[(i, c)]).collect()).collect();
    let mut r = rng(11);
    for _ in 0..10 {
        let x: Vec<f64> = (0..l).map(|_| r.random_range(-3.0..3.0)).collect();
        let res: Vec<f64> = (0..l).map(|i| x[i] - model.mean[i]).collect();
        // Normal equations (BᵀB) c = Bᵀ r, without assuming orthonormality.
        let gram: Vec<f64> =
            (0..d * d).map(|ij| (0..l).map(|i| basis[ij / d][i] * basis[ij % d][i]).sum()).collect();
        let rhs: Vec<f64> = (0..d).map(|a| (0..l).map(|i| basis[a][i] * res[i]).sum()).collect();
        let c = solve(&gram, &rhs, d);
        let err = (0..l)
            .map(|i| {
                let proj: f64 = (0..d).map(|a| c[a] * basis[a][i]).sum();
                (res[i] - proj).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        let got = model.approximation_error(&x).unwrap();
        assert!((got - err).abs() <= 1e-10 * err.max(1.0), "{got} vs {err}");
    }
}

fn blob(r: &mut rand_chacha::ChaCha8Rng, size: usize, extent: usize) -> Vec<(usize, usize)> {
    let mut pts = Vec::new();
    while pts.len() < size {
        let p = (r.random_range(0..extent), r.random_range(0..extent));
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}

#[test]
fn hausdorff_of_random_blobs_matches_the_double_loop() {
    let mut r = rng(12);
    for _ in 0..20 {
        let a = blob(&mut r, 20, 30);
        let b = blob(&mut r, 20, 30);
        let got = hausdorff(&a, &b).unwrap();
        assert!((got - brute_hausdorff(&a, &b)).abs() <= 1e-12);
    }
}

#[test]
fn unequal_two_object_masks_match_hand_weighting() {
    // gt: a 6x6 and a 2x2 object; seg: shifted copies of each.
    let gt = InstanceMask::from_fn(20, 16, |x, y| {
        if (2..8).contains(&x) && (2..8).contains(&y) {
            1
        } else if (12..14).contains(&x) && (10..12).contains(&y) {
            2
        } else {
            0
        }
    });
    let seg = InstanceMask::from_fn(20, 16, |x, y| {
        if (3..9).contains(&x) && (2..8).contains(&y) {
            5
        } else if (13..15).contains(&x) && (11..13).contains(&y) {
            9
        } else {
            0
        }
    });
    // Large pair: 30 shared of 36 each; small pair: 1 shared of 4 each.
    let dice_large = 2.0 * 30.0 / 72.0;
    let dice_small = 2.0 * 1.0 / 8.0;
    let hand = (36.0 * dice_large + 4.0 * dice_small) / 40.0;
    let d = object_dice(&seg, &gt).unwrap();
    assert!((d - hand).abs() <= 1e-12, "{d} vs {hand}");
    assert!((d - brute_object_dice(&seg, &gt)).abs() <= 1e-10);
    // Shifts of one pixel (large) and one diagonal pixel (small).
    let hand_h = (36.0 * 1.0 + 4.0 * 2f64.sqrt()) / 40.0;
    let h = object_hausdorff(&seg, &gt).unwrap();
    assert!((h - hand_h).abs() <= 1e-12, "{h} vs {hand_h}");
    assert!((h - brute_object_hausdorff(&seg, &gt)).abs() <= 1e-10);
}

#[test]
fn tensor_file_round_trip_is_bit_exact() {
    let mut r = rng(13);
    let (l, n) = (7, 5);
    let grid = vec![order(1.0, 1.0), order(0.05, 1.95)];
    let values: Vec<f64> = (0..l * n * grid.len()).map(|_| r.random_range(-1e6..1e6)).collect();
    let t = FeatureTensor::new(l, n, grid, vec![0, 1, 1, 0, 1], values).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.frsc");
    save_tensor(&t, &path).unwrap();
    let back = load_tensor(&path).unwrap();
    assert_eq!(back.dims(), t.dims());
    assert_eq!(back.labels(), t.labels());
    assert_eq!(back.order_grid(), t.order_grid());
    assert!(back.values().iter().zip(t.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
}
