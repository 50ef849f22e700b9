mod common;

use common::*;
use curvitopo::geometry::{edt2d, medial_axis2d, mpr, Image, MprConfig};
use curvitopo::metrics::{ari, cldice_score, dice, dilate_ball, gats_score, rho_dice};
use curvitopo::morphology::{soft_skeletonize, topo_smooth};
use curvitopo::phantom::{generate, PhantomKind, PhantomSpec};
use curvitopo::volume::rotate90;
use curvitopo::{Axis, BinaryVolume, Shape, Volume};
use proptest::prelude::*;
use rand::Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn edt_matches_brute_force() {
    let mut r = rng(11);
    for _ in 0..50 {
        let (w, h) = (16, 16);
        let density = r.random_range(0.3..0.95);
        let mut mask: Vec<bool> = (0..w * h).map(|_| r.random::<f64>() < density).collect();
        mask[r.random_range(0..w * h)] = false;
        let img = Image::new(w, h, mask.clone());
        let got = edt2d(&img).unwrap();
        assert_eq!(got.data(), brute_edt(&mask, w, h).as_slice());
    }
}

#[test]
fn edt_single_background_corner() {
    let mask: Vec<bool> = (0..36).map(|i| i != 0).collect();
    let got = edt2d(&Image::new(6, 6, mask)).unwrap();
    for r in 0..6 {
        for c in 0..6 {
            assert_eq!(got.get(r, c), (r * r + c * c) as u64);
        }
    }
}

#[test]
fn ari_matches_pair_counting() {
    let mut r = rng(5);
    for _ in 0..100 {
        let s = Shape::new(
            r.random_range(1..=4),
            r.random_range(1..=4),
            r.random_range(1..=4),
        )
        .unwrap();
        let a = random_mask(s, r.random_range(0.0..1.0), r.random());
        let b = random_mask(s, r.random_range(0.0..1.0), r.random());
        let got = ari(&a, &b).unwrap();
        let want = pair_counting_ari(a.bits(), b.bits());
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

#[test]
fn ari_complement_is_label_swap() {
    let s = Shape::cube(4);
    let g = random_mask(s, 0.3, 9);
    let got = ari(&g.complement(), &g).unwrap();
    assert!((got - pair_counting_ari(g.complement().bits(), g.bits())).abs() < 1e-12);
}

#[test]
fn morphology_matches_scalar_reference() {
    for seed in 0..4 {
        let s = Shape::new(5, 6, 7).unwrap();
        let mut r = rng(seed);
        let v = Volume::from_fn(s, |_, _, _| r.random::<f64>()).unwrap();
        for k in 0..4 {
            let want = naive_iterate(v.data(), s, k, false);
            assert_eq!(soft_skeletonize(&v, k).data(), want.as_slice());
            let want = naive_iterate(v.data(), s, k, true);
            let got = topo_smooth(&v, k);
            for (a, b) in got.data().iter().zip(&want) {
                assert!(close(*a, *b, 1e-12), "{a} vs {b}");
            }
        }
    }
}

fn z_tube(shape: [usize; 3], radius: f64, length: Option<f64>, center: Option<[f64; 3]>) -> Volume {
    let spec = PhantomSpec::new(
        shape,
        PhantomKind::StraightTube {
            radius,
            axis: Axis::Z,
            length,
            center,
        },
    );
    generate(&spec, 0).unwrap().0
}

#[test]
fn cldice_half_tube_matches_scalar_oracle() {
    let gt = z_tube([16, 16, 36], 3.0, Some(24.0), None);
    let pred = z_tube([16, 16, 36], 3.0, Some(12.0), Some([8.0, 8.0, 12.0]));
    let s = gt.shape();
    let got = cldice_score(&pred, &gt, 3).unwrap().value;
    let want = naive_score(pred.data(), gt.data(), s, 3, false);
    assert!(close(got, want, 1e-12), "{got} vs {want}");
    assert!(got > 0.3 && got < 1.0);
}

#[test]
fn gats_score_matches_scalar_oracle() {
    let a = z_tube([16, 16, 28], 3.0, Some(16.0), None);
    let b = z_tube([16, 16, 28], 2.0, Some(16.0), Some([9.0, 8.0, 14.0]));
    let got = gats_score(&a, &b, 3).unwrap().value;
    let want = naive_score(a.data(), b.data(), a.shape(), 3, true);
    assert!(close(got, want, 1e-12), "{got} vs {want}");
    let apart = z_tube([16, 16, 28], 2.0, Some(16.0), Some([4.0, 4.0, 14.0]));
    let other = z_tube([16, 16, 28], 2.0, Some(16.0), Some([11.0, 11.0, 14.0]));
    assert_eq!(gats_score(&apart, &other, 1).unwrap().value, 0.0);
}

#[test]
fn dice_matches_scalar_oracle() {
    let s = Shape::cube(6);
    let (p, g) = (spaced(s, 1), spaced(s, 2));
    assert!(close(
        dice(&p, &g).unwrap(),
        naive_dice(p.data(), g.data()),
        1e-13
    ));
}

#[test]
fn dice_monotone_under_recovering_false_negatives() {
    // every pair of masks on a 2×2×1 grid
    let s = Shape::new(2, 2, 1).unwrap();
    let mask = |m: u32| BinaryVolume::from_fn(s, |x, y, _| m >> (x + 2 * y) & 1 == 1).to_volume();
    for gm in 0..16u32 {
        for pm in 0..16u32 {
            let (p, g) = (mask(pm), mask(gm));
            let base = dice(&p, &g).unwrap();
            for bit in 0..4 {
                if gm >> bit & 1 == 1 && pm >> bit & 1 == 0 {
                    let better = dice(&mask(pm | 1 << bit), &g).unwrap();
                    assert!(better >= base, "{pm:04b} vs {gm:04b} flipping {bit}");
                }
            }
        }
    }
}

#[test]
fn rho_dice_matches_explicit_dilation() {
    for seed in 0..6 {
        let s = Shape::new(9, 8, 7).unwrap();
        let p = random_mask(s, 0.05, seed);
        let g = random_mask(s, 0.05, seed + 100);
        for rho in [0.0, 1.0, 1.5, 2.0] {
            let dg = brute_dilate(&g, rho);
            let dp = brute_dilate(&p, rho);
            assert_eq!(dilate_ball(&g, rho).unwrap().bits(), dg.as_slice());
            let hits = |a: &BinaryVolume, d: &[bool]| {
                a.bits().iter().zip(d).filter(|(x, y)| **x && **y).count()
            };
            let want = (hits(&p, &dg) + hits(&g, &dp)) as f64 / (p.count() + g.count()) as f64;
            assert_eq!(rho_dice(&p, &g, rho).unwrap().value, want);
        }
    }
}

#[test]
fn rho_dice_shift_by_three_is_near_zero() {
    let s = Shape::new(48, 12, 9).unwrap();
    let line =
        |y| BinaryVolume::from_fn(s, move |x, yy, z| yy == y && z == 4 && (2..46).contains(&x));
    assert_eq!(rho_dice(&line(7), &line(4), 1.0).unwrap().value, 0.0);
    assert_eq!(rho_dice(&line(5), &line(4), 1.0).unwrap().value, 1.0);
}

fn components8(img: &Image<bool>) -> usize {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if !img.data()[start] || seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                        let j = rr as usize * w + cc as usize;
                        if img.data()[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
    }
    count
}

#[test]
fn medial_axis_is_subset_and_keeps_components() {
    let mut r = rng(3);
    for _ in 0..40 {
        let (w, h) = (14, 12);
        let mut img = Image::filled(w, h, false);
        for _ in 0..r.random_range(1..4) {
            let (r0, c0) = (r.random_range(1..h - 3), r.random_range(1..w - 3));
            let (rh, cw) = (r.random_range(1..h - r0), r.random_range(1..w - c0));
            for rr in r0..(r0 + rh).min(h - 1) {
                for cc in c0..(c0 + cw).min(w - 1) {
                    img.set(rr, cc, true);
                }
            }
        }
        let (skel, radius) = medial_axis2d(&img).unwrap();
        for i in 0..w * h {
            assert!(!skel.data()[i] || img.data()[i]);
            assert!(skel.data()[i] || radius.data()[i] == 0.0);
        }
        assert_eq!(components8(&skel), components8(&img));
    }
}

#[test]
fn mpr_is_deterministic_and_rotation_invariant_on_all_planes() {
    let v = z_tube([12, 12, 18], 3.0, Some(6.0), None);
    let planes = 12 + 12 + 18;
    let cfg = MprConfig {
        n: planes,
        seed: 4,
        ..Default::default()
    };
    let base = mpr(&v, &cfg).unwrap();
    assert_eq!(mpr(&v, &cfg).unwrap(), base);
    for axis in Axis::ALL {
        for q in 1..4 {
            let rot = rotate90(&v, axis, q);
            assert_eq!(mpr(&rot, &cfg).unwrap().k, base.k, "{axis:?} {q}");
        }
    }
    let small = MprConfig {
        n: 5,
        seed: 9,
        ..Default::default()
    };
    assert_eq!(mpr(&v, &small).unwrap(), mpr(&v, &small).unwrap());
}

#[test]
fn mpr_two_tubes_bounded() {
    let spec = PhantomSpec::new([32, 32, 32], PhantomKind::TwoTubes { radius: [2.0, 4.0] });
    let (v, _) = generate(&spec, 0).unwrap();
    for seed in 0..10 {
        let r = mpr(
            &v,
            &MprConfig {
                n: 16,
                seed,
                axes: vec![Axis::Z],
                ..Default::default()
            },
        )
        .unwrap();
        assert!((8..=16).contains(&r.k), "{}", r.k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn edt_random_shapes(w in 1usize..10, h in 1usize..10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut mask: Vec<bool> = (0..w * h).map(|_| r.random::<f64>() < 0.7).collect();
        mask[0] = false;
        let got = edt2d(&Image::new(w, h, mask.clone())).unwrap();
        let want = brute_edt(&mask, w, h);
        prop_assert_eq!(got.data(), want.as_slice());
    }
}
