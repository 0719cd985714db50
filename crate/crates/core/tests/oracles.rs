//! Brute-force oracles for neighbor selection and prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selsample::evaluation::PredictionRaster;
use selsample::predictor::{min_mode_frequency, mode_frequency};
use selsample::{
    k_nearest_tie_family, predict_mnn, predict_nn, raster_predict, select_ambiguous_set, Label,
    Point, RngState, Rule, SampleSet,
};

fn key(a: &Point, b: &Point) -> f64 {
    let dx = a.x() - b.x();
    let dy = a.y() - b.y();
    dx * dx + dy * dy
}

/// Samples on a coarse grid so that distance ties are common.
fn grid_instance(rng: &mut ChaCha8Rng, max_len: usize, labels: u16) -> (SampleSet, Point) {
    let len = rng.gen_range(1..=max_len);
    let mut z = SampleSet::new();
    for _ in 0..len {
        let p = Point::new_2d(
            rng.gen_range(0..5) as f64 / 4.0,
            rng.gen_range(0..5) as f64 / 4.0,
        );
        z.push(p, Label(rng.gen_range(0..labels))).unwrap();
    }
    let x = loop {
        let x = Point::new_2d(
            rng.gen_range(0..9) as f64 / 8.0,
            rng.gen_range(0..9) as f64 / 8.0,
        );
        if z.find_exact(&x).is_none() {
            break x;
        }
    };
    (z, x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn profile(x: &Point, z: &SampleSet, set: &[usize]) -> Vec<f64> {
    let mut d: Vec<f64> = set
        .iter()
        .map(|&i| key(x, &z.get(i).unwrap().point))
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn ambiguous_set_matches_enumeration() {
    // duplicates of a point can carry different labels here, which the
    // oracle must handle like any other tie
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..300 {
        let (z, x) = grid_instance(&mut rng, 12, 3);
        let k = rng.gen_range(1..=4.min(z.len()));
        let mut best: Option<(Vec<f64>, usize)> = None;
        for combo in combinations(z.len(), k) {
            let set: Vec<usize> = combo.iter().map(|i| i + 1).collect();
            let cand = (
                profile(&x, &z, &set),
                mode_frequency(set.iter().map(|&i| z.label(i))),
            );
            best = match best {
                None => Some(cand),
                Some(b) => {
                    let ord = cand.0.partial_cmp(&b.0).unwrap().then(cand.1.cmp(&b.1));
                    Some(if ord.is_lt() { cand } else { b })
                }
            };
        }
        let best = best.unwrap();
        let family = k_nearest_tie_family(&x, &z, k).unwrap();
        assert_eq!(min_mode_frequency(&family, &z), best.1, "trial {trial}");
        let mut r = RngState::from_seed(trial);
        let set = select_ambiguous_set(&family, &z, &mut r);
        assert_eq!(set.len(), k);
        assert_eq!(profile(&x, &z, &set), best.0, "trial {trial}");
        assert_eq!(
            mode_frequency(set.iter().map(|&i| z.label(i))),
            best.1,
            "trial {trial}"
        );
    }
}

#[test]
fn greedy_fill_reaches_water_level() {
    // 60 samples on a circle around x: one tie group of 60, far beyond the
    // enumeration cap
    let x = Point::new_2d(0.5, 0.5);
    let mut z = SampleSet::new();
    let offsets = [(0.25, 0.0), (-0.25, 0.0), (0.0, 0.25), (0.0, -0.25)];
    for i in 0..60 {
        let (dx, dy) = offsets[i % 4];
        z.push(
            Point::new_2d(0.5 + dx, 0.5 + dy),
            Label((i % 5 == 0) as u16),
        )
        .unwrap();
    }
    for k in [4, 10, 25] {
        let family = k_nearest_tie_family(&x, &z, k).unwrap();
        assert!(family.member_count() > 1000);
        let mut r = RngState::from_seed(k as u64);
        let set = select_ambiguous_set(&family, &z, &mut r);
        // 12 samples carry label 1, 48 label 0
        let ones = set.iter().filter(|&&i| z.label(i) == Label(1)).count();
        let expected_mode = (k - ones.min(12)).max(k.div_ceil(2));
        assert_eq!(
            mode_frequency(set.iter().map(|&i| z.label(i))),
            expected_mode
        );
        assert_eq!(min_mode_frequency(&family, &z), expected_mode);
    }
}

#[test]
fn one_nn_rule_equals_nn_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..200u64 {
        let (z, x) = grid_instance(&mut rng, 10, 3);
        for stream in 0..4 {
            let a = predict_nn(&x, &z, &mut RngState::substream(trial, stream)).unwrap();
            let b = predict_mnn(&x, &z, 1, &mut RngState::substream(trial, stream)).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn raster_pixels_equal_pointwise_prediction() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (z, _) = grid_instance(&mut rng, 12, 2);
    let (w, h) = (40, 24);
    let raster = raster_predict(&z, w, h, Rule::Nn, 77).unwrap();
    for _ in 0..1000 {
        let (col, row) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let c = PredictionRaster::pixel_center(w, h, col, row);
        let mut r = RngState::substream(77, (row * w + col) as u64);
        assert_eq!(raster.get(col, row), predict_nn(&c, &z, &mut r).unwrap());
    }
}

#[test]
fn knn_set_is_stable_inside_the_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 300 {
        let len = rng.gen_range(3..20);
        let mut z = SampleSet::new();
        for _ in 0..len {
            z.push(Point::new_2d(rng.gen(), rng.gen()), Label(0))
                .unwrap();
        }
        let x = Point::new_2d(rng.gen(), rng.gen());
        let k = rng.gen_range(1..len);
        let mut d: Vec<f64> = z
            .samples()
            .iter()
            .map(|s| key(&x, &s.point).sqrt())
            .collect();
        d.sort_by(f64::total_cmp);
        let eps = (d[k] - d[k - 1]) / 2.0;
        if eps <= 1e-9 {
            continue;
        }
        let base = k_nearest_tie_family(&x, &z, k).unwrap();
        assert!(base.tie_group.is_empty());
        for _ in 0..16 {
            let r = eps * 0.999 * rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            let xp = Point::new_2d(x.x() + r * t.cos(), x.y() + r * t.sin());
            let moved = k_nearest_tie_family(&xp, &z, k).unwrap();
            assert_eq!(moved.prefix, base.prefix);
        }
        checked += 1;
    }
}
