use beatdesign_core::calendar::YearMonth;
use beatdesign_core::geo::{atomize, AtomGrid, GridKind, Polygon, Projection};
use beatdesign_core::mip::lp::{parse_lp, LpBound, LpConstraint, LpProblem, ObjSense, Sense};
use beatdesign_core::optimize::{greedy_expand, kmeans_split, GreedyOptions};
use beatdesign_core::partition::{
    beat_loads, boundary_moves, is_contiguous, objective_z, variance_of_loads, BeatDesign,
};
use proptest::prelude::*;

fn grid(rows: usize, cols: usize, kind: GridKind) -> AtomGrid {
    atomize(
        &[Polygon::rect(0.0, 0.0, cols as f64, rows as f64)],
        1.0,
        kind,
        Projection::PlanarMiles,
    )
    .unwrap()
}

fn kind() -> impl Strategy<Value = GridKind> {
    prop_oneof![Just(GridKind::SquareRook), Just(GridKind::SquareQueen), Just(GridKind::Hex)]
}

fn var_name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}"
}

fn coef() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, (-50i32..50).prop_map(f64::from)]
}

fn lp_problem() -> impl Strategy<Value = LpProblem> {
    let constraint = (
        proptest::option::of("c[0-9]{1,4}"),
        prop::collection::vec((var_name(), coef()), 1..6),
        prop_oneof![Just(Sense::Le), Just(Sense::Ge), Just(Sense::Eq)],
        coef(),
    )
        .prop_map(|(name, terms, sense, rhs)| LpConstraint { name, terms, sense, rhs });
    (
        prop_oneof![Just(ObjSense::Minimize), Just(ObjSense::Maximize)],
        prop::collection::vec((var_name(), coef()), 0..8),
        prop::collection::vec((var_name(), var_name(), coef()), 0..6),
        prop::collection::vec(constraint, 0..8),
        prop::collection::vec((var_name(), coef(), coef()), 0..4),
        prop::collection::vec(var_name(), 0..4),
    )
        .prop_map(|(sense, objective, quadratic, constraints, bounds, binaries)| LpProblem {
            sense,
            objective_name: Some("obj".into()),
            objective,
            quadratic,
            objective_constant: 0.0,
            constraints,
            bounds: bounds
                .into_iter()
                .map(|(var, a, b)| LpBound { var, lo: Some(a.min(b)), hi: Some(a.max(b)) })
                .collect(),
            binaries,
            generals: Vec::new(),
        })
}

/// Random contiguous design: random rook-grid growth from K seeds.
fn grown_design(g: &AtomGrid, k: usize, seed: u64) -> BeatDesign {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = g.len();
    let mut a = vec![usize::MAX; n];
    let mut seeds: Vec<usize> = (0..n).collect();
    for b in 0..k {
        let j = rng.random_range(b..n);
        seeds.swap(b, j);
        a[seeds[b]] = b;
    }
    while a.contains(&usize::MAX) {
        let i = rng.random_range(0..n);
        if a[i] != usize::MAX {
            continue;
        }
        let owned: Vec<usize> = g.neighbors(i).iter().map(|&j| a[j]).filter(|&b| b != usize::MAX).collect();
        if !owned.is_empty() {
            a[i] = owned[rng.random_range(0..owned.len())];
        }
    }
    BeatDesign::new(a, k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_round_trip(p in lp_problem()) {
        let mut buf = Vec::new();
        p.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = parse_lp(&text).unwrap();
        prop_assert_eq!(back, p, "{}", text);
    }

    #[test]
    fn z_is_k_times_variance(w in prop::collection::vec(0.0..100.0f64, 12), k in 1usize..5, seed in any::<u64>()) {
        let g = grid(3, 4, GridKind::SquareRook);
        let d = grown_design(&g, k, seed);
        let loads = beat_loads(&d, &w).unwrap();
        let z = objective_z(&d, &w).unwrap();
        prop_assert!((z - k as f64 * variance_of_loads(&loads)).abs() <= 1e-9 * (1.0 + z));
        // Z = Σ L² − T²/K
        let t: f64 = w.iter().sum();
        let sq: f64 = loads.iter().map(|l| l * l).sum();
        prop_assert!((z - (sq - t * t / k as f64)).abs() <= 1e-7 * (1.0 + sq));
        prop_assert!((loads.iter().sum::<f64>() - t).abs() <= 1e-9 * (1.0 + t));
    }

    #[test]
    fn boundary_moves_keep_contiguity(rows in 1usize..6, cols in 1usize..6, k in 2usize..4, kd in kind(), seed in any::<u64>()) {
        let g = grid(rows, cols, kd);
        prop_assume!(g.len() >= k);
        let d = grown_design(&g, k, seed);
        prop_assert!(is_contiguous(&d, &g));
        for m in boundary_moves(&d, &g, 1) {
            let moved = d.with_move(m.atom, m.to);
            prop_assert!(is_contiguous(&moved, &g), "move {:?}", m);
            prop_assert_eq!(moved.k(), k);
        }
    }

    #[test]
    fn kmeans_split_halves_are_connected(rows in 1usize..8, cols in 1usize..8, kd in kind(), weighted in any::<bool>()) {
        let g = grid(rows, cols, kd);
        prop_assume!(g.len() >= 2);
        let members: Vec<usize> = (0..g.len()).collect();
        let w: Vec<f64> = (0..g.len()).map(|i| 1.0 + (i * 7 % 5) as f64).collect();
        let (a, b) = kmeans_split(&g, 0, &members, weighted.then_some(&w[..])).unwrap();
        prop_assert!(!a.is_empty() && !b.is_empty());
        prop_assert_eq!(a.len() + b.len(), g.len());
        prop_assert!(a.contains(&0));
        let mut design = vec![0; g.len()];
        for &i in &b {
            design[i] = 1;
        }
        prop_assert!(is_contiguous(&BeatDesign::new(design, 2).unwrap(), &g));
    }

    #[test]
    fn greedy_preserves_total(rows in 2usize..7, cols in 2usize..7, w in prop::collection::vec(0.0..20.0f64, 36), extra in 1usize..6) {
        let g = grid(rows, cols, GridKind::SquareRook);
        let w = &w[..g.len()];
        let target = (1 + extra).min(g.len());
        let res = greedy_expand(&BeatDesign::single(g.len()), &g, w, target, &GreedyOptions::default()).unwrap();
        let t: f64 = w.iter().sum();
        for d in &res.designs {
            let s: f64 = beat_loads(d, w).unwrap().iter().sum();
            prop_assert!((s - t).abs() <= 1e-9 * (1.0 + t));
        }
    }

    #[test]
    fn year_month_offsets_compose(y in 1900i32..2100, m in 1u32..=12, a in -500i64..500, b in -500i64..500) {
        let ym = YearMonth::new(y, m).unwrap();
        prop_assert_eq!(ym.offset(a).offset(b), ym.offset(a + b));
        prop_assert_eq!(YearMonth::from_index(ym.index()), ym);
        prop_assert!((28..=31).contains(&ym.days()));
    }

    #[test]
    fn design_csv_round_trip(k in 1usize..5, seed in any::<u64>()) {
        let g = grid(4, 5, GridKind::SquareRook);
        let d = grown_design(&g, k, seed);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        prop_assert_eq!(BeatDesign::read_csv(&buf[..]).unwrap(), d);
    }
}
