use cdr_solver::coefficients::{Reaction, SAMPLING_BOX};
use cdr_solver::dataset::coarse_grain;
use cdr_solver::dataset::format::{
    DType, Dataset, DatasetKind, Manifest, SamplePair, SolveSummary, FORMAT_VERSION, LAYOUT,
};
use cdr_solver::integrator::{integrate, PlainOde};
use cdr_solver::rng::{self, Stream};
use cdr_solver::stencil::neumann_residual;
use cdr_solver::{
    apply_boundary_closure, fd_apply, integrate_to, propose_dt, rhs_interior, CoefficientFields,
    Conditioning, FdOperator, GridSpec, InitialCondition, RhsWorkspace, ScalarField, StepperConfig,
};
use proptest::prelude::*;

fn arb_field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n * n)
}

fn arb_conditioning() -> impl Strategy<Value = Conditioning> {
    (
        SAMPLING_BOX[0].0..=SAMPLING_BOX[0].1,
        SAMPLING_BOX[1].0..=SAMPLING_BOX[1].1,
        SAMPLING_BOX[2].0..=SAMPLING_BOX[2].1,
        SAMPLING_BOX[3].0..=SAMPLING_BOX[3].1,
    )
        .prop_map(|(a, b, c, d)| Conditioning::new(a, b, c, d))
}

fn linear_workspace(grid: GridSpec, c: Conditioning) -> RhsWorkspace {
    let mut coeff = CoefficientFields::evaluate(grid, c).unwrap();
    coeff.reaction = Reaction::None;
    RhsWorkspace::new(&coeff)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operators_exact_on_quadratics(
        k in prop::array::uniform6(-2.0f64..2.0),
        n in 5usize..24,
        length in 1.0f64..30.0,
    ) {
        let grid = GridSpec::new(n, length).unwrap();
        let q = ScalarField::from_fn(grid, |x, y| {
            k[0] + k[1] * x + k[2] * y + k[3] * x * x + k[4] * x * y + k[5] * y * y
        });
        let scale = 1.0 + length * length;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let (x, y) = (grid.coord(i), grid.coord(j));
                let tol = 1e-12 * scale / grid.h().min(1.0).powi(2);
                let dx = fd_apply(&q, FdOperator::Dx, i, j).unwrap();
                prop_assert!((dx - (k[1] + 2.0 * k[3] * x + k[4] * y)).abs() <= tol);
                let dy = fd_apply(&q, FdOperator::Dy, i, j).unwrap();
                prop_assert!((dy - (k[2] + k[4] * x + 2.0 * k[5] * y)).abs() <= tol);
                prop_assert!((fd_apply(&q, FdOperator::Dxx, i, j).unwrap() - 2.0 * k[3]).abs() <= tol);
                prop_assert!((fd_apply(&q, FdOperator::Dyy, i, j).unwrap() - 2.0 * k[5]).abs() <= tol);
                prop_assert!((fd_apply(&q, FdOperator::Dxy, i, j).unwrap() - k[4]).abs() <= tol);
            }
        }
    }

    #[test]
    fn closure_is_idempotent(values in arb_field(9)) {
        let grid = GridSpec::new(9, 20.0).unwrap();
        let mut once = ScalarField::from_values(grid, values).unwrap();
        apply_boundary_closure(&mut once);
        let mut twice = once.clone();
        apply_boundary_closure(&mut twice);
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn closure_leaves_interior_untouched(values in arb_field(7)) {
        let grid = GridSpec::new(7, 20.0).unwrap();
        let original = ScalarField::from_values(grid, values).unwrap();
        let mut closed = original.clone();
        apply_boundary_closure(&mut closed);
        for i in 1..6 {
            for j in 1..6 {
                prop_assert_eq!(closed.get(i, j), original.get(i, j));
            }
        }
    }

    #[test]
    fn rhs_is_linear_without_reaction(
        u in arb_field(11),
        w in arb_field(11),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        c in arb_conditioning(),
    ) {
        let grid = GridSpec::new(11, 20.0).unwrap();
        let ws = linear_workspace(grid, c);
        let u = ScalarField::from_values(grid, u).unwrap();
        let w = ScalarField::from_values(grid, w).unwrap();
        let combo: Vec<f64> = u.values().iter().zip(w.values()).map(|(p, q)| a * p + b * q).collect();
        let combo = ScalarField::from_values(grid, combo).unwrap();
        let fu = rhs_interior(&u, &ws).unwrap();
        let fw = rhs_interior(&w, &ws).unwrap();
        let fc = rhs_interior(&combo, &ws).unwrap();
        for k in 0..grid.len() {
            let expected = a * fu.values()[k] + b * fw.values()[k];
            prop_assert!((fc.values()[k] - expected).abs() <= 1e-11 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn divergence_of_velocity_vanishes(c in arb_conditioning(), n in 5usize..40) {
        let grid = GridSpec::new(n, 20.0).unwrap();
        let ws = RhsWorkspace::new(&CoefficientFields::evaluate(grid, c).unwrap());
        prop_assert!(ws.sink().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn family_is_positive_definite_on_the_box(c in arb_conditioning()) {
        let grid = GridSpec::new(21, 20.0).unwrap();
        prop_assert!(CoefficientFields::evaluate(grid, c).is_ok());
    }

    #[test]
    fn coarse_grain_is_linear(
        u in arb_field(20),
        w in arb_field(20),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let grid = GridSpec::new(20, 20.0).unwrap();
        let combo: Vec<f64> = u.iter().zip(&w).map(|(p, q)| a * p + b * q).collect();
        let cu = coarse_grain(&ScalarField::from_values(grid, u).unwrap(), 4).unwrap();
        let cw = coarse_grain(&ScalarField::from_values(grid, w).unwrap(), 4).unwrap();
        let cc = coarse_grain(&ScalarField::from_values(grid, combo).unwrap(), 4).unwrap();
        for k in 0..25 {
            let expected = a * cu.values()[k] + b * cw.values()[k];
            prop_assert!((cc.values()[k] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn coarse_grain_preserves_mean(u in arb_field(16)) {
        let grid = GridSpec::new(16, 20.0).unwrap();
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        let coarse = coarse_grain(&ScalarField::from_values(grid, u).unwrap(), 2).unwrap();
        let coarse_mean = coarse.values().iter().sum::<f64>() / coarse.values().len() as f64;
        prop_assert!((mean - coarse_mean).abs() <= 1e-13);
    }

    #[test]
    fn controller_stays_within_clamps(dt in 1e-8f64..1.0, err in 0.0f64..1e3) {
        let cfg = StepperConfig::default();
        let next = propose_dt(dt, err, &cfg);
        prop_assert!(next >= 0.9 * 0.3 * dt * (1.0 - 1e-15));
        prop_assert!(next <= 0.9 * 2.0 * dt * (1.0 + 1e-15));
    }

    #[test]
    fn sampled_initial_conditions_are_admissible(seed in any::<u64>()) {
        let ic = InitialCondition::sample(&mut Stream::new(seed), 20.0);
        prop_assert!((5..=15).contains(&ic.hills.len()));
        for hill in &ic.hills {
            prop_assert!(hill.validate(20.0).is_ok());
        }
    }

    #[test]
    fn conditioning_samples_stay_in_box(seed in any::<u64>()) {
        let mut stream = Stream::new(seed);
        for _ in 0..32 {
            prop_assert!(Conditioning::sample(&mut stream).in_sampling_box());
        }
    }
}

fn template(dtype: DType, stored: usize) -> Manifest {
    Manifest {
        format_version: FORMAT_VERSION,
        kind: DatasetKind::Train,
        dtype,
        layout: LAYOUT.into(),
        fine_nodes: stored * 4,
        stored_nodes: stored,
        downsample: "block-mean-4x4".into(),
        length: 20.0,
        final_time: 1.5,
        tol: 1e-6,
        dt_init: 1e-4,
        prng: rng::ALGORITHM_ID.into(),
        master_seed: None,
        factorial: None,
        records: vec![],
        failures: vec![],
        payload_bytes: 0,
        payload_sha256: String::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dataset_round_trip(
        n in 5usize..10,
        count in 1usize..6,
        single in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let grid = GridSpec::new(n, 20.0).unwrap();
        let dtype = if single { DType::F32 } else { DType::F64 };
        let mut stream = Stream::new(seed);
        let field = |s: &mut Stream| {
            let values = (0..grid.len())
                .map(|_| {
                    let v = 10.0 * s.next_unit() - 2.0;
                    if single { v as f32 as f64 } else { v }
                })
                .collect();
            ScalarField::from_values(grid, values).unwrap()
        };
        let samples: Vec<SamplePair> = (0..count)
            .map(|k| SamplePair {
                x0: field(&mut stream),
                xm: field(&mut stream),
                c: Conditioning::sample(&mut stream),
                seed_ic: stream.next_u64(),
                seed_c: stream.next_u64(),
                k1: None,
                k2: None,
                stats: SolveSummary { steps_accepted: k, steps_rejected: 0, avg_dt: 1e-3 },
            })
            .collect();
        let ds = Dataset::assemble(template(dtype, n), samples);
        let bytes = ds.to_bytes();
        let back = Dataset::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &ds);
        let bytes_per_value = if single { 4 } else { 8 };
        prop_assert_eq!(back.manifest.payload_bytes as usize, count * 2 * n * n * bytes_per_value);
    }
}

/// Two-sided Kolmogorov-Smirnov statistic against U(0, 1).
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| (x - k as f64 / n).max((k + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

#[test]
fn conditioning_marginals_are_uniform() {
    let samples = 10_000;
    let mut stream = Stream::new(rng::derive_seed(99, rng::TAG_CONDITIONING, 0));
    let draws: Vec<[f64; 4]> = (0..samples)
        .map(|_| Conditioning::sample(&mut stream).to_array())
        .collect();
    // Asymptotic critical value at alpha = 0.01.
    let critical = 1.628 / (samples as f64).sqrt();
    for (k, (lo, hi)) in SAMPLING_BOX.iter().enumerate() {
        let unit: Vec<f64> = draws.iter().map(|c| (c[k] - lo) / (hi - lo)).collect();
        let d = ks_uniform(unit);
        assert!(
            d < critical,
            "marginal c{} has KS statistic {d} >= {critical}",
            k + 1
        );
    }
}

#[test]
fn hill_count_covers_its_range() {
    let mut counts = [0usize; 16];
    for seed in 0..2000 {
        counts[InitialCondition::sample(&mut Stream::new(seed), 20.0)
            .hills
            .len()] += 1;
    }
    for (n, &count) in counts.iter().enumerate().skip(5) {
        // Expected 2000/11 per value.
        assert!((120..250).contains(&count), "{n} hills drawn {count} times");
    }
}

#[test]
fn step_sequence_is_deterministic() {
    let grid = GridSpec::new(31, 20.0).unwrap();
    let ws =
        RhsWorkspace::new(&CoefficientFields::evaluate(grid, Conditioning::reference()).unwrap());
    let ic = InitialCondition::reference(20.0).render(grid);
    let cfg = StepperConfig {
        final_time: 0.5,
        ..StepperConfig::default()
    };
    let run = || {
        let mut u = ic.values().to_vec();
        let stats = integrate(&ws, &mut u, &cfg, true).unwrap();
        (u, stats)
    };
    let (u1, s1) = run();
    let (u2, s2) = run();
    assert_eq!(s1.log, s2.log);
    assert!(u1.iter().zip(&u2).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn seeded_problem_with_weak_drift_runs_to_completion() {
    let grid = GridSpec::new(41, 20.0).unwrap();
    let ic = InitialCondition::sample(&mut Stream::new(3), 20.0);
    let c = Conditioning::new(0.0, 0.0, 1.0, 1.0);
    let ws = RhsWorkspace::new(&CoefficientFields::evaluate(grid, c).unwrap());
    let (u, stats) = integrate_to(&ic.render(grid), &ws, &StepperConfig::default()).unwrap();
    assert_eq!(stats.final_time, 1.5);
    assert!(u.is_finite());
    assert!(stats.steps_accepted > 0);
}

#[test]
fn plain_ode_reaches_exact_final_time() {
    let ode = PlainOde::new(2, |u: &[f64], out: &mut [f64]| {
        out[0] = u[1];
        out[1] = -u[0];
    });
    let cfg = StepperConfig {
        final_time: 2.0,
        tol: 1e-9,
        ..StepperConfig::default()
    };
    let mut u = vec![1.0, 0.0];
    let stats = integrate(&ode, &mut u, &cfg, false).unwrap();
    assert_eq!(stats.final_time, 2.0);
    assert!((u[0] - 2f64.cos()).abs() < 1e-6);
    assert!((u[1] + 2f64.sin()).abs() < 1e-6);
}

#[test]
fn rendered_fields_are_finite_and_nonnegative() {
    let grid = GridSpec::new(64, 20.0).unwrap();
    for seed in 0..20 {
        let u = InitialCondition::sample(&mut Stream::new(seed), 20.0).render(grid);
        assert!(u.is_finite());
        assert!(u.min() >= 0.0);
        assert!(neumann_residual(&u).is_finite());
    }
}
