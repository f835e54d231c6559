use num_complex::Complex64;
use purefilter::filter::{
    make_bcm_journe, make_constant, make_haar, make_journe_family, make_random, make_shannon,
    FilterMatrix, JourneParams, PhaseConvention, StepFn,
};
use purefilter::ruelle::{
    assemble_transfer_matrix, classify_purity, decay_probe, isometry_residual, martingale_sequence,
    ruelle_apply, transfer_apply, PurityStatus, Tolerances, VecField, DEFAULT_DIMENSION_CAP,
};
use purefilter::torus::{kernel_points, GridSpec, SigmaChain};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn grid(n: usize, l: usize, k: u32) -> GridSpec {
    GridSpec::new(n, l, k).unwrap()
}

/// Generators at depth `k` and `k + 1` on their natural base grids.
fn bundled_at(extra: u32) -> Vec<(&'static str, FilterMatrix)> {
    vec![
        ("haar", make_haar(grid(2, 1, 4 + extra)).unwrap()),
        ("shannon", make_shannon(grid(2, 4, 2 + extra)).unwrap()),
        ("constant", make_constant(grid(2, 1, 4 + extra)).unwrap()),
        ("bcm_journe", make_bcm_journe(grid(2, 28, 2 + extra), PhaseConvention::Literal).unwrap()),
        (
            "journe",
            make_journe_family(&JourneParams { grid: grid(2, 56, 2 + extra), ..JourneParams::default() })
                .unwrap(),
        ),
    ]
}

fn coarse_random(h: &FilterMatrix, rng: &mut ChaCha8Rng) -> VecField {
    VecField::random(h.chain(), h.grid().coarse().unwrap(), rng).unwrap()
}

#[test]
fn isometry_on_random_fields() {
    for (name, h) in bundled_at(0) {
        let r = isometry_residual(&h, 100, 17).unwrap();
        assert!(r <= 1e-12, "{name}: {r}");
    }
    for seed in 0..10 {
        let h = make_random(grid(3, 2, 2), 2, 0.0, seed).unwrap();
        assert!(isometry_residual(&h, 20, seed).unwrap() <= 1e-12);
    }
}

#[test]
fn sqrt2_filter_doubles_norms() {
    let g = grid(2, 1, 3);
    let h = StepFn::from_fn(g, |_| Complex64::new(std::f64::consts::SQRT_2, 0.0));
    let h = FilterMatrix::new(SigmaChain::uniform(1), g, vec![vec![h]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let f = coarse_random(&h, &mut rng);
        let sf = ruelle_apply(&h, &f).unwrap();
        assert!((sf.norm_sqr() - 2.0 * f.norm_sqr()).abs() < 1e-14);
    }
}

#[test]
fn adjointness_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut filters = bundled_at(0);
    filters.push(("random", make_random(grid(3, 1, 3), 2, 0.3, 5).unwrap()));
    for (name, h) in filters {
        for _ in 0..20 {
            let f = coarse_random(&h, &mut rng);
            let g = VecField::random(h.chain(), *h.grid(), &mut rng).unwrap();
            let lhs = ruelle_apply(&h, &f).unwrap().inner(&g).unwrap();
            let rhs = f.inner(&transfer_apply(&h, &g).unwrap()).unwrap();
            assert!((lhs - rhs).norm() <= 1e-14, "{name}: {}", (lhs - rhs).norm());
        }
    }
}

#[test]
fn transfer_of_one() {
    let c = make_constant(grid(2, 1, 4)).unwrap();
    let one = VecField::constant(c.chain(), *c.grid(), ONE).unwrap();
    let image = transfer_apply(&c, &one).unwrap();
    assert!(image.component(0).samples().iter().all(|z| *z == ONE));
    let h = make_haar(grid(2, 1, 4)).unwrap();
    let image = transfer_apply(&h, &VecField::constant(h.chain(), *h.grid(), ONE).unwrap()).unwrap();
    for z in image.component(0).samples() {
        assert!((z - std::f64::consts::FRAC_1_SQRT_2).norm() < 1e-15);
    }
}

#[test]
fn transfer_matrix_shape() {
    let c = make_constant(grid(2, 1, 2)).unwrap();
    let t = assemble_transfer_matrix(&c, DEFAULT_DIMENSION_CAP).unwrap();
    assert_eq!(t.dimension(), 4);
    for r in 0..4 {
        let sum: Complex64 = (0..4).map(|k| t.matrix[(r, k)]).sum();
        assert_eq!(sum, ONE);
    }
    for (name, h) in bundled_at(0) {
        let t = assemble_transfer_matrix(&h, DEFAULT_DIMENSION_CAP).unwrap();
        let n = h.scale();
        // every column is constant on blocks of N fine cells
        for col in 0..t.dimension() {
            let coords: Vec<Complex64> = (0..t.dimension()).map(|r| t.matrix[(r, col)]).collect();
            let field = t.field(&h, &coords).unwrap();
            for comp in field.components() {
                assert!(comp.is_coarse(), "{name}");
            }
        }
        // rows over the same coarse cell coincide, so rank ≤ c·M/N
        let mut groups = std::collections::BTreeMap::new();
        for (r, &(i, cell)) in t.basis.iter().enumerate() {
            groups.entry((i, cell / n)).or_insert_with(Vec::new).push(r);
        }
        assert!(groups.len() <= h.size() * h.cell_count() / n, "{name}");
        for rows in groups.values() {
            for &r in &rows[1..] {
                for col in 0..t.dimension() {
                    assert_eq!(t.matrix[(r, col)], t.matrix[(rows[0], col)], "{name}");
                }
            }
        }
    }
}

/// Spectral radius below one, by Gelfand's formula on `Tⁿ` applied to every
/// basis vector, using `transfer_apply` only.
fn powers_vanish(h: &FilterMatrix, steps: usize) -> bool {
    let t = assemble_transfer_matrix(h, DEFAULT_DIMENSION_CAP).unwrap();
    (0..t.dimension()).all(|k| {
        let mut coords = vec![Complex64::new(0.0, 0.0); t.dimension()];
        coords[k] = ONE;
        let mut g = t.field(h, &coords).unwrap();
        for _ in 0..steps {
            g = transfer_apply(h, &g).unwrap().include().unwrap();
        }
        g.norm() < 1e-6
    })
}

#[test]
fn haar_and_shannon_are_pure_at_depths_four_to_six() {
    for k in 4..=6 {
        for h in [make_haar(grid(2, 1, k)).unwrap(), make_shannon(grid(2, 4, k)).unwrap()] {
            let v = classify_purity(&h, &Tolerances::default()).unwrap();
            assert_eq!(v.status, PurityStatus::PureAtResolution, "K={k}");
            assert!(v.spectrum.iter().all(|s| !s.passes_eigen_test));
            assert!(powers_vanish(&h, 200), "K={k}");
        }
    }
}

#[test]
fn spectra_lie_in_the_unit_disk() {
    for extra in 0..2 {
        for (name, h) in bundled_at(extra) {
            let v = classify_purity(&h, &Tolerances::default()).unwrap();
            assert!(v.diagnostics.max_abs_eigenvalue <= 1.0 + 1e-10, "{name}");
        }
    }
    for seed in 0..8 {
        let h = make_random(grid(2, 3, 2), 2, 1.0, seed).unwrap();
        let v = classify_purity(&h, &Tolerances::default()).unwrap();
        assert!(v.diagnostics.max_abs_eigenvalue <= 1.0 + 1e-10);
    }
}

#[test]
fn verdicts_are_stable_under_refinement() {
    let tols = Tolerances::default();
    for ((name, coarse), (_, fine)) in bundled_at(0).into_iter().zip(bundled_at(1)) {
        let a = classify_purity(&coarse, &tols).unwrap().status;
        let b = classify_purity(&fine, &tols).unwrap().status;
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn constant_eigenvector_is_exact() {
    let h = make_constant(grid(2, 1, 4)).unwrap();
    let v = classify_purity(&h, &Tolerances::default()).unwrap();
    assert_eq!(v.status, PurityStatus::NotPureCertified);
    let pair = &v.eigenpairs[0];
    assert_eq!(pair.lambda, ONE);
    assert!(pair.residual <= 1e-14);
    let f = &pair.vector;
    assert_eq!(f.norm(), 1.0);
    for cell in 0..f.grid().cell_count() {
        assert_eq!(f.cell_norm(cell), 1.0);
    }
    // S_H* f = conj(λ)·f on the fine copy
    let back = transfer_apply(&h, &f.include().unwrap()).unwrap();
    assert_eq!(&back, f);
    for x in martingale_sequence(f, f, 2, 3).unwrap() {
        assert!(x.samples().iter().all(|z| *z == ONE));
    }
}

/// `X_n` at cell `t` by explicit summation over `ker α*ⁿ` at exact points.
fn oracle_x(f: &VecField, g: &VecField, n: u32, t: usize) -> Complex64 {
    let grid = f.grid();
    let x = grid.point(t);
    let points = kernel_points(grid.scale(), n.max(1));
    let points = if n == 0 { vec![points[0].clone()] } else { points };
    let sum: Complex64 = points
        .iter()
        .map(|z| {
            let w = x.add(z);
            f.components().iter().zip(g.components()).map(|(a, b)| a.at(&w) * b.at(&w).conj()).sum::<Complex64>()
        })
        .sum();
    sum / points.len() as f64
}

#[test]
fn martingale_means_match_inner_products() {
    let chain = SigmaChain::new(vec![
        purefilter::torus::IntervalSet::full(),
        purefilter::torus::IntervalSet::from_fracs(&[(-1, 8, 1, 8)]).unwrap(),
    ])
    .unwrap();
    let g = grid(2, 1, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let f = VecField::random(&chain, g, &mut rng).unwrap();
        let h = VecField::random(&chain, g, &mut rng).unwrap();
        let inner = f.inner(&h).unwrap();
        let xs = martingale_sequence(&f, &h, 2, 3).unwrap();
        for (n, x) in xs.iter().enumerate() {
            let mean: Complex64 = x.samples().iter().sum::<Complex64>() / x.samples().len() as f64;
            assert!((mean - inner).norm() <= 1e-12, "n={n}");
            for t in [0, 5, 11] {
                assert!((x.value(t) - oracle_x(&f, &h, n as u32, t)).norm() <= 1e-14);
            }
        }
    }
}

#[test]
fn decay_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (name, h) in bundled_at(0) {
        let f = VecField::random(h.chain(), *h.grid(), &mut rng).unwrap();
        let curve = decay_probe(&h, &f, 10).unwrap();
        for w in curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{name}");
        }
    }
    let h = make_haar(grid(2, 1, 4)).unwrap();
    let one = VecField::constant(h.chain(), *h.grid(), ONE).unwrap();
    let curve = decay_probe(&h, &one, 2).unwrap();
    assert!((curve[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((curve[2] - 0.5).abs() < 1e-12);
}

#[test]
fn classification_is_reproducible() {
    let h = make_journe_family(&JourneParams::default()).unwrap();
    let a = classify_purity(&h, &Tolerances::default()).unwrap();
    let b = classify_purity(&h, &Tolerances::default()).unwrap();
    assert_eq!(a.spectrum, b.spectrum);
    assert_eq!(a.diagnostics, b.diagnostics);
}
