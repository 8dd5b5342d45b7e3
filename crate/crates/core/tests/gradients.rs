//! Finite-difference checks of the full pixel gradient and adjointness of the
//! downsampling transpose.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topo_smear::backprop::{compose_downsample_gradient, pullback_gradient};
use topo_smear::field::{mse, mse_gradient};
use topo_smear::functional::{diagram_gradient, wasserstein_norm, FunctionalSpec};
use topo_smear::persistence::diagram_of;
use topo_smear::smear::{downsample, sample_weighting, DownsampleSpec, Measure};
use topo_smear::ScalarField;

/// Random field whose sorted values are at least ~1 apart, so small probes
/// never reorder pixels.
fn spaced_field(rows: usize, cols: usize, rng: &mut impl Rng) -> ScalarField {
    let n = rows * cols;
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.shuffle(rng);
    let step = 255.0 / n as f64;
    ScalarField::from_fn(rows, cols, |r, c| {
        (ranks[r * cols + c] as f64 + rng.gen_range(0.0..0.2)) * step * 2.0
    })
}

fn topo(f: &ScalarField, spec: &FunctionalSpec) -> f64 {
    wasserstein_norm(&diagram_of(f), spec)
}

#[test]
fn pullback_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for p in [1.0, 2.0] {
        let f = spaced_field(16, 16, &mut rng);
        let spec = FunctionalSpec::new(p, 0, 0.0);
        let grad = pullback_gradient(&diagram_gradient(&diagram_of(&f), &spec), f.shape()).unwrap();
        let h = 1e-4 * (f.max() - f.min());
        let scale = grad.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..f.len() {
            let mut up = f.clone();
            let mut dn = f.clone();
            up.values_mut()[i] += h;
            dn.values_mut()[i] -= h;
            let fd = (topo(&up, &spec) - topo(&dn, &spec)) / (2.0 * h);
            let g = grad.values()[i];
            if g != 0.0 {
                assert!((fd - g).abs() <= 1e-3 * g.abs(), "pixel {i}: fd {fd} vs {g}");
            } else {
                assert!(fd.abs() <= 1e-6 * scale, "pixel {i}: fd {fd}");
            }
        }
    }
}

#[test]
fn mixed_loss_chain_through_downsampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let spec = FunctionalSpec::new(2.0, 1, 0.0);
    let down = DownsampleSpec::new(2, Measure::SimplexUniform).unwrap();
    let f = spaced_field(12, 12, &mut rng);
    let f0 = spaced_field(12, 12, &mut rng);
    let w = sample_weighting(&down, f.shape(), &mut rng);
    let alpha = 0.7;
    let loss = |x: &ScalarField| {
        alpha * topo(&downsample(x, &w).unwrap(), &spec) + (1.0 - alpha) * mse(x, &f0).unwrap()
    };
    let coarse = downsample(&f, &w).unwrap();
    let cg = pullback_gradient(&diagram_gradient(&diagram_of(&coarse), &spec), coarse.shape())
        .unwrap();
    let tg = compose_downsample_gradient(&cg, &w).unwrap();
    let dg = mse_gradient(&f, &f0).unwrap();
    // coarse values are weighted averages, so keep the probe well under the
    // smallest coarse gap divided by the largest weight
    let mut sorted = coarse.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let h = gap / 10.0;
    for i in 0..f.len() {
        let g = alpha * tg.values()[i] + (1.0 - alpha) * dg.values()[i];
        let mut up = f.clone();
        let mut dn = f.clone();
        up.values_mut()[i] += h;
        dn.values_mut()[i] -= h;
        let fd = (loss(&up) - loss(&dn)) / (2.0 * h);
        assert!((fd - g).abs() <= 1e-3 * g.abs().max(1e-9), "pixel {i}: fd {fd} vs {g}");
    }
}

#[test]
fn compose_is_adjoint_of_downsample() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for trial in 0..100 {
        let (rows, cols) = (rng.gen_range(1..20), rng.gen_range(1..20));
        let k = rng.gen_range(1..6);
        let measure = [Measure::Center, Measure::VertexUniform, Measure::SimplexUniform][trial % 3];
        let w = sample_weighting(&DownsampleSpec::new(k, measure).unwrap(), (rows, cols), &mut rng);
        let (cr, cc) = w.coarse_shape();
        let y = ScalarField::from_fn(cr, cc, |_, _| rng.gen_range(-1.0..1.0));
        let x = ScalarField::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = y.dot(&downsample(&x, &w).unwrap());
        let rhs = compose_downsample_gradient(&y, &w).unwrap().dot(&x);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300) + 1e-15);
    }
}

#[test]
fn downsample_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let w = sample_weighting(
        &DownsampleSpec::new(3, Measure::SimplexUniform).unwrap(),
        (10, 11),
        &mut rng,
    );
    // dyadic values keep every product and sum exact
    let mut dyadic = || rng.gen_range(-64i32..64) as f64 / 8.0;
    let f = ScalarField::from_fn(10, 11, |_, _| dyadic());
    let g = ScalarField::from_fn(10, 11, |_, _| dyadic());
    let (a, b) = (2.0, -0.5);
    let comb = ScalarField::new(
        10,
        11,
        f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect(),
    )
    .unwrap();
    let lhs = downsample(&comb, &w).unwrap();
    let (df, dg) = (downsample(&f, &w).unwrap(), downsample(&g, &w).unwrap());
    for i in 0..lhs.len() {
        let rhs = a * df.values()[i] + b * dg.values()[i];
        assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }
}

#[test]
fn topological_gradient_supported_on_critical_pixels() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let f = spaced_field(20, 20, &mut rng);
    let spec = FunctionalSpec::new(1.0, 1, 5.0);
    let dg = diagram_gradient(&diagram_of(&f), &spec);
    let px = pullback_gradient(&dg, f.shape()).unwrap();
    let nonzero = px.values().iter().filter(|v| **v != 0.0).count();
    assert!(nonzero <= 2 * dg.entries.len());
}
