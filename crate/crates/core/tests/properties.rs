use std::sync::OnceLock;

use proptest::prelude::*;

use fene::config_space::{build_quadrature, eigen_basis, kramers_stress, ConfigBasis};
use fene::coupling::{xs_distance, xs_norm, CoupledState};
use fene::diagnostics::{decode, encode, growth_constant, loglog_slope, Checkpoint, TimeSeriesRecord};
use fene::fluid::FluidState;
use fene::fokker_planck::{ModeTerm, PolymerField};
use fene::model::{density_to_r, maxwellian, r_to_density, spring_force, ModelParams};
use fene::spectral::{SpectralField, TorusGrid};

fn basis() -> &'static ConfigBasis {
    static B: OnceLock<ConfigBasis> = OnceLock::new();
    B.get_or_init(|| eigen_basis(&build_quadrature(4.0, 16, 16).unwrap(), 8).unwrap())
}

fn grid() -> TorusGrid {
    TorusGrid::new(16).unwrap()
}

/// Real trigonometric polynomial with wavenumbers inside the dealiased band.
fn trig(amps: &[f64]) -> impl Fn([f64; 2]) -> f64 + '_ {
    move |x| {
        amps.chunks(4)
            .enumerate()
            .map(|(j, a)| {
                let k1 = (j % 3) as f64;
                let k2 = (j / 3) as f64 - 1.0;
                let ph = k1 * x[0] + k2 * x[1];
                a[0] * ph.cos() + a[1] * ph.sin() + a[2] * (2.0 * x[0] - x[1]).cos() * a[3]
            })
            .sum()
    }
}

fn field(amps: &[f64]) -> SpectralField {
    let g = grid();
    SpectralField::forward(&g, 1, &g.sample(trig(amps))).unwrap()
}

fn amps() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 24)
}

fn polymer(a: f64, b: f64) -> PolymerField {
    PolymerField::perturbed_equilibrium(
        &grid(),
        basis(),
        &[
            ModeTerm { basis_index: 1, amplitude: a, wave: [1, 0], sine: false },
            ModeTerm { basis_index: 3, amplitude: b, wave: [1, -1], sine: true },
        ],
    )
    .unwrap()
}

fn scaled(p: &PolymerField, c: f64) -> PolymerField {
    p.with_coeffs(p.coeffs().scaled(c), p.time).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_backward_round_trip(a in amps()) {
        let g = grid();
        let v = g.sample(trig(&a));
        let back = SpectralField::forward(&g, 1, &v).unwrap().backward();
        for (x, y) in v.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_are_linear(a in amps(), b in amps(), s in -3.0..3.0f64) {
        let (f, g) = (field(&a), field(&b));
        let lhs = f.lin_comb(1.0, &g, s).unwrap().laplacian();
        let rhs = f.laplacian().lin_comb(1.0, &g.laplacian(), s).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
        let lhs = f.lin_comb(s, &g, 1.0).unwrap().gradient().unwrap();
        let rhs = f.gradient().unwrap().lin_comb(s, &g.gradient().unwrap(), 1.0).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn product_is_symmetric_and_real(a in amps(), b in amps()) {
        let (f, g) = (field(&a), field(&b));
        let fg = f.dealiased_product(&g).unwrap();
        prop_assert!(fg.max_abs_diff(&g.dealiased_product(&f).unwrap()).unwrap() < 1e-13);
        prop_assert!(fg.hermitian_defect() < 1e-13);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian(a in amps()) {
        let f = field(&a);
        let d = f.gradient().unwrap().divergence().unwrap();
        prop_assert!(d.max_abs_diff(&f.laplacian()).unwrap() < 1e-10);
    }

    #[test]
    fn sobolev_norms_homogeneous_and_ordered(a in amps(), c in -5.0..5.0f64) {
        let f = field(&a);
        for s in 0..3 {
            let n = f.sobolev_norm(s);
            prop_assert!((f.scaled(c).sobolev_norm(s) - c.abs() * n).abs() <= 1e-12 * (1.0 + n));
            prop_assert!(f.sobolev_norm(s + 1) >= n);
        }
    }

    #[test]
    fn density_transform_inverts(rho in 1e-3..1e3f64, gamma in 1.05..3.0f64, a in 0.1..10.0f64) {
        let p = ModelParams { gamma, a, ..ModelParams::default() };
        let back = r_to_density(density_to_r(rho, &p).unwrap(), &p).unwrap();
        prop_assert!((back - rho).abs() <= 1e-12 * rho);
    }

    #[test]
    fn spring_force_is_radial_and_stiffening(r in 0.0..0.99f64, th in 0.0..std::f64::consts::TAU) {
        let p = ModelParams::default();
        let q = [r * 2.0 * th.cos(), r * 2.0 * th.sin()];
        let f = spring_force(q, &p).unwrap();
        prop_assert!((f[0] * q[1] - f[1] * q[0]).abs() < 1e-9);
        prop_assert!(f[0] * q[0] + f[1] * q[1] >= q[0] * q[0] + q[1] * q[1] - 1e-15);
        prop_assert!(maxwellian(q, &p).unwrap() > 0.0);
    }

    #[test]
    fn xs_norm_scales_and_separates(a in -0.1..0.1f64, b in -0.1..0.1f64, c in 0.1..4.0f64) {
        let p = polymer(a, b);
        let traj = vec![p.clone(), p.clone()];
        let sc: Vec<_> = traj.iter().map(|x| scaled(x, c)).collect();
        let n = xs_norm(&traj, 1).unwrap();
        prop_assert!((xs_norm(&sc, 1).unwrap() - c * n).abs() <= 1e-12 * c * n);
        prop_assert!(xs_distance(&traj, &traj, 1).unwrap() == 0.0);
        prop_assert!(xs_norm(&traj, 2).unwrap() >= n);
    }

    #[test]
    fn series_row_round_trip(
        step in 0u64..1_000_000,
        v in prop::collection::vec(-1e6..1e6f64, 17),
        s_max in 0u32..4,
        active in any::<bool>(),
    ) {
        let k = s_max as usize + 1;
        let rec = TimeSeriesRecord {
            step,
            time: v[0],
            mass: v[1],
            momentum: [v[2], v[3]],
            polymer_mass: v[4],
            fluid_energy: vec![v[5]; k],
            fp_l2m: (0..k).map(|i| v[6] * i as f64).collect(),
            fp_h1m: vec![v[7]; k],
            min_r: v[8],
            max_r: v[9],
            envelope_lower: v[10],
            envelope_upper: v[11],
            grad_integral: v[12],
            velocity_integral: v[13],
            stress_integral: v[14],
            min_psi_sample: v[15],
            blowup_indicator: v[16],
            cutoff_active: active,
        };
        prop_assert_eq!(TimeSeriesRecord::from_row(&rec.to_row(), s_max).unwrap(), rec);
    }

    #[test]
    fn checkpoint_round_trip(
        a in -0.1..0.1f64,
        b in -0.1..0.1f64,
        time in 0.0..10.0f64,
        step in any::<u64>(),
        aux in prop::collection::vec(any::<f64>().prop_filter("not nan", |x| !x.is_nan()), 0..6),
    ) {
        let g = grid();
        let r = SpectralField::forward(&g, 1, &g.sample(|x| 2.0 + a * x[0].sin())).unwrap();
        let u = SpectralField::forward(&g, 2, &[g.sample(|x| b * x[1].cos()), g.sample(|x| a * x[0].cos())].concat()).unwrap();
        let mut psi = polymer(a, b);
        psi.time = time;
        let state = CoupledState::new(FluidState::new(r, u, time).unwrap(), psi).unwrap();
        let ck = Checkpoint { state, step, aux };
        let bytes = encode(&ck);
        let back = decode(&bytes, basis()).unwrap();
        prop_assert_eq!(encode(&back), bytes);
        prop_assert_eq!(back, ck);
    }

    #[test]
    fn truncated_checkpoint_is_rejected(cut in 1usize..200) {
        let state = CoupledState::new(FluidState::at_rest(&grid(), 2.0), polymer(0.01, 0.0)).unwrap();
        let bytes = encode(&Checkpoint { state, step: 3, aux: vec![] });
        prop_assert!(decode(&bytes[..bytes.len() - cut], basis()).is_err());
    }

    #[test]
    fn growth_constant_makes_shape_nonincreasing(
        dg in prop::collection::vec(-1.0..1.0f64, 2..30),
        di in prop::collection::vec(0.01..1.0f64, 30),
    ) {
        let mut g = vec![0.0];
        let mut integral = vec![0.0];
        for (d, i) in dg.iter().zip(&di) {
            g.push(g.last().unwrap() + d);
            integral.push(integral.last().unwrap() + i);
        }
        let c = growth_constant(&g, &integral);
        prop_assert!(c >= 0.0);
        for k in 1..g.len() {
            prop_assert!((g[k] - c * integral[k]) - (g[k - 1] - c * integral[k - 1]) <= 1e-12);
        }
    }

    #[test]
    fn loglog_slope_recovers_power(p in -3.0..3.0f64, c in 0.1..10.0f64) {
        let x = [1e-4, 1e-3, 1e-2, 1e-1];
        let y: Vec<f64> = x.iter().map(|v: &f64| c * v.powf(p)).collect();
        prop_assert!((loglog_slope(&x, &y) - p).abs() < 1e-9);
    }
}

#[test]
fn equilibrium_stress_is_identity() {
    let quad = basis().quad();
    let t = kramers_stress(&vec![1.0; quad.len()], quad).unwrap();
    for (i, row) in t.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8, "T[{i}][{j}] = {v}");
        }
    }
    assert!((quad.integrate(quad.maxwellian()).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn polymer_mass_is_scale_covariant() {
    let p = polymer(0.05, -0.02);
    assert!((scaled(&p, 3.0).polymer_mass() - 3.0 * p.polymer_mass()).abs() < 1e-12);
}
