//! Simulator checked against explicit 4×4 matrix products.

use num_complex::Complex64 as C;
use qnir::quantum::{DensityMatrix, Gate, KrausChannel};
use qnir::reservoir::{evolve_step, run_reservoir, run_reservoir_ps_blocks, NoiseParams, ReservoirConfig};

type M4 = [[C; 4]; 4];
type M2 = [[C; 2]; 2];

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn mul(a: &M4, b: &M4) -> M4 {
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn dagger(a: &M4) -> M4 {
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

fn add(a: &M4, b: &M4) -> M4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

/// Embeds a single-qubit operator; basis index is `b0 + 2·b1`.
fn on_qubit(m: &M2, q: usize) -> M4 {
    let id: M2 = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    let (m0, m1) = if q == 0 { (m, &id) } else { (&id, m) };
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            out[r][col] = m0[r & 1][col & 1] * m1[r >> 1][col >> 1];
        }
    }
    out
}

fn rx(t: f64) -> M2 {
    let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
    [[c(co, 0.0), c(0.0, -si)], [c(0.0, -si), c(co, 0.0)]]
}

fn rz(t: f64) -> M2 {
    [[C::from_polar(1.0, -t / 2.0), c(0.0, 0.0)], [c(0.0, 0.0), C::from_polar(1.0, t / 2.0)]]
}

/// CX with control qubit 0, target qubit 1.
fn cx01() -> M4 {
    let mut out = [[c(0.0, 0.0); 4]; 4];
    // |b0 b1⟩ → |b0, b1 ⊕ b0⟩
    for idx in 0..4usize {
        let (b0, b1) = (idx & 1, idx >> 1);
        let dst = b0 + 2 * (b1 ^ b0);
        out[dst][idx] = c(1.0, 0.0);
    }
    out
}

fn unitary(rho: &M4, u: &M4) -> M4 {
    mul(&mul(u, rho), &dagger(u))
}

fn reset(rho: &M4, p: f64, q: usize) -> M4 {
    let k0: M2 = [[c((1.0 - p).sqrt(), 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c((1.0 - p).sqrt(), 0.0)]];
    let k1: M2 = [[c(p.sqrt(), 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
    let k2: M2 = [[c(0.0, 0.0), c(p.sqrt(), 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
    [k0, k1, k2]
        .iter()
        .map(|k| unitary(rho, &on_qubit(k, q)))
        .fold([[c(0.0, 0.0); 4]; 4], |acc, t| add(&acc, &t))
}

fn plus_plus() -> M4 {
    [[c(0.25, 0.0); 4]; 4]
}

fn to_matrix(rho: &DensityMatrix) -> M4 {
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = rho.entry(i, j);
        }
    }
    out
}

fn max_diff(a: &M4, b: &M4) -> f64 {
    (0..16).map(|k| (a[k / 4][k % 4] - b[k / 4][k % 4]).norm()).fold(0.0, f64::max)
}

#[test]
fn rzz_on_plus_plus_matches_direct_construction() {
    let theta = std::f64::consts::FRAC_PI_2;
    let mut rho = DensityMatrix::plus_state(2).unwrap();
    for g in [Gate::cx(0, 1), Gate::rz(1, theta), Gate::cx(0, 1)] {
        rho.apply_gate(&g).unwrap();
    }
    // RZZ(θ) = diag(e^{-iθ/2}, e^{iθ/2}, e^{iθ/2}, e^{-iθ/2}) on |b0 b1⟩
    let mut rzz = [[c(0.0, 0.0); 4]; 4];
    for (idx, row) in rzz.iter_mut().enumerate() {
        let parity = (idx & 1) ^ (idx >> 1);
        row[idx] = C::from_polar(1.0, if parity == 0 { -theta / 2.0 } else { theta / 2.0 });
    }
    let expected = unitary(&plus_plus(), &rzz);
    assert!(max_diff(&to_matrix(&rho), &expected) < 1e-12);
}

#[test]
fn noisy_step_matches_kraus_composition() {
    let u = 0.196;
    let p = [0.12, 0.57, 0.33, 0.81, 0.05, 0.44, 0.9];
    let cfg = ReservoirConfig::pair_separable(2);
    let params = NoiseParams::new(p.to_vec()).unwrap();

    let mut rho = DensityMatrix::plus_state(2).unwrap();
    let z = evolve_step(&mut rho, u, &cfg, &params).unwrap();

    // qubit 0 owns p[0..3], qubit 1 owns p[3..7], each in time order
    let mut o = plus_plus();
    o = unitary(&o, &on_qubit(&rx(u), 0));
    o = reset(&o, p[0], 0);
    o = unitary(&o, &on_qubit(&rx(u), 1));
    o = reset(&o, p[3], 1);
    o = unitary(&o, &cx01());
    o = reset(&o, p[1], 0);
    o = reset(&o, p[4], 1);
    o = unitary(&o, &on_qubit(&rz(u), 1));
    o = reset(&o, p[5], 1);
    o = unitary(&o, &cx01());
    o = reset(&o, p[2], 0);
    o = reset(&o, p[6], 1);

    assert!(max_diff(&to_matrix(&rho), &o) < 1e-12);
    let z0 = o[0][0].re - o[1][1].re + o[2][2].re - o[3][3].re;
    let z1 = o[0][0].re + o[1][1].re - o[2][2].re - o[3][3].re;
    assert!((z[0] - z0).abs() < 1e-12 && (z[1] - z1).abs() < 1e-12);
}

#[test]
fn reset_on_plus_state_matches_formula() {
    let mut rho = DensityMatrix::plus_state(1).unwrap();
    rho.apply_channel(&KrausChannel::reset(0.3).unwrap(), 0).unwrap();
    // 0.3|0⟩⟨0| + 0.7|+⟩⟨+|
    let expected = [0.3 + 0.35, 0.35, 0.35, 0.35];
    for (k, e) in expected.iter().enumerate() {
        assert!((rho.entry(k / 2, k % 2) - c(*e, 0.0)).norm() < 1e-15);
    }
}

fn narma_like(len: usize) -> Vec<f64> {
    let w = 2.0 * std::f64::consts::PI / 100.0;
    (0..len)
        .map(|t| {
            let t = t as f64;
            0.1 * (w * 2.11 * t).sin() * (w * 3.73 * t).sin() * (w * 4.11 * t).sin() + 0.1
        })
        .collect()
}

#[test]
fn pair_separable_blocks_match_full_register() {
    let cfg = ReservoirConfig::pair_separable(4);
    let p: Vec<f64> = (0..cfg.parameter_count()).map(|i| ((i * 37 + 11) % 97) as f64 / 97.0).collect();
    let p = NoiseParams::new(p).unwrap();
    let u = narma_like(100);
    let full = run_reservoir(&u, &cfg, &p).unwrap();
    let blocks = run_reservoir_ps_blocks(&u, &cfg, &p).unwrap();
    for q in 0..4 {
        for (a, b) in full.signal(q).iter().zip(blocks.signal(q)) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn echo_state_forgets_initial_state() {
    for cfg in [ReservoirConfig::pair_separable(4), ReservoirConfig::linear(4)] {
        let p = NoiseParams::new((0..cfg.parameter_count()).map(|i| 0.2 + 0.6 * ((i % 5) as f64 / 5.0)).collect())
            .unwrap();
        let u = narma_like(80);
        let res = qnir::reservoir::Reservoir::new(&cfg, &p).unwrap();
        let a = res.run_from(DensityMatrix::plus_state(4).unwrap(), &u).unwrap();
        let one: [C; 4] = [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let b = res.run_from(DensityMatrix::product_state(&[one; 4]).unwrap(), &u).unwrap();
        for q in 0..4 {
            for t in 20..80 {
                assert!((a.value(q, t) - b.value(q, t)).abs() < 1e-6, "{:?} q{q} t{t}", cfg.scheme);
            }
        }
    }
}

#[test]
fn zero_noise_features_vanish() {
    let u = narma_like(60);
    for cfg in [ReservoirConfig::pair_separable(4), ReservoirConfig::linear(4), ReservoirConfig::linear(2)] {
        let p = NoiseParams::constant(cfg.parameter_count(), 0.0).unwrap();
        let f = run_reservoir(&u, &cfg, &p).unwrap();
        assert!(f.max_abs() < 1e-10);
    }
}
