use qnir::benchmarks::{
    mackey_glass, narma2, narma_general, narma_input, Benchmark, InputSignal, MackeyGlassSpec, NarmaCoefficients,
};

// values pinned by an independent script
const U1: f64 = 0.10078393313126387;
const NARMA2_Y2: f64 = 0.19374913370463073;
const NARMA5_Y5: f64 = 0.1809728365705105;

#[test]
fn narma_pinned_values() {
    let u = narma_input(101, &InputSignal::default());
    assert!((u[1] - U1).abs() < 1e-15);
    let y = narma2(&u).unwrap();
    assert!((y[2] - NARMA2_Y2).abs() < 1e-15);
    let y5 = narma_general(&u, 5, &NarmaCoefficients::default()).unwrap();
    assert!((y5[5] - NARMA5_Y5).abs() < 1e-15);
}

#[test]
fn narma_tasks_share_one_input() {
    let a = Benchmark::Narma2.task(None).unwrap();
    let b = Benchmark::Narma10.task(None).unwrap();
    assert_eq!(a.input, b.input);
    assert_ne!(a.target, b.target);
}

#[test]
fn mg_decay_without_feedback() {
    let spec = MackeyGlassSpec {
        a: 0.0,
        raw_len: 11,
        ..MackeyGlassSpec::new(25.0)
    };
    let x = spec.integrate().unwrap();
    assert!((x[10] - 1.2 * (-0.1f64 * 10.0).exp()).abs() < 1e-6);
}

#[test]
fn mg_step_halving_converges() {
    for tau in [19.0, 25.0] {
        let coarse = MackeyGlassSpec::new(tau).integrate().unwrap();
        let fine = MackeyGlassSpec {
            step: 0.5,
            ..MackeyGlassSpec::new(tau)
        }
        .integrate()
        .unwrap();
        let sup = coarse[..100].iter().zip(&fine[..100]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-4, "tau {tau}: {sup}");
    }
}

#[test]
fn mg_series_bounded_and_distinct() {
    let a = mackey_glass(&MackeyGlassSpec::new(19.0)).unwrap();
    let b = mackey_glass(&MackeyGlassSpec::new(25.0)).unwrap();
    assert_eq!((a.len(), b.len()), (400, 400));
    for s in [&a, &b] {
        assert!(s.iter().all(|v| *v > 0.2 && *v < 1.5));
    }
    assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 0.1));
}

#[test]
fn generators_are_deterministic() {
    for b in Benchmark::ALL {
        assert_eq!(b.task(None).unwrap(), b.task(None).unwrap());
    }
}
