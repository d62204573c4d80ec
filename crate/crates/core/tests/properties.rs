use hbl_core::extremal::{build_g0, make_sequence, ExtremalSequenceSpec, SequenceKind};
use hbl_core::monotone::{integral, p_moment, phi_functional, tail_p_mass};
use hbl_core::{bellman_value, Error, MomentPair, PParams, StepFunction};
use proptest::prelude::*;

fn non_increasing_step() -> impl Strategy<Value = StepFunction> {
    (1usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(1e-4f64..1.0, n),
            prop::collection::vec(0.0f64..50.0, n),
        )
            .prop_map(|(widths, mut values)| {
                let total: f64 = widths.iter().sum();
                let mut bps = vec![0.0];
                let mut acc = 0.0;
                for w in &widths[..widths.len() - 1] {
                    acc += w / total;
                    bps.push(acc);
                }
                bps.push(1.0);
                values.sort_by(|a, b| b.total_cmp(a));
                values[0] += 1e-3;
                StepFunction::new(bps, values).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn phi_never_exceeds_bellman(g in non_increasing_step(), p in 1.2f64..5.0) {
        let params = PParams::new(p).unwrap();
        let (f, big_f) = (integral(&g), p_moment(&g, params));
        let m = MomentPair::new(params, f, big_f.max(f.powf(p))).unwrap();
        let b = bellman_value(params, m).unwrap();
        let phi = phi_functional(&g, params);
        prop_assert!(phi <= b * (1.0 + 1e-9), "Φ = {phi}, B = {b}");
    }
}

#[test]
fn factory_members_have_exact_moments() {
    for (p, f, big_f) in [(2.0, 1.0, 2.0), (3.0, 1.0, 2.0), (1.5, 2.0, 5.0)] {
        let params = PParams::new(p).unwrap();
        let m = MomentPair::new(params, f, big_f).unwrap();
        for kind in [SequenceKind::Truncation, SequenceKind::Mollification, SequenceKind::Perturbation] {
            for n in [64, 1024] {
                let spec = ExtremalSequenceSpec::new(kind, n, params, m).with_cells(2048);
                let g = match make_sequence(&spec) {
                    Err(Error::InfeasibleProjection(_)) if kind == SequenceKind::Truncation && n == 64 => continue,
                    other => other.unwrap(),
                };
                assert!((integral(&g) - f).abs() <= 1e-12, "{kind:?} {n}");
                assert!((p_moment(&g, params) - big_f).abs() <= 1e-12, "{kind:?} {n}");
            }
        }
    }
}

#[test]
fn factory_tails_are_uniformly_small() {
    let params = PParams::new(2.0).unwrap();
    let m = MomentPair::new(params, 1.0, 2.0).unwrap();
    let g0 = build_g0(params, m).unwrap();
    let deltas = [1e-2, 1e-4, 1e-6];
    let mut sup = [0.0f64; 3];
    for kind in [SequenceKind::Truncation, SequenceKind::Mollification, SequenceKind::Perturbation] {
        for n in [16, 256, 4096, 16384] {
            let spec = ExtremalSequenceSpec::new(kind, n, params, m).with_cells(4096);
            let g = make_sequence(&spec).unwrap();
            for (s, &d) in sup.iter_mut().zip(&deltas) {
                *s = s.max(tail_p_mass(&g, params, d));
            }
        }
    }
    for (s, &d) in sup.iter().zip(&deltas) {
        assert!(*s <= 1.1 * g0.tail_p_mass(params, d), "δ = {d}: {s}");
    }
    assert!(sup[0] > sup[1] && sup[1] > sup[2], "{sup:?}");
}
