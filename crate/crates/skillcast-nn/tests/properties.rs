use proptest::prelude::*;
use skillcast_nn::{mse_loss, AdamConfig, AdamState, Param, Tensor};

proptest! {
    #[test]
    fn mse_is_nonnegative_and_symmetric(
        a in prop::collection::vec(-1e3f64..1e3, 1..32),
        off in prop::collection::vec(-1e3f64..1e3, 1..32),
    ) {
        let n = a.len().min(off.len());
        let pred = Tensor::vector(a[..n].to_vec());
        let target = Tensor::vector(
            a[..n].iter().zip(&off[..n]).map(|(x, d)| x + d).collect(),
        );
        let (fwd, _) = mse_loss(&pred, &target).unwrap();
        let (rev, _) = mse_loss(&target, &pred).unwrap();
        prop_assert!(fwd >= 0.0);
        prop_assert!((fwd - rev).abs() <= 1e-9 * fwd.max(1.0));
    }

    #[test]
    fn adam_fixed_point_on_zero_gradients(
        values in prop::collection::vec(-10.0f64..10.0, 1..16),
        steps in 1usize..20,
    ) {
        let mut p = Param::new("p", Tensor::vector(values.clone()));
        let mut state = AdamState::new(AdamConfig::default(), &[&p]);
        for _ in 0..steps {
            state.step(&mut [&mut p]).unwrap();
        }
        prop_assert_eq!(p.value.data(), &values[..]);
    }

    #[test]
    fn tensor_json_roundtrip_is_bit_exact(
        values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 1..32),
    ) {
        let t = Tensor::vector(values);
        let json = serde_json::to_string(&t).unwrap();
        let back: Tensor = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(t.shape(), back.shape());
        for (a, b) in t.data().iter().zip(back.data()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn adam_state_json_roundtrip_preserves_moments() {
    let mut p = Param::new("w", Tensor::vector(vec![1.0, -2.0, 0.5]));
    let mut state = AdamState::new(AdamConfig::with_lr(0.01), &[&p]);
    p.grad.data_mut().copy_from_slice(&[0.1, -0.3, 0.7]);
    state.step(&mut [&mut p]).unwrap();
    let json = serde_json::to_string(&state).unwrap();
    let back: AdamState = serde_json::from_str(&json).unwrap();
    assert_eq!(back.t, 1);
    for (a, b) in state.m.iter().zip(&back.m) {
        assert_eq!(a.data(), b.data());
    }
    for (a, b) in state.v.iter().zip(&back.v) {
        assert_eq!(a.data(), b.data());
    }
}
