mod common;

use common::{random_state, scaled_innovation_mean, Rng};
use oasort::kalman::{KalmanError, KalmanState};
use oasort::BBox;
use proptest::prelude::*;

fn max_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn mean(st: &KalmanState) -> [f64; 7] {
    st.mean.into()
}

#[test]
fn momentum_endpoints_and_scaled_innovation() {
    let mut rng = Rng::new(31);
    for _ in 0..1000 {
        let (st, z) = random_state(&mut rng);
        let plain = st.update(&z).unwrap();
        let one = st.update_with_momentum(&z, 1.0).unwrap();
        assert!(max_diff(&mean(&one), &mean(&plain)) <= 1e-9);
        let zero = st.update_with_momentum(&z, 0.0).unwrap();
        assert!(max_diff(&mean(&zero), &mean(&st)) <= 1e-9);

        let bam = rng.unit();
        let got = st.update_with_momentum(&z, bam).unwrap();
        let expect: [f64; 7] = scaled_innovation_mean(&st, &z, bam).into();
        assert!(max_diff(&mean(&got), &expect) <= 1e-9, "bam {bam}");
        // Covariance ignores the weight.
        assert_eq!(got.covariance, plain.covariance);
    }
}

#[test]
fn momentum_outside_unit_interval_is_rejected() {
    let st = KalmanState::new(&BBox::new(0.0, 0.0, 10.0, 20.0).unwrap());
    let z = BBox::new(1.0, 1.0, 11.0, 21.0).unwrap();
    for bam in [-0.1, 1.5, f64::NAN] {
        assert!(matches!(
            st.update_with_momentum(&z, bam),
            Err(KalmanError::MomentumOutOfRange(_))
        ));
    }
}

proptest! {
    #[test]
    fn covariance_stays_symmetric_positive(seed in any::<u64>(), steps in 1usize..30) {
        let mut rng = Rng::new(seed);
        let (mut st, z) = random_state(&mut rng);
        for _ in 0..steps {
            st = st.predict().state.update_with_momentum(&z, rng.unit()).unwrap();
            let p = st.covariance;
            prop_assert_eq!(p, p.transpose());
            prop_assert!(p.cholesky().is_some());
        }
    }

    #[test]
    fn update_moves_toward_measurement(seed in any::<u64>(), bam in 0.0..=1.0f64) {
        let mut rng = Rng::new(seed);
        let (st, z) = random_state(&mut rng);
        let before = (st.to_bbox().center().0 - z.center().0).abs();
        let after = (st.update_with_momentum(&z, bam).unwrap().to_bbox().center().0 - z.center().0).abs();
        prop_assert!(after <= before + 1e-9);
    }
}
