//! Constant-velocity Kalman filter over `[u, v, s, r, du, dv, ds]`: box
//! center, area and aspect ratio (width / height) plus the velocities of the
//! first three. The aspect ratio is modelled as static.

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

use crate::geometry::BBox;

pub type StateVector = SVector<f64, 7>;
pub type StateCovariance = SMatrix<f64, 7, 7>;
pub type Measurement = SVector<f64, 4>;
pub type ObservationModel = SMatrix<f64, 4, 7>;
pub type Gain = SMatrix<f64, 7, 4>;

/// Initial covariance diagonal: positions fairly certain, velocities unknown.
pub const INITIAL_COVARIANCE: [f64; 7] = [10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4];
/// Process noise diagonal; velocity terms down-weighted by 1e-2, scale
/// velocity by 1e-4.
pub const PROCESS_NOISE: [f64; 7] = [1.0, 1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-4];
/// Measurement noise diagonal for `[u, v, s, r]`.
pub const MEASUREMENT_NOISE: [f64; 4] = [1.0, 1.0, 10.0, 10.0];
/// Smallest area an estimate may carry after prediction.
pub const MIN_SCALE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KalmanError {
    #[error("innovation covariance is not positive definite; the filter diverged")]
    Divergence,
    #[error("momentum weight {0} lies outside [0, 1]")]
    MomentumOutOfRange(f64),
}

/// Transition matrix for a one-frame step.
pub fn transition() -> StateCovariance {
    let mut f = StateCovariance::identity();
    f[(0, 4)] = 1.0;
    f[(1, 5)] = 1.0;
    f[(2, 6)] = 1.0;
    f
}

/// `H`: selects `[u, v, s, r]` from the state.
pub fn observation_model() -> ObservationModel {
    let mut h = ObservationModel::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

pub fn process_noise() -> StateCovariance {
    StateCovariance::from_diagonal(&StateVector::from_column_slice(&PROCESS_NOISE))
}

pub fn measurement_noise() -> SMatrix<f64, 4, 4> {
    SMatrix::<f64, 4, 4>::from_diagonal(&Measurement::from_column_slice(&MEASUREMENT_NOISE))
}

/// `[u, v, s, r]` for a box.
pub fn bbox_to_measurement(b: &BBox) -> Measurement {
    let (cx, cy) = b.center();
    Measurement::new(cx, cy, b.area(), b.width() / b.height())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

/// Output of [`KalmanState::predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub state: KalmanState,
    pub bbox: BBox,
    /// Set when the scale would have become non-positive; the scale velocity
    /// was zeroed and the area floored at [`MIN_SCALE`] for this step.
    pub degenerate: bool,
}

impl KalmanState {
    pub fn new(b: &BBox) -> Self {
        let z = bbox_to_measurement(b);
        let mut mean = StateVector::zeros();
        mean.fixed_rows_mut::<4>(0).copy_from(&z);
        Self {
            mean,
            covariance: StateCovariance::from_diagonal(&StateVector::from_column_slice(
                &INITIAL_COVARIANCE,
            )),
        }
    }

    pub fn predict(&self) -> Prediction {
        let mut prior = self.mean;
        let mut degenerate = false;
        if prior[2] + prior[6] <= 0.0 {
            prior[6] = 0.0;
            degenerate = true;
        }
        let f = transition();
        let mut mean = f * prior;
        if mean[2] < MIN_SCALE {
            mean[2] = MIN_SCALE;
            degenerate = true;
        }
        let covariance = symmetrize(f * self.covariance * f.transpose() + process_noise());
        let state = KalmanState { mean, covariance };
        let bbox = state.to_bbox();
        Prediction {
            state,
            bbox,
            degenerate,
        }
    }

    /// Kalman gain `K = P Hᵀ (H P Hᵀ + R)⁻¹` for the current covariance.
    pub fn gain(&self) -> Result<Gain, KalmanError> {
        let h = observation_model();
        let pht = self.covariance * h.transpose();
        let innovation_cov = h * pht + measurement_noise();
        let chol = innovation_cov.cholesky().ok_or(KalmanError::Divergence)?;
        // K = P Hᵀ S⁻¹  ⇔  S Kᵀ = H P
        let kt = chol.solve(&pht.transpose());
        let k = kt.transpose();
        if k.iter().all(|v| v.is_finite()) {
            Ok(k)
        } else {
            Err(KalmanError::Divergence)
        }
    }

    /// Standard correction `x + K (z - H x)`.
    pub fn update(&self, z: &BBox) -> Result<KalmanState, KalmanError> {
        self.correct(&bbox_to_measurement(z))
    }

    /// Correction with the measurement pulled toward the prediction:
    /// `ẑ = bam·z + (1 - bam)·H x`, then `x + K (ẑ - H x)`. The covariance is
    /// corrected with the unmodified gain.
    pub fn update_with_momentum(&self, z: &BBox, bam: f64) -> Result<KalmanState, KalmanError> {
        if !(0.0..=1.0).contains(&bam) {
            return Err(KalmanError::MomentumOutOfRange(bam));
        }
        let h = observation_model();
        let predicted = h * self.mean;
        let blended = bbox_to_measurement(z) * bam + predicted * (1.0 - bam);
        self.correct(&blended)
    }

    fn correct(&self, z: &Measurement) -> Result<KalmanState, KalmanError> {
        let h = observation_model();
        let k = self.gain()?;
        let innovation = z - h * self.mean;
        let mean = self.mean + k * innovation;
        // Joseph form keeps the covariance positive semi-definite.
        let ikh = StateCovariance::identity() - k * h;
        let covariance = symmetrize(
            ikh * self.covariance * ikh.transpose() + k * measurement_noise() * k.transpose(),
        );
        Ok(KalmanState { mean, covariance })
    }

    /// Box for the current mean; extents are clamped to one pixel.
    pub fn to_bbox(&self) -> BBox {
        let (u, v, s, r) = (self.mean[0], self.mean[1], self.mean[2], self.mean[3]);
        let w = (s.max(0.0) * r.max(0.0)).sqrt();
        let h = if w > 0.0 { s / w } else { 0.0 };
        BBox::from_center_clamped(u, v, w, h)
    }
}

pub fn init_state(b: &BBox) -> KalmanState {
    KalmanState::new(b)
}

pub fn predict(st: &KalmanState) -> Prediction {
    st.predict()
}

pub fn update(st: &KalmanState, z: &BBox) -> Result<KalmanState, KalmanError> {
    st.update(z)
}

pub fn update_with_momentum(
    st: &KalmanState,
    z: &BBox,
    bam: f64,
) -> Result<KalmanState, KalmanError> {
    st.update_with_momentum(z, bam)
}

pub fn state_to_bbox(st: &KalmanState) -> BBox {
    st.to_bbox()
}

fn symmetrize(p: StateCovariance) -> StateCovariance {
    (p + p.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(l: f64, t: f64, r: f64, b: f64) -> BBox {
        BBox::new(l, t, r, b).unwrap()
    }

    fn max_abs(a: &StateVector, b: &StateVector) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn init_from_box() {
        let st = init_state(&bb(0.0, 0.0, 10.0, 10.0));
        assert_eq!(st.mean.as_slice(), &[5.0, 5.0, 100.0, 1.0, 0.0, 0.0, 0.0]);
        let st = init_state(&bb(10.0, 20.0, 30.0, 60.0));
        assert_eq!(st.mean.as_slice(), &[20.0, 40.0, 800.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(st.covariance, st.covariance.transpose());
        assert!(st.covariance.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn state_to_box_inverts_init() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(state_to_bbox(&init_state(&a)), a);
        let b = state_to_bbox(&init_state(&bb(10.0, 20.0, 30.0, 60.0)));
        for (x, y) in b.to_array().iter().zip([10.0, 20.0, 30.0, 60.0]) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_advances_position() {
        let mut st = init_state(&bb(0.0, 0.0, 10.0, 10.0));
        st.mean[4] = 2.0;
        let p = predict(&st);
        assert_eq!(p.state.mean[0], 7.0);
        assert_eq!(p.state.mean[1], 5.0);
        assert_eq!(p.state.mean[2], 100.0);
        assert!(!p.degenerate);
        assert!(p.state.covariance.trace() > st.covariance.trace());
    }

    #[test]
    fn zero_velocity_prediction_is_fixed_point() {
        let st = init_state(&bb(3.0, 4.0, 17.0, 40.0));
        assert_eq!(predict(&st).bbox, state_to_bbox(&st));
    }

    #[test]
    fn collapsing_scale_is_flagged() {
        let mut st = init_state(&bb(0.0, 0.0, 10.0, 10.0));
        st.mean[6] = -150.0;
        let p = predict(&st);
        assert!(p.degenerate);
        assert_eq!(p.state.mean[6], 0.0);
        assert_eq!(p.state.mean[2], 100.0);
        assert!(p.bbox.width() >= 1.0 && p.bbox.height() >= 1.0);

        let mut st = init_state(&bb(0.0, 0.0, 1.0, 0.5));
        st.mean[2] = 0.2;
        let p = predict(&st);
        assert!(p.degenerate);
        assert_eq!(p.state.mean[2], MIN_SCALE);
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let b = bb(10.0, 10.0, 30.0, 50.0);
        let st = predict(&init_state(&b)).state;
        let post = update(&st, &b).unwrap();
        assert!(max_abs(&post.mean, &st.mean) < 1e-12);
    }

    #[test]
    fn update_contracts_observed_variance() {
        let st = predict(&init_state(&bb(10.0, 10.0, 30.0, 50.0))).state;
        let post = update(&st, &bb(12.0, 11.0, 33.0, 52.0)).unwrap();
        for i in 0..4 {
            assert!(post.covariance[(i, i)] <= st.covariance[(i, i)]);
        }
    }

    #[test]
    fn static_box_converges() {
        let truth = bb(40.0, 60.0, 90.0, 160.0);
        let mut st = init_state(&bb(45.0, 55.0, 97.0, 150.0));
        for _ in 0..20 {
            st = update(&predict(&st).state, &truth).unwrap();
        }
        let est = state_to_bbox(&st);
        for (a, b) in est.to_array().iter().zip(truth.to_array()) {
            assert!((a - b).abs() < 0.5, "{est:?}");
        }
    }

    #[test]
    fn momentum_extremes() {
        let st = predict(&init_state(&bb(10.0, 10.0, 30.0, 50.0))).state;
        let z = bb(14.0, 12.0, 33.0, 55.0);
        let full = update(&st, &z).unwrap();
        let one = update_with_momentum(&st, &z, 1.0).unwrap();
        assert!(max_abs(&full.mean, &one.mean) < 1e-9);
        let zero = update_with_momentum(&st, &z, 0.0).unwrap();
        assert!(max_abs(&zero.mean, &st.mean) < 1e-9);
        assert_eq!(zero.covariance, full.covariance);
    }

    #[test]
    fn momentum_out_of_range() {
        let st = init_state(&bb(0.0, 0.0, 10.0, 10.0));
        let z = bb(1.0, 1.0, 11.0, 11.0);
        assert_eq!(
            update_with_momentum(&st, &z, 1.5),
            Err(KalmanError::MomentumOutOfRange(1.5))
        );
        assert!(update_with_momentum(&st, &z, -0.1).is_err());
        assert!(update_with_momentum(&st, &z, f64::NAN).is_err());
    }

    #[test]
    fn singular_innovation_diverges() {
        let mut st = init_state(&bb(0.0, 0.0, 10.0, 10.0));
        st.covariance[(0, 0)] = -1e9;
        assert_eq!(
            st.update(&bb(1.0, 1.0, 11.0, 11.0)),
            Err(KalmanError::Divergence)
        );
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0.0..500.0f64, 0.0..500.0f64, 4.0..120.0f64, 4.0..200.0f64)
            .prop_map(|(l, t, w, h)| BBox::from_ltwh(l, t, w, h).unwrap())
    }

    fn arb_state() -> impl Strategy<Value = KalmanState> {
        (
            arb_box(),
            prop::array::uniform3(-5.0..5.0f64),
            0usize..6,
            arb_box(),
        )
            .prop_map(|(b, vel, warm, obs)| {
                let mut st = init_state(&b);
                st.mean[4] = vel[0];
                st.mean[5] = vel[1];
                st.mean[6] = vel[2];
                for _ in 0..warm {
                    st = update(&predict(&st).state, &obs).unwrap();
                }
                predict(&st).state
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn momentum_matches_scaled_innovation(st in arb_state(), z in arb_box()) {
            let h = observation_model();
            let k = st.gain().unwrap();
            let innovation = bbox_to_measurement(&z) - h * st.mean;
            let full = update(&st, &z).unwrap();
            prop_assert!(max_abs(&update_with_momentum(&st, &z, 1.0).unwrap().mean, &full.mean) < 1e-9);
            for bam in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let expected = st.mean + k * innovation * bam;
                let got = update_with_momentum(&st, &z, bam).unwrap();
                prop_assert!(max_abs(&got.mean, &expected) < 1e-9);
            }
        }

        #[test]
        fn momentum_is_affine(st in arb_state(), z in arb_box()) {
            let a = update_with_momentum(&st, &z, 0.2).unwrap().mean;
            let b = update_with_momentum(&st, &z, 0.5).unwrap().mean;
            let c = update_with_momentum(&st, &z, 0.8).unwrap().mean;
            prop_assert!(max_abs(&(b - a), &(c - b)) < 1e-9);
        }

        #[test]
        fn round_trip_box(b in arb_box()) {
            let back = state_to_bbox(&init_state(&b));
            for (x, y) in back.to_array().iter().zip(b.to_array()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn covariance_stays_symmetric_over_long_runs() {
        let mut st = init_state(&bb(100.0, 100.0, 140.0, 200.0));
        for i in 0..100 {
            st = predict(&st).state;
            if i % 3 != 0 {
                let shift = i as f64 * 1.5;
                let z = bb(100.0 + shift, 100.0, 140.0 + shift, 201.0);
                st = if i % 2 == 0 {
                    update(&st, &z).unwrap()
                } else {
                    update_with_momentum(&st, &z, 0.4).unwrap()
                };
            }
            let asym = (st.covariance - st.covariance.transpose()).abs().max();
            assert!(asym < 1e-9);
            assert!(st.covariance.diagonal().iter().all(|&d| d >= 0.0));
        }
    }
}
