//! Seven-state constant-velocity Kalman filter over `[u, v, s, r, du, dv, ds]`
//! with observation-centric re-update across missed frames.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{BBox, CenterForm};

pub type StateVector = SVector<f64, 7>;
pub type Covariance = SMatrix<f64, 7, 7>;
pub type Measurement = SVector<f64, 4>;

/// Filter mean and covariance at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KfState {
    pub x: StateVector,
    pub p: Covariance,
}

/// A box measurement `[u, v, s, r]` tagged with its frame index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub z: [f64; 4],
    pub frame: u64,
}

impl Observation {
    pub fn new(z: [f64; 4], frame: u64) -> Self {
        Self { z, frame }
    }

    pub fn from_bbox(b: &BBox, frame: u64) -> Self {
        let c = b.to_center_form();
        Self::new([c.u, c.v, c.s, c.r], frame)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.z[0], self.z[1])
    }

    fn vector(&self) -> Measurement {
        Measurement::from(self.z)
    }
}

/// Diagonal noise settings. Defaults follow the SORT lineage.
#[derive(Debug, Clone, PartialEq)]
pub struct KfParams {
    pub p_init: [f64; 7],
    pub q: [f64; 7],
    pub r: [f64; 4],
}

impl Default for KfParams {
    fn default() -> Self {
        Self {
            p_init: [10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4],
            q: [1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4],
            r: [1.0, 1.0, 10.0, 10.0],
        }
    }
}

/// Transition `F`, projection `H` and noise `Q`, `R` with `dt = 1` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KfModel {
    pub f: Covariance,
    pub h: SMatrix<f64, 4, 7>,
    pub q: Covariance,
    pub r: SMatrix<f64, 4, 4>,
    p_init: [f64; 7],
}

impl Default for KfModel {
    fn default() -> Self {
        Self::new(&KfParams::default())
    }
}

impl KfModel {
    pub fn new(params: &KfParams) -> Self {
        let mut f = Covariance::identity();
        f[(0, 4)] = 1.0;
        f[(1, 5)] = 1.0;
        f[(2, 6)] = 1.0;
        let mut h = SMatrix::<f64, 4, 7>::zeros();
        for i in 0..4 {
            h[(i, i)] = 1.0;
        }
        Self {
            f,
            h,
            q: Covariance::from_diagonal(&StateVector::from(params.q)),
            r: SMatrix::<f64, 4, 4>::from_diagonal(&Measurement::from(params.r)),
            p_init: params.p_init,
        }
    }

    /// Track birth: zero velocities and the configured initial covariance.
    pub fn initiate(&self, z: &Observation) -> KfState {
        let [u, v, s, r] = z.z;
        KfState {
            x: StateVector::from([u, v, s, r, 0.0, 0.0, 0.0]),
            p: Covariance::from_diagonal(&StateVector::from(self.p_init)),
        }
    }

    /// `x' = F x`, `P' = F P F^T + Q`, zeroing the scale rate first when it
    /// would drive the area non-positive.
    pub fn predict(&self, state: &KfState) -> KfState {
        let mut x = state.x;
        if x[2] + x[6] <= 0.0 {
            x[6] = 0.0;
        }
        KfState {
            x: self.f * x,
            p: self.f * state.p * self.f.transpose() + self.q,
        }
    }

    /// Standard measurement update. The posterior covariance is symmetrized.
    pub fn update(&self, state: &KfState, z: &Observation) -> Result<KfState> {
        let ht = self.h.transpose();
        let s = self.h * state.p * ht + self.r;
        let s_inv = s.try_inverse().ok_or(Error::Singular)?;
        let k = state.p * ht * s_inv;
        let innovation = z.vector() - self.h * state.x;
        let x = state.x + k * innovation;
        let p = (Covariance::identity() - k * self.h) * state.p;
        Ok(KfState {
            x,
            p: (p + p.transpose()) * 0.5,
        })
    }

    /// Re-runs the filter from the checkpoint taken at `z1` up to `z2`,
    /// feeding linearly interpolated observations for every missed frame.
    pub fn oru_reupdate(&self, state_at_t1: &KfState, z1: &Observation, z2: &Observation) -> Result<KfState> {
        if z2.frame <= z1.frame + 1 {
            return Err(Error::InvalidArgument(format!(
                "re-update needs a gap: last seen {}, re-associated {}",
                z1.frame, z2.frame
            )));
        }
        let mut state = state_at_t1.clone();
        for t in z1.frame + 1..z2.frame {
            state = self.predict(&state);
            state = self.update(&state, &virtual_trajectory(z1, z2, t)?)?;
        }
        state = self.predict(&state);
        self.update(&state, z2)
    }
}

impl KfState {
    pub fn measurement(&self) -> [f64; 4] {
        [self.x[0], self.x[1], self.x[2], self.x[3]]
    }

    /// Box implied by the mean. Non-positive scale or ratio gives a
    /// zero-size box at the center.
    pub fn to_bbox(&self) -> BBox {
        let (u, v, s, r) = (self.x[0], self.x[1], self.x[2], self.x[3]);
        if s <= 0.0 || r <= 0.0 || !s.is_finite() || !r.is_finite() {
            return BBox::new(u, v, 0.0, 0.0);
        }
        BBox::from_center_form(CenterForm { u, v, s, r }).unwrap_or(BBox::new(u, v, 0.0, 0.0))
    }
}

/// Componentwise linear interpolation between two observations at frame `t`,
/// `z1.frame < t < z2.frame`.
pub fn virtual_trajectory(z1: &Observation, z2: &Observation, t: u64) -> Result<Observation> {
    if !(z1.frame < t && t < z2.frame) {
        return Err(Error::InvalidArgument(format!(
            "frame {t} is outside ({}, {})",
            z1.frame, z2.frame
        )));
    }
    let alpha = (t - z1.frame) as f64 / (z2.frame - z1.frame) as f64;
    let mut z = [0.0; 4];
    for (i, zi) in z.iter_mut().enumerate() {
        *zi = z1.z[i] + (z2.z[i] - z1.z[i]) * alpha;
    }
    Ok(Observation::new(z, t))
}
