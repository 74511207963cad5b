//! Permanent-magnet synchronous motor in the rotor dq frame, driven by a
//! current-controlled inverter.
//!
//! Two levels of detail are available. [`PlantModel::IdealCurrent`] assumes
//! the inverter's current loop tracks instantly (`i_d = 0`, `i_q = i_q_ref`)
//! and integrates only the mechanical rows. [`PlantModel::FullDq`] integrates
//! all four rows with a saturated proportional current regulator in front of
//! the stator voltages.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    /// Stator resistance (Ω).
    pub r_stator: f64,
    /// d-axis inductance (H).
    pub l_d: f64,
    /// q-axis inductance (H).
    pub l_q: f64,
    /// Rotor flux linkage (Wb).
    pub phi_f: f64,
    /// Rotor plus load inertia (kg·m²).
    pub inertia: f64,
    /// Inverter voltage limit (V).
    pub u_max: f64,
    /// Load torque T_x (N·m).
    pub load_torque: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            r_stator: 0.9,
            l_d: 0.0051,
            l_q: 0.0056,
            phi_f: 0.5,
            inertia: 0.025,
            u_max: 250.0,
            load_torque: 0.0,
        }
    }
}

impl MotorParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("r_stator", self.r_stator),
            ("l_d", self.l_d),
            ("l_q", self.l_q),
            ("phi_f", self.phi_f),
            ("inertia", self.inertia),
            ("u_max", self.u_max),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("motor parameter {name} must be positive, got {v}")));
            }
        }
        if !self.load_torque.is_finite() {
            return Err(Error::config("load torque must be finite"));
        }
        Ok(())
    }

    /// Electromagnetic torque for the given stator currents.
    pub fn torque(&self, i_d: f64, i_q: f64) -> f64 {
        ((self.l_d - self.l_q) * i_d + self.phi_f) * i_q
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MotorState {
    pub i_d: f64,
    pub i_q: f64,
    /// Mechanical speed (rad/s).
    pub omega: f64,
    /// Rotor angle, wrapped to `[0, 2π)`.
    pub theta: f64,
}

impl MotorState {
    fn to_array(self) -> [f64; 4] {
        [self.i_d, self.i_q, self.omega, self.theta]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            i_d: a[0],
            i_q: a[1],
            omega: a[2],
            theta: a[3],
        }
    }

    fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Time derivatives of a [`MotorState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorRates {
    pub d_i_d: f64,
    pub d_i_q: f64,
    pub d_omega: f64,
    pub d_theta: f64,
}

/// dq-frame motor equations. The q-axis row carries the cross-coupling term
/// `-ω·L_d·i_d`.
pub fn motor_derivatives(s: &MotorState, u_d: f64, u_q: f64, p: &MotorParams) -> MotorRates {
    MotorRates {
        d_i_d: (u_d + s.omega * p.l_q * s.i_q - p.r_stator * s.i_d) / p.l_d,
        d_i_q: (u_q - s.omega * p.l_d * s.i_d - p.r_stator * s.i_q - s.omega * p.phi_f) / p.l_q,
        d_omega: (p.torque(s.i_d, s.i_q) - p.load_torque) / p.inertia,
        d_theta: s.omega,
    }
}

fn rates_array(r: MotorRates) -> [f64; 4] {
    [r.d_i_d, r.d_i_q, r.d_omega, r.d_theta]
}

/// Classical fourth-order Runge-Kutta step for a fixed-size system.
pub fn rk4<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    dt: f64,
) -> [f64; N] {
    let offset = |k: &[f64; N], h: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + h * k[i]) };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &offset(&k1, 0.5 * dt));
    let k3 = f(t + 0.5 * dt, &offset(&k2, 0.5 * dt));
    let k4 = f(t + dt, &offset(&k3, dt));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn finish(next: [f64; 4], t: f64) -> Result<MotorState> {
    let mut s = MotorState::from_array(next);
    if !s.is_finite() {
        return Err(Error::Divergence { t });
    }
    s.theta = s.theta.rem_euclid(TAU);
    if s.theta >= TAU {
        s.theta = 0.0;
    }
    Ok(s)
}

/// One RK4 step of the full model with stator voltages held over the step.
pub fn integrate_step(s: &MotorState, u_d: f64, u_q: f64, p: &MotorParams, dt: f64) -> Result<MotorState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config(format!("integration step must be positive, got {dt}")));
    }
    let next = rk4(
        |_, y| rates_array(motor_derivatives(&MotorState::from_array(*y), u_d, u_q, p)),
        0.0,
        &s.to_array(),
        dt,
    );
    finish(next, dt)
}

/// Time-dependent scalar input (current reference or load torque).
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Constant(f64),
    Sinusoid {
        amplitude: f64,
        /// Hz.
        frequency: f64,
        /// rad.
        phase: f64,
        offset: f64,
    },
    /// Piecewise constant: each `(t, v)` holds `v` from `t` until the next
    /// breakpoint. Zero before the first breakpoint.
    Steps(Vec<(f64, f64)>),
    /// Zero-order hold of `values[k]` over `[k·period, (k+1)·period)`.
    Held { period: f64, values: Vec<f64> },
}

impl Signal {
    pub fn sinusoid(amplitude: f64, frequency: f64) -> Self {
        Signal::Sinusoid {
            amplitude,
            frequency,
            phase: 0.0,
            offset: 0.0,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Signal::Constant(v) => *v,
            Signal::Sinusoid {
                amplitude,
                frequency,
                phase,
                offset,
            } => offset + amplitude * (TAU * frequency * t + phase).sin(),
            Signal::Steps(points) => points
                .iter()
                .take_while(|(ts, _)| *ts <= t)
                .last()
                .map_or(0.0, |&(_, v)| v),
            Signal::Held { period, values } => {
                if values.is_empty() {
                    return 0.0;
                }
                // tolerate k·period landing a few ulps below the boundary
                let k = (t / period + 1e-9).floor().max(0.0) as usize;
                values[k.min(values.len() - 1)]
            }
        }
    }

    /// Piecewise-constant signals are evaluated once per integration step
    /// (at its midpoint) so that a jump at a step boundary is never smeared
    /// into the Runge-Kutta stages.
    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, Signal::Constant(_) | Signal::Steps(_) | Signal::Held { .. })
    }

    /// Samples at `t_k = k·period` for `k in 0..n`.
    pub fn sample(&self, period: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.at(k as f64 * period)).collect()
    }
}

/// Adds uniform noise in `[-fraction·nominal, +fraction·nominal]`, seeded.
pub fn add_noise(series: &[f64], fraction: f64, nominal: f64, seed: u64) -> Vec<f64> {
    let bound = (fraction * nominal).abs();
    if bound == 0.0 || !bound.is_finite() {
        return series.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    series
        .iter()
        .map(|x| x + rng.random_range(-bound..=bound))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantModel {
    IdealCurrent,
    /// All four dq rows under a proportional current regulator with gain
    /// `current_gain` (V/A); the voltage vector is limited to `u_max`. The
    /// current error needed to supply the back-EMF slows the speed slightly
    /// unless the gain is large.
    FullDq { current_gain: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Recording period (s); an integer multiple of `dt`.
    pub sample_dt: f64,
    pub duration: f64,
    pub model: PlantModel,
    pub initial: MotorState,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            sample_dt: 1e-3,
            duration: 10.0,
            model: PlantModel::IdealCurrent,
            initial: MotorState::default(),
        }
    }
}

impl SimConfig {
    fn steps_per_sample(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("integration step must be positive, got {}", self.dt)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config(format!("duration must be positive, got {}", self.duration)));
        }
        let ratio = self.sample_dt / self.dt;
        let whole = ratio.round();
        if !(whole >= 1.0 && (ratio - whole).abs() < 1e-6 * whole) {
            return Err(Error::config(format!(
                "sample_dt {} must be an integer multiple of dt {}",
                self.sample_dt, self.dt
            )));
        }
        if let PlantModel::FullDq { current_gain } = self.model {
            if !(current_gain > 0.0 && current_gain.is_finite()) {
                return Err(Error::config("current_gain must be positive"));
            }
        }
        Ok(whole as usize)
    }

    pub fn sample_count(&self) -> usize {
        (self.duration / self.sample_dt).round() as usize
    }
}

/// Recorded plant run: one row per sampling instant, plus the state at the
/// end of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub i_q_ref: Vec<f64>,
    pub omega: Vec<f64>,
    pub final_state: MotorState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Saturated proportional speed controller producing `i_q_ref`, evaluated at
/// each sampling instant and held in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedController {
    /// A per rad/s.
    pub gain: f64,
    /// Current reference limit (A).
    pub limit: f64,
}

impl SpeedController {
    pub fn output(&self, reference: f64, omega: f64) -> f64 {
        (self.gain * (reference - omega)).clamp(-self.limit, self.limit)
    }
}

#[derive(Clone, Copy)]
enum Drive<'a> {
    Hold(f64),
    Follow(&'a Signal),
}

fn eval_on_step(signal: &Signal, step_start: f64, dt: f64, tau: f64) -> f64 {
    if signal.is_piecewise_constant() {
        signal.at(step_start + 0.5 * dt)
    } else {
        signal.at(tau)
    }
}

fn plant_rates(model: PlantModel, p: &MotorParams, y: &[f64; 4], i_q_ref: f64) -> [f64; 4] {
    let s = MotorState::from_array(*y);
    match model {
        PlantModel::IdealCurrent => [
            0.0,
            0.0,
            (p.torque(0.0, i_q_ref) - p.load_torque) / p.inertia,
            s.omega,
        ],
        PlantModel::FullDq { current_gain } => {
            let mut u_d = -current_gain * s.i_d;
            let mut u_q = current_gain * (i_q_ref - s.i_q);
            let magnitude = u_d.hypot(u_q);
            if magnitude > p.u_max {
                let scale = p.u_max / magnitude;
                u_d *= scale;
                u_q *= scale;
            }
            rates_array(motor_derivatives(&s, u_d, u_q, p))
        }
    }
}

fn run<'a>(
    params: &MotorParams,
    load: &Signal,
    cfg: &SimConfig,
    mut drive_for_sample: impl FnMut(f64, &MotorState) -> Drive<'a>,
) -> Result<Trajectory> {
    params.validate()?;
    let per_sample = cfg.steps_per_sample()?;
    let n = cfg.sample_count();
    let mut traj = Trajectory {
        t: Vec::with_capacity(n),
        i_q_ref: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        final_state: cfg.initial,
    };
    let mut state = cfg.initial;
    if cfg.model == PlantModel::IdealCurrent {
        state.i_d = 0.0;
    }

    for k in 0..n {
        let t_k = (k * per_sample) as f64 * cfg.dt;
        let drive = drive_for_sample(t_k, &state);
        let recorded = match drive {
            Drive::Hold(v) => v,
            Drive::Follow(sig) => eval_on_step(sig, t_k, cfg.dt, t_k),
        };
        if cfg.model == PlantModel::IdealCurrent {
            state.i_q = recorded;
        }
        traj.t.push(t_k);
        traj.i_q_ref.push(recorded);
        traj.omega.push(state.omega);

        for j in 0..per_sample {
            let t0 = (k * per_sample + j) as f64 * cfg.dt;
            let reference = |tau: f64| match drive {
                Drive::Hold(v) => v,
                Drive::Follow(sig) => eval_on_step(sig, t0, cfg.dt, tau),
            };
            let mut p = *params;
            p.load_torque = eval_on_step(load, t0, cfg.dt, t0);
            let next = rk4(
                |tau, y| plant_rates(cfg.model, &p, y, reference(tau)),
                t0,
                &state.to_array(),
                cfg.dt,
            );
            state = finish(next, t0 + cfg.dt)?;
            if cfg.model == PlantModel::IdealCurrent {
                state.i_q = reference(t0 + cfg.dt);
            }
        }
    }
    traj.final_state = state;
    Ok(traj)
}

/// Open-loop run driven by a current reference profile.
pub fn simulate(profile: &Signal, load: &Signal, params: &MotorParams, cfg: &SimConfig) -> Result<Trajectory> {
    run(params, load, cfg, |_, _| Drive::Follow(profile))
}

/// Closed-loop speed-step run: the controller computes `i_q_ref` from the
/// speed at each sampling instant.
pub fn simulate_speed_loop(
    speed_reference: &Signal,
    controller: SpeedController,
    load: &Signal,
    params: &MotorParams,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    run(params, load, cfg, |t, s| {
        Drive::Hold(controller.output(speed_reference.at(t), s.omega))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MotorParams {
        MotorParams::default()
    }

    #[test]
    fn equilibrium_has_zero_rates() {
        let r = motor_derivatives(&MotorState::default(), 0.0, 0.0, &params());
        assert_eq!(rates_array(r), [0.0; 4]);
        let s = integrate_step(&MotorState::default(), 0.0, 0.0, &params(), 1e-4).unwrap();
        assert_eq!(s, MotorState::default());
    }

    #[test]
    fn torque_row_with_appendix_values() {
        let s = MotorState {
            i_q: 10.0,
            ..Default::default()
        };
        let r = motor_derivatives(&s, 0.0, 0.0, &params());
        assert_eq!(r.d_omega, 0.5 * 10.0 / 0.025);
    }

    #[test]
    fn q_axis_voltage_row() {
        let r = motor_derivatives(&MotorState::default(), 0.0, 250.0, &params());
        assert!((r.d_i_q - 250.0 / 0.0056).abs() < 1e-9);
        assert!((r.d_i_q - 44642.857142857).abs() < 1e-6);
    }

    #[test]
    fn cross_coupling_sign() {
        let s = MotorState {
            i_d: 2.0,
            omega: 100.0,
            ..Default::default()
        };
        let r = motor_derivatives(&s, 0.0, 0.0, &params());
        let expected = (-100.0 * 0.0051 * 2.0 - 100.0 * 0.5) / 0.0056;
        assert!((r.d_i_q - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_step_is_rejected() {
        assert!(matches!(
            integrate_step(&MotorState::default(), 0.0, 0.0, &params(), 0.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn huge_step_diverges() {
        let s = MotorState {
            omega: 100.0,
            ..Default::default()
        };
        let mut s = s;
        let mut result = Ok(s);
        for _ in 0..200 {
            result = integrate_step(&s, 0.0, 0.0, &params(), 0.5);
            match result {
                Ok(next) => s = next,
                Err(_) => break,
            }
        }
        assert!(matches!(result, Err(Error::Divergence { .. })));
    }

    #[test]
    fn theta_is_wrapped() {
        let s = MotorState {
            omega: 100.0,
            theta: 6.2,
            ..Default::default()
        };
        let next = integrate_step(&s, 0.0, 0.0, &params(), 1e-3).unwrap();
        assert!((0.0..TAU).contains(&next.theta));
    }

    #[test]
    fn signals() {
        let s = Signal::sinusoid(10.0, 0.5);
        assert_eq!(s.at(0.0), 0.0);
        assert!(s.at(1.0).abs() < 1e-12);
        assert!((s.at(0.5) - 10.0).abs() < 1e-12);
        assert_eq!(Signal::Constant(5.0).at(123.0), 5.0);
        let steps = Signal::Steps(vec![(0.0, 0.0), (1.0, 8.0)]);
        assert_eq!(steps.at(1.5), 8.0);
        assert_eq!(steps.at(0.5), 0.0);
        let held = Signal::Held {
            period: 0.1,
            values: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(held.at(0.15), 2.0);
        assert_eq!(held.at(5.0), 3.0);
    }

    #[test]
    fn noise_bounds_and_determinism() {
        let base = vec![0.0; 1000];
        assert_eq!(add_noise(&base, 0.0, 10.0, 3), base);
        let a = add_noise(&base, 0.1, 10.0, 3);
        assert!(a.iter().all(|v| v.abs() <= 1.0));
        assert!(a.iter().any(|v| v.abs() > 0.5));
        assert_eq!(a, add_noise(&base, 0.1, 10.0, 3));
        assert_ne!(a, add_noise(&base, 0.1, 10.0, 4));
    }

    #[test]
    fn zero_reference_keeps_motor_at_rest() {
        let cfg = SimConfig {
            duration: 0.5,
            ..Default::default()
        };
        let tr = simulate(&Signal::Constant(0.0), &Signal::Constant(0.0), &params(), &cfg).unwrap();
        assert!(tr.omega.iter().all(|&w| w == 0.0));
        assert_eq!(tr.len(), 500);
    }

    #[test]
    fn ideal_model_constant_acceleration() {
        let cfg = SimConfig {
            duration: 0.1,
            ..Default::default()
        };
        let tr = simulate(&Signal::Constant(10.0), &Signal::Constant(0.0), &params(), &cfg).unwrap();
        assert!((tr.final_state.omega - 20.0).abs() < 1e-9);
        assert!((tr.omega[50] - 10.0).abs() < 1e-9);
        assert_eq!(tr.i_q_ref[0], 10.0);
    }

    #[test]
    fn load_step_decelerates() {
        let cfg = SimConfig {
            duration: 1.0,
            ..Default::default()
        };
        let load = Signal::Steps(vec![(0.0, 1.0), (0.5, 0.0)]);
        let tr = simulate(&Signal::Constant(0.0), &load, &params(), &cfg).unwrap();
        // -40 rad/s² for half a second, then coasting
        assert!((tr.final_state.omega + 20.0).abs() < 1e-9);
    }

    #[test]
    fn sample_dt_must_divide() {
        let cfg = SimConfig {
            dt: 3e-4,
            ..Default::default()
        };
        assert!(simulate(&Signal::Constant(0.0), &Signal::Constant(0.0), &params(), &cfg).is_err());
    }

    #[test]
    fn speed_loop_tracks_reference() {
        let cfg = SimConfig {
            duration: 3.0,
            model: PlantModel::FullDq { current_gain: 100.0 },
            ..Default::default()
        };
        let ctrl = SpeedController { gain: 0.5, limit: 10.0 };
        let tr = simulate_speed_loop(
            &Signal::Constant(100.0),
            ctrl,
            &Signal::Constant(0.0),
            &params(),
            &cfg,
        )
        .unwrap();
        assert!(tr.i_q_ref[0] == 10.0);
        assert!((tr.final_state.omega - 100.0).abs() < 1.0, "{}", tr.final_state.omega);
    }
}
