//! Robot-and-wall world: a single range sensor on a turntable facing a wall
//! that moves (and optionally rotates) between latent configurations.
//!
//! The agent sits at the origin. The wall is the infinite line through
//! `(d, 0)` with unit normal `(cos phi, sin phi)`, and the sensor ray points
//! at angle `m` from the positive x-axis.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use crate::bounds::reflect;

/// Hidden wall configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    /// Distance from the agent to the wall along the x-axis.
    pub d: f64,
    /// Wall orientation in radians.
    pub phi: f64,
}

/// A latent state together with its index in the discrete state set, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latent {
    pub state: LatentState,
    pub id: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DynamicsMode {
    DiscreteTranslate { n_positions: usize },
    ContinuousTranslate,
    DiscreteTranslateRotate { n_d: usize, n_phi: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentDynamics {
    pub mode: DynamicsMode,
    /// Per-step probability that the wall changes configuration.
    pub change_prob: f64,
    /// Step scale of the continuous random walk over `d`.
    pub sigma_e: f64,
    /// Discrete translation moves to an adjacent position instead of a
    /// uniformly drawn one.
    pub neighbor_steps: bool,
}

impl Default for LatentDynamics {
    fn default() -> Self {
        Self {
            mode: DynamicsMode::DiscreteTranslate { n_positions: 5 },
            change_prob: 0.1,
            sigma_e: 0.15,
            neighbor_steps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub d_min: f64,
    pub d_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub m_min: f64,
    pub m_max: f64,
    /// Sensor saturation range.
    pub s_max: f64,
    /// Standard deviation of additive sensor noise; zero disables noise.
    pub sensor_noise: f64,
    pub dynamics: LatentDynamics,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            d_min: 1.0,
            d_max: 3.0,
            phi_min: 0.0,
            phi_max: 0.0,
            m_min: -FRAC_PI_4,
            m_max: FRAC_PI_4,
            s_max: 6.0,
            sensor_noise: 0.0,
            dynamics: LatentDynamics::default(),
        }
    }
}

impl WorldConfig {
    /// Five wall positions, fixed orientation.
    pub fn discrete_translate() -> Self {
        Self::default()
    }

    /// Wall drifts continuously between `d_min` and `d_max`.
    pub fn continuous_translate() -> Self {
        Self {
            dynamics: LatentDynamics {
                mode: DynamicsMode::ContinuousTranslate,
                ..LatentDynamics::default()
            },
            ..Self::default()
        }
    }

    /// Three distances times two orientations; the response curves cross.
    pub fn discrete_translate_rotate() -> Self {
        Self {
            phi_min: -FRAC_PI_8,
            phi_max: FRAC_PI_8,
            // the farthest tilted wall reads up to 3 cos(pi/8) / cos(3 pi/8) ~ 7.24
            s_max: 8.0,
            dynamics: LatentDynamics {
                mode: DynamicsMode::DiscreteTranslateRotate { n_d: 3, n_phi: 2 },
                ..LatentDynamics::default()
            },
            ..Self::default()
        }
    }

    /// Range reading along motor angle `m` for wall configuration `e`.
    pub fn sense(&self, m: f64, e: &LatentState) -> f64 {
        let c = (m - e.phi).cos();
        if c <= 0.0 {
            return self.s_max;
        }
        let t = e.d * e.phi.cos() / c;
        if t > self.s_max || t < 0.0 {
            self.s_max
        } else {
            t
        }
    }

    /// Range reading with the configured additive noise, kept in `[0, s_max]`.
    pub fn sense_noisy<R: Rng + ?Sized>(&self, m: f64, e: &LatentState, rng: &mut R) -> f64 {
        let s = self.sense(m, e);
        if self.sensor_noise > 0.0 {
            let noise = Normal::new(0.0, self.sensor_noise).expect("finite noise scale");
            (s + noise.sample(rng)).clamp(0.0, self.s_max)
        } else {
            s
        }
    }

    /// The discrete latent state set, indexed by latent id. `None` for the
    /// continuous mode.
    pub fn latent_states(&self) -> Option<Vec<LatentState>> {
        let phi_mid = 0.5 * (self.phi_min + self.phi_max);
        match self.dynamics.mode {
            DynamicsMode::DiscreteTranslate { n_positions } => Some(
                grid(self.d_min, self.d_max, n_positions)
                    .map(|d| LatentState { d, phi: phi_mid })
                    .collect(),
            ),
            DynamicsMode::DiscreteTranslateRotate { n_d, n_phi } => {
                let phis: Vec<f64> = grid(self.phi_min, self.phi_max, n_phi).collect();
                Some(
                    grid(self.d_min, self.d_max, n_d)
                        .flat_map(|d| phis.iter().map(move |&phi| LatentState { d, phi }))
                        .collect(),
                )
            }
            DynamicsMode::ContinuousTranslate => None,
        }
    }

    /// Draws the initial wall configuration uniformly.
    pub fn initial_latent<R: Rng + ?Sized>(&self, rng: &mut R) -> Latent {
        match self.latent_states() {
            Some(states) => {
                let id = rng.random_range(0..states.len());
                Latent { state: states[id], id: Some(id) }
            }
            None => Latent {
                state: LatentState {
                    d: rng.random_range(self.d_min..=self.d_max),
                    phi: 0.5 * (self.phi_min + self.phi_max),
                },
                id: None,
            },
        }
    }

    /// Advances the wall by one time step.
    pub fn step_latent<R: Rng + ?Sized>(&self, current: &Latent, rng: &mut R) -> Latent {
        let dynamics = &self.dynamics;
        if !rng.random_bool(dynamics.change_prob.clamp(0.0, 1.0)) {
            return *current;
        }
        match (self.latent_states(), current.id) {
            (Some(states), Some(id)) if states.len() > 1 => {
                let next = match dynamics.mode {
                    DynamicsMode::DiscreteTranslate { .. } if dynamics.neighbor_steps => {
                        if id == 0 {
                            1
                        } else if id + 1 == states.len() || rng.random_bool(0.5) {
                            id - 1
                        } else {
                            id + 1
                        }
                    }
                    _ => {
                        // uniform over the other states
                        let j = rng.random_range(0..states.len() - 1);
                        if j >= id {
                            j + 1
                        } else {
                            j
                        }
                    }
                };
                Latent { state: states[next], id: Some(next) }
            }
            (Some(_), _) => *current,
            (None, _) => {
                let step = Normal::new(0.0, dynamics.sigma_e.max(0.0))
                    .expect("finite step scale")
                    .sample(rng);
                Latent {
                    state: LatentState {
                        d: reflect(current.state.d + step, self.d_min, self.d_max),
                        phi: current.state.phi,
                    },
                    id: None,
                }
            }
        }
    }

    /// Lists every violated invariant of the geometry and dynamics.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = [
            ("d_min", self.d_min),
            ("d_max", self.d_max),
            ("phi_min", self.phi_min),
            ("phi_max", self.phi_max),
            ("m_min", self.m_min),
            ("m_max", self.m_max),
            ("s_max", self.s_max),
            ("sensor_noise", self.sensor_noise),
            ("change_prob", self.dynamics.change_prob),
            ("sigma_e", self.dynamics.sigma_e),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                out.push(format!("{name} must be finite"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        if self.d_min <= 0.0 {
            out.push(format!("d_min must be > 0 (d_min={})", self.d_min));
        }
        if self.d_min >= self.d_max {
            out.push(format!(
                "d_min must be < d_max (d_min={}, d_max={})",
                self.d_min, self.d_max
            ));
        }
        if self.phi_min > self.phi_max {
            out.push(format!(
                "phi_min must be <= phi_max (phi_min={}, phi_max={})",
                self.phi_min, self.phi_max
            ));
        }
        if self.phi_max - self.phi_min >= FRAC_PI_2 {
            out.push("phi_max - phi_min must be < pi/2".to_string());
        }
        if self.m_min >= self.m_max {
            out.push(format!(
                "m_min must be < m_max (m_min={}, m_max={})",
                self.m_min, self.m_max
            ));
        }
        let worst = self.m_min.abs().max(self.m_max.abs()) + self.phi_min.abs().max(self.phi_max.abs());
        if worst >= FRAC_PI_2 {
            out.push("max |m| + max |phi| must be < pi/2".to_string());
        } else if self.s_max <= self.d_max / worst.cos() {
            out.push(format!(
                "s_max must exceed d_max / cos(max|m| + max|phi|) = {:.6} (s_max={})",
                self.d_max / worst.cos(),
                self.s_max
            ));
        }
        if self.sensor_noise < 0.0 {
            out.push("sensor_noise must be >= 0".to_string());
        }
        let dynamics = &self.dynamics;
        if !(0.0..=1.0).contains(&dynamics.change_prob) {
            out.push(format!("change_prob must lie in [0, 1] (change_prob={})", dynamics.change_prob));
        }
        match dynamics.mode {
            DynamicsMode::DiscreteTranslate { n_positions } if n_positions < 2 => {
                out.push("n_positions must be >= 2".to_string());
            }
            DynamicsMode::DiscreteTranslateRotate { n_d, n_phi } => {
                if n_d < 1 || n_phi < 1 || n_d * n_phi < 2 {
                    out.push("n_d * n_phi must be >= 2 with both >= 1".to_string());
                }
                if n_phi >= 2 && self.phi_min >= self.phi_max {
                    out.push("n_phi >= 2 requires phi_min < phi_max".to_string());
                }
            }
            DynamicsMode::ContinuousTranslate if dynamics.sigma_e <= 0.0 => {
                out.push("sigma_e must be > 0 for the continuous mode".to_string());
            }
            _ => {}
        }
        out
    }
}

/// `n` evenly spaced values covering `[lo, hi]`; the midpoint when `n == 1`.
fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use std::f64::consts::PI;

    /// Marches along the ray until it crosses the wall line.
    fn march(m: f64, e: &LatentState, s_max: f64) -> f64 {
        let (dx, dy) = (m.cos(), m.sin());
        let (nx, ny) = (e.phi.cos(), e.phi.sin());
        let offset = e.d * nx;
        let h = 1e-5;
        let mut t = 0.0;
        while t <= s_max {
            if t * (dx * nx + dy * ny) >= offset {
                return t;
            }
            t += h;
        }
        s_max
    }

    #[test]
    fn perpendicular_ray_reads_distance() {
        let w = WorldConfig::default();
        assert_eq!(w.sense(0.0, &LatentState { d: 2.0, phi: 0.0 }), 2.0);
    }

    #[test]
    fn ray_away_from_wall_saturates() {
        let w = WorldConfig::default();
        let e = LatentState { d: 2.0, phi: 0.0 };
        assert_eq!(w.sense(PI / 2.0, &e), w.s_max);
        assert_eq!(w.sense(0.75 * PI, &e), w.s_max);
        assert_eq!(w.sense(-PI, &e), w.s_max);
    }

    #[test]
    fn oblique_reading_matches_ray_march() {
        let w = WorldConfig::default();
        let e = LatentState { d: 2.0, phi: 0.0 };
        let s = w.sense(FRAC_PI_4, &e);
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((s - march(FRAC_PI_4, &e, w.s_max)).abs() < 2e-5);

        let tilted = LatentState { d: 1.5, phi: -FRAC_PI_8 };
        for &m in &[-0.7, -0.2, 0.0, 0.3, 0.78] {
            let s = w.sense(m, &tilted);
            assert!((s - march(m, &tilted, w.s_max)).abs() < 2e-5, "m={m}");
        }
    }

    #[test]
    fn readings_are_even_and_minimal_at_zero_for_square_wall() {
        let w = WorldConfig::default();
        let e = LatentState { d: 1.7, phi: 0.0 };
        let at_zero = w.sense(0.0, &e);
        for i in 1..=100 {
            let m = w.m_max * i as f64 / 100.0;
            assert_eq!(w.sense(m, &e), w.sense(-m, &e));
            assert!(w.sense(m, &e) > at_zero);
        }
    }

    #[test]
    fn readings_stay_within_range() {
        let w = WorldConfig::discrete_translate_rotate();
        for e in w.latent_states().unwrap() {
            for i in 0..=400 {
                let m = -PI + 2.0 * PI * i as f64 / 400.0;
                let s = w.sense(m, &e);
                assert!((0.0..=w.s_max).contains(&s));
            }
        }
    }

    fn motor_grid(w: &WorldConfig) -> Vec<f64> {
        (0..=500).map(|i| w.m_min + (w.m_max - w.m_min) * i as f64 / 500.0).collect()
    }

    #[test]
    fn translate_curves_never_cross() {
        let w = WorldConfig::discrete_translate();
        let states = w.latent_states().unwrap();
        assert_eq!(states.len(), 5);
        for pair in states.windows(2) {
            for m in motor_grid(&w) {
                assert!(w.sense(m, &pair[0]) < w.sense(m, &pair[1]));
            }
        }
    }

    #[test]
    fn rotate_curves_cross() {
        let w = WorldConfig::discrete_translate_rotate();
        let states = w.latent_states().unwrap();
        assert_eq!(states.len(), 6);
        let grid = motor_grid(&w);
        let mut crossing = 0;
        for a in 0..states.len() {
            for b in a + 1..states.len() {
                let diffs: Vec<f64> = grid.iter().map(|&m| w.sense(m, &states[a]) - w.sense(m, &states[b])).collect();
                if diffs.iter().any(|&x| x > 0.0) && diffs.iter().any(|&x| x < 0.0) {
                    crossing += 1;
                }
            }
        }
        assert!(crossing >= 1);
    }

    #[test]
    fn presets_satisfy_their_invariants() {
        for w in [
            WorldConfig::discrete_translate(),
            WorldConfig::continuous_translate(),
            WorldConfig::discrete_translate_rotate(),
        ] {
            assert_eq!(w.violations(), Vec::<String>::new());
        }
    }

    #[test]
    fn zero_change_probability_freezes_the_wall() {
        let mut w = WorldConfig::discrete_translate();
        w.dynamics.change_prob = 0.0;
        let mut rng = stream(1, Stream::Latent);
        let start = w.initial_latent(&mut rng);
        let mut e = start;
        for _ in 0..1000 {
            e = w.step_latent(&e, &mut rng);
            assert_eq!(e, start);
        }
    }

    #[test]
    fn forced_discrete_change_lands_on_another_grid_state() {
        let mut w = WorldConfig::discrete_translate();
        w.dynamics.change_prob = 1.0;
        let states = w.latent_states().unwrap();
        let mut rng = stream(3, Stream::Latent);
        let mut e = w.initial_latent(&mut rng);
        for _ in 0..1000 {
            let next = w.step_latent(&e, &mut rng);
            assert!(states.contains(&next.state));
            assert_ne!(next.id, e.id);
            assert_eq!(states[next.id.unwrap()], next.state);
            e = next;
        }
    }

    #[test]
    fn neighbor_steps_move_one_position() {
        let mut w = WorldConfig::discrete_translate();
        w.dynamics.change_prob = 1.0;
        w.dynamics.neighbor_steps = true;
        let mut rng = stream(5, Stream::Latent);
        let mut e = w.initial_latent(&mut rng);
        let mut seen = [false; 5];
        for _ in 0..2000 {
            let next = w.step_latent(&e, &mut rng);
            assert_eq!(next.id.unwrap().abs_diff(e.id.unwrap()), 1);
            seen[next.id.unwrap()] = true;
            e = next;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn continuous_walk_stays_in_range_with_expected_change_rate() {
        let w = WorldConfig::continuous_translate();
        let mut rng = stream(42, Stream::Latent);
        let mut e = w.initial_latent(&mut rng);
        let n = 100_000;
        let mut changes = 0usize;
        for _ in 0..n {
            let next = w.step_latent(&e, &mut rng);
            assert!((w.d_min..=w.d_max).contains(&next.state.d));
            if next != e {
                changes += 1;
            }
            e = next;
        }
        let freq = changes as f64 / n as f64;
        assert!((freq - 0.1).abs() <= 0.01, "change frequency {freq}");
    }

    #[test]
    fn invalid_geometry_is_reported_by_field() {
        let w = WorldConfig { d_min: 3.0, d_max: 1.0, ..WorldConfig::default() };
        let v = w.violations();
        assert!(v.iter().any(|s| s.contains("d_min") && s.contains("d_max")), "{v:?}");

        let w = WorldConfig { s_max: 4.0, ..WorldConfig::default() };
        assert!(w.violations().iter().any(|s| s.contains("s_max")));
    }
}
