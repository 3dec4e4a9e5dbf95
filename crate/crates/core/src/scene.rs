//! Drone scenes: several rotors, static body scatterers and receiver noise.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::exec::Execution;
use crate::geometry::{BistaticGeometry, Vec3};
use crate::scatter::{
    add_static_point, ActiveBand, EchoFrame, Propeller, RotorKernel, RotorView, ScatterError, TimeMode,
};
use crate::waveform::{ModulationGrid, OfdmConfig, WaveformError};

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("scene has neither propellers nor static scatterers")]
    Empty,
    #[error("noise power must be finite and non-negative, got {0}")]
    BadNoisePower(f64),
    #[error("{what} at {offset:.3} m from the origin is not small against the antenna range {range:.3} m")]
    NotFarField { what: String, offset: f64, range: f64 },
    #[error("symbol index {m} outside 0..{n_symbols}")]
    SymbolOutOfRange { m: usize, n_symbols: usize },
    #[error(transparent)]
    Scatter(#[from] ScatterError),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
}

/// Offsets must stay below this fraction of the shorter antenna range.
pub const FAR_FIELD_RATIO: f64 = 0.25;

/// Stationary point scatterer (drone body part).
#[derive(Debug, Clone, PartialEq)]
pub struct StaticScatterer {
    /// Position relative to the scene origin, m.
    pub position: Vec3,
    /// Radar cross section, m².
    pub rcs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub propellers: Vec<Propeller>,
    pub static_scatterers: Vec<StaticScatterer>,
    /// Complex noise variance in units of [`noise_reference_power`].
    pub noise_power: f64,
    pub rng_seed: u64,
    /// Transmit amplitude γ0.
    pub tx_amplitude: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            propellers: Vec::new(),
            static_scatterers: Vec::new(),
            noise_power: 0.0,
            rng_seed: 0,
            tx_amplitude: 1.0,
        }
    }
}

impl Scene {
    /// Ratio of the static return to the noise per sample, dB. Infinite
    /// when noise is disabled.
    pub fn snr_db(&self) -> f64 {
        -10.0 * self.noise_power.log10()
    }

    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.noise_power = 10f64.powf(-snr_db / 10.0);
    }

    pub fn validate(&self, geom: &BistaticGeometry) -> Result<(), SceneError> {
        if self.propellers.is_empty() && self.static_scatterers.is_empty() {
            return Err(SceneError::Empty);
        }
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            return Err(SceneError::BadNoisePower(self.noise_power));
        }
        let range = geom.r_t.min(geom.r_r);
        let norm = |v: Vec3| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        for (k, p) in self.propellers.iter().enumerate() {
            p.validate()?;
            let offset = norm(p.center_offset) + p.blade_length;
            if offset >= FAR_FIELD_RATIO * range {
                return Err(SceneError::NotFarField {
                    what: format!("propeller {k}"),
                    offset,
                    range,
                });
            }
        }
        for (k, s) in self.static_scatterers.iter().enumerate() {
            if !(s.rcs >= 0.0) {
                return Err(ScatterError::NegativeRcs(s.rcs).into());
            }
            let offset = norm(s.position);
            if offset >= FAR_FIELD_RATIO * range {
                return Err(SceneError::NotFarField {
                    what: format!("static scatterer {k}"),
                    offset,
                    range,
                });
            }
        }
        Ok(())
    }

    /// Rotor views (hub-centered geometry) for every propeller.
    pub fn rotor_views(&self, geom: &BistaticGeometry) -> Result<Vec<RotorView>, SceneError> {
        Ok(self
            .propellers
            .iter()
            .map(|p| RotorView::new(p.clone(), geom))
            .collect::<Result<_, _>>()?)
    }
}

/// Power of the return of a 1 m² point at the scene origin, summed
/// incoherently over the active band: K · γ(1 m², R_T, R_R, f0)².
pub fn unit_static_power(geom: &BistaticGeometry, cfg: &OfdmConfig, tx_amplitude: f64) -> f64 {
    let g = crate::scatter::radar_amplitude_bistatic(tx_amplitude, 1.0, geom.r_t, geom.r_r, cfg.f0).unwrap_or(0.0);
    cfg.active_len as f64 * g * g
}

/// Mean per-sample power of the scene's static return, summed over its
/// static scatterers. Falls back to [`unit_static_power`] when the scene has
/// no static return, so the noise level never depends on rotor content.
pub fn noise_reference_power(scene: &Scene, geom: &BistaticGeometry, cfg: &OfdmConfig) -> f64 {
    let k = cfg.active_len as f64;
    let aggregate: f64 = scene
        .static_scatterers
        .iter()
        .filter_map(|s| {
            let g = geom.relative_to(s.position).ok()?;
            crate::scatter::radar_amplitude_bistatic(scene.tx_amplitude, s.rcs, g.r_t, g.r_r, cfg.f0).ok()
        })
        .map(|g| k * g * g)
        .sum();
    if aggregate > 0.0 {
        aggregate
    } else {
        unit_static_power(geom, cfg, scene.tx_amplitude)
    }
}

struct Prepared<'a> {
    kernels: Vec<RotorKernel<'a>>,
    statics: Vec<(f64, Vec<f64>)>,
}

/// Simulates every symbol `0..M` of the scene.
pub fn simulate_scene(
    scene: &Scene,
    geom: &BistaticGeometry,
    cfg: &OfdmConfig,
    grid: &ModulationGrid,
    mode: TimeMode,
    exec: Execution,
) -> Result<Vec<EchoFrame>, SceneError> {
    let symbols: Vec<usize> = (0..cfg.n_symbols).collect();
    simulate_symbols(scene, geom, cfg, grid, &symbols, mode, exec)
}

/// Simulates only the listed symbols. Each frame is identical to the frame
/// of the same index produced by [`simulate_scene`].
pub fn simulate_symbols(
    scene: &Scene,
    geom: &BistaticGeometry,
    cfg: &OfdmConfig,
    grid: &ModulationGrid,
    symbols: &[usize],
    mode: TimeMode,
    exec: Execution,
) -> Result<Vec<EchoFrame>, SceneError> {
    cfg.validate()?;
    grid.check_against(cfg)?;
    scene.validate(geom)?;
    if let Some(&m) = symbols.iter().find(|&&m| m >= cfg.n_symbols) {
        return Err(SceneError::SymbolOutOfRange {
            m,
            n_symbols: cfg.n_symbols,
        });
    }

    let band = ActiveBand::new(cfg);
    let rotors = scene.rotor_views(geom)?;
    let kernels = rotors
        .iter()
        .map(|r| RotorKernel::new(r, &band, scene.tx_amplitude))
        .collect::<Result<Vec<_>, _>>()?;
    let statics = scene
        .static_scatterers
        .iter()
        .map(|s| {
            let g = geom.relative_to(s.position).map_err(ScatterError::from)?;
            let amp = band.amplitudes(scene.tx_amplitude, s.rcs, g.r_t, g.r_r)?;
            Ok((g.r_t + g.r_r, amp))
        })
        .collect::<Result<Vec<_>, SceneError>>()?;
    let prepared = Prepared { kernels, statics };

    let mut frames = exec.map(symbols, |&m| {
        let mut frame = EchoFrame::zeros(cfg, m);
        for kernel in &prepared.kernels {
            kernel.add_closed_form(cfg, grid, m, mode, kernel.cells(cfg), &mut frame.samples);
        }
        for (range, amp) in &prepared.statics {
            add_static_point(&band, amp, *range, cfg, grid, m, &mut frame.samples);
        }
        frame
    });

    if scene.noise_power > 0.0 {
        let variance = scene.noise_power * noise_reference_power(scene, geom, cfg);
        inject_noise(&mut frames, variance, scene.rng_seed, exec);
    }
    Ok(frames)
}

/// Adds circularly-symmetric complex Gaussian noise of variance
/// `noise_power` per sample.
///
/// The generator for a frame is keyed by `(seed, symbol_index)`, so the
/// result does not depend on frame order or on which frames are present.
pub fn inject_noise(frames: &mut [EchoFrame], noise_power: f64, seed: u64, exec: Execution) {
    if noise_power <= 0.0 {
        return;
    }
    let sigma = (noise_power / 2.0).sqrt();
    exec.for_each_mut(frames, |frame| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(frame.symbol_index as u64);
        for s in frame.samples.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s += Complex64::new(sigma * re, sigma * im);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::newman_grid;
    use crate::SPEED_OF_LIGHT;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn setup() -> (BistaticGeometry, OfdmConfig, ModulationGrid) {
        let geom = BistaticGeometry::in_plane(3.4, 3.4, 30f64.to_radians()).unwrap();
        let cfg = OfdmConfig::centered(7e9, 400, 320, 1.02e-6, 32).unwrap();
        let grid = newman_grid(&cfg).unwrap();
        (geom, cfg, grid)
    }

    fn rotor(rpm: f64, hub: Vec3) -> Propeller {
        let mut p = Propeller::from_rpm(2, 0.1655, rpm, 0.05);
        p.center_offset = hub;
        p
    }

    #[test]
    fn empty_scene_is_rejected() {
        let (geom, cfg, grid) = setup();
        let err = simulate_scene(
            &Scene::default(),
            &geom,
            &cfg,
            &grid,
            TimeMode::Exact,
            Execution::Sequential,
        );
        assert_eq!(err, Err(SceneError::Empty));
    }

    #[test]
    fn far_field_is_enforced() {
        let (geom, _, _) = setup();
        let scene = Scene {
            propellers: vec![rotor(1500.0, [1.0, 0.0, 0.0])],
            ..Scene::default()
        };
        assert!(matches!(scene.validate(&geom), Err(SceneError::NotFarField { .. })));
    }

    #[test]
    fn superposition_over_rotors_and_statics() {
        let (geom, cfg, grid) = setup();
        let a = rotor(1500.0, [0.2, 0.05, 0.0]);
        let b = rotor(2000.0, [-0.2, -0.05, 0.0]);
        let body = StaticScatterer {
            position: [0.0, 0.0, -0.05],
            rcs: 0.02,
        };
        let run = |props: Vec<Propeller>, statics: Vec<StaticScatterer>| {
            let scene = Scene {
                propellers: props,
                static_scatterers: statics,
                ..Scene::default()
            };
            simulate_scene(&scene, &geom, &cfg, &grid, TimeMode::Exact, Execution::Sequential).unwrap()
        };
        let all = run(vec![a.clone(), b.clone()], vec![body.clone()]);
        let parts = [run(vec![a], vec![]), run(vec![b], vec![]), run(vec![], vec![body])];
        for (m, frame) in all.iter().enumerate() {
            for mu in 0..cfg.n_subcarriers {
                let sum: Complex64 = parts.iter().map(|p| p[m].samples[mu]).sum();
                assert!((frame.samples[mu] - sum).norm() <= 1e-12 * sum.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn frame_count_and_length() {
        let (geom, cfg, grid) = setup();
        let scene = Scene {
            propellers: vec![rotor(1500.0, [0.0; 3])],
            ..Scene::default()
        };
        let frames = simulate_scene(&scene, &geom, &cfg, &grid, TimeMode::Exact, Execution::Parallel).unwrap();
        assert_eq!(frames.len(), cfg.n_symbols);
        assert!(frames
            .iter()
            .enumerate()
            .all(|(m, f)| f.symbol_index == m && f.samples.len() == 400));
    }

    #[test]
    fn subset_matches_full_run_and_schedules_agree() {
        let (geom, cfg, grid) = setup();
        let scene = Scene {
            propellers: vec![rotor(1500.0, [0.0; 3])],
            static_scatterers: vec![StaticScatterer {
                position: [0.0; 3],
                rcs: 0.1,
            }],
            noise_power: 0.1,
            rng_seed: 11,
            ..Scene::default()
        };
        let full = simulate_scene(&scene, &geom, &cfg, &grid, TimeMode::Exact, Execution::Sequential).unwrap();
        let subset = simulate_symbols(
            &scene,
            &geom,
            &cfg,
            &grid,
            &[3, 11, 27],
            TimeMode::Exact,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(subset[0], full[3]);
        assert_eq!(subset[1], full[11]);
        assert_eq!(subset[2], full[27]);
        let par = simulate_scene(&scene, &geom, &cfg, &grid, TimeMode::Exact, Execution::Parallel).unwrap();
        assert_eq!(par, full);
        assert!(simulate_symbols(
            &scene,
            &geom,
            &cfg,
            &grid,
            &[32],
            TimeMode::Exact,
            Execution::Sequential
        )
        .is_err());
    }

    #[test]
    fn zero_rcs_scene_is_pure_noise() {
        let (geom, cfg, grid) = setup();
        let scene = Scene {
            propellers: vec![Propeller::from_rpm(2, 0.1655, 1500.0, 0.0)],
            static_scatterers: vec![StaticScatterer {
                position: [0.0; 3],
                rcs: 0.0,
            }],
            noise_power: 2.0,
            rng_seed: 5,
            ..Scene::default()
        };
        let frames = simulate_scene(&scene, &geom, &cfg, &grid, TimeMode::Exact, Execution::Parallel).unwrap();
        let n = (frames.len() * cfg.n_subcarriers) as f64;
        let var: f64 = frames
            .iter()
            .flat_map(|f| &f.samples)
            .map(|s| s.norm_sqr())
            .sum::<f64>()
            / n;
        let expected = 2.0 * unit_static_power(&geom, &cfg, 1.0);
        assert_relative_eq!(var, expected, max_relative = 0.05);
    }

    #[test]
    fn noise_is_referenced_to_the_static_return() {
        let (geom, cfg, _) = setup();
        let statics = vec![
            StaticScatterer {
                position: [0.0, 0.0, -0.05],
                rcs: 0.05,
            },
            StaticScatterer {
                position: [0.1, 0.0, 0.0],
                rcs: 0.2,
            },
        ];
        let scene = Scene {
            static_scatterers: statics.clone(),
            ..Scene::default()
        };
        // K · c σ / (4π³ R_T² R_R² f0²) per scatterer, from the antenna positions
        let expected: f64 = statics
            .iter()
            .map(|s| {
                let d = |a: [f64; 3]| {
                    ((a[0] - s.position[0]).powi(2) + (a[1] - s.position[1]).powi(2) + (a[2] - s.position[2]).powi(2))
                        .sqrt()
                };
                let (rt, rr) = (d(geom.tx_position()), d(geom.rx_position()));
                cfg.active_len as f64 * SPEED_OF_LIGHT * s.rcs
                    / (4.0 * PI.powi(3) * rt * rt * rr * rr * cfg.f0 * cfg.f0)
            })
            .sum();
        assert_relative_eq!(
            noise_reference_power(&scene, &geom, &cfg),
            expected,
            max_relative = 1e-12
        );
        let bare = Scene::default();
        assert_eq!(
            noise_reference_power(&bare, &geom, &cfg),
            unit_static_power(&geom, &cfg, 1.0)
        );
    }

    #[test]
    fn zero_noise_is_identity() {
        let (_, cfg, _) = setup();
        let mut frames = vec![EchoFrame::zeros(&cfg, 0)];
        frames[0].samples[3] = Complex64::new(1.0, 2.0);
        let before = frames.clone();
        inject_noise(&mut frames, 0.0, 1, Execution::Sequential);
        assert_eq!(frames, before);
    }

    #[test]
    fn noise_statistics_and_determinism() {
        let cfg = OfdmConfig::centered(1e9, 1000, 1000, 1e-6, 1000).unwrap();
        let mk = || (0..1000).map(|m| EchoFrame::zeros(&cfg, m)).collect::<Vec<_>>();
        let mut a = mk();
        inject_noise(&mut a, 0.37, 99, Execution::Parallel);
        let mut b = mk();
        inject_noise(&mut b, 0.37, 99, Execution::Sequential);
        assert_eq!(a, b);
        let all: Vec<Complex64> = a.iter().flat_map(|f| f.samples.iter().copied()).collect();
        assert_eq!(all.len(), 1_000_000);
        let mean: Complex64 = all.iter().sum::<Complex64>() / all.len() as f64;
        let var = all.iter().map(|s| (s - mean).norm_sqr()).sum::<f64>() / all.len() as f64;
        assert_relative_eq!(var, 0.37, max_relative = 0.01);
        let re_var = all.iter().map(|s| s.re * s.re).sum::<f64>() / all.len() as f64;
        assert_relative_eq!(re_var, 0.185, max_relative = 0.02);
        let mut c = mk();
        inject_noise(&mut c, 0.37, 100, Execution::Sequential);
        assert_ne!(a, c);
    }

    #[test]
    fn snr_helpers_round_trip() {
        let mut scene = Scene::default();
        scene.set_snr_db(20.0);
        assert_relative_eq!(scene.noise_power, 0.01, max_relative = 1e-12);
        assert_relative_eq!(scene.snr_db(), 20.0, max_relative = 1e-12);
    }
}
