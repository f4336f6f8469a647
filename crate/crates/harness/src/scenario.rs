//! Built-in initial-condition generators.

use crate::error::HarnessError;
use octobox_grid::state::ConservedState;
use octobox_grid::tree::Domain;
use octobox_grid::TreeKey;
use octobox_hydro::EosParams;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Planar shock tube along x with an exact solution.
    SodX,
    /// Self-similar blast: checked by octant symmetry.
    SedovSymmetry,
}

type InitFn = dyn Fn([f64; 3], f64, &EosParams) -> ConservedState + Send + Sync;
type RefineFn = dyn Fn(&TreeKey, &Domain) -> bool + Send + Sync;

#[derive(Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub self_gravity: bool,
    pub gamma: f64,
    pub domain: Domain,
    /// State at a cell center; `h` is the cell width (point deposits need it).
    pub init: Arc<InitFn>,
    pub refine: Arc<RefineFn>,
    pub reference: Option<Reference>,
}

pub fn scenario_library() -> Vec<&'static str> {
    vec![
        "sod",
        "sedov",
        "star_at_rest",
        "star_in_motion",
        "two_body",
        "random_density",
    ]
}

/// Deterministic per-position noise in [0,1): hashes the cell center bits and
/// the seed, so the value depends only on geometry, never on traversal order.
pub fn position_hash01(pos: [f64; 3], seed: u64) -> f64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for c in pos {
        h ^= c.to_bits();
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 27;
        h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn state_from_primitive(
    rho: f64,
    v: [f64; 3],
    p: f64,
    frac: [f64; 5],
    eos: &EosParams,
) -> ConservedState {
    let u = eos.internal_from_pressure(p);
    let kin = 0.5 * rho * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    ConservedState {
        rho,
        s: [rho * v[0], rho * v[1], rho * v[2]],
        energy: u + kin,
        tau: eos.tau_from_internal(u),
        frac,
    }
}

fn uniform_refine() -> Arc<RefineFn> {
    // The builder caps depth at `levels`, so refining everything yields a
    // uniform tree at the requested level.
    Arc::new(|_, _| true)
}

fn sod() -> Scenario {
    Scenario {
        name: "sod",
        self_gravity: false,
        gamma: 1.4,
        domain: Domain::unit(),
        init: Arc::new(|pos, _h, eos| {
            if pos[0] < 0.5 {
                state_from_primitive(1.0, [0.0; 3], 1.0, [1.0, 0.0, 0.0, 0.0, 0.0], eos)
            } else {
                state_from_primitive(0.125, [0.0; 3], 0.1, [0.0, 0.125, 0.0, 0.0, 0.0], eos)
            }
        }),
        refine: uniform_refine(),
        reference: Some(Reference::SodX),
    }
}

fn sedov(e0: f64) -> Scenario {
    Scenario {
        name: "sedov",
        self_gravity: false,
        gamma: 1.4,
        domain: Domain::unit(),
        init: Arc::new(move |pos, h, eos| {
            let c = [0.5, 0.5, 0.5];
            let ambient_p = 1e-5;
            let inside = (0..3).all(|a| (pos[a] - c[a]).abs() < h);
            let mut s = state_from_primitive(1.0, [0.0; 3], ambient_p, [0.2; 5], eos);
            if inside {
                // Total deposit E0 over the 2x2x2 block around the center.
                let u = e0 / (8.0 * h * h * h);
                s.energy += u;
                s.tau = eos.tau_from_internal(s.energy);
            }
            s
        }),
        refine: uniform_refine(),
        reference: Some(Reference::SedovSymmetry),
    }
}

/// Smooth compact ball with pressure from discrete hydrostatic balance,
/// integrated on a fine radial table against the profile's enclosed mass.
struct StarProfile {
    radius: f64,
    rho_c: f64,
    rho_floor: f64,
    p_table: Vec<f64>,
    dr: f64,
}

impl StarProfile {
    fn new(radius: f64, rho_c: f64, gconst: f64) -> StarProfile {
        let rho_floor = 1e-6;
        let n = 4096;
        let dr = radius / n as f64;
        let rho = |r: f64| -> f64 {
            if r < radius {
                let x = 1.0 - (r / radius) * (r / radius);
                rho_c * x * x + rho_floor
            } else {
                rho_floor
            }
        };
        // Enclosed mass by the midpoint rule.
        let mut mass = vec![0.0; n + 1];
        for i in 1..=n {
            let rm = (i as f64 - 0.5) * dr;
            mass[i] = mass[i - 1] + 4.0 * std::f64::consts::PI * rm * rm * rho(rm) * dr;
        }
        // Inward pressure integration: dp/dr = -rho G M / r^2.
        let p_surface = 1e-8;
        let mut p_table = vec![p_surface; n + 1];
        for i in (0..n).rev() {
            let rm = (i as f64 + 0.5) * dr;
            let g = gconst * 0.5 * (mass[i] + mass[i + 1]) / (rm * rm);
            p_table[i] = p_table[i + 1] + rho(rm) * g * dr;
        }
        StarProfile {
            radius,
            rho_c,
            rho_floor,
            p_table,
            dr,
        }
    }

    fn sample(&self, r: f64) -> (f64, f64) {
        let rho = if r < self.radius {
            let x = 1.0 - (r / self.radius) * (r / self.radius);
            self.rho_c * x * x + self.rho_floor
        } else {
            self.rho_floor
        };
        let idx = (r / self.dr) as usize;
        let p = if idx + 1 < self.p_table.len() {
            let frac = r / self.dr - idx as f64;
            self.p_table[idx] * (1.0 - frac) + self.p_table[idx + 1] * frac
        } else {
            *self.p_table.last().unwrap()
        };
        (rho, p)
    }
}

fn star(moving: bool) -> Scenario {
    let profile = Arc::new(StarProfile::new(0.3, 1.0, 1.0));
    let v0 = if moving { [0.05, 0.0, 0.0] } else { [0.0; 3] };
    Scenario {
        name: if moving { "star_in_motion" } else { "star_at_rest" },
        self_gravity: true,
        gamma: 5.0 / 3.0,
        domain: Domain::centered(2.0),
        init: Arc::new(move |pos, _h, eos| {
            let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
            let (rho, p) = profile.sample(r);
            state_from_primitive(rho, v0, p, [rho / 5.0; 5], eos)
        }),
        refine: Arc::new(|key, domain| {
            // Refine nodes whose box comes near the ball.
            let node_size = domain.size / (1u64 << key.level) as f64;
            let center = domain.center();
            let mut d2 = 0.0;
            for a in 0..3 {
                let lo = domain.corner[a] + key.idx[a] as f64 * node_size;
                let nearest = center[a].clamp(lo, lo + node_size);
                let d = center[a] - nearest;
                d2 += d * d;
            }
            d2.sqrt() < 0.45
        }),
        reference: None,
    }
}

fn two_body() -> Scenario {
    Scenario {
        name: "two_body",
        self_gravity: true,
        gamma: 5.0 / 3.0,
        domain: Domain::centered(2.0),
        init: Arc::new(|pos, _h, eos| {
            let c1 = [-0.35, 0.0, 0.0];
            let c2 = [0.35, 0.0, 0.0];
            let w2 = 0.02;
            let mut rho = 1e-4;
            for c in [c1, c2] {
                let d2 = (0..3).map(|a| (pos[a] - c[a]).powi(2)).sum::<f64>();
                rho += (-d2 / w2).exp();
            }
            state_from_primitive(rho, [0.0; 3], 1e-3, [rho / 5.0; 5], eos)
        }),
        refine: Arc::new(|key, domain| {
            let node_size = domain.size / (1u64 << key.level) as f64;
            let centers = [[-0.35, 0.0, 0.0], [0.35, 0.0, 0.0]];
            centers.iter().any(|c| {
                (0..3).all(|a| {
                    let lo = domain.corner[a] + key.idx[a] as f64 * node_size;
                    c[a] + 0.3 >= lo && c[a] - 0.3 <= lo + node_size
                })
            })
        }),
        reference: None,
    }
}

fn random_density(seed: u64) -> Scenario {
    Scenario {
        name: "random_density",
        self_gravity: true,
        gamma: 5.0 / 3.0,
        domain: Domain::centered(1.0),
        init: Arc::new(move |pos, _h, eos| {
            let rho = 0.25 + 1.75 * position_hash01(pos, seed);
            state_from_primitive(rho, [0.0; 3], 1.0, [rho / 5.0; 5], eos)
        }),
        refine: uniform_refine(),
        reference: None,
    }
}

pub fn lookup(name: &str, seed: u64) -> Result<Scenario, HarnessError> {
    match name {
        "sod" => Ok(sod()),
        "sedov" => Ok(sedov(1.0)),
        "star_at_rest" => Ok(star(false)),
        "star_in_motion" => Ok(star(true)),
        "two_body" => Ok(two_body()),
        "random_density" => Ok(random_density(seed)),
        other => Err(HarnessError::UnknownScenario(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sod_discontinuity_exact_at_t0() {
        let s = lookup("sod", 0).unwrap();
        let eos = EosParams {
            gamma: s.gamma,
            ..EosParams::default()
        };
        let l = (s.init)([0.25, 0.5, 0.5], 0.01, &eos);
        let r = (s.init)([0.75, 0.5, 0.5], 0.01, &eos);
        assert_eq!(l.rho, 1.0);
        assert_eq!(r.rho, 0.125);
        assert_eq!(eos.pressure(l.energy), 1.0 * (s.gamma - 1.0) / (s.gamma - 1.0));
        assert!((eos.pressure(r.energy - r.kinetic_energy()) - 0.1).abs() < 1e-15);
        l.validate().unwrap();
        r.validate().unwrap();
    }

    #[test]
    fn position_hash_is_order_free_and_stable() {
        let a = position_hash01([0.1, 0.2, 0.3], 7);
        let b = position_hash01([0.1, 0.2, 0.3], 7);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(
            position_hash01([0.1, 0.2, 0.3], 8).to_bits(),
            a.to_bits()
        );
        assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn star_profile_pressure_decreases_outward() {
        let s = lookup("star_at_rest", 0).unwrap();
        let eos = EosParams::default();
        let inner = (s.init)([0.0, 0.0, 0.0], 0.01, &eos);
        let outer = (s.init)([0.2, 0.0, 0.0], 0.01, &eos);
        let p_in = eos.pressure(inner.energy);
        let p_out = eos.pressure(outer.energy);
        assert!(p_in > p_out && p_out > 0.0, "{p_in} vs {p_out}");
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(lookup("nope", 0).is_err());
    }
}
