//! Evolved state components and per-cell views.

/// Number of evolved components per cell.
pub const NFIELDS: usize = 11;

/// Component order is also the checkpoint record order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum Field {
    Rho = 0,
    Sx = 1,
    Sy = 2,
    Sz = 3,
    Energy = 4,
    Tau = 5,
    Frac0 = 6,
    Frac1 = 7,
    Frac2 = 8,
    Frac3 = 9,
    Frac4 = 10,
}

impl Field {
    pub const ALL: [Field; NFIELDS] = [
        Field::Rho,
        Field::Sx,
        Field::Sy,
        Field::Sz,
        Field::Energy,
        Field::Tau,
        Field::Frac0,
        Field::Frac1,
        Field::Frac2,
        Field::Frac3,
        Field::Frac4,
    ];

    pub fn momentum(axis: usize) -> Field {
        match axis {
            0 => Field::Sx,
            1 => Field::Sy,
            2 => Field::Sz,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn frac(i: usize) -> Field {
        assert!(i < 5);
        Field::ALL[Field::Frac0 as usize + i]
    }
}

/// One cell's worth of evolved state, in component order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedState {
    pub rho: f64,
    pub s: [f64; 3],
    pub energy: f64,
    pub tau: f64,
    pub frac: [f64; 5],
}

impl ConservedState {
    pub fn zero() -> Self {
        ConservedState {
            rho: 0.0,
            s: [0.0; 3],
            energy: 0.0,
            tau: 0.0,
            frac: [0.0; 5],
        }
    }

    pub fn to_array(&self) -> [f64; NFIELDS] {
        [
            self.rho,
            self.s[0],
            self.s[1],
            self.s[2],
            self.energy,
            self.tau,
            self.frac[0],
            self.frac[1],
            self.frac[2],
            self.frac[3],
            self.frac[4],
        ]
    }

    pub fn from_array(a: &[f64; NFIELDS]) -> Self {
        ConservedState {
            rho: a[0],
            s: [a[1], a[2], a[3]],
            energy: a[4],
            tau: a[5],
            frac: [a[6], a[7], a[8], a[9], a[10]],
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        let s2 = self.s[0] * self.s[0] + self.s[1] * self.s[1] + self.s[2] * self.s[2];
        0.5 * s2 / self.rho
    }

    /// Physical validity of a freshly constructed state.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rho > 0.0) {
            return Err(format!("rho = {} must be positive", self.rho));
        }
        if !(self.tau > 0.0) {
            return Err(format!("tau = {} must be positive", self.tau));
        }
        if self.energy < self.kinetic_energy() {
            return Err(format!(
                "total energy {} below kinetic energy {}",
                self.energy,
                self.kinetic_energy()
            ));
        }
        let fsum: f64 = self.frac.iter().sum();
        if (fsum - self.rho).abs() > 1e-12 * self.rho.abs() {
            return Err(format!(
                "passive scalars sum {} does not partition rho {}",
                fsum, self.rho
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_round_trip() {
        let s = ConservedState {
            rho: 1.5,
            s: [0.1, -0.2, 0.3],
            energy: 4.0,
            tau: 0.9,
            frac: [0.3, 0.3, 0.3, 0.3, 0.3],
        };
        assert_eq!(ConservedState::from_array(&s.to_array()), s);
    }

    #[test]
    fn validate_catches_bad_partition() {
        let mut s = ConservedState {
            rho: 1.0,
            s: [0.0; 3],
            energy: 1.0,
            tau: 1.0,
            frac: [0.2; 5],
        };
        assert!(s.validate().is_ok());
        s.frac[0] = 0.4;
        assert!(s.validate().is_err());
    }

    #[test]
    fn validate_energy_floor() {
        let s = ConservedState {
            rho: 1.0,
            s: [2.0, 0.0, 0.0],
            energy: 1.0, // kinetic alone is 2.0
            tau: 1.0,
            frac: [0.2; 5],
        };
        assert!(s.validate().is_err());
    }
}
