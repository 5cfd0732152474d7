//! Physical rates, drive settings and the tabulated parameter sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates and drive settings of the master equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Linear gain rate.
    pub gamma1_plus: f64,
    /// Linear damping rate.
    pub gamma1_minus: f64,
    /// Two-photon loss rate.
    pub alpha: f64,
    /// Rate of the position-weighted non-linear damping.
    pub beta: f64,
    /// Rate of the momentum-weighted non-linear damping.
    pub delta: f64,
    /// Drive strength.
    pub omega_drive: f64,
    /// Drive angular frequency.
    pub omega_d: f64,
}

/// Rates divided by the net linear gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledParams {
    pub alpha_bar: f64,
    pub beta_bar: f64,
    pub delta_bar: f64,
    pub omega_bar: f64,
}

impl SystemParams {
    /// Undriven parameters at resonance.
    pub fn undriven(gamma1_plus: f64, gamma1_minus: f64, alpha: f64, beta: f64, delta: f64) -> Self {
        Self { gamma1_plus, gamma1_minus, alpha, beta, delta, omega_drive: 0.0, omega_d: 1.0 }
    }

    pub fn detuning(&self) -> f64 {
        self.omega_d - 1.0
    }

    /// Net linear gain; positive values mean net gain.
    pub fn epsilon(&self) -> f64 {
        self.gamma1_plus - self.gamma1_minus
    }

    pub fn scaled(&self) -> Option<ScaledParams> {
        let eps = self.epsilon();
        (eps != 0.0).then(|| ScaledParams {
            alpha_bar: self.alpha / eps,
            beta_bar: self.beta / eps,
            delta_bar: self.delta / eps,
            omega_bar: self.omega_drive / eps,
        })
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.omega_d = 1.0 + detuning;
        self
    }

    pub fn with_drive(mut self, omega_drive: f64) -> Self {
        self.omega_drive = omega_drive;
        self
    }

    pub fn is_phase_covariant(&self) -> bool {
        self.beta == self.delta
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("gamma1_plus", self.gamma1_plus),
            ("gamma1_minus", self.gamma1_minus),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("delta", self.delta),
        ];
        for (name, value) in rates {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {value}")));
            }
        }
        if !self.omega_drive.is_finite() {
            return Err(Error::InvalidParameter("omega_drive must be finite".into()));
        }
        if !(self.omega_d.is_finite() && self.omega_d > 0.0) {
            return Err(Error::InvalidParameter(format!("omega_d must be > 0, got {}", self.omega_d)));
        }
        Ok(())
    }
}

/// Which member of the oscillator family a rate combination represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OscillatorKind {
    Rayleigh,
    RayleighVdpHybrid,
    RayleighVanDerPol,
    VdpHybrid,
    VanDerPol,
}

impl OscillatorKind {
    pub const ALL: [OscillatorKind; 5] = [
        OscillatorKind::Rayleigh,
        OscillatorKind::RayleighVdpHybrid,
        OscillatorKind::RayleighVanDerPol,
        OscillatorKind::VdpHybrid,
        OscillatorKind::VanDerPol,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            OscillatorKind::Rayleigh => "R",
            OscillatorKind::RayleighVdpHybrid => "R-RvdP",
            OscillatorKind::RayleighVanDerPol => "RvdP",
            OscillatorKind::VdpHybrid => "RvdP-vdP",
            OscillatorKind::VanDerPol => "vdP",
        }
    }
}

/// Regime row of the tabulated sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Classical,
    Transition,
    Quantum,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Classical, Regime::Transition, Regime::Quantum];

    pub fn slug(self) -> &'static str {
        match self {
            Regime::Classical => "classical",
            Regime::Transition => "transition",
            Regime::Quantum => "quantum",
        }
    }
}

/// Net-gain choices used with the tabulated sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GainSetting {
    /// gamma1_plus = 1/5, gamma1_minus = 0.
    Eps0p2,
    /// gamma1_plus = 1/5, gamma1_minus = 1/10.
    Eps0p1,
}

impl GainSetting {
    pub const ALL: [GainSetting; 2] = [GainSetting::Eps0p2, GainSetting::Eps0p1];

    pub fn rates(self) -> (f64, f64) {
        match self {
            GainSetting::Eps0p2 => (0.2, 0.0),
            GainSetting::Eps0p1 => (0.2, 0.1),
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            GainSetting::Eps0p2 => "eps0.2",
            GainSetting::Eps0p1 => "eps0.1",
        }
    }
}

/// One entry of the non-linear damping table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableEntry {
    pub label: char,
    pub regime: Regime,
    pub kind: OscillatorKind,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl TableEntry {
    pub fn params(&self, gain: GainSetting) -> SystemParams {
        let (gp, gm) = gain.rates();
        SystemParams::undriven(gp, gm, self.alpha, self.beta, self.delta)
    }

    /// Fock dimension keeping the undriven steady-state leakage at or below 1e-7
    /// (capped at 64).
    pub fn default_dim(&self, gain: GainSetting) -> usize {
        let i = self.label as usize - 'a' as usize;
        match gain {
            GainSetting::Eps0p2 => DIM_EPS0P2[i],
            GainSetting::Eps0p1 => DIM_EPS0P1[i],
        }
    }

    pub fn preset_name(&self, gain: GainSetting) -> String {
        format!("{}-{}-{}", self.regime.slug(), self.kind.slug(), gain.slug())
    }
}

const DIM_EPS0P2: [usize; 15] = [32, 28, 28, 32, 40, 16, 16, 16, 20, 40, 16, 12, 8, 20, 64];
const DIM_EPS0P1: [usize; 15] = [28, 24, 24, 28, 32, 16, 16, 12, 20, 36, 16, 12, 8, 20, 64];

macro_rules! entry {
    ($label:literal, $regime:ident, $kind:ident, $a:expr, $b:expr, $d:expr) => {
        TableEntry {
            label: $label,
            regime: Regime::$regime,
            kind: OscillatorKind::$kind,
            alpha: $a,
            beta: $b,
            delta: $d,
        }
    };
}

/// The fifteen non-linear damping sets, rows ordered classical, transition, quantum.
pub const TABLE: [TableEntry; 15] = [
    entry!('a', Classical, Rayleigh, 0.0, 1.0 / 75.0, 2.0 / 75.0),
    entry!('b', Classical, RayleighVdpHybrid, 1.0 / 100.0, 1.0 / 150.0, 1.0 / 75.0),
    entry!('c', Classical, RayleighVanDerPol, 1.0 / 50.0, 0.0, 0.0),
    entry!('d', Classical, VdpHybrid, 1.0 / 100.0, 1.0 / 50.0, 0.0),
    entry!('e', Classical, VanDerPol, 0.0, 1.0 / 25.0, 0.0),
    entry!('f', Transition, Rayleigh, 0.0, 1.0 / 10.0, 1.0 / 5.0),
    entry!('g', Transition, RayleighVdpHybrid, 3.0 / 40.0, 1.0 / 20.0, 1.0 / 10.0),
    entry!('h', Transition, RayleighVanDerPol, 3.0 / 20.0, 0.0, 0.0),
    entry!('i', Transition, VdpHybrid, 3.0 / 40.0, 3.0 / 20.0, 0.0),
    entry!('j', Transition, VanDerPol, 0.0, 3.0 / 10.0, 0.0),
    entry!('k', Quantum, Rayleigh, 0.0, 8.0 / 15.0, 16.0 / 15.0),
    entry!('l', Quantum, RayleighVdpHybrid, 2.0 / 5.0, 4.0 / 15.0, 8.0 / 15.0),
    entry!('m', Quantum, RayleighVanDerPol, 4.0 / 5.0, 0.0, 0.0),
    entry!('n', Quantum, VdpHybrid, 2.0 / 5.0, 4.0 / 5.0, 0.0),
    entry!('o', Quantum, VanDerPol, 0.0, 8.0 / 5.0, 0.0),
];

pub fn table_entry(label: char) -> Option<&'static TableEntry> {
    TABLE.iter().find(|e| e.label == label)
}

pub fn table_lookup(regime: Regime, kind: OscillatorKind) -> &'static TableEntry {
    TABLE.iter().find(|e| e.regime == regime && e.kind == kind).expect("table covers every regime and kind")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detuning_is_exact() {
        let p = SystemParams::undriven(0.2, 0.1, 0.0, 0.0, 0.0).with_detuning(0.05);
        assert_eq!(p.detuning(), p.omega_d - 1.0);
    }

    #[test]
    fn scaled_rates_need_net_gain() {
        let p = SystemParams::undriven(0.1, 0.1, 0.1, 0.0, 0.0);
        assert!(p.scaled().is_none());
        let s = TABLE[12].params(GainSetting::Eps0p1).scaled().unwrap();
        assert!((s.alpha_bar - 8.0).abs() < 1e-12);
    }

    #[test]
    fn table_rows_scale_by_factor_of_ten_and_two() {
        for col in 0..5 {
            let (c, t, q) = (&TABLE[col], &TABLE[col + 5], &TABLE[col + 10]);
            assert_eq!(c.kind, t.kind);
            assert!((t.alpha - 7.5 * c.alpha).abs() < 1e-12);
            assert!((q.beta - 40.0 * c.beta).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_rate_rejected() {
        let p = SystemParams::undriven(0.2, -0.1, 0.0, 0.0, 0.0);
        assert!(matches!(p.validate(), Err(Error::InvalidParameter(_))));
    }
}
