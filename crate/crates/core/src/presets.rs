//! Ready-made validation configurations.
//!
//! All presets share a Plexiglas bar (ρ = 1200 kg/m³, c = 2800 m/s) of
//! length 1000 m with interfaces every h = 10 m and a source at the centre.

use std::f64::consts::PI;

use crate::config::{
    impedance_matched_mass, BulkMedium, GridSpec, InterfaceSpec, Lattice, Modulation,
    ProblemConfig, SourcePulse,
};

pub const RHO_BULK: f64 = 1200.0;
pub const C_BULK: f64 = 2800.0;
/// E = ρ c² = 9.408 GPa.
pub const E_BULK: f64 = RHO_BULK * C_BULK * C_BULK;
pub const H_CELL: f64 = 10.0;
pub const L_DOMAIN: f64 = 1000.0;
pub const X_SOURCE: f64 = 500.0;

fn base(f_c: f64, n_x: usize, interfaces: Vec<InterfaceSpec>) -> ProblemConfig {
    ProblemConfig {
        bulk: BulkMedium::homogeneous(RHO_BULK, E_BULK),
        lattice: Lattice { h: H_CELL, interfaces },
        source: SourcePulse::new(f_c, X_SOURCE),
        grid: GridSpec { length: L_DOMAIN, n_x, cfl_fraction: 0.95, t_end: 0.2 },
    }
}

fn sin_law(mean: f64, eps: f64, f_m: f64, phase: f64) -> Modulation {
    Modulation { mean, eps, omega: 2.0 * PI * f_m, phase }
}

/// Single modulated spring-mass interface per cell, f_c = 20 Hz,
/// f_m = 30 Hz (η₀ = 0.86, η₁ = 2.16).
pub fn fig1() -> ProblemConfig {
    let f_m = 30.0;
    base(
        20.0,
        4000,
        vec![InterfaceSpec {
            y_pos: 0.0,
            compliance: sin_law(1.0 / 2.45e9, 0.9, f_m, 0.0),
            mass: sin_law(2e4, -0.9, f_m, 0.0),
            q_c: Modulation::constant(0.0),
            q_m: Modulation::constant(0.0),
        }],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissipationLevel {
    Low,
    Medium,
    High,
}

/// [`fig1`] with modulated dissipative interface parameters.
pub fn fig1_dissipative(level: DissipationLevel) -> ProblemConfig {
    let (qc, qm) = match level {
        DissipationLevel::Low => (1e-8, 1e4),
        DissipationLevel::Medium => (5e-8, 5e4),
        DissipationLevel::High => (1e-7, 1e5),
    };
    let mut cfg = fig1();
    let f_m = 30.0;
    cfg.lattice.interfaces[0].q_c = sin_law(qc, 0.9, f_m, 0.0);
    cfg.lattice.interfaces[0].q_m = sin_law(qm, 0.9, f_m, 0.0);
    cfg
}

/// Impedance-matched single interface: M̄ = (ρc)² C̄, equal modulation
/// amplitudes; f_c = 10 Hz, f_m = 20 Hz (η₀ = 0.44, η₁ = 1.31).
pub fn fig2() -> ProblemConfig {
    let f_m = 20.0;
    let c_bar = 1e-9;
    base(
        10.0,
        4000,
        vec![InterfaceSpec {
            y_pos: 0.0,
            compliance: sin_law(c_bar, 0.9, f_m, 0.0),
            mass: sin_law(impedance_matched_mass(RHO_BULK, C_BULK, c_bar), 0.9, f_m, 0.0),
            q_c: Modulation::constant(0.0),
            q_m: Modulation::constant(0.0),
        }],
    )
}

/// Two modulated interfaces per unit cell at y = 0 and y = 0.65;
/// f_c = 10 Hz, f_m = 20 Hz (η₀ = 0.640, η₁ = 1.92).
pub fn fig3() -> ProblemConfig {
    let f_m = 20.0;
    base(
        10.0,
        4000,
        vec![
            InterfaceSpec {
                y_pos: 0.0,
                compliance: sin_law(1.0 / 2.45e9, -0.9, f_m, 0.0),
                mass: sin_law(1e4, 0.9, f_m, 0.0),
                q_c: Modulation::constant(0.0),
                q_m: Modulation::constant(0.0),
            },
            InterfaceSpec {
                y_pos: 0.65,
                compliance: sin_law(1e-9, 0.5, f_m, -PI / 2.0),
                mass: sin_law(2e4, 0.5, f_m, -PI / 2.0),
                q_c: Modulation::constant(0.0),
                q_m: Modulation::constant(0.0),
            },
        ],
    )
}

/// Massless unmodulated springs (f_m = 0) probing high-order dispersion;
/// f_c ∈ {10, 20, 30} Hz gives η₀ ∈ {0.31, 0.63, 0.94}.
pub fn fig4(f_c: f64) -> ProblemConfig {
    base(
        f_c,
        4000,
        vec![InterfaceSpec {
            y_pos: 0.0,
            compliance: Modulation::constant(1e-9),
            mass: Modulation::constant(0.0),
            q_c: Modulation::constant(0.0),
            q_m: Modulation::constant(0.0),
        }],
    )
}

/// Massless modulated springs at fixed f_c = 20 Hz; f_m ∈ {5, 10, 20, 50}
/// Hz gives η₁ ∈ {0.78, 0.94, 1.25, 2.19}.
pub fn fig5(f_m: f64) -> ProblemConfig {
    let mut cfg = fig4(20.0);
    cfg.lattice.interfaces[0].compliance = sin_law(1e-9, 0.9, f_m, 0.0);
    cfg
}

/// Eight phase-shifted interfaces per unit cell producing a wave-like
/// modulation and non-reciprocity; f_c = 10 Hz, f_m = 80 Hz
/// (η₀ = 0.793, η₁ = 7.14).
pub fn fig6() -> ProblemConfig {
    let n = 8usize;
    let f_m = 80.0;
    let interfaces = (1..=n)
        .map(|l| {
            let phase = -2.0 * PI * l as f64 / n as f64;
            InterfaceSpec {
                y_pos: (l - 1) as f64 / n as f64,
                compliance: sin_law(1.0 / 4e9, -0.9, f_m, phase),
                mass: sin_law(5000.0, 0.9, f_m, phase),
                q_c: Modulation::constant(0.0),
                q_m: Modulation::constant(0.0),
            }
        })
        .collect();
    base(10.0, 8000, interfaces)
}

/// Preset lookup by name; used by the command-line front end.
pub fn by_name(name: &str) -> Option<ProblemConfig> {
    Some(match name {
        "fig1" => fig1(),
        "fig1-dissipative-low" => fig1_dissipative(DissipationLevel::Low),
        "fig1-dissipative-medium" => fig1_dissipative(DissipationLevel::Medium),
        "fig1-dissipative-high" => fig1_dissipative(DissipationLevel::High),
        "fig2" => fig2(),
        "fig3" => fig3(),
        "fig4-fc10" => fig4(10.0),
        "fig4-fc20" => fig4(20.0),
        "fig4-fc30" => fig4(30.0),
        "fig5-fm5" => fig5(5.0),
        "fig5-fm10" => fig5(10.0),
        "fig5-fm20" => fig5(20.0),
        "fig5-fm50" => fig5(50.0),
        "fig6" => fig6(),
        _ => return None,
    })
}

/// All preset names accepted by [`by_name`].
pub const PRESET_NAMES: [&str; 14] = [
    "fig1",
    "fig1-dissipative-low",
    "fig1-dissipative-medium",
    "fig1-dissipative-high",
    "fig2",
    "fig3",
    "fig4-fc10",
    "fig4-fc20",
    "fig4-fc30",
    "fig5-fm5",
    "fig5-fm10",
    "fig5-fm20",
    "fig5-fm50",
    "fig6",
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn presets_validate() {
        for name in PRESET_NAMES {
            by_name(name).unwrap().validate().unwrap();
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn fig2_caption_values() {
        let cfg = fig2();
        assert_relative_eq!(cfg.reference_speed().unwrap(), 1442.73, max_relative = 1e-4);
        assert_relative_eq!(cfg.eta_n(0).unwrap(), 0.44, epsilon = 5e-3);
        assert_relative_eq!(cfg.eta_n(1).unwrap(), 1.31, epsilon = 5e-3);
    }

    #[test]
    fn fig3_caption_values() {
        let cfg = fig3();
        assert_relative_eq!(cfg.reference_speed().unwrap(), 981.59, max_relative = 1e-4);
        assert_relative_eq!(cfg.eta_n(0).unwrap(), 0.640, epsilon = 5e-3);
        assert_relative_eq!(cfg.eta_n(1).unwrap(), 1.92, epsilon = 5e-3);
    }

    #[test]
    fn fig4_caption_values() {
        for (f_c, eta) in [(10.0, 0.31), (20.0, 0.63), (30.0, 0.94)] {
            assert_relative_eq!(fig4(f_c).eta_n(0).unwrap(), eta, epsilon = 5e-3);
        }
    }

    #[test]
    fn fig5_caption_values() {
        for (f_m, eta1) in [(5.0, 0.78), (10.0, 0.94), (20.0, 1.25), (50.0, 2.19)] {
            assert_relative_eq!(fig5(f_m).eta_n(1).unwrap(), eta1, epsilon = 5e-3);
        }
    }

    #[test]
    fn fig6_caption_values() {
        let cfg = fig6();
        assert_relative_eq!(cfg.reference_speed().unwrap(), 792.4, max_relative = 1e-4);
        assert_relative_eq!(cfg.eta_n(0).unwrap(), 0.793, epsilon = 5e-3);
        assert_relative_eq!(cfg.eta_n(1).unwrap(), 7.14, epsilon = 5e-3);
    }

    #[test]
    fn fig2_is_impedance_matched() {
        let cfg = fig2();
        let iface = &cfg.lattice.interfaces[0];
        assert_relative_eq!(
            iface.mass.mean,
            (RHO_BULK * C_BULK).powi(2) * iface.compliance.mean,
            max_relative = 1e-12
        );
        assert_eq!(iface.mass.eps, iface.compliance.eps);
    }
}
