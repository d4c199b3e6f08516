//! Unit-cell corrector problems and time-dependent effective coefficients.
//!
//! Every corrector problem on the periodic cell has the same structure: find
//! P with flux φ = β(∂yP + r) such that ∂yφ equals a given divergence,
//! φ jumps by prescribed amounts at the interfaces, [P]_ℓ = 𝓬_ℓ⟨φ⟩_ℓ + d_ℓ,
//! ⟨P⟩ = 0 and P is 1-periodic. For piecewise-constant β and
//! piecewise-polynomial data the solution is found in closed form by two
//! cumulative integrations, so no spatial discretisation error is incurred.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::config::{Modulation, NondimProblem};
use crate::piecewise::PiecewisePoly;
use crate::{Error, Result};

const BREAK_MERGE_TOL: f64 = 1e-12;

/// Corrector and its flux β(∂yP + r), both piecewise polynomials.
#[derive(Debug, Clone)]
pub struct CellSolution {
    pub p: PiecewisePoly,
    pub flux: PiecewisePoly,
}

/// Right-hand-side data of a generic cell problem; all piecewise data must
/// share the break set of β, and the per-break vectors are indexed by it.
#[derive(Debug, Clone)]
pub struct CellProblemData {
    /// r in φ = β(∂yP + r).
    pub r: PiecewisePoly,
    /// ∂yφ on each open segment.
    pub flux_div: PiecewisePoly,
    /// Prescribed flux jumps [φ]_ℓ.
    pub j: Vec<f64>,
    /// Inhomogeneity in [P]_ℓ = 𝓬_ℓ⟨φ⟩_ℓ + d_ℓ.
    pub d: Vec<f64>,
}

impl CellProblemData {
    pub fn homogeneous(breaks: &[f64]) -> Self {
        let zero = PiecewisePoly::piecewise_constant(breaks.to_vec(), vec![0.0; breaks.len()]);
        CellProblemData {
            r: zero.clone(),
            flux_div: zero,
            j: vec![0.0; breaks.len()],
            d: vec![0.0; breaks.len()],
        }
    }
}

/// Closed-form solve of the generic cell problem.
///
/// Writing φ = φ₀ + Φ(y) with Φ the cumulative integral of the divergence
/// (including the prescribed flux jumps), the displacement jump conditions
/// and periodicity pin down the constant φ₀, and ⟨P⟩ = 0 pins the remaining
/// constant of integration.
pub fn solve_cell_problem(
    beta: &PiecewisePoly,
    c: &[f64],
    data: &CellProblemData,
) -> Result<CellSolution> {
    let n = beta.breaks.len();
    if c.len() != n || data.j.len() != n || data.d.len() != n {
        return Err(Error::InvalidConfig(
            "cell problem data must match the break set of beta".into(),
        ));
    }
    if beta.degree() != 0 || beta.segs.iter().any(|p| p.coeffs[0] <= 0.0) {
        return Err(Error::InvalidConfig(
            "beta must be piecewise constant and positive".into(),
        ));
    }

    // Solvability: the total flux production over one period must vanish.
    let production = data.flux_div.mean() + data.j.iter().sum::<f64>();
    let scale = 1.0
        + integrate_abs(&data.flux_div)
        + data.j.iter().map(|v| v.abs()).sum::<f64>();
    if production.abs() > 1e-7 * scale {
        return Err(Error::Solvability(format!(
            "net flux production {production:.3e} (scale {scale:.3e})"
        )));
    }

    // Flux up to its constant: Φ(0⁺) = 0.
    let phi_b = data.flux_div.antiderivative_with_jumps(&data.j);

    // P(y) = P₀ + φ₀ A(y) + B(y).
    let a = beta.recip_pc().antiderivative_with_jumps(c);
    let b_jumps: Vec<f64> = (0..n)
        .map(|k| c[k] * phi_b.iface_mean(k) + data.d[k])
        .collect();
    let b = phi_b
        .div_pc(beta)
        .sub(&data.r)
        .antiderivative_with_jumps(&b_jumps);

    // Periodic closure at y = 0 (interface index 0).
    let denom = a.value_left(0) + c[0];
    let phi0 = -(b.value_left(0) + c[0] * phi_b.iface_mean(0) + data.d[0]) / denom;

    let flux = phi_b.shift_values(phi0);
    let p_raw = a.scale(phi0).add(&b);
    let p = p_raw.shift_values(-p_raw.mean());
    Ok(CellSolution { p, flux })
}

/// Solves after removing the net flux production from the divergence data.
///
/// With several modulated interfaces per cell, the data of the two corrector
/// problems that involve time derivatives of the first corrector carry a
/// small net production proportional to Σ 𝓬'_ℓ ⟨φ⟩_ℓ, so the periodic
/// problem as stated has no solution; the closest solvable problem is
/// obtained by subtracting the constant defect. The defect vanishes for a
/// single interface in a uniform bulk.
fn solve_projected(
    beta: &PiecewisePoly,
    c: &[f64],
    data: &CellProblemData,
) -> Result<CellSolution> {
    let production = data.flux_div.mean() + data.j.iter().sum::<f64>();
    let mut data = data.clone();
    data.flux_div = data.flux_div.shift_values(-production);
    solve_cell_problem(beta, c, &data)
}

fn integrate_abs(p: &PiecewisePoly) -> f64 {
    crate::piecewise::integrate_cell_gl(|y| p.eval(y).abs(), &p.breaks, 2)
}

/// Dimensionless unit-cell description: bulk profiles on a unified break
/// set and the interface laws attached to each break (zero laws at breaks
/// that only mark a material discontinuity).
#[derive(Debug, Clone)]
pub struct CellConfig {
    pub breaks: Vec<f64>,
    pub alpha: PiecewisePoly,
    pub beta: PiecewisePoly,
    pub c_laws: Vec<Modulation>,
    pub m_laws: Vec<Modulation>,
    pub qc_laws: Vec<Modulation>,
    pub qm_laws: Vec<Modulation>,
}

impl CellConfig {
    /// Cell problem in the slow dimensionless time.
    pub fn from_nondim(nd: &NondimProblem) -> Self {
        Self::build(nd, 1.0)
    }

    /// Same dimensionless cell data, but with the modulation laws expressed
    /// in physical time (seconds); used when effective coefficients carry
    /// physical time derivatives.
    pub fn dimensional_time(nd: &NondimProblem) -> Self {
        Self::build(nd, 1.0 / nd.frame.time_scale())
    }

    fn build(nd: &NondimProblem, time_factor: f64) -> Self {
        let mut breaks: Vec<f64> = nd
            .alpha
            .breaks
            .iter()
            .chain(nd.beta.breaks.iter())
            .copied()
            .chain(nd.interfaces.iter().map(|i| i.y_pos))
            .collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < BREAK_MERGE_TOL);

        let zero = Modulation::constant(0.0);
        let mut c_laws = vec![zero; breaks.len()];
        let mut m_laws = vec![zero; breaks.len()];
        let mut qc_laws = vec![zero; breaks.len()];
        let mut qm_laws = vec![zero; breaks.len()];
        for iface in &nd.interfaces {
            let k = breaks
                .iter()
                .position(|&y| (y - iface.y_pos).abs() < BREAK_MERGE_TOL)
                .expect("interface break present after merge");
            c_laws[k] = iface.c.rescale_time(time_factor);
            m_laws[k] = iface.m.rescale_time(time_factor);
            qc_laws[k] = iface.q_c.rescale_time(time_factor);
            qm_laws[k] = iface.q_m.rescale_time(time_factor);
        }
        CellConfig {
            alpha: nd.alpha.refine(&breaks),
            beta: nd.beta.refine(&breaks),
            breaks,
            c_laws,
            m_laws,
            qc_laws,
            qm_laws,
        }
    }

    /// Common modulation period, or None for a static cell. Errors if the
    /// laws carry different frequencies.
    pub fn period(&self) -> Result<Option<f64>> {
        let mut omega: Option<f64> = None;
        for law in self
            .c_laws
            .iter()
            .chain(&self.m_laws)
            .chain(&self.qc_laws)
            .chain(&self.qm_laws)
        {
            if law.is_static() {
                continue;
            }
            match omega {
                None => omega = Some(law.omega),
                Some(w) if (w - law.omega).abs() <= 1e-9 * w.abs() => {}
                Some(_) => {
                    return Err(Error::InvalidConfig(
                        "cell laws carry different modulation frequencies".into(),
                    ))
                }
            }
        }
        Ok(omega.map(|w| 2.0 * std::f64::consts::PI / w))
    }

    fn c_at(&self, t: f64) -> Vec<f64> {
        self.c_laws.iter().map(|l| l.value(t)).collect()
    }

    /// α₀(t) = ⟨α⟩ + Σ 𝓶_ℓ(t).
    pub fn alpha0(&self, t: f64) -> f64 {
        self.alpha.mean() + self.m_laws.iter().map(|l| l.value(t)).sum::<f64>()
    }

    pub fn alpha0_deriv(&self, t: f64) -> f64 {
        self.m_laws.iter().map(|l| l.deriv(t)).sum()
    }

    /// β₀(t) = (⟨1/β⟩ + Σ 𝓬_ℓ(t))⁻¹.
    pub fn beta0(&self, t: f64) -> f64 {
        1.0 / (self.beta.recip_pc().mean() + self.c_laws.iter().map(|l| l.value(t)).sum::<f64>())
    }

    /// β₀'(t) = −β₀² Σ 𝓬'_ℓ(t).
    pub fn beta0_deriv(&self, t: f64) -> f64 {
        let b0 = self.beta0(t);
        -b0 * b0 * self.c_laws.iter().map(|l| l.deriv(t)).sum::<f64>()
    }

    /// Leading-order effective pair (α₀, β₀).
    pub fn effective_leading(&self, t: f64) -> (f64, f64) {
        (self.alpha0(t), self.beta0(t))
    }

    /// Dissipative effective pair (γ_m0, γ_c0) in closed form:
    /// γ_m0 = Σ 𝓺_m, γ_c0 = −β₀ Σ (𝓬' + 𝓺_c).
    pub fn effective_dissipative(&self, t: f64) -> (f64, f64) {
        let gamma_m = self.qm_laws.iter().map(|l| l.value(t)).sum();
        let s: f64 = self
            .c_laws
            .iter()
            .zip(&self.qc_laws)
            .map(|(c, qc)| c.deriv(t) + qc.value(t))
            .sum();
        (gamma_m, -s * self.beta0(t))
    }

    /// Solves the dissipative corrector problem at time t; its constant
    /// flux is γ_c0, which cross-checks [`Self::effective_dissipative`].
    pub fn solve_q(&self, t: f64) -> Result<CellSolution> {
        let mut data = CellProblemData::homogeneous(&self.breaks);
        data.d = self
            .c_laws
            .iter()
            .zip(&self.qc_laws)
            .map(|(c, qc)| c.deriv(t) + qc.value(t))
            .collect();
        solve_cell_problem(&self.beta, &self.c_at(t), &data)
    }
}

/// Full corrector set at one time sample, including the spectrally computed
/// time derivatives of the first four correctors.
#[derive(Debug, Clone)]
pub struct CorrectorSet {
    pub t: f64,
    pub p1: CellSolution,
    pub p2: CellSolution,
    pub p3: CellSolution,
    pub p4: CellSolution,
    pub p5: CellSolution,
    pub p6: CellSolution,
    pub p7: CellSolution,
    pub p8: CellSolution,
    pub q: CellSolution,
    pub dp1: PiecewisePoly,
    pub ddp1: PiecewisePoly,
    pub dp2: PiecewisePoly,
    pub ddp2: PiecewisePoly,
    pub dp3: PiecewisePoly,
    pub ddp3: PiecewisePoly,
    pub dp4: PiecewisePoly,
    pub ddp4: PiecewisePoly,
}

/// Second-order forcing coefficients
/// 𝔄 ∂⁴xxtt + 𝔅 ∂⁴tttt + ℭ ∂³txx + 𝔇 ∂³ttt + 𝔈 ∂²xx + 𝔉 ∂²tt + 𝔊 ∂t.
#[derive(Debug, Clone, Copy)]
pub struct FrakturCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

/// Correctors sampled over one modulation period (a single sample for a
/// static cell). Time derivatives are obtained by Fourier differentiation
/// of the segment-wise polynomial coefficients, which are smooth periodic
/// functions of time.
#[derive(Debug, Clone)]
pub struct CorrectorFamily {
    pub config: CellConfig,
    pub period: Option<f64>,
    pub times: Vec<f64>,
    pub sets: Vec<CorrectorSet>,
}

impl CorrectorFamily {
    pub fn compute(config: CellConfig, n_time: usize) -> Result<Self> {
        let period = config.period()?;
        let times: Vec<f64> = match period {
            Some(tau) => {
                let n = n_time.max(4);
                (0..n).map(|i| tau * i as f64 / n as f64).collect()
            }
            None => vec![0.0],
        };
        let breaks = config.breaks.clone();

        // First pass: everything that needs no time derivative of a corrector.
        let mut first: Vec<(CellSolution, CellSolution, CellSolution, CellSolution, CellSolution, CellSolution)> =
            Vec::with_capacity(times.len());
        for &t in &times {
            let c = config.c_at(t);
            let p1 = {
                let mut data = CellProblemData::homogeneous(&breaks);
                data.r = PiecewisePoly::constant(1.0).refine(&breaks);
                solve_cell_problem(&config.beta, &c, &data)?
            };
            let p2 = {
                let mut data = CellProblemData::homogeneous(&breaks);
                data.r = p1.p.clone();
                solve_cell_problem(&config.beta, &c, &data)?
            };
            let p3 = {
                let mut data = CellProblemData::homogeneous(&breaks);
                data.flux_div = config.alpha.shift_values(-config.alpha0(t));
                data.j = config.m_laws.iter().map(|l| l.value(t)).collect();
                solve_cell_problem(&config.beta, &c, &data)?
            };
            let p4 = {
                let mut data = CellProblemData::homogeneous(&breaks);
                data.flux_div = PiecewisePoly::constant(-config.alpha0_deriv(t)).refine(&breaks);
                data.j = config.m_laws.iter().map(|l| l.deriv(t)).collect();
                solve_cell_problem(&config.beta, &c, &data)?
            };
            let p5 = {
                let mut data = CellProblemData::homogeneous(&breaks);
                data.r = p2.p.clone();
                solve_cell_problem(&config.beta, &c, &data)?
            };
            let q = config.solve_q(t)?;
            first.push((p1, p2, p3, p4, p5, q));
        }

        let dt = |idx: usize, order: u32| -> Vec<PiecewisePoly> {
            let polys: Vec<&PiecewisePoly> = first
                .iter()
                .map(|s| match idx {
                    1 => &s.0.p,
                    2 => &s.1.p,
                    3 => &s.2.p,
                    _ => &s.3.p,
                })
                .collect();
            series_time_derivative(&polys, period, order)
        };
        let (dp1, ddp1) = (dt(1, 1), dt(1, 2));
        let (dp2, ddp2) = (dt(2, 1), dt(2, 2));
        let (dp3, ddp3) = (dt(3, 1), dt(3, 2));
        let (dp4, ddp4) = (dt(4, 1), dt(4, 2));

        // Second pass: correctors whose data involve ∂tP1 and ∂ttP1.
        let mut sets = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            let c = config.c_at(t);
            let (p1, p2, p3, p4, p5, q) = first[i].clone();
            let m: Vec<f64> = config.m_laws.iter().map(|l| l.value(t)).collect();
            let md: Vec<f64> = config.m_laws.iter().map(|l| l.deriv(t)).collect();

            let p6 = {
                let mut data = CellProblemData::homogeneous(&breaks);
                data.r = p3.p.clone();
                data.flux_div = config.alpha.mul(&p1.p).sub(&p3.flux);
                data.j = (0..breaks.len()).map(|k| m[k] * p1.p.iface_mean(k)).collect();
                solve_cell_problem(&config.beta, &c, &data)?
            };
            let p7 = {
                let mut data = CellProblemData::homogeneous(&breaks);
                data.r = p4.p.clone();
                data.flux_div = config.alpha.mul(&dp1[i]).scale(2.0).sub(&p4.flux);
                data.j = (0..breaks.len())
                    .map(|k| md[k] * p1.p.iface_mean(k) + 2.0 * m[k] * dp1[i].iface_mean(k))
                    .collect();
                solve_projected(&config.beta, &c, &data)?
            };
            let p8 = {
                let mut data = CellProblemData::homogeneous(&breaks);
                data.flux_div = config.alpha.mul(&ddp1[i]);
                data.j = (0..breaks.len())
                    .map(|k| md[k] * dp1[i].iface_mean(k) + m[k] * ddp1[i].iface_mean(k))
                    .collect();
                solve_projected(&config.beta, &c, &data)?
            };

            sets.push(CorrectorSet {
                t,
                p1,
                p2,
                p3,
                p4,
                p5,
                p6,
                p7,
                p8,
                q,
                dp1: dp1[i].clone(),
                ddp1: ddp1[i].clone(),
                dp2: dp2[i].clone(),
                ddp2: ddp2[i].clone(),
                dp3: dp3[i].clone(),
                ddp3: ddp3[i].clone(),
                dp4: dp4[i].clone(),
                ddp4: ddp4[i].clone(),
            });
        }

        Ok(CorrectorFamily { config, period, times, sets })
    }

    fn sum_iface<F: Fn(usize) -> f64>(&self, weights: &[Modulation], t: f64, f: F) -> f64 {
        weights
            .iter()
            .enumerate()
            .map(|(k, law)| law.value(t) * f(k))
            .sum()
    }

    fn sum_iface_deriv<F: Fn(usize) -> f64>(&self, weights: &[Modulation], t: f64, f: F) -> f64 {
        weights
            .iter()
            .enumerate()
            .map(|(k, law)| law.deriv(t) * f(k))
            .sum()
    }

    /// Second-order forcing coefficients at sample i.
    pub fn fraktur(&self, i: usize) -> FrakturCoeffs {
        let s = &self.sets[i];
        let t = s.t;
        let al = &self.config.alpha;
        let ml = &self.config.m_laws;

        let a = s.p6.flux.mean() - al.mul(&s.p2.p).mean()
            - self.sum_iface(ml, t, |k| s.p2.p.iface_mean(k));
        let b = -al.mul(&s.p3.p).mean() - self.sum_iface(ml, t, |k| s.p3.p.iface_mean(k));
        let c = s.p7.flux.mean() - 2.0 * al.mul(&s.dp2).mean()
            - self.sum_iface_deriv(ml, t, |k| s.p2.p.iface_mean(k))
            - 2.0 * self.sum_iface(ml, t, |k| s.dp2.iface_mean(k));
        let d = -al.mul(&s.p4.p).mean() - 2.0 * al.mul(&s.dp3).mean()
            - self.sum_iface_deriv(ml, t, |k| s.p3.p.iface_mean(k))
            - self.sum_iface(ml, t, |k| 2.0 * s.dp3.iface_mean(k) + s.p4.p.iface_mean(k));
        let e = -al.mul(&s.ddp2).mean() + s.p8.flux.mean()
            - self.sum_iface_deriv(ml, t, |k| s.dp2.iface_mean(k))
            - self.sum_iface(ml, t, |k| s.ddp2.iface_mean(k));
        let f = -al.mul(&s.ddp3).mean() - 2.0 * al.mul(&s.dp4).mean()
            - self.sum_iface_deriv(ml, t, |k| s.dp3.iface_mean(k) + s.p4.p.iface_mean(k))
            - self.sum_iface(ml, t, |k| s.ddp3.iface_mean(k) + 2.0 * s.dp4.iface_mean(k));
        let g = -al.mul(&s.ddp4).mean()
            - self.sum_iface_deriv(ml, t, |k| s.dp4.iface_mean(k))
            - self.sum_iface(ml, t, |k| s.ddp4.iface_mean(k));

        FrakturCoeffs { a, b, c, d, e, f, g }
    }

    /// Limit-case dispersion pair (𝔟₁, 𝔟₂) = (⟨P₁∂ttP₁⟩, ⟨P₁²⟩) at sample i.
    pub fn limit_case(&self, i: usize) -> (f64, f64) {
        let s = &self.sets[i];
        (s.p1.p.mul(&s.ddp1).mean(), s.p1.p.mul(&s.p1.p).mean())
    }

    /// Residuals of the five variational identities relating the correctors;
    /// all should vanish for a correct solve.
    pub fn variational_residuals(&self, i: usize) -> [f64; 5] {
        let s = &self.sets[i];
        let t = s.t;
        let al = &self.config.alpha;
        let ml = &self.config.m_laws;
        [
            s.p3.flux.mean() - al.mul(&s.p1.p).mean()
                - self.sum_iface(ml, t, |k| s.p1.p.iface_mean(k)),
            s.p4.flux.mean() - self.sum_iface_deriv(ml, t, |k| s.p1.p.iface_mean(k)),
            -al.mul(&s.dp1).mean() - self.sum_iface(ml, t, |k| s.dp1.iface_mean(k)),
            -al.mul(&s.ddp1).mean() - self.sum_iface(ml, t, |k| s.ddp1.iface_mean(k)),
            -self.sum_iface_deriv(ml, t, |k| s.dp1.iface_mean(k)),
        ]
    }

    /// Correction terms that make the last three variational residuals an
    /// exact invariant: residual − correction = 0. They involve the
    /// compliance rates weighted by the interface means of the third and
    /// fourth corrector fluxes, and vanish for a single interface in a
    /// uniform bulk.
    pub fn identity_corrections(&self, i: usize) -> [f64; 3] {
        let s = &self.sets[i];
        let t = s.t;
        let b0 = self.config.beta0(t);
        let b0d = self.config.beta0_deriv(t);
        let cl = &self.config.c_laws;
        let sum3: f64 = cl
            .iter()
            .enumerate()
            .map(|(k, l)| l.deriv(t) * s.p3.flux.iface_mean(k))
            .sum();
        let sum3_second: f64 = cl
            .iter()
            .enumerate()
            .map(|(k, l)| (l.dderiv(t) * b0 + 2.0 * l.deriv(t) * b0d) * s.p3.flux.iface_mean(k))
            .sum();
        let sum4: f64 = cl
            .iter()
            .enumerate()
            .map(|(k, l)| l.deriv(t) * s.p4.flux.iface_mean(k))
            .sum();
        [b0 * sum3, sum3_second, b0 * sum4]
    }

    /// Trigonometric interpolant of 𝔟₁ over the period.
    pub fn b1_series(&self) -> PeriodicSeries {
        let vals = (0..self.sets.len()).map(|i| self.limit_case(i).0).collect();
        PeriodicSeries::from_samples(vals, self.period)
    }

    /// Trigonometric interpolant of 𝔟₂ over the period.
    pub fn b2_series(&self) -> PeriodicSeries {
        let vals = (0..self.sets.len()).map(|i| self.limit_case(i).1).collect();
        PeriodicSeries::from_samples(vals, self.period)
    }
}

/// Fourier differentiation of a family of piecewise polynomials sampled
/// uniformly over one period: each segment coefficient traces out a smooth
/// periodic scalar series that is differentiated spectrally.
fn series_time_derivative(
    polys: &[&PiecewisePoly],
    period: Option<f64>,
    order: u32,
) -> Vec<PiecewisePoly> {
    let template = polys[0];
    let zero_like = |p: &PiecewisePoly| {
        let mut z = p.clone();
        for seg in &mut z.segs {
            for c in &mut seg.coeffs {
                *c = 0.0;
            }
        }
        z
    };
    let tau = match period {
        Some(tau) if polys.len() > 1 => tau,
        _ => return polys.iter().map(|p| zero_like(p)).collect(),
    };

    let n_seg = template.n_segs();
    let mut out: Vec<PiecewisePoly> = polys.iter().map(|p| zero_like(p)).collect();
    for seg in 0..n_seg {
        let max_len = polys.iter().map(|p| p.segs[seg].coeffs.len()).max().unwrap();
        for ci in 0..max_len {
            let series: Vec<f64> = polys
                .iter()
                .map(|p| p.segs[seg].coeffs.get(ci).copied().unwrap_or(0.0))
                .collect();
            let der = spectral_derivative(&series, tau, order);
            for (i, v) in der.into_iter().enumerate() {
                let coeffs = &mut out[i].segs[seg].coeffs;
                if coeffs.len() <= ci {
                    coeffs.resize(ci + 1, 0.0);
                }
                coeffs[ci] = v;
            }
        }
    }
    out
}

/// Spectral derivative of a uniformly sampled periodic series.
fn spectral_derivative(series: &[f64], period: f64, order: u32) -> Vec<f64> {
    let n = series.len();
    if n == 1 {
        return vec![0.0];
    }
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let w0 = 2.0 * std::f64::consts::PI / period;
    for (k, v) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
        // the unmatched Nyquist mode has no well-defined odd derivative
        let factor = if order % 2 == 1 && n % 2 == 0 && k == n / 2 {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, kk as f64 * w0).powu(order)
        };
        *v *= factor;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|v| v.re / n as f64).collect()
}

/// Scalar periodic function represented by uniform samples; evaluation uses
/// the trigonometric interpolant so the series can be queried at any time.
#[derive(Debug, Clone)]
pub struct PeriodicSeries {
    period: Option<f64>,
    coeffs: Vec<Complex<f64>>,
    n: usize,
}

impl PeriodicSeries {
    pub fn from_samples(values: Vec<f64>, period: Option<f64>) -> Self {
        let n = values.len();
        if period.is_none() || n == 1 {
            return PeriodicSeries {
                period: None,
                coeffs: vec![Complex::new(values.first().copied().unwrap_or(0.0), 0.0)],
                n: 1,
            };
        }
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        for v in &mut buf {
            *v /= n as f64;
        }
        PeriodicSeries { period, coeffs: buf, n }
    }

    pub fn constant(v: f64) -> Self {
        PeriodicSeries { period: None, coeffs: vec![Complex::new(v, 0.0)], n: 1 }
    }

    fn modes(&self) -> impl Iterator<Item = (f64, Complex<f64>)> + '_ {
        let tau = self.period.unwrap_or(1.0);
        let w0 = 2.0 * std::f64::consts::PI / tau;
        let n = self.n;
        self.coeffs.iter().enumerate().map(move |(k, &c)| {
            let kk = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
            (kk as f64 * w0, c)
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.period.is_none() {
            return self.coeffs[0].re;
        }
        self.modes()
            .map(|(w, c)| (c * Complex::new(0.0, w * t).exp()).re)
            .sum()
    }

    pub fn deriv(&self, t: f64) -> f64 {
        if self.period.is_none() {
            return 0.0;
        }
        self.modes()
            .map(|(w, c)| {
                // drop the unmatched Nyquist mode, as in the derivative FFT
                if self.n % 2 == 0 && w.abs() > 0.0 && (w * self.period.unwrap() / (2.0 * std::f64::consts::PI)).round() as i64 == (self.n / 2) as i64 {
                    0.0
                } else {
                    (c * Complex::new(0.0, w) * Complex::new(0.0, w * t).exp()).re
                }
            })
            .sum()
    }
}
