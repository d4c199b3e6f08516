//! Full-field reference solver for the microstructured medium: first-order
//! velocity-stress system with time-modulated spring-mass interfaces.
//!
//! Interior nodes are advanced with a one-step Lax-Wendroff scheme (order 2
//! in space and time). Each interface carries four trace unknowns — the
//! one-sided limits (V−, S−, V+, S+) — closed every step by the two
//! characteristic invariants arriving from either side and the two jump
//! conditions, with the products C(T)⟨S⟩ and M(T)⟨V⟩ differentiated by a
//! second-order backward formula and the dissipation terms taken implicitly.
//! Interfaces that fall exactly on a grid node use a split-node convention
//! (the node stores the right-side trace); otherwise ghost values are
//! obtained by one-sided quadratic extrapolation through the trace.
//!
//! Outer boundaries are homogeneous Dirichlet on the displacement (V = 0);
//! runs should be sized so boundary reflections stay out of any comparison
//! window.

use nalgebra::{Matrix4, Vector4};

use crate::config::{InterfaceSpec, ProblemConfig};
use crate::history::{FieldHistory, RecordSpec, Recorder};
use crate::{Error, Result};

/// Velocity, stress and accumulated displacement on the grid.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    /// Trapezoidal time integral of `v`, starting from zero.
    pub u: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    pub fn zeros(n_nodes: usize) -> Self {
        FieldState {
            v: vec![0.0; n_nodes],
            s: vec![0.0; n_nodes],
            u: vec![0.0; n_nodes],
            time: 0.0,
        }
    }
}

/// Per-interface runtime data.
#[derive(Debug, Clone)]
pub struct InterfaceRuntime {
    /// Physical position, m.
    pub x: f64,
    /// Last grid node owned by the left side.
    pub left_node: usize,
    /// Whether the interface sits exactly on node `left_node + 1`; that node
    /// then stores the right-side trace.
    pub coincident: bool,
    /// Last left node used in one-sided stencils; kept at least half a cell
    /// away from the interface so extrapolation weights stay bounded.
    pub left_anchor: usize,
    /// First right node used in one-sided stencils, same guard.
    pub right_anchor: usize,
    /// Dimensional parameter laws.
    pub spec: InterfaceSpec,
    /// One-sided limits (V−, S−, V+, S+) at the current time.
    pub traces: [f64; 4],
    /// C(T)⟨S⟩ at the current step.
    pub g_c: f64,
    /// M(T)⟨V⟩ at the current step.
    pub g_m: f64,
    /// The same products one step earlier, once available.
    pub g_prev: Option<(f64, f64)>,
}

impl InterfaceRuntime {
    /// ⟨S⟩ at the current time.
    pub fn mean_s(&self) -> f64 {
        0.5 * (self.traces[1] + self.traces[3])
    }

    /// ⟨V⟩ at the current time.
    pub fn mean_v(&self) -> f64 {
        0.5 * (self.traces[0] + self.traces[2])
    }
}

/// Quadratic Lagrange interpolation through three points.
fn quad(x: f64, p: [(f64, f64); 3]) -> f64 {
    let [(x0, f0), (x1, f1), (x2, f2)] = p;
    f0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
        + f1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
        + f2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
}

/// Time stepper owning the grid, material samples and interface runtimes.
pub struct MicroSolver {
    pub xs: Vec<f64>,
    /// Node-sampled density and modulus.
    pub rho: Vec<f64>,
    pub e: Vec<f64>,
    c2: Vec<f64>,
    pub interfaces: Vec<InterfaceRuntime>,
    pub state: FieldState,
    pub dt: f64,
    dx: f64,
    cfl_fraction: f64,
    c_max: f64,
    /// Node receiving the point source (shifted off interface nodes).
    pub source_node: usize,
    config: ProblemConfig,
}

impl MicroSolver {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        config.validate()?;
        let n = config.grid.n_x;
        let dx = config.grid.dx();
        let length = config.grid.length;
        let h = config.lattice.h;
        let xs: Vec<f64> = (0..=n).map(|m| m as f64 * dx).collect();
        let rho: Vec<f64> = xs.iter().map(|&x| config.bulk.rho.eval(frac(x / h))).collect();
        let e: Vec<f64> = xs.iter().map(|&x| config.bulk.e.eval(frac(x / h))).collect();
        let c2: Vec<f64> = rho.iter().zip(&e).map(|(&r, &e)| e / r).collect();
        let c_max = c2.iter().cloned().fold(0.0, f64::max).sqrt();

        // expand the lattice into physical interface positions
        let margin = 3.0 * dx;
        let mut positions: Vec<(f64, &InterfaceSpec)> = Vec::new();
        for spec in &config.lattice.interfaces {
            let mut j = 0usize;
            loop {
                let pos = (j as f64 + spec.y_pos) * h;
                if pos >= length - 1e-9 * h {
                    break;
                }
                if pos > 1e-9 * h {
                    if pos <= margin || pos >= length - margin {
                        return Err(Error::InvalidConfig(format!(
                            "interface at {pos} m is within 3 grid cells of the boundary"
                        )));
                    }
                    positions.push((pos, spec));
                }
                j += 1;
            }
        }
        positions.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in positions.windows(2) {
            if w[1].0 - w[0].0 <= 3.0 * dx {
                return Err(Error::InvalidConfig(format!(
                    "interfaces at {} and {} m are closer than 3 grid cells; refine the grid",
                    w[0].0, w[1].0
                )));
            }
        }

        let mut interfaces = Vec::with_capacity(positions.len());
        for (pos, spec) in positions {
            let r = (pos / dx).round();
            let coincident = (pos - r * dx).abs() < 1e-9 * dx;
            let left_node = if coincident { r as usize - 1 } else { (pos / dx).floor() as usize };
            let (left_anchor, right_anchor) = if coincident {
                (left_node, left_node + 2)
            } else {
                let eps_l = pos / dx - left_node as f64;
                (
                    if eps_l >= 0.5 { left_node } else { left_node - 1 },
                    if eps_l <= 0.5 { left_node + 1 } else { left_node + 2 },
                )
            };
            interfaces.push(InterfaceRuntime {
                x: pos,
                left_node,
                coincident,
                left_anchor,
                right_anchor,
                spec: spec.clone(),
                traces: [0.0; 4],
                g_c: 0.0,
                g_m: 0.0,
                g_prev: None,
            });
        }

        // point source snapped to the nearest non-interface interior node
        let mut source_node = ((config.source.x_s / dx).round() as usize).clamp(1, n - 1);
        while interfaces
            .iter()
            .any(|ir| ir.coincident && ir.left_node + 1 == source_node)
        {
            source_node += 1;
        }

        let dt_max = config.grid.cfl_fraction * dx / c_max;
        let n_steps = (config.grid.t_end / dt_max).ceil() as usize;
        let dt = config.grid.t_end / n_steps as f64;

        Ok(MicroSolver {
            xs,
            rho,
            e,
            c2,
            interfaces,
            state: FieldState::zeros(n + 1),
            dt,
            dx,
            cfl_fraction: config.grid.cfl_fraction,
            c_max,
            source_node,
            config: config.clone(),
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.config.grid.t_end / self.dt).round() as usize
    }

    /// Overwrite the state with smooth initial fields and reset the
    /// interface traces and product histories consistently.
    pub fn set_initial(&mut self, v: impl Fn(f64) -> f64, s: impl Fn(f64) -> f64) {
        for (m, &x) in self.xs.iter().enumerate() {
            self.state.v[m] = v(x);
            self.state.s[m] = s(x);
            self.state.u[m] = 0.0;
        }
        self.state.time = 0.0;
        for ir in &mut self.interfaces {
            let (vi, si) = (v(ir.x), s(ir.x));
            ir.traces = [vi, si, vi, si];
            let st = ir.spec.eval(0.0);
            ir.g_c = st.c * si;
            ir.g_m = st.m * vi;
            ir.g_prev = None;
        }
    }

    /// Advance one step of length `self.dt`.
    pub fn step(&mut self) -> Result<()> {
        self.step_with(self.dt)
    }

    /// Advance one step; refuses when the CFL bound is violated. The
    /// backward-difference product history assumes a fixed step length.
    pub fn step_with(&mut self, dt: f64) -> Result<()> {
        let max_dt = self.cfl_fraction * self.dx / self.c_max;
        if dt > max_dt * (1.0 + 1e-9) {
            return Err(Error::Cfl { speed: self.c_max, max_dt, dt });
        }
        let n = self.xs.len() - 1;
        let dx = self.dx;
        let t = self.state.time;

        // 1. trace solves (use only time-t data)
        let new_traces: Vec<[f64; 4]> = self
            .interfaces
            .iter()
            .map(|ir| self.solve_traces(ir, dt))
            .collect::<Result<_>>()?;

        // 2. Lax-Wendroff pass over all interior nodes
        let (v, s) = (&self.state.v, &self.state.s);
        let mut v_new = v.clone();
        let mut s_new = s.clone();
        let lw = |m: usize, vl: f64, vc: f64, vr: f64, sl: f64, sc: f64, sr: f64| {
            let r = dt / (2.0 * dx);
            let d = self.c2[m] * dt * dt / (2.0 * dx * dx);
            (
                vc + r / self.rho[m] * (sr - sl) + d * (vr - 2.0 * vc + vl),
                sc + r * self.e[m] * (vr - vl) + d * (sr - 2.0 * sc + sl),
            )
        };
        for m in 1..n {
            let (vn, sn) = lw(m, v[m - 1], v[m], v[m + 1], s[m - 1], s[m], s[m + 1]);
            v_new[m] = vn;
            s_new[m] = sn;
        }

        // 3. interface fix-ups with one-sided information
        for (ir, tr) in self.interfaces.iter().zip(&new_traces) {
            let k = ir.left_node;
            if ir.coincident {
                // node k+1 is the split node: left neighbour stencils must
                // see the left trace, the node itself carries the right trace
                let (vn, sn) = lw(k, v[k - 1], v[k], ir.traces[0], s[k - 1], s[k], ir.traces[1]);
                v_new[k] = vn;
                s_new[k] = sn;
                v_new[k + 1] = tr[2];
                s_new[k + 1] = tr[3];
            } else {
                // between-node interface: advance the two flanking nodes by
                // exact characteristic transport; the invariant travelling
                // away from the interface is interpolated in the bulk, the
                // one emitted by the interface is interpolated in time
                // between the old and new traces
                let c_l = self.c2[k].sqrt();
                let z_l = self.rho[k] * c_l;
                let c_r = self.c2[k + 1].sqrt();
                let z_r = self.rho[k + 1] * c_r;
                let p_old_l = ir.traces[1] + z_l * ir.traces[0];
                let p_new_l = tr[1] + z_l * tr[0];
                let q_old_r = ir.traces[3] - z_r * ir.traces[2];
                let q_new_r = tr[3] - z_r * tr[2];

                // left node k: q = S - ZV arrives from the bulk
                let foot = self.xs[k] - c_l * dt;
                let pts = |f: &[f64], a: usize| [(self.xs[a - 2], f[a - 2]), (self.xs[a - 1], f[a - 1]), (self.xs[a], f[a])];
                let q_val = quad(foot, pts(s, k)) - z_l * quad(foot, pts(v, k));
                // p = S + ZV arrives from the interface side
                let d_l = ir.x - self.xs[k];
                let p_val = if c_l * dt <= d_l {
                    let foot = self.xs[k] + c_l * dt;
                    let lv = [(self.xs[k - 1], v[k - 1]), (self.xs[k], v[k]), (ir.x, ir.traces[0])];
                    let ls = [(self.xs[k - 1], s[k - 1]), (self.xs[k], s[k]), (ir.x, ir.traces[1])];
                    quad(foot, ls) + z_l * quad(foot, lv)
                } else {
                    p_old_l + (1.0 - d_l / (c_l * dt)) * (p_new_l - p_old_l)
                };
                v_new[k] = (p_val - q_val) / (2.0 * z_l);
                s_new[k] = 0.5 * (p_val + q_val);

                // right node k+1, mirrored
                let foot = self.xs[k + 1] + c_r * dt;
                let pts = |f: &[f64], a: usize| [(self.xs[a], f[a]), (self.xs[a + 1], f[a + 1]), (self.xs[a + 2], f[a + 2])];
                let p_val = quad(foot, pts(s, k + 1)) + z_r * quad(foot, pts(v, k + 1));
                let d_r = self.xs[k + 1] - ir.x;
                let q_val = if c_r * dt <= d_r {
                    let foot = self.xs[k + 1] - c_r * dt;
                    let rv = [(ir.x, ir.traces[2]), (self.xs[k + 1], v[k + 1]), (self.xs[k + 2], v[k + 2])];
                    let rs = [(ir.x, ir.traces[3]), (self.xs[k + 1], s[k + 1]), (self.xs[k + 2], s[k + 2])];
                    quad(foot, rs) - z_r * quad(foot, rv)
                } else {
                    q_old_r + (1.0 - d_r / (c_r * dt)) * (q_new_r - q_old_r)
                };
                v_new[k + 1] = (p_val - q_val) / (2.0 * z_r);
                s_new[k + 1] = 0.5 * (p_val + q_val);
            }
        }

        // 4. Dirichlet ends: V = 0, stress from the one-sided trapezoid of
        //    ∂T S = E ∂X V
        v_new[0] = 0.0;
        v_new[n] = 0.0;
        let dxv_left = |f: &[f64]| (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
        let dxv_right = |f: &[f64]| (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * dx);
        s_new[0] = s[0] + self.e[0] * dt * 0.5 * (dxv_left(v) + dxv_left(&v_new));
        s_new[n] = s[n] + self.e[n] * dt * 0.5 * (dxv_right(v) + dxv_right(&v_new));

        // 5. point source (momentum forcing, midpoint in time)
        let sig = self.config.source.signal(t + 0.5 * dt);
        if sig != 0.0 {
            let m = self.source_node;
            v_new[m] += dt * sig / (self.rho[m] * dx);
        }

        // 6. displacement by the trapezoid rule
        for m in 0..=n {
            self.state.u[m] += 0.5 * dt * (v_new[m] + self.state.v[m]);
        }

        // 7. commit
        for (ir, tr) in self.interfaces.iter_mut().zip(&new_traces) {
            let st = ir.spec.eval(t + dt);
            ir.g_prev = Some((ir.g_c, ir.g_m));
            ir.g_c = st.c * 0.5 * (tr[1] + tr[3]);
            ir.g_m = st.m * 0.5 * (tr[0] + tr[2]);
            ir.traces = *tr;
        }
        self.state.v = v_new;
        self.state.s = s_new;
        self.state.time = t + dt;
        Ok(())
    }

    /// Solve the 4x4 linear system for the traces at the end of the step.
    fn solve_traces(&self, ir: &InterfaceRuntime, dt: f64) -> Result<[f64; 4]> {
        let (v, s) = (&self.state.v, &self.state.s);
        let ll = ir.left_anchor;
        let rr = ir.right_anchor;

        let c_l = self.c2[ir.left_node].sqrt();
        let z_l = self.rho[ir.left_node] * c_l;
        let r0 = ir.left_node + 1;
        let c_r = self.c2[r0].sqrt();
        let z_r = self.rho[r0] * c_r;

        // characteristic invariants at the feet, quadratically interpolated
        // from the owning side (two bulk nodes plus the current trace)
        let foot_l = ir.x - c_l * dt;
        let lv = [(self.xs[ll - 1], v[ll - 1]), (self.xs[ll], v[ll]), (ir.x, ir.traces[0])];
        let ls = [(self.xs[ll - 1], s[ll - 1]), (self.xs[ll], s[ll]), (ir.x, ir.traces[1])];
        let q_foot = quad(foot_l, ls) - z_l * quad(foot_l, lv);

        let foot_r = ir.x + c_r * dt;
        let rv = [(ir.x, ir.traces[2]), (self.xs[rr], v[rr]), (self.xs[rr + 1], v[rr + 1])];
        let rs = [(ir.x, ir.traces[3]), (self.xs[rr], s[rr]), (self.xs[rr + 1], s[rr + 1])];
        let p_foot = quad(foot_r, rs) + z_r * quad(foot_r, rv);

        // jump conditions at the new time with BDF differentiation of the
        // products and implicit dissipation
        let st = ir.spec.eval(self.state.time + dt);
        let (a_c, a_m, rhs_c, rhs_m) = match ir.g_prev {
            Some((gc_p, gm_p)) => (
                1.5 * st.c / dt + st.q_c,
                1.5 * st.m / dt + st.q_m,
                (-2.0 * ir.g_c + 0.5 * gc_p) / dt,
                (-2.0 * ir.g_m + 0.5 * gm_p) / dt,
            ),
            None => (
                st.c / dt + st.q_c,
                st.m / dt + st.q_m,
                -ir.g_c / dt,
                -ir.g_m / dt,
            ),
        };

        // unknowns (V−, S−, V+, S+)
        #[rustfmt::skip]
        let a = Matrix4::new(
            -z_l,          1.0,          0.0,         0.0,
             0.0,          0.0,          z_r,         1.0,
            -1.0,         -0.5 * a_c,    1.0,        -0.5 * a_c,
            -0.5 * a_m,   -1.0,         -0.5 * a_m,   1.0,
        );
        let b = Vector4::new(q_foot, p_foot, rhs_c, rhs_m);
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Numerical(format!("singular trace system at x = {}", ir.x)))?;
        Ok([x[0], x[1], x[2], x[3]])
    }

    /// ½∫(ρV² + S²/E) dX by the trapezoid rule.
    pub fn bulk_energy(&self) -> f64 {
        let n = self.xs.len() - 1;
        let mut sum = 0.0;
        for m in 0..=n {
            let w = if m == 0 || m == n { 0.5 } else { 1.0 };
            sum += w
                * 0.5
                * (self.rho[m] * self.state.v[m] * self.state.v[m]
                    + self.state.s[m] * self.state.s[m] / self.e[m]);
        }
        sum * self.dx
    }

    /// Σ over interfaces of ½C⟨S⟩² + ½M⟨V⟩².
    pub fn interface_energy(&self) -> f64 {
        self.interfaces
            .iter()
            .map(|ir| {
                let st = ir.spec.eval(self.state.time);
                0.5 * st.c * ir.mean_s().powi(2) + 0.5 * st.m * ir.mean_v().powi(2)
            })
            .sum()
    }
}

fn frac(y: f64) -> f64 {
    let f = y.fract();
    if f < 0.0 {
        f + 1.0
    } else {
        f
    }
}

/// Run the full-field solver over `config.grid.t_end`, recording per
/// `record`.
pub fn run_micro(config: &ProblemConfig, record: &RecordSpec) -> Result<FieldHistory> {
    let mut solver = MicroSolver::new(config)?;
    let n_steps = solver.n_steps();
    let mut rec = Recorder::new(&solver.xs, solver.dt, n_steps, record)?;
    rec.push(0.0, &solver.state.u, &solver.state.v, &solver.state.s);
    for _ in 0..n_steps {
        solver.step()?;
        rec.push(solver.state.time, &solver.state.u, &solver.state.v, &solver.state.s);
    }
    Ok(rec.finish())
}

/// Trapezoidal displacement from a velocity record at fixed step `dt`,
/// starting from U = 0.
pub fn integrate_displacement(v: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(v.len());
    if v.is_empty() {
        return out;
    }
    let mut u = vec![0.0; v[0].len()];
    out.push(u.clone());
    for w in v.windows(2) {
        for (ui, (&a, &b)) in u.iter_mut().zip(w[0].iter().zip(&w[1])) {
            *ui += 0.5 * dt * (a + b);
        }
        out.push(u.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BulkMedium, GridSpec, InterfaceSpec, Lattice, Modulation, SourcePulse};
    use approx::assert_relative_eq;

    const RHO: f64 = 1200.0;
    const C0: f64 = 2800.0;
    const E0: f64 = RHO * C0 * C0;
    const Z0: f64 = RHO * C0;

    fn config(
        length: f64,
        n_x: usize,
        h: f64,
        interfaces: Vec<InterfaceSpec>,
        t_end: f64,
    ) -> ProblemConfig {
        ProblemConfig {
            bulk: BulkMedium::homogeneous(RHO, E0),
            lattice: Lattice { h, interfaces },
            source: SourcePulse::new(20.0, length / 2.0),
            grid: GridSpec { length, n_x, cfl_fraction: 0.95, t_end },
        }
    }

    fn iface(c_bar: f64, m_bar: f64) -> InterfaceSpec {
        InterfaceSpec {
            y_pos: 0.0,
            compliance: Modulation::constant(c_bar),
            mass: Modulation::constant(m_bar),
            q_c: Modulation::constant(0.0),
            q_m: Modulation::constant(0.0),
        }
    }

    fn gaussian(x0: f64, sigma: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| (-(x - x0) * (x - x0) / (2.0 * sigma * sigma)).exp()
    }

    /// Right-moving pulse: V = g, S = -Z g kills the left-moving invariant.
    fn launch(solver: &mut MicroSolver, x0: f64, sigma: f64) {
        let g = gaussian(x0, sigma);
        solver.set_initial(&g, |x| -Z0 * g(x));
    }

    fn run_to_end(solver: &mut MicroSolver) {
        for _ in 0..solver.n_steps() {
            solver.step().unwrap();
        }
    }

    #[test]
    fn integrate_displacement_examples() {
        // zero velocity
        let u = integrate_displacement(&vec![vec![0.0; 3]; 5], 0.1);
        assert!(u.iter().flatten().all(|&x| x == 0.0));
        // constant velocity: exact linear growth
        let u = integrate_displacement(&vec![vec![2.0; 2]; 6], 0.1);
        assert_relative_eq!(u[5][0], 1.0, max_relative = 1e-14);
        // sinusoid vs analytic antiderivative, second order in dt
        let omega = 3.0;
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let v: Vec<Vec<f64>> = (0..=n).map(|i| vec![(omega * dt * i as f64).sin()]).collect();
            let u = integrate_displacement(&v, dt);
            (u[n][0] - (1.0 - (omega * 1.0).cos()) / omega).abs()
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 / e2 > 3.5, "trapezoid order: {e1} vs {e2}");
    }

    #[test]
    fn dalembert_translation_second_order() {
        // no interfaces: exact solution is a rigid translation at speed c
        let t_end = 0.01;
        let err = |n_x: usize| {
            let cfg = config(100.0, n_x, 10.0, vec![], t_end);
            let mut solver = MicroSolver::new(&cfg).unwrap();
            launch(&mut solver, 25.0, 5.0);
            run_to_end(&mut solver);
            let g = gaussian(25.0 + C0 * t_end, 5.0);
            let num = solver
                .xs
                .iter()
                .zip(&solver.state.v)
                .map(|(&x, &v)| (v - g(x)).powi(2))
                .sum::<f64>()
                .sqrt();
            let den = solver.xs.iter().map(|&x| g(x).powi(2)).sum::<f64>().sqrt();
            num / den
        };
        let (e1, e2, e3) = (err(200), err(400), err(800));
        let p1 = (e1 / e2).log2();
        let p2 = (e2 / e3).log2();
        assert!(p1 > 1.9 && p2 > 1.9, "orders {p1:.2}, {p2:.2} (errors {e1:.2e}, {e2:.2e}, {e3:.2e})");
    }

    #[test]
    fn perfect_contact_limit_matches_interface_free_run() {
        let t_end = 0.015;
        let mut free = MicroSolver::new(&config(200.0, 800, 50.0, vec![], t_end)).unwrap();
        let mut tied =
            MicroSolver::new(&config(200.0, 800, 50.0, vec![iface(1e-18, 0.0)], t_end)).unwrap();
        assert_eq!(tied.interfaces.len(), 3); // at 50, 100, 150 m
        launch(&mut free, 40.0, 6.0);
        launch(&mut tied, 40.0, 6.0);
        run_to_end(&mut free);
        run_to_end(&mut tied);
        let scale = free.state.v.iter().cloned().fold(0.0, f64::max);
        for (a, b) in free.state.v.iter().zip(&tied.state.v) {
            assert!((a - b).abs() < 1e-5 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn modulated_interface_convergence_order_two() {
        // one modulated interface per 50.5 m cell: non-node-coincident at
        // every resolution used here; error against an 8x-refined run
        let t_end = 0.012;
        let f_m = 60.0;
        let spec = InterfaceSpec {
            y_pos: 0.0,
            compliance: Modulation { mean: 1e-9, eps: 0.8, omega: 2.0 * std::f64::consts::PI * f_m, phase: 0.3 },
            mass: Modulation { mean: 8e3, eps: -0.8, omega: 2.0 * std::f64::consts::PI * f_m, phase: 0.3 },
            q_c: Modulation::constant(0.0),
            q_m: Modulation::constant(0.0),
        };
        let solve = |n_x: usize| {
            let cfg = config(120.0, n_x, 50.5, vec![spec.clone()], t_end);
            let mut solver = MicroSolver::new(&cfg).unwrap();
            assert_eq!(solver.interfaces.len(), 2);
            assert!(solver.interfaces.iter().all(|ir| !ir.coincident));
            launch(&mut solver, 25.0, 6.0);
            run_to_end(&mut solver);
            solver
        };
        let reference = solve(2560);
        let err = |n_x: usize| {
            let s = solve(n_x);
            let ratio = 2560 / n_x;
            let mut num = 0.0;
            let mut den = 0.0;
            for m in 0..=n_x {
                num += (s.state.v[m] - reference.state.v[m * ratio]).powi(2);
                den += reference.state.v[m * ratio].powi(2);
            }
            (num / den).sqrt()
        };
        let (e1, e2) = (err(320), err(640));
        let p = (e1 / e2).log2();
        assert!(p > 1.9, "observed order {p:.2} (errors {e1:.2e}, {e2:.2e})");
    }

    #[test]
    fn node_coincident_interface_converges_too() {
        let t_end = 0.012;
        let spec = InterfaceSpec {
            y_pos: 0.0,
            compliance: Modulation { mean: 1e-9, eps: 0.8, omega: 300.0, phase: 0.0 },
            mass: Modulation { mean: 8e3, eps: -0.8, omega: 300.0, phase: 0.0 },
            q_c: Modulation::constant(0.0),
            q_m: Modulation::constant(0.0),
        };
        let solve = |n_x: usize| {
            let cfg = config(100.0, n_x, 50.0, vec![spec.clone()], t_end);
            let mut solver = MicroSolver::new(&cfg).unwrap();
            assert_eq!(solver.interfaces.len(), 1);
            assert!(solver.interfaces[0].coincident);
            launch(&mut solver, 25.0, 6.0);
            run_to_end(&mut solver);
            solver
        };
        let reference = solve(2560);
        let err = |n_x: usize| {
            let s = solve(n_x);
            let ratio = 2560 / n_x;
            let mut num = 0.0;
            let mut den = 0.0;
            for m in 0..=n_x {
                num += (s.state.v[m] - reference.state.v[m * ratio]).powi(2);
                den += reference.state.v[m * ratio].powi(2);
            }
            (num / den).sqrt()
        };
        let (e1, e2) = (err(320), err(640));
        let p = (e1 / e2).log2();
        assert!(p > 1.9, "observed order {p:.2} (errors {e1:.2e}, {e2:.2e})");
    }

    #[test]
    fn unmodulated_energy_is_conserved() {
        let t_end = 0.04;
        let cfg = config(400.0, 1600, 50.0, vec![iface(1e-10, 1e3)], t_end);
        let mut solver = MicroSolver::new(&cfg).unwrap();
        launch(&mut solver, 70.0, 8.0);
        let e0 = solver.bulk_energy() + solver.interface_energy();
        run_to_end(&mut solver);
        let e1 = solver.bulk_energy() + solver.interface_energy();
        assert!(
            (e1 - e0).abs() / e0 < 1e-3,
            "energy drift {:.3e} over {} steps",
            (e1 - e0) / e0,
            solver.n_steps()
        );
    }

    #[test]
    fn impedance_matched_lattice_does_not_reflect() {
        // matched modulated interfaces: M(T) = (ρc)² C(T); the left-moving
        // characteristic S + ZV stays empty as the pulse crosses the lattice
        let f_m = 40.0;
        let c_bar = 1e-9;
        let spec = InterfaceSpec {
            y_pos: 0.0,
            compliance: Modulation { mean: c_bar, eps: 0.9, omega: 2.0 * std::f64::consts::PI * f_m, phase: 0.0 },
            mass: Modulation { mean: Z0 * Z0 * c_bar, eps: 0.9, omega: 2.0 * std::f64::consts::PI * f_m, phase: 0.0 },
            q_c: Modulation::constant(0.0),
            q_m: Modulation::constant(0.0),
        };
        let cfg = config(200.0, 800, 10.0, vec![spec], 0.04);
        let mut solver = MicroSolver::new(&cfg).unwrap();
        launch(&mut solver, 40.0, 8.0);
        run_to_end(&mut solver);
        let mut left = 0.0;
        let mut total = 0.0;
        for m in 0..solver.xs.len() {
            let p = solver.state.s[m] + Z0 * solver.state.v[m];
            let q = solver.state.s[m] - Z0 * solver.state.v[m];
            left += p * p;
            total += p * p + q * q;
        }
        assert!(left / total < 0.01, "reflected fraction {:.3e}", left / total);
    }

    #[test]
    fn mismatched_lattice_does_reflect() {
        // control for the test above: softer springs, no matching mass
        let cfg = config(200.0, 800, 10.0, vec![iface(4e-9, 0.0)], 0.04);
        let mut solver = MicroSolver::new(&cfg).unwrap();
        launch(&mut solver, 40.0, 8.0);
        run_to_end(&mut solver);
        let mut left = 0.0;
        let mut total = 0.0;
        for m in 0..solver.xs.len() {
            let p = solver.state.s[m] + Z0 * solver.state.v[m];
            let q = solver.state.s[m] - Z0 * solver.state.v[m];
            left += p * p;
            total += p * p + q * q;
        }
        assert!(left / total > 0.05, "expected visible reflections, got {:.3e}", left / total);
    }

    #[test]
    fn cfl_violation_refused() {
        let cfg = config(100.0, 400, 50.0, vec![iface(1e-9, 1e3)], 0.01);
        let mut solver = MicroSolver::new(&cfg).unwrap();
        let dt = solver.dt;
        assert!(matches!(solver.step_with(10.0 * dt), Err(Error::Cfl { .. })));
        solver.step_with(dt).unwrap();
    }

    #[test]
    fn run_micro_records_and_is_deterministic() {
        let cfg = config(100.0, 400, 50.0, vec![iface(1e-9, 1e3)], 0.01);
        let spec = RecordSpec {
            snapshot_times: vec![0.005],
            receivers: vec![75.0],
            ..Default::default()
        };
        let a = run_micro(&cfg, &spec).unwrap();
        let b = run_micro(&cfg, &spec).unwrap();
        assert_eq!(a.snapshots.len(), 1);
        assert_eq!(a.receivers.len(), 1);
        assert_eq!(a.receiver_times.len(), a.receivers[0].u.len());
        assert!(!a.frames.is_empty());
        // bitwise determinism
        assert_eq!(a.receivers[0].u, b.receivers[0].u);
        assert_eq!(a.frames.last().unwrap().v, b.frames.last().unwrap().v);
        // the source actually injected something
        assert!(a.receivers[0].u.iter().any(|&u| u != 0.0));
    }

    #[test]
    fn receiver_outside_domain_rejected() {
        let cfg = config(100.0, 400, 50.0, vec![], 0.01);
        let spec = RecordSpec { receivers: vec![150.0], ..Default::default() };
        assert!(run_micro(&cfg, &spec).is_err());
    }

    #[test]
    fn interfaces_too_close_to_grid_rejected() {
        // 2 m spacing vs 1 m grid cells: under the 3-cell guard
        let mut specs = vec![iface(1e-9, 0.0)];
        let mut second = iface(1e-9, 0.0);
        second.y_pos = 0.04; // 2 m apart in a 50 m cell
        specs.push(second);
        let cfg = config(100.0, 100, 50.0, specs, 0.01);
        assert!(MicroSolver::new(&cfg).is_err());
    }
}
