//! Piecewise polynomials on the periodic unit cell [0, 1).
//!
//! Cell correctors, their fluxes and the material coefficients are all
//! piecewise polynomials with breakpoints at the interface positions, so
//! all cell-problem integrals are evaluated exactly in closed form.

/// Dense polynomial in a local coordinate, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn constant(v: f64) -> Self {
        Poly { coeffs: vec![v] }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * (i + 1) as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0];
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c / (i + 1) as f64),
        );
        Poly::new(out)
    }

    /// Integral over the local interval [0, len].
    pub fn integral(&self, len: f64) -> f64 {
        self.antiderivative().eval(len)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::new(out)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Taylor shift: returns q with q(x) = p(x + s).
    pub fn shift(&self, s: f64) -> Poly {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            // binomial expansion of c (x+s)^i
            let mut binom = 1.0;
            let mut spow = 1.0;
            for j in (0..=i).rev() {
                out[j] += c * binom * spow;
                if j > 0 {
                    binom = binom * j as f64 / (i - j + 1) as f64;
                    spow *= s;
                }
            }
        }
        Poly::new(out)
    }
}

/// 1-periodic piecewise polynomial on [0, 1).
///
/// `breaks[0] == 0.0`; segment `k` spans `[breaks[k], breaks[k+1])` with the
/// last segment ending at 1. Segment polynomials use the local coordinate
/// `y - breaks[k]`.
#[derive(Debug, Clone)]
pub struct PiecewisePoly {
    pub breaks: Vec<f64>,
    pub segs: Vec<Poly>,
}

const BREAK_TOL: f64 = 1e-12;

impl PiecewisePoly {
    pub fn new(breaks: Vec<f64>, segs: Vec<Poly>) -> Self {
        assert_eq!(breaks.len(), segs.len());
        assert!(!breaks.is_empty() && breaks[0] == 0.0);
        assert!(breaks.windows(2).all(|w| w[0] < w[1]));
        assert!(*breaks.last().unwrap() < 1.0);
        PiecewisePoly { breaks, segs }
    }

    pub fn constant(v: f64) -> Self {
        PiecewisePoly::new(vec![0.0], vec![Poly::constant(v)])
    }

    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<f64>) -> Self {
        let segs = values.into_iter().map(Poly::constant).collect();
        PiecewisePoly::new(breaks, segs)
    }

    pub fn n_segs(&self) -> usize {
        self.segs.len()
    }

    pub fn seg_end(&self, k: usize) -> f64 {
        if k + 1 < self.breaks.len() {
            self.breaks[k + 1]
        } else {
            1.0
        }
    }

    pub fn seg_len(&self, k: usize) -> f64 {
        self.seg_end(k) - self.breaks[k]
    }

    fn seg_index(&self, y: f64) -> usize {
        match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&y).unwrap())
        {
            Ok(k) => k,
            Err(k) => k - 1,
        }
    }

    /// Evaluates at y (wrapped into [0,1)); at a breakpoint returns the
    /// right limit.
    pub fn eval(&self, y: f64) -> f64 {
        let y = y - y.floor();
        let k = self.seg_index(y);
        self.segs[k].eval(y - self.breaks[k])
    }

    /// Right limit at breakpoint k.
    pub fn value_right(&self, k: usize) -> f64 {
        self.segs[k].eval(0.0)
    }

    /// Left limit at breakpoint k; for k = 0 this is the value at 1⁻.
    pub fn value_left(&self, k: usize) -> f64 {
        let j = if k == 0 { self.n_segs() - 1 } else { k - 1 };
        self.segs[j].eval(self.seg_len(j))
    }

    /// Jump p(y_k⁺) − p(y_k⁻), with the periodic convention at k = 0.
    pub fn jump(&self, k: usize) -> f64 {
        self.value_right(k) - self.value_left(k)
    }

    /// Interface mean (p(y_k⁺) + p(y_k⁻)) / 2.
    pub fn iface_mean(&self, k: usize) -> f64 {
        0.5 * (self.value_right(k) + self.value_left(k))
    }

    /// ⟨p⟩ = ∫₀¹ p dy.
    pub fn mean(&self) -> f64 {
        (0..self.n_segs())
            .map(|k| self.segs[k].integral(self.seg_len(k)))
            .sum()
    }

    pub fn derivative(&self) -> PiecewisePoly {
        PiecewisePoly::new(
            self.breaks.clone(),
            self.segs.iter().map(|p| p.derivative()).collect(),
        )
    }

    /// Cumulative integral from 0⁺, adding the prescribed jump at each
    /// breakpoint index when it is crossed. The result starts at 0 at 0⁺.
    pub fn antiderivative_with_jumps(&self, jumps: &[f64]) -> PiecewisePoly {
        assert_eq!(jumps.len(), self.breaks.len());
        let mut segs = Vec::with_capacity(self.n_segs());
        let mut acc = 0.0;
        for k in 0..self.n_segs() {
            if k > 0 {
                acc += jumps[k];
            }
            let anti = self.segs[k].antiderivative();
            let mut p = anti.clone();
            p.coeffs[0] += acc;
            acc += anti.eval(self.seg_len(k));
            segs.push(p);
        }
        PiecewisePoly::new(self.breaks.clone(), segs)
    }

    pub fn scale(&self, s: f64) -> PiecewisePoly {
        PiecewisePoly::new(self.breaks.clone(), self.segs.iter().map(|p| p.scale(s)).collect())
    }

    pub fn shift_values(&self, c: f64) -> PiecewisePoly {
        let mut out = self.clone();
        for p in &mut out.segs {
            p.coeffs[0] += c;
        }
        out
    }

    /// Refines both operands to a common breakpoint set.
    pub fn align(a: &PiecewisePoly, b: &PiecewisePoly) -> (PiecewisePoly, PiecewisePoly) {
        let mut breaks: Vec<f64> = a.breaks.iter().chain(b.breaks.iter()).copied().collect();
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        breaks.dedup_by(|x, y| (*x - *y).abs() < BREAK_TOL);
        (a.refine(&breaks), b.refine(&breaks))
    }

    /// Re-expresses the function on a finer breakpoint set (must contain the
    /// current breakpoints).
    pub fn refine(&self, breaks: &[f64]) -> PiecewisePoly {
        let segs = breaks
            .iter()
            .map(|&y| {
                let k = self.seg_index(y);
                self.segs[k].shift(y - self.breaks[k])
            })
            .collect();
        PiecewisePoly::new(breaks.to_vec(), segs)
    }

    pub fn add(&self, other: &PiecewisePoly) -> PiecewisePoly {
        let (a, b) = PiecewisePoly::align(self, other);
        let segs = a.segs.iter().zip(&b.segs).map(|(p, q)| p.add(q)).collect();
        PiecewisePoly::new(a.breaks, segs)
    }

    pub fn sub(&self, other: &PiecewisePoly) -> PiecewisePoly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &PiecewisePoly) -> PiecewisePoly {
        let (a, b) = PiecewisePoly::align(self, other);
        let segs = a.segs.iter().zip(&b.segs).map(|(p, q)| p.mul(q)).collect();
        PiecewisePoly::new(a.breaks, segs)
    }

    /// Divides by a piecewise-constant function.
    pub fn div_pc(&self, den: &PiecewisePoly) -> PiecewisePoly {
        let (a, b) = PiecewisePoly::align(self, den);
        let segs = a
            .segs
            .iter()
            .zip(&b.segs)
            .map(|(p, q)| {
                assert!(q.coeffs.len() == 1, "div_pc requires piecewise-constant divisor");
                p.scale(1.0 / q.coeffs[0])
            })
            .collect();
        PiecewisePoly::new(a.breaks, segs)
    }

    /// 1/p for piecewise-constant p.
    pub fn recip_pc(&self) -> PiecewisePoly {
        PiecewisePoly::constant(1.0).div_pc(self)
    }

    /// Maximum polynomial degree over all segments.
    pub fn degree(&self) -> usize {
        self.segs.iter().map(|p| p.coeffs.len() - 1).max().unwrap_or(0)
    }
}

/// 16-point Gauss–Legendre nodes and weights on [-1, 1].
const GL16: [(f64, f64); 16] = [
    (-0.9894009349916499, 0.027152459411754095),
    (-0.9445750230732326, 0.062253523938647894),
    (-0.8656312023878318, 0.09515851168249278),
    (-0.755404408355003, 0.12462897125553387),
    (-0.6178762444026438, 0.14959598881657673),
    (-0.45801677765722737, 0.16915651939500254),
    (-0.2816035507792589, 0.18260341504492358),
    (-0.09501250983763744, 0.189450610455068496),
    (0.09501250983763744, 0.189450610455068496),
    (0.2816035507792589, 0.18260341504492358),
    (0.45801677765722737, 0.16915651939500254),
    (0.6178762444026438, 0.14959598881657673),
    (0.755404408355003, 0.12462897125553387),
    (0.8656312023878318, 0.09515851168249278),
    (0.9445750230732326, 0.062253523938647894),
    (0.9894009349916499, 0.027152459411754095),
];

/// Composite 16-point Gauss–Legendre quadrature on [a, b].
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n_sub: usize) -> f64 {
    let dx = (b - a) / n_sub as f64;
    let mut total = 0.0;
    for i in 0..n_sub {
        let lo = a + i as f64 * dx;
        let mid = lo + 0.5 * dx;
        let half = 0.5 * dx;
        for &(x, w) in &GL16 {
            total += w * f(mid + half * x);
        }
    }
    total * 0.5 * dx
}

/// Quadrature of a periodic cell function segment by segment, avoiding the
/// discontinuities at the given breakpoints. Independent check path for the
/// closed-form integrals.
pub fn integrate_cell_gl<F: Fn(f64) -> f64>(f: F, breaks: &[f64], n_sub: usize) -> f64 {
    let mut total = 0.0;
    for (k, &lo) in breaks.iter().enumerate() {
        let hi = if k + 1 < breaks.len() { breaks[k + 1] } else { 1.0 };
        total += integrate_gl(&f, lo, hi, n_sub);
    }
    total
}
