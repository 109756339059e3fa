//! Composite Gauss–Legendre quadrature with panel doubling, and a graded
//! exponential substitution for half-lines.
//!
//! On `(-inf, c]` the substitution `u = e^{x - c}` maps to `(0, 1]`; panels
//! are geometric octaves `[2^{-j-1}, 2^{-j}]` in `u`. Each refinement level
//! doubles both the octave depth and the panels per octave.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("non-finite integrand value at x = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    pub panels_per_unit: usize,
    pub base_octaves: usize,
    pub max_octaves: usize,
    pub tol_finite: f64,
    pub tol_infinite: f64,
    pub max_levels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::new(10, 1e-10, 1e-8)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

impl QuadratureRule {
    pub fn new(order: usize, tol_finite: f64, tol_infinite: f64) -> Self {
        assert!(order >= 2 && tol_finite > 0.0 && tol_infinite > 0.0);
        let (nodes, weights) = gauss_legendre(order);
        QuadratureRule {
            order,
            panels_per_unit: 1,
            base_octaves: 8,
            max_octaves: 256,
            tol_finite,
            tol_infinite,
            max_levels: 14,
            nodes,
            weights,
        }
    }

    pub fn with_tolerance(&self, tol_finite: f64, tol_infinite: f64) -> Self {
        let mut r = self.clone();
        r.tol_finite = tol_finite;
        r.tol_infinite = tol_infinite;
        r
    }

    /// One Gauss–Legendre panel on `[a, b]`.
    pub fn panel(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64, QuadratureError> {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = m + r * x;
            let v = f(t);
            if !v.is_finite() {
                return Err(QuadratureError::NonFinite(t));
            }
            s += w * v;
        }
        Ok(s * r)
    }

    fn fixed_finite(&self, f: &impl Fn(f64) -> f64, cuts: &[f64], level: usize) -> Result<f64, QuadratureError> {
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let base = ((b - a) * self.panels_per_unit as f64).ceil().max(1.0) as usize;
            let n = base << level;
            let h = (b - a) / n as f64;
            for k in 0..n {
                let lo = a + k as f64 * h;
                let hi = if k + 1 == n { b } else { lo + h };
                total += self.panel(f, lo, hi)?;
            }
        }
        Ok(total)
    }

    fn fixed_tail(&self, f: &impl Fn(f64) -> f64, c: f64, level: usize) -> Result<f64, QuadratureError> {
        let octaves = (self.base_octaves << level).min(self.max_octaves);
        let sub = 1usize << level.min(10);
        let g = |u: f64| {
            let x = c + u.ln();
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v / u
            }
        };
        let mut total = 0.0;
        let step = 1.0 / sub as f64;
        for j in (0..octaves * sub).rev() {
            let hi = (-(j as f64) * step).exp2();
            let lo = (-((j + 1) as f64) * step).exp2();
            total += self.panel(&g, lo, hi)?;
        }
        let last = (-(octaves as f64)).exp2();
        total += self.panel(&g, 0.0, last)?;
        Ok(total)
    }

    fn refine(
        &self,
        tol: f64,
        levels: usize,
        mut estimate: impl FnMut(usize) -> Result<f64, QuadratureError>,
    ) -> Result<f64, QuadratureError> {
        let mut prev = estimate(0)?;
        let mut prev_diff = f64::INFINITY;
        let mut stalls = 0;
        for level in 1..=levels {
            let cur = estimate(level)?;
            let diff = (cur - prev).abs();
            if diff <= tol * cur.abs().max(1.0) {
                return Ok(cur);
            }
            if diff > 0.5 * prev_diff {
                stalls += 1;
                if stalls >= 4 {
                    return Err(QuadratureError::Divergent(format!(
                        "{stalls} refinements without contraction (last change {diff:e})"
                    )));
                }
            } else {
                stalls = 0;
            }
            prev = cur;
            prev_diff = diff;
        }
        Err(QuadratureError::Divergent(format!(
            "no stabilisation after {levels} refinements (last change {prev_diff:e})"
        )))
    }

    /// `∫_a^b f` for finite `a <= b`, splitting panels at `breakpoints`.
    pub fn integrate_finite(
        &self,
        f: impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        breakpoints: &[f64],
    ) -> Result<f64, QuadratureError> {
        if a == b {
            return Ok(0.0);
        }
        if a > b {
            return self.integrate_finite(f, b, a, breakpoints).map(|v| -v);
        }
        let mut cuts = vec![a];
        cuts.extend(breakpoints.iter().copied().filter(|&t| t > a && t < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        self.refine(self.tol_finite, self.max_levels, |k| self.fixed_finite(&f, &cuts, k))
    }

    /// `∫_{-inf}^c f`.
    pub fn integrate_tail(&self, f: impl Fn(f64) -> f64, c: f64) -> Result<f64, QuadratureError> {
        let levels = self.max_octaves.div_ceil(self.base_octaves).ilog2() as usize + 2;
        self.refine(self.tol_infinite, levels.max(6), |k| self.fixed_tail(&f, c, k))
    }

    /// `∫_lo^hi f` where either end may be infinite.
    pub fn integrate(
        &self,
        f: impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        breakpoints: &[f64],
    ) -> Result<f64, QuadratureError> {
        self.integrate_dyn(&f, lo, hi, breakpoints)
    }

    fn integrate_dyn(
        &self,
        f: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        breakpoints: &[f64],
    ) -> Result<f64, QuadratureError> {
        if lo == hi {
            return Ok(0.0);
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let left = self.integrate_dyn(f, lo, 0.0, breakpoints)?;
            let right = self.integrate_dyn(f, 0.0, hi, breakpoints)?;
            return Ok(left + right);
        }
        if hi == f64::INFINITY {
            let flipped: Vec<f64> = breakpoints.iter().map(|t| -t).collect();
            return self.integrate_dyn(&|y| f(-y), -hi, -lo, &flipped);
        }
        if lo == f64::NEG_INFINITY {
            let c = breakpoints
                .iter()
                .copied()
                .filter(|t| t.is_finite() && *t < hi)
                .fold(hi.min(0.0), f64::min);
            let tail = self.integrate_tail(f, c)?;
            let body = self.integrate_finite(f, c, hi, breakpoints)?;
            return Ok(tail + body);
        }
        self.integrate_finite(f, lo, hi, breakpoints)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        for n in 2..12 {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for deg in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn finite_with_kink() {
        let r = QuadratureRule::default();
        let v = r.integrate_finite(|x: f64| x.abs(), -1.0, 2.0, &[0.0]).unwrap();
        assert_relative_eq!(v, 2.5, epsilon = 1e-14);
    }

    #[test]
    fn fubini_study_half_mass() {
        let r = QuadratureRule::default();
        let g = |x: f64| 2.0 * (2.0 * x).exp() / (1.0 + (2.0 * x).exp()).powi(2);
        let v = r.integrate(g, f64::NEG_INFINITY, 0.0, &[]).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        let full = r.integrate(g, f64::NEG_INFINITY, f64::INFINITY, &[]).unwrap();
        assert!((full - 1.0).abs() < 1e-12, "{full}");
        // ∫ x² g over (-inf, 0] = π²/24
        let m2 = r.integrate(|x| x * x * g(x), f64::NEG_INFINITY, 0.0, &[]).unwrap();
        assert!((m2 - std::f64::consts::PI.powi(2) / 24.0).abs() < 1e-10, "{m2}");
    }

    #[test]
    fn divergence_detected() {
        let r = QuadratureRule::default();
        assert!(matches!(
            r.integrate(|_| 1.0, f64::NEG_INFINITY, 0.0, &[]),
            Err(QuadratureError::Divergent(_))
        ));
        assert!(matches!(
            r.integrate(|x: f64| 1.0 / (1.0 + x.abs()), f64::NEG_INFINITY, 0.0, &[]),
            Err(QuadratureError::Divergent(_))
        ));
    }

    #[test]
    fn exponential_tail() {
        let r = QuadratureRule::default();
        let v = r.integrate(|x: f64| x.exp(), f64::NEG_INFINITY, 1.5, &[-3.0]).unwrap();
        assert_relative_eq!(v, 1.5f64.exp(), max_relative = 1e-12);
    }
}
