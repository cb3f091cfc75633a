//! Analytic sub-threshold model of the synapse read path.
//!
//! Each device sits in series with a diode-connected input transistor (M1 or
//! M4). In sub-threshold the branch current `I` satisfies
//!
//! ```text
//! I = I0 * exp(-kappa * R * I / UT) * exp((kappa * V_RD - V_s) / UT)
//! ```
//!
//! The Gilbert normalizer then splits the tail bias `I_b` between the two
//! outputs in proportion to the branch currents.

use serde::{Deserialize, Serialize};

use crate::device::SynapsePair;
use crate::error::{Error, Result};
use crate::units::serde_si;

const BISECTION_REL_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitParams {
    /// Read supply.
    #[serde(with = "serde_si::volt")]
    pub v_rd: f64,
    /// Source bias of the input transistors.
    #[serde(with = "serde_si::volt")]
    pub v_s: f64,
    /// Normalizer tail bias.
    #[serde(with = "serde_si::ampere")]
    pub i_b: f64,
    /// Sub-threshold slope factor.
    pub kappa: f64,
    /// Thermal voltage.
    #[serde(with = "serde_si::volt")]
    pub u_t: f64,
    /// Transistor leakage scale.
    #[serde(with = "serde_si::ampere")]
    pub i0_fet: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            v_rd: 1.8,
            v_s: 0.9,
            i_b: 20e-9,
            kappa: 0.7,
            u_t: 25.85e-3,
            i0_fet: 0.5e-12,
        }
    }
}

impl CircuitParams {
    pub fn with_v_s(self, v_s: f64) -> Self {
        CircuitParams { v_s, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_rd > self.v_s) {
            return Err(Error::invalid(format!(
                "v_rd ({}) must exceed v_s ({})",
                self.v_rd, self.v_s
            )));
        }
        if !(self.i_b > 0.0) {
            return Err(Error::invalid("i_b must be positive"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::invalid(format!(
                "kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        if !(self.u_t > 0.0) || !(self.i0_fet > 0.0) {
            return Err(Error::invalid("u_t and i0_fet must be positive"));
        }
        Ok(())
    }

    /// Branch current in the `r -> 0` limit, `I0 * exp((kappa V_RD - V_s) / UT)`.
    pub fn zero_resistance_current(&self) -> f64 {
        self.i0_fet * ((self.kappa * self.v_rd - self.v_s) / self.u_t).exp()
    }
}

/// Normalizer output pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadResult {
    pub i_pos: f64,
    pub i_neg: f64,
}

impl ReadResult {
    pub fn difference(&self) -> f64 {
        self.i_pos - self.i_neg
    }

    /// `(i_pos - i_neg) / (i_pos + i_neg)`, in `[-1, 1]`.
    pub fn normalized_difference(&self) -> f64 {
        self.difference() / (self.i_pos + self.i_neg)
    }
}

/// Relative residual of `i` as a solution of the transcendental branch equation.
pub fn branch_residual(r: f64, i: f64, p: &CircuitParams) -> f64 {
    let rhs = p.zero_resistance_current() * (-p.kappa * r * i / p.u_t).exp();
    ((i - rhs) / i).abs()
}

/// Exact branch current through a device of resistance `r`.
///
/// The right-hand side is strictly decreasing in `I`, so the root is unique and
/// bracketed by `[0, I(r -> 0)]`; plain bisection always converges.
pub fn branch_current_exact(r: f64, p: &CircuitParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("resistance must be positive, got {r}")));
    }
    let i_max = p.zero_resistance_current();
    if !(i_max.is_finite() && i_max > 0.0) {
        return Err(Error::Solver {
            resistance: r,
            iterations: 0,
        });
    }
    let a = p.kappa * r / p.u_t;
    let f = |i: f64| i - i_max * (-a * i).exp();

    let (mut lo, mut hi) = (0.0_f64, i_max);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECTION_REL_TOL * lo {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Solver {
        resistance: r,
        iterations: BISECTION_MAX_ITER,
    })
}

/// Linearized branch current, valid when `kappa * R * I / UT` is small:
/// `I0 / (exp(-(kappa V_RD - V_s)/UT) + kappa/UT * R * I0)`.
pub fn branch_current_linear(r: f64, p: &CircuitParams) -> f64 {
    let x = (p.kappa * p.v_rd - p.v_s) / p.u_t;
    p.i0_fet / ((-x).exp() + p.kappa / p.u_t * r * p.i0_fet)
}

/// Gilbert normalizer: splits `i_b` in proportion to the two input currents.
pub fn normalizer(i_m1: f64, i_m4: f64, i_b: f64) -> Result<ReadResult> {
    if i_m1 < 0.0 || i_m4 < 0.0 {
        return Err(Error::invalid("normalizer inputs must be non-negative"));
    }
    let total = i_m1 + i_m4;
    if !(total > 0.0) {
        return Err(Error::Degenerate("both normalizer inputs are zero".into()));
    }
    Ok(ReadResult {
        i_pos: i_b * (i_m1 / total),
        i_neg: i_b * (i_m4 / total),
    })
}

/// Reads a differential pair through the exact branch model and the normalizer.
pub fn read_synapse(pair: &SynapsePair, p: &CircuitParams) -> Result<ReadResult> {
    let i_m1 = branch_current_exact(pair.d_pos.resistance, p)?;
    let i_m4 = branch_current_exact(pair.d_neg.resistance, p)?;
    normalizer(i_m1, i_m4, p.i_b)
}

/// Output currents of an n-branch normalizer, one branch per conductance.
pub fn multi_branch(conductances: &[f64], p: &CircuitParams) -> Result<Vec<f64>> {
    if conductances.len() < 2 {
        return Err(Error::invalid("multi-branch cell needs at least two devices"));
    }
    if let Some(g) = conductances.iter().find(|g| !(**g > 0.0)) {
        return Err(Error::invalid(format!("conductance must be positive, got {g}")));
    }
    let branch: Vec<f64> = conductances
        .iter()
        .map(|g| branch_current_exact(1.0 / g, p))
        .collect::<Result<_>>()?;
    let total: f64 = branch.iter().sum();
    Ok(branch.iter().map(|j| p.i_b * (j / total)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Unit,
    Binary,
}

/// Combines multi-branch outputs into a differential pair.
///
/// Branches `0..m` feed the positive output and `m..n` the negative one. With
/// binary weighting branch `x` is scaled by `2^x` on the positive side and by
/// `2^(x - m)` on the negative side.
pub fn combine_weighted(currents: &[f64], m: usize, weighting: Weighting) -> Result<(f64, f64)> {
    let n = currents.len();
    if m < 1 || m > n {
        return Err(Error::invalid(format!("split index {m} outside 1..={n}")));
    }
    let (pos, neg) = currents.split_at(m);
    Ok(match weighting {
        Weighting::Unit => (pos.iter().sum(), neg.iter().sum()),
        Weighting::Binary => {
            let weigh = |xs: &[f64]| {
                xs.iter()
                    .enumerate()
                    .map(|(x, i)| (x as f64).exp2() * i)
                    .sum()
            };
            (weigh(pos), weigh(neg))
        }
    })
}

/// Read path with op-amp clamped bottom nodes: the branch currents are exactly
/// `G * (V_RD - V_REF)`, so the outputs are the ideal conductance ratio.
pub fn active_read(g_pos: f64, g_neg: f64, v_rd: f64, v_ref: f64, i_b: f64) -> Result<ReadResult> {
    if !(v_rd > v_ref) {
        return Err(Error::invalid("active read needs v_rd > v_ref"));
    }
    if !(g_pos > 0.0 && g_neg > 0.0) {
        return Err(Error::invalid("conductances must be positive"));
    }
    let dv = v_rd - v_ref;
    normalizer(g_pos * dv, g_neg * dv, i_b)
}

/// One row of a normalizer transfer sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub r_pos: f64,
    pub r_neg: f64,
    pub v_s: f64,
    pub i_pos: f64,
    pub i_neg: f64,
}

/// `D_pos` swept from `r_min` to `r_max` while `D_neg` moves from `r_max` to
/// `r_min`, for each read-voltage headroom `v_rd - v_s` in `headrooms`.
pub fn normalizer_sweep(
    p: &CircuitParams,
    headrooms: &[f64],
    r_min: f64,
    r_max: f64,
    points: usize,
) -> Result<Vec<SweepPoint>> {
    if points < 2 {
        return Err(Error::invalid("sweep needs at least two points"));
    }
    let mut rows = Vec::with_capacity(points * headrooms.len());
    for &headroom in headrooms {
        let params = p.with_v_s(p.v_rd - headroom);
        params.validate()?;
        for k in 0..points {
            let r_pos = r_min + (r_max - r_min) * k as f64 / (points - 1) as f64;
            let r_neg = r_max + r_min - r_pos;
            let out = read_synapse(&SynapsePair::new(r_pos, r_neg), &params)?;
            rows.push(SweepPoint {
                r_pos,
                r_neg,
                v_s: params.v_s,
                i_pos: out.i_pos,
                i_neg: out.i_neg,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Independent oracle: bisection on the log-form `ln I - ln I_max + a I = 0`
    /// with a fixed iteration count and no early exit.
    fn oracle_branch(r: f64, p: &CircuitParams) -> f64 {
        let ln_max = p.i0_fet.ln() + (p.kappa * p.v_rd - p.v_s) / p.u_t;
        let a = p.kappa * r / p.u_t;
        let (mut lo, mut hi) = (f64::MIN_POSITIVE, ln_max.exp());
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid.ln() - ln_max + a * mid < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn golden_params() -> CircuitParams {
        CircuitParams {
            v_s: 0.9,
            ..CircuitParams::default()
        }
    }

    #[test]
    fn zero_resistance_limit() {
        let p = golden_params();
        let i = branch_current_exact(1e-9, &p).unwrap();
        let lim = p.i0_fet * ((p.kappa * p.v_rd - p.v_s) / p.u_t).exp();
        assert!(rel(i, lim) < 1e-9);
        assert!(rel(branch_current_linear(1e-9, &p), lim) < 1e-9);
    }

    #[test]
    fn golden_value_10k() {
        // Frozen from `oracle_branch(1e4, golden_params())`.
        const GOLDEN: f64 = 4.893_526_016_056_349e-7;
        let p = golden_params();
        let oracle = oracle_branch(1e4, &p);
        assert!(rel(oracle, GOLDEN) < 1e-12, "oracle drifted: {oracle:e}");
        let i = branch_current_exact(1e4, &p).unwrap();
        assert!(rel(i, GOLDEN) < 1e-11, "{i:e}");
    }

    #[test]
    fn decreasing_in_resistance() {
        for v_s in [0.3, 0.6, 0.9, 1.2] {
            let p = golden_params().with_v_s(v_s);
            let a = branch_current_exact(1e3, &p).unwrap();
            let b = branch_current_exact(2e4, &p).unwrap();
            assert!(a > b, "v_s = {v_s}");
        }
    }

    #[test]
    fn residual_over_grid() {
        for i in 0..50 {
            let r = 100.0 * 10f64.powf(4.0 * i as f64 / 49.0);
            for j in 0..10 {
                let v_s = 0.8 + 0.6 * j as f64 / 9.0;
                let p = golden_params().with_v_s(v_s);
                let cur = branch_current_exact(r, &p).unwrap();
                assert!(branch_residual(r, cur, &p) < 1e-9, "r={r} v_s={v_s}");
            }
        }
    }

    #[test]
    fn linear_form_agrees_in_its_regime() {
        let mut checked = 0;
        for i in 0..60 {
            let r = 10.0 * 10f64.powf(5.0 * i as f64 / 59.0);
            for j in 0..13 {
                let v_s = 0.3 + 0.1 * j as f64;
                let p = golden_params().with_v_s(v_s);
                let exact = branch_current_exact(r, &p).unwrap();
                if p.kappa * r * exact / p.u_t < 0.01 {
                    checked += 1;
                    assert!(
                        rel(branch_current_linear(r, &p), exact) < 0.01,
                        "r={r} v_s={v_s}"
                    );
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn linear_form_large_resistance_asymptote() {
        let p = golden_params().with_v_s(0.6);
        let x = (p.kappa * p.v_rd - p.v_s) / p.u_t;
        // Resistance where the R-term is 100x the exponential term.
        let r = 100.0 * (-x).exp() * p.u_t / (p.kappa * p.i0_fet);
        let asym = p.u_t / (p.kappa * r);
        assert!(rel(branch_current_linear(r, &p), asym) < 0.05);
    }

    #[test]
    fn normalizer_examples() {
        let x = 3.7e-7;
        let a = normalizer(x, x, 20e-9).unwrap();
        assert!(rel(a.i_pos, 10e-9) < 1e-15 && rel(a.i_neg, 10e-9) < 1e-15);
        let b = normalizer(3.0 * x, x, 20e-9).unwrap();
        assert!(rel(b.i_pos, 15e-9) < 1e-15 && rel(b.i_neg, 5e-9) < 1e-15);
        let c = normalizer(0.0, x, 20e-9).unwrap();
        assert_eq!(c.i_pos, 0.0);
        assert!(rel(c.i_neg, 20e-9) < 1e-15);
        assert!(matches!(normalizer(0.0, 0.0, 20e-9), Err(Error::Degenerate(_))));
    }

    #[test]
    fn equal_devices_split_evenly() {
        for v_s in [0.8, 0.9, 1.0] {
            let p = golden_params().with_v_s(v_s);
            let out = read_synapse(&SynapsePair::new(4.2e3, 4.2e3), &p).unwrap();
            assert_eq!(out.i_pos, out.i_neg);
            assert!(rel(out.i_pos, p.i_b / 2.0) < 1e-15);
        }
    }

    fn chord_deviation(rows: &[SweepPoint]) -> f64 {
        let (first, last) = (rows[0], rows[rows.len() - 1]);
        let span = (first.i_pos - last.i_pos).abs();
        rows.iter()
            .map(|r| {
                let t = (r.r_pos - first.r_pos) / (last.r_pos - first.r_pos);
                (r.i_pos - (first.i_pos + t * (last.i_pos - first.i_pos))).abs() / span
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn normalizer_output_sweep() {
        let p = golden_params();
        let rows = normalizer_sweep(&p, &[0.8, 0.9, 1.0], 1e3, 20e3, 20).unwrap();
        let mut deviations = Vec::new();
        for curve in rows.chunks(20) {
            for w in curve.windows(2) {
                assert!(w[1].i_pos < w[0].i_pos, "i_pos must fall as r_pos rises");
            }
            deviations.push(chord_deviation(curve));
        }
        assert!(
            deviations[0] < deviations[1] && deviations[1] < deviations[2],
            "{deviations:?}"
        );
    }

    #[test]
    fn crossing_at_equal_resistances() {
        // An odd point count puts the midpoint at r_pos == r_neg.
        let rows = normalizer_sweep(&golden_params(), &[0.8, 0.9, 1.0], 1e3, 21e3, 21).unwrap();
        for curve in rows.chunks(21) {
            let mid = curve[10];
            assert_eq!(mid.r_pos, mid.r_neg);
            assert!(rel(mid.i_pos, mid.i_neg) < 1e-15);
        }
    }

    #[test]
    fn multi_branch_examples() {
        let p = golden_params();
        let out = multi_branch(&[1e-4; 4], &p).unwrap();
        for i in &out {
            assert!(rel(*i, p.i_b / 4.0) < 1e-15);
        }
        let pair = SynapsePair::new(3e3, 6e3);
        let two = multi_branch(&[1.0 / 3e3, 1.0 / 6e3], &p).unwrap();
        let rd = read_synapse(&pair, &p).unwrap();
        assert!(rel(two[0], rd.i_pos) < 1e-12 && rel(two[1], rd.i_neg) < 1e-12);
    }

    #[test]
    fn multi_branch_approaches_ideal_ratio_with_headroom() {
        // The branch current tends to UT/(kappa R) * ln(...) as the headroom grows,
        // so the ideal conductance ratio is approached for large v_rd - v_s; for a
        // small headroom every branch carries ~ i_b / n.
        let g = [1.0 / 3e3, 1.0 / 4e3, 1.0 / 5e3, 1.0 / 6e3];
        let gsum: f64 = g.iter().sum();
        let p = golden_params();
        let mut errors = Vec::new();
        for headroom in [0.3, 0.9, 1.2, 1.5, 1.8] {
            let out = multi_branch(&g, &p.with_v_s(p.v_rd - headroom)).unwrap();
            let err = out
                .iter()
                .zip(&g)
                .map(|(i, gk)| rel(*i, p.i_b * gk / gsum))
                .fold(0.0, f64::max);
            errors.push(err);
        }
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "{errors:?}");
        }
        assert!(*errors.last().unwrap() < 0.02, "{errors:?}");
        let flat = multi_branch(&g, &p.with_v_s(p.v_rd - 0.3)).unwrap();
        for i in flat {
            assert!(rel(i, p.i_b / 4.0) < 1e-3);
        }
    }

    #[test]
    fn combine_examples() {
        let (pos, neg) = combine_weighted(&[2.0, 5.0], 1, Weighting::Unit).unwrap();
        assert_eq!((pos, neg), (2.0, 5.0));
        let c = 1.5;
        let (pos, neg) = combine_weighted(&[c; 4], 2, Weighting::Binary).unwrap();
        assert_eq!((pos, neg), (3.0 * c, 3.0 * c));
        let xs = [1.0, 2.0, 4.5, 0.25, 3.0];
        let (pos, neg) = combine_weighted(&xs, 3, Weighting::Unit).unwrap();
        assert_eq!(pos + neg, xs.iter().sum::<f64>());
        assert!(combine_weighted(&xs, 0, Weighting::Unit).is_err());
        assert!(combine_weighted(&xs, 6, Weighting::Unit).is_err());
    }

    #[test]
    fn active_read_examples() {
        let a = active_read(1e-3, 1e-3, 1.8, 1.7, 20e-9).unwrap();
        assert_eq!(a.i_pos, a.i_neg);
        let b = active_read(1e-3, 3e-3, 1.8, 1.7, 20e-9).unwrap();
        assert!(rel(b.i_pos, 5e-9) < 1e-15 && rel(b.i_neg, 15e-9) < 1e-15);
        let c = active_read(1e-2, 3e-2, 1.8, 1.7, 20e-9).unwrap();
        assert!(rel(c.i_pos, b.i_pos) < 1e-15 && rel(c.i_neg, b.i_neg) < 1e-15);
    }

    proptest! {
        #[test]
        fn read_is_normalized(r_pos in 100.0..1e6f64, r_neg in 100.0..1e6f64, v_s in 0.8..1.4f64) {
            let p = golden_params().with_v_s(v_s);
            let out = read_synapse(&SynapsePair::new(r_pos, r_neg), &p).unwrap();
            prop_assert!(out.i_pos >= 0.0 && out.i_neg >= 0.0);
            prop_assert!(rel(out.i_pos + out.i_neg, p.i_b) < 1e-9);
        }

        #[test]
        fn read_monotone_in_conductance(r in 500.0..1e5f64, other in 500.0..1e5f64, f in 1.01..3.0f64) {
            let p = golden_params().with_v_s(0.6);
            let base = read_synapse(&SynapsePair::new(r, other), &p).unwrap();
            // Higher G_pos (lower R_pos) raises i_pos; higher G_neg lowers it.
            let up = read_synapse(&SynapsePair::new(r / f, other), &p).unwrap();
            let down = read_synapse(&SynapsePair::new(r, other / f), &p).unwrap();
            prop_assert!(up.i_pos > base.i_pos);
            prop_assert!(down.i_pos < base.i_pos);
        }

        #[test]
        fn active_read_is_ideal_ratio(g_pos in 1e-6..1e-2f64, g_neg in 1e-6..1e-2f64) {
            let out = active_read(g_pos, g_neg, 1.8, 1.75, 20e-9).unwrap();
            let ideal = 20e-9 * g_pos / (g_pos + g_neg);
            prop_assert!(rel(out.i_pos, ideal) < 4.0 * f64::EPSILON);
        }
    }
}
