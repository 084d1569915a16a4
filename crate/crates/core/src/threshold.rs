//! Finite-size scaling collapse and the code-rate formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::EstimateResult;

pub const DISTANCE_EXPONENT: f64 = 0.54;
pub const RATE_R0: f64 = 0.218_217_890_235_992_38; // 1/sqrt(21)
pub const RATE_LAMBDA: f64 = 4.8;

pub fn distance_estimate(n: usize) -> f64 {
    (n as f64).powf(DISTANCE_EXPONENT)
}

pub fn code_rate(ell: u32) -> f64 {
    RATE_R0 / RATE_LAMBDA.powi(ell as i32)
}

pub fn code_rate_with(ell: f64, r0: f64, lambda: f64) -> Result<f64> {
    if ell < 0.0 || lambda <= 0.0 || r0 < 0.0 {
        return Err(Error::InvalidArgument(
            "rate parameters out of range".into(),
        ));
    }
    Ok(r0 / lambda.powf(ell))
}

pub fn concatenated_rate(depth: u32) -> f64 {
    7f64.powi(-(depth as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub radius: usize,
    pub n: usize,
    pub p: f64,
    pub p_fail: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl FitRecord {
    pub fn from_result(r: &EstimateResult) -> Self {
        FitRecord {
            radius: r.radius,
            n: r.n,
            p: r.p,
            p_fail: r.p_fail,
            stderr: r.stderr,
            samples: r.samples,
        }
    }

    /// Standard error used for weighting, floored at 1/(2N).
    pub fn sigma(&self) -> f64 {
        let floor = if self.samples > 0 {
            0.5 / self.samples as f64
        } else {
            0.0
        };
        self.stderr.max(floor)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaledPoint {
    pub radius: usize,
    pub n: usize,
    pub p: f64,
    pub x: f64,
    pub p_fail: f64,
    pub stderr: f64,
}

/// x = (p - p_th) n^(1/nu).
pub fn rescale(records: &[FitRecord], p_th: f64, nu: f64) -> Result<Vec<RescaledPoint>> {
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "nu must be positive, got {nu}"
        )));
    }
    Ok(records
        .iter()
        .map(|r| RescaledPoint {
            radius: r.radius,
            n: r.n,
            p: r.p,
            x: scaling_x(r.p, r.n, p_th, nu),
            p_fail: r.p_fail,
            stderr: r.stderr,
        })
        .collect())
}

fn scaling_x(p: f64, n: usize, p_th: f64, nu: f64) -> f64 {
    (p - p_th) * (n as f64).powf(1.0 / nu)
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Weighted least-squares polynomial, coefficients lowest degree first.
pub fn weighted_polyfit(xs: &[f64], ys: &[f64], sigmas: &[f64], degree: usize) -> Result<Vec<f64>> {
    let m = degree + 1;
    if xs.len() < m {
        return Err(Error::InsufficientData(format!(
            "{} points for degree {degree}",
            xs.len()
        )));
    }
    let mut a = vec![vec![0.0; m + 1]; m];
    for ((&x, &y), &s) in xs.iter().zip(ys).zip(sigmas) {
        let w = 1.0 / (s * s);
        let pows: Vec<f64> = (0..m).map(|i| x.powi(i as i32)).collect();
        for i in 0..m {
            for j in 0..m {
                a[i][j] += w * pows[i] * pows[j];
            }
            a[i][m] += w * pows[i] * y;
        }
    }
    for c in 0..m {
        let piv = (c..m)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap_or(c);
        if a[piv][c].abs() < 1e-300 {
            return Err(Error::InsufficientData("singular polynomial fit".into()));
        }
        a.swap(c, piv);
        for r in 0..m {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=m {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    Ok((0..m).map(|i| a[i][m] / a[i][i]).collect())
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub degree: usize,
    /// Radius whose data define the universal curve; largest radius by default.
    pub reference: Option<usize>,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Starting point; the crossing of the two largest radii and nu = 3 by default.
    pub start: Option<(f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            degree: 2,
            reference: None,
            max_iterations: 4000,
            tolerance: 1e-14,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdFit {
    pub p_th: f64,
    pub nu: f64,
    pub f_coeffs: Vec<f64>,
    pub residual: f64,
    pub reference: usize,
    pub iterations: usize,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
    pub inputs: Vec<FitRecord>,
}

impl ThresholdFit {
    pub fn rescaled(&self) -> Vec<RescaledPoint> {
        rescale(&self.inputs, self.p_th, self.nu).unwrap_or_default()
    }
}

struct Problem<'a> {
    reference: Vec<&'a FitRecord>,
    others: Vec<&'a FitRecord>,
    degree: usize,
}

impl Problem<'_> {
    fn curve(&self, p_th: f64, nu: f64) -> Result<Vec<f64>> {
        let xs: Vec<f64> = self
            .reference
            .iter()
            .map(|r| scaling_x(r.p, r.n, p_th, nu))
            .collect();
        let ys: Vec<f64> = self.reference.iter().map(|r| r.p_fail).collect();
        let ss: Vec<f64> = self.reference.iter().map(|r| r.sigma()).collect();
        weighted_polyfit(&xs, &ys, &ss, self.degree)
    }

    fn objective(&self, p_th: f64, nu: f64) -> f64 {
        if !(nu > 0.0) || !p_th.is_finite() {
            return f64::INFINITY;
        }
        let Ok(f) = self.curve(p_th, nu) else {
            return f64::INFINITY;
        };
        self.others
            .iter()
            .map(|r| {
                let d = (r.p_fail - poly_eval(&f, scaling_x(r.p, r.n, p_th, nu))) / r.sigma();
                d * d
            })
            .sum()
    }
}

fn problem<'a>(records: &'a [FitRecord], opts: &FitOptions) -> Result<(Problem<'a>, usize)> {
    let mut radii: Vec<usize> = records.iter().map(|r| r.radius).collect();
    radii.sort_unstable();
    radii.dedup();
    let mut ps: Vec<u64> = records.iter().map(|r| r.p.to_bits()).collect();
    ps.sort_unstable();
    ps.dedup();
    if radii.len() < 3 || ps.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 radii and 4 p values, got {} and {}",
            radii.len(),
            ps.len()
        )));
    }
    if records.iter().any(|r| !(r.sigma() > 0.0)) {
        return Err(Error::InvalidArgument(
            "records need positive standard errors".into(),
        ));
    }
    let reference = opts.reference.unwrap_or(*radii.last().unwrap());
    if !radii.contains(&reference) {
        return Err(Error::InsufficientData(format!(
            "no records at reference radius {reference}"
        )));
    }
    let (rf, ot): (Vec<&FitRecord>, Vec<&FitRecord>) =
        records.iter().partition(|r| r.radius == reference);
    Ok((
        Problem {
            reference: rf,
            others: ot,
            degree: opts.degree,
        },
        reference,
    ))
}

/// Weighted deviation of the non-reference records from the reference curve.
pub fn objective(records: &[FitRecord], reference: usize, p_th: f64, nu: f64) -> Result<f64> {
    let opts = FitOptions {
        reference: Some(reference),
        ..Default::default()
    };
    let (prob, _) = problem(records, &opts)?;
    Ok(prob.objective(p_th, nu))
}

/// p where the two largest radii's curves cross, by linear interpolation.
pub fn crossing_estimate(records: &[FitRecord]) -> Option<f64> {
    let mut radii: Vec<usize> = records.iter().map(|r| r.radius).collect();
    radii.sort_unstable();
    radii.dedup();
    if radii.len() < 2 {
        return None;
    }
    let (small, big) = (radii[radii.len() - 2], radii[radii.len() - 1]);
    let mut diffs: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.radius == big)
        .filter_map(|b| {
            records
                .iter()
                .find(|s| s.radius == small && s.p == b.p)
                .map(|s| (b.p, b.p_fail - s.p_fail))
        })
        .collect();
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
    diffs
        .windows(2)
        .find(|w| w[0].1 < 0.0 && w[1].1 >= 0.0)
        .map(|w| {
            let (p0, d0) = w[0];
            let (p1, d1) = w[1];
            p0 + (p1 - p0) * (-d0) / (d1 - d0)
        })
}

pub fn fit_threshold(records: &[FitRecord], opts: &FitOptions) -> Result<ThresholdFit> {
    let (prob, reference) = problem(records, opts)?;
    let (pmin, pmax) = records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
            (a.min(r.p), b.max(r.p))
        });
    let start = opts.start.unwrap_or_else(|| {
        (
            crossing_estimate(records).unwrap_or(0.5 * (pmin + pmax)),
            3.0,
        )
    });
    let step = [((pmax - pmin) * 0.1).max(1e-3), 0.5];
    let (best, iterations, history) = nelder_mead(
        |v| prob.objective(v[0], v[1]),
        [start.0, start.1],
        step,
        opts.tolerance,
        opts.max_iterations,
    )?;
    let f_coeffs = prob.curve(best[0], best[1])?;
    Ok(ThresholdFit {
        p_th: best[0],
        nu: best[1],
        f_coeffs,
        residual: prob.objective(best[0], best[1]),
        reference,
        iterations,
        history,
        inputs: records.to_vec(),
    })
}

type Point = [f64; 2];

/// Two-parameter Nelder-Mead; stops when the simplex values and extent collapse.
fn nelder_mead<F: Fn(&Point) -> f64>(
    f: F,
    x0: Point,
    step: Point,
    tol: f64,
    max_iter: usize,
) -> Result<(Point, usize, Vec<f64>)> {
    let mut s: Vec<(Point, f64)> = vec![x0, [x0[0] + step[0], x0[1]], [x0[0], x0[1] + step[1]]]
        .into_iter()
        .map(|p| (p, f(&p)))
        .collect();
    let mut history = Vec::new();
    let lerp = |a: &Point, b: &Point, t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for it in 0..max_iter {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        history.push(s[0].1);
        let spread = (s[2].1 - s[0].1).abs();
        let extent = s[1..]
            .iter()
            .map(|(p, _)| {
                ((p[0] - s[0].0[0]) / step[0])
                    .abs()
                    .max(((p[1] - s[0].0[1]) / step[1]).abs())
            })
            .fold(0.0, f64::max);
        if s[0].1.is_finite() && spread <= tol * (1.0 + s[0].1.abs()) && extent < 1e-9 {
            return Ok((s[0].0, it, history));
        }
        let c = lerp(&s[0].0, &s[1].0, 0.5);
        let worst = s[2];
        let r = lerp(&worst.0, &c, 2.0);
        let fr = f(&r);
        if fr < s[0].1 {
            let e = lerp(&worst.0, &c, 3.0);
            let fe = f(&e);
            s[2] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < s[1].1 {
            s[2] = (r, fr);
        } else {
            let (k, fk) = if fr < worst.1 {
                let k = lerp(&worst.0, &c, 1.5);
                (k, f(&k))
            } else {
                let k = lerp(&worst.0, &c, 0.5);
                (k, f(&k))
            };
            if fk < worst.1.min(fr) {
                s[2] = (k, fk);
            } else {
                let best = s[0].0;
                for v in s.iter_mut().skip(1) {
                    v.0 = lerp(&best, &v.0, 0.5);
                    v.1 = f(&v.0);
                }
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn synthetic(
        p_th: f64,
        nu: f64,
        f: &[f64],
        radii_n: &[(usize, usize)],
        ps: &[f64],
    ) -> Vec<FitRecord> {
        let mut out = Vec::new();
        for &(radius, n) in radii_n {
            for &p in ps {
                out.push(FitRecord {
                    radius,
                    n,
                    p,
                    p_fail: poly_eval(f, scaling_x(p, n, p_th, nu)),
                    stderr: 0.01,
                    samples: 1000,
                });
            }
        }
        out
    }

    #[test]
    fn formulas() {
        assert_eq!(distance_estimate(1), 1.0);
        assert!((distance_estimate(7) - 7f64.powf(0.54)).abs() < 1e-15);
        assert!(distance_estimate(43) > distance_estimate(42));
        assert!((code_rate(0) - 1.0 / 21f64.sqrt()).abs() < 1e-15);
        assert!((code_rate(1) - code_rate(0) / 4.8).abs() < 1e-15);
        assert!((concatenated_rate(2) - 1.0 / 49.0).abs() < 1e-15);
        assert!(code_rate_with(-1.0, 0.2, 4.8).is_err());
    }

    #[test]
    fn rescale_limits() {
        let recs = vec![FitRecord {
            radius: 1,
            n: 1,
            p: 0.12,
            p_fail: 0.1,
            stderr: 0.01,
            samples: 10,
        }];
        assert!((rescale(&recs, 0.1, 3.0).unwrap()[0].x - 0.02).abs() < 1e-15);
        let at = vec![FitRecord {
            n: 973,
            p: 0.1,
            ..recs[0].clone()
        }];
        assert_eq!(rescale(&at, 0.1, 2.0).unwrap()[0].x, 0.0);
        let big = vec![FitRecord {
            n: 973,
            ..recs[0].clone()
        }];
        assert!((rescale(&big, 0.1, 1e9).unwrap()[0].x - 0.02).abs() < 1e-8);
        assert!(rescale(&recs, 0.1, 0.0).is_err());
    }

    #[test]
    fn polyfit_exact() {
        let xs = [-1.0, 0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|&x| 0.3 + 0.1 * x - 0.02 * x * x).collect();
        let c = weighted_polyfit(&xs, &ys, &[1.0; 5], 2).unwrap();
        assert!(
            (c[0] - 0.3).abs() < 1e-12 && (c[1] - 0.1).abs() < 1e-12 && (c[2] + 0.02).abs() < 1e-12
        );
    }

    #[test]
    fn recovers_planted_values() {
        let ps: Vec<f64> = (0..9).map(|i| 0.07 + 0.005 * i as f64).collect();
        let recs = synthetic(
            0.09,
            3.0,
            &[0.3, 0.8, 0.5],
            &[(2, 42), (3, 203), (4, 973)],
            &ps,
        );
        let fit = fit_threshold(&recs, &FitOptions::default()).unwrap();
        assert!((fit.p_th - 0.09).abs() < 1e-4, "{fit:?}");
        assert!((fit.nu - 3.0).abs() < 1e-2, "{fit:?}");
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_radius_is_rejected() {
        let ps = [0.07, 0.08, 0.09, 0.1];
        let recs = synthetic(0.09, 3.0, &[0.3, 0.8, 0.5], &[(2, 42)], &ps);
        assert!(matches!(
            fit_threshold(&recs, &FitOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let ps: Vec<f64> = (0..9).map(|i| 0.07 + 0.005 * i as f64).collect();
        let recs = synthetic(
            0.09,
            3.0,
            &[0.3, 0.8, 0.5],
            &[(2, 42), (3, 203), (4, 973)],
            &ps,
        );
        let opts = FitOptions {
            max_iterations: 3,
            ..Default::default()
        };
        assert!(matches!(
            fit_threshold(&recs, &opts),
            Err(Error::NoConvergence { iterations: 3 })
        ));
    }
}
