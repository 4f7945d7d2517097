//! Least-squares fits and compensated accumulation.

use serde::Serialize;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub residual_rms: f64,
}

/// Ordinary least squares `y = intercept + slope x`; needs at least two distinct `x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let slope_stderr = if n > 2 {
        (ss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        residual_rms: (ss / nf).sqrt(),
    })
}

/// Least squares for `y = c0 + c1 x1 + c2 x2`.
pub fn fit_plane(x1: &[f64], x2: &[f64], y: &[f64]) -> Option<[f64; 3]> {
    let n = y.len();
    if n < 3 || x1.len() != n || x2.len() != n {
        return None;
    }
    let mut a = [[0.0f64; 4]; 3];
    for k in 0..n {
        let row = [1.0, x1[k], x2[k]];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
            a[i][3] += row[i] * y[k];
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for i in 0..3 {
            if i != col {
                let f = a[i][col] / a[col][col];
                for j in col..4 {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accumulator_beats_naive() {
        let mut acc = Accumulator::new();
        let mut naive = 0.0;
        for _ in 0..10 {
            for x in [1.0, 1e100, 1.0, -1e100] {
                acc.add(x);
                naive += x;
            }
        }
        assert_eq!(acc.value(), 20.0);
        assert_ne!(naive, 20.0);
    }

    #[test]
    fn fits_exact_data() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());

        let x2: Vec<f64> = xs.iter().map(|x| (x + 1.0f64).ln()).collect();
        let y: Vec<f64> = xs.iter().zip(&x2).map(|(a, b)| 1.0 + 2.0 * a - 3.0 * b).collect();
        let c = fit_plane(&xs, &x2, &y).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-9 && (c[1] - 2.0).abs() < 1e-9 && (c[2] + 3.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn accumulator_matches_exact_integer_sum(v in proptest::collection::vec(-1_000_000i64..1_000_000, 0..200)) {
            let mut acc = Accumulator::new();
            for x in &v {
                acc.add(*x as f64);
            }
            prop_assert_eq!(acc.value(), v.iter().sum::<i64>() as f64);
        }
    }
}
