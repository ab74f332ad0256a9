use super::EesmError;

/// `SNR_eff(β_dB) ≈ a + b·β_dB + c·β_dB²`, all in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCurve {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `[β_dB_min, β_dB_max]` covered by the fitted samples.
    pub fit_domain: (f64, f64),
    pub rms_residual: f64,
}

/// Value of a curve evaluation plus whether `β_dB` lay inside the fit domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub in_domain: bool,
}

impl QuadraticCurve {
    pub fn new(a: f64, b: f64, c: f64, fit_domain: (f64, f64)) -> Self {
        Self {
            a,
            b,
            c,
            fit_domain,
            rms_residual: 0.0,
        }
    }

    pub fn eval(&self, beta_db: f64) -> f64 {
        self.a + beta_db * (self.b + beta_db * self.c)
    }

    pub fn eval_flagged(&self, beta_db: f64) -> CurvePoint {
        CurvePoint {
            snr_db: self.eval(beta_db),
            in_domain: self.contains(beta_db),
        }
    }

    pub fn contains(&self, beta_db: f64) -> bool {
        beta_db >= self.fit_domain.0 && beta_db <= self.fit_domain.1
    }

    /// Smallest in-domain `β_dB` with `eval(β_dB) == target_snr_db`, if any.
    pub fn invert(&self, target_snr_db: f64) -> Option<f64> {
        let (a, b, c) = (self.a - target_snr_db, self.b, self.c);
        let scale = a.abs().max(b.abs()).max(c.abs());
        let mut roots = Vec::with_capacity(2);
        if scale == 0.0 {
            // identically satisfied; the whole domain solves it
            return Some(self.fit_domain.0);
        }
        if c.abs() <= 1e-14 * scale {
            if b != 0.0 {
                roots.push(-a / b);
            }
        } else {
            let disc = b * b - 4.0 * c * a;
            if disc < 0.0 {
                return None;
            }
            // cancellation-free pair
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q != 0.0 {
                roots.push(q / c);
                roots.push(a / q);
            } else {
                roots.push(0.0);
            }
        }
        roots
            .into_iter()
            .filter(|r| self.contains(*r))
            .min_by(|x, y| x.total_cmp(y))
    }

    /// The same curve moved up by `delta_db`.
    pub fn shifted(&self, delta_db: f64) -> Self {
        Self {
            a: self.a + delta_db,
            ..*self
        }
    }
}

/// Ordinary least-squares quadratic through `(β_dB, SNR_eff_dB)` samples.
///
/// The abscissa is centred before forming the normal equations; the
/// coefficients are mapped back to the uncentred form afterwards.
pub fn fit_quadratic(curve: &[(f64, f64)]) -> Result<QuadraticCurve, EesmError> {
    if curve.len() < 3 {
        return Err(EesmError::TooFewPoints {
            needed: 3,
            got: curve.len(),
        });
    }
    if curve.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(EesmError::NonFinite);
    }
    let n = curve.len() as f64;
    let mean_x = curve.iter().map(|p| p.0).sum::<f64>() / n;
    let mut distinct: Vec<f64> = curve.iter().map(|p| p.0).collect();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(EesmError::RankDeficient);
    }

    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for &(x, y) in curve {
        let u = x - mean_x;
        let u2 = u * u;
        s2 += u2;
        s3 += u2 * u;
        s4 += u2 * u2;
        t0 += y;
        t1 += u * y;
        t2 += u2 * y;
    }
    let matrix = [[n, 0.0, s2], [0.0, s2, s3], [s2, s3, s4]];
    let [a0, b0, c0] = solve3(matrix, [t0, t1, t2]).ok_or(EesmError::RankDeficient)?;

    let c = c0;
    let b = b0 - 2.0 * c0 * mean_x;
    let a = a0 - b0 * mean_x + c0 * mean_x * mean_x;
    let domain = (distinct[0], distinct[distinct.len() - 1]);
    let mut q = QuadraticCurve::new(a, b, c, domain);
    let sse: f64 = curve.iter().map(|&(x, y)| (y - q.eval(x)).powi(2)).sum();
    q.rms_residual = (sse / n).sqrt();
    Ok(q)
}

fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    let norm = m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() <= 1e-13 * norm {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}
