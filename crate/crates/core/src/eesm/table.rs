//! AWGN reference curves: uncoded BER versus SNR for one MCS.
//!
//! Text form, one point per line:
//!
//! ```text
//! # mcs: QPSK-1/2
//! # floor: 14 14.5
//! 0<TAB>0.0786
//! 0.5<TAB>0.0712
//! ```
//!
//! Lines starting with `#` are comments. The optional `floor:` comment lists
//! points whose BER is a noise-floor placeholder rather than an observation.

use std::fmt::Write as _;

use super::EesmError;

#[derive(Debug, Clone, PartialEq)]
pub struct AwgnRefTable {
    mcs_name: String,
    points: Vec<(f64, f64)>,
    floor: Vec<bool>,
}

/// Interpolated BER plus whether the query fell outside the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub ber: f64,
    pub clamped: bool,
}

impl AwgnRefTable {
    pub fn new(mcs_name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self, EesmError> {
        let floor = vec![false; points.len()];
        Self::with_floor(mcs_name, points, floor)
    }

    pub fn with_floor(
        mcs_name: impl Into<String>,
        points: Vec<(f64, f64)>,
        floor: Vec<bool>,
    ) -> Result<Self, EesmError> {
        if points.len() < 2 {
            return Err(EesmError::InvalidTable("need at least two points".into()));
        }
        if floor.len() != points.len() {
            return Err(EesmError::InvalidTable(
                "floor flags do not match points".into(),
            ));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(EesmError::InvalidTable(format!(
                    "snr_db not strictly increasing at {}",
                    w[1].0
                )));
            }
            if w[1].1 > w[0].1 {
                return Err(EesmError::InvalidTable(format!(
                    "ber increases at snr_db {}",
                    w[1].0
                )));
            }
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.1 > 0.0 && p.1 <= 1.0) || !p.0.is_finite())
        {
            return Err(EesmError::InvalidTable(format!(
                "ber {} at snr_db {} outside (0, 1]",
                p.1, p.0
            )));
        }
        Ok(Self {
            mcs_name: mcs_name.into(),
            points,
            floor,
        })
    }

    pub fn mcs_name(&self) -> &str {
        &self.mcs_name
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn floor_flags(&self) -> &[bool] {
        &self.floor
    }

    pub fn snr_range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Piecewise-linear interpolation in `(snr_db, log10 ber)`; clamps outside.
    pub fn lookup(&self, snr_db: f64) -> Lookup {
        let pts = &self.points;
        let last = pts.len() - 1;
        if snr_db <= pts[0].0 {
            return Lookup {
                ber: pts[0].1,
                clamped: snr_db < pts[0].0,
            };
        }
        if snr_db >= pts[last].0 {
            return Lookup {
                ber: pts[last].1,
                clamped: snr_db > pts[last].0,
            };
        }
        let hi = pts.partition_point(|p| p.0 <= snr_db);
        let (x0, y0) = pts[hi - 1];
        let (x1, y1) = pts[hi];
        let t = (snr_db - x0) / (x1 - x0);
        let log_ber = y0.log10() + t * (y1.log10() - y0.log10());
        Lookup {
            ber: 10f64.powf(log_ber),
            clamped: false,
        }
    }

    /// Lowest SNR (dB) at which the curve reaches `target_ber`, interpolated in
    /// the log domain. `None` when the table never gets that low.
    pub fn snr_for_ber(&self, target_ber: f64) -> Option<f64> {
        let target = target_ber.log10();
        let pts = &self.points;
        if pts[0].1.log10() <= target {
            return Some(pts[0].0);
        }
        pts.windows(2).find_map(|w| {
            let (l0, l1) = (w[0].1.log10(), w[1].1.log10());
            if l1 <= target && l0 > target {
                Some(w[0].0 + (target - l0) / (l1 - l0) * (w[1].0 - w[0].0))
            } else {
                None
            }
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# mcs: {}", self.mcs_name);
        let floor: Vec<String> = self
            .points
            .iter()
            .zip(&self.floor)
            .filter(|(_, f)| **f)
            .map(|(p, _)| format!("{}", p.0))
            .collect();
        if !floor.is_empty() {
            let _ = writeln!(out, "# floor: {}", floor.join(" "));
        }
        for (snr, ber) in &self.points {
            let _ = writeln!(out, "{snr}\t{ber}");
        }
        out
    }

    /// Parses the text form. The MCS name comes from the `# mcs:` comment when
    /// present, otherwise from `default_name`.
    pub fn from_text(default_name: &str, text: &str) -> Result<Self, EesmError> {
        let mut name = default_name.to_string();
        let mut floor_snrs: Vec<f64> = Vec::new();
        let mut points = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("mcs:") {
                    name = v.trim().to_string();
                } else if let Some(v) = comment.strip_prefix("floor:") {
                    for tok in v.split_whitespace() {
                        floor_snrs.push(tok.parse().map_err(|_| EesmError::Parse {
                            line: line_no,
                            msg: format!("bad floor entry {tok:?}"),
                        })?);
                    }
                }
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(EesmError::Parse {
                    line: line_no,
                    msg: "expected snr_db<TAB>ber".into(),
                });
            };
            let parse = |s: &str| -> Result<f64, EesmError> {
                s.trim().parse().map_err(|_| EesmError::Parse {
                    line: line_no,
                    msg: format!("not a number: {s:?}"),
                })
            };
            points.push((parse(a)?, parse(b)?));
        }
        let floor = points.iter().map(|p| floor_snrs.contains(&p.0)).collect();
        Self::with_floor(name, points, floor)
    }
}
