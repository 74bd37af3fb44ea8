//! Winding numbers of analytic functions along piecewise contours by
//! adaptive argument tracking.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::C64;

/// A contour piece parametrized over `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Segment { from: C64, to: C64 },
    Arc { center: C64, radius: f64, from_angle: f64, to_angle: f64 },
}

impl Piece {
    pub fn point(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { from, to } => from + (to - from) * t,
            Piece::Arc { center, radius, from_angle, to_angle } => {
                center + C64::from_polar(radius, from_angle + (to_angle - from_angle) * t)
            }
        }
    }
}

/// Closed counterclockwise boundary of `{|k| < radius, Re k > indent}`.
pub fn indented_half_disc(radius: f64, indent: f64) -> Vec<Piece> {
    let h = (radius * radius - indent * indent).sqrt();
    let theta = (h / radius).atan2(indent / radius);
    vec![
        Piece::Arc { center: C64::new(0.0, 0.0), radius, from_angle: -theta, to_angle: theta },
        Piece::Segment { from: C64::new(indent, h), to: C64::new(indent, -h) },
    ]
}

/// Counterclockwise boundary of the box `[re0, re1] x [im0, im1]`.
pub fn rectangle(re0: f64, re1: f64, im0: f64, im1: f64) -> Vec<Piece> {
    let c = |a, b| C64::new(a, b);
    vec![
        Piece::Segment { from: c(re0, im0), to: c(re1, im0) },
        Piece::Segment { from: c(re1, im0), to: c(re1, im1) },
        Piece::Segment { from: c(re1, im1), to: c(re0, im1) },
        Piece::Segment { from: c(re0, im1), to: c(re0, im0) },
    ]
}

/// Winding number of `f` along the closed contour. Steps are refined until
/// the phase change per step is below `π/2`.
pub fn winding_number<F>(contour: &[Piece], mut f: F) -> Result<i64>
where
    F: FnMut(C64) -> Result<C64>,
{
    const MIN_STEP: f64 = 1e-9;
    let mut total = 0.0;
    for piece in contour {
        let mut t = 0.0;
        let mut ft = f(piece.point(0.0))?;
        if ft == C64::new(0.0, 0.0) {
            return Err(Error::Contour { at: piece.point(0.0) });
        }
        let mut dt: f64 = 1.0 / 16.0;
        while t < 1.0 {
            let step = dt.min(1.0 - t);
            let next = piece.point(t + step);
            let fn_ = f(next)?;
            let dphase = if fn_ == C64::new(0.0, 0.0) { PI } else { (fn_ / ft).arg() };
            if dphase.abs() >= PI / 2.0 {
                dt = step / 2.0;
                if dt < MIN_STEP {
                    return Err(Error::Contour { at: next });
                }
                continue;
            }
            total += dphase;
            t += step;
            ft = fn_;
            if dphase.abs() < PI / 8.0 {
                dt = (step * 1.5).min(0.25);
            }
        }
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Winding number of a function given through a continuous branch of its
/// logarithm, `log f`. Each step's phase change is wrapped to `(-π, π]` and
/// must stay below `π/2`; a midpoint evaluation guards against aliasing.
pub fn winding_number_log<F>(contour: &[Piece], mut logf: F) -> Result<i64>
where
    F: FnMut(C64) -> Result<C64>,
{
    const MIN_STEP: f64 = 1e-12;
    let wrap = |d: f64| {
        let r = d.rem_euclid(2.0 * PI);
        if r > PI {
            r - 2.0 * PI
        } else {
            r
        }
    };
    let mut total = 0.0;
    for piece in contour {
        let mut t = 0.0;
        let mut lt = logf(piece.point(0.0))?;
        if !lt.re.is_finite() {
            return Err(Error::Contour { at: piece.point(0.0) });
        }
        let mut dt: f64 = 1.0 / 64.0;
        while t < 1.0 {
            let step = dt.min(1.0 - t);
            let next = piece.point(t + step);
            let ln = logf(next)?;
            let lm = logf(piece.point(t + step / 2.0))?;
            let finite = ln.re.is_finite() && lm.re.is_finite();
            let (d1, d2) = (wrap(lm.im - lt.im), wrap(ln.im - lm.im));
            let whole = wrap(ln.im - lt.im);
            let ok = finite && d1.abs() < PI / 4.0 && d2.abs() < PI / 4.0 && (d1 + d2 - whole).abs() < 1e-6;
            if !ok {
                dt = step / 2.0;
                if dt < MIN_STEP {
                    return Err(Error::Contour { at: next });
                }
                continue;
            }
            total += d1 + d2;
            t += step;
            lt = ln;
            if whole.abs() < PI / 16.0 {
                dt = (step * 1.5).min(0.25);
            }
        }
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_polynomial_roots() {
        let f = |k: C64| Ok((k - C64::new(0.3, 0.1)) * (k - C64::new(0.5, -0.4)) * (k + 0.2));
        assert_eq!(winding_number(&indented_half_disc(1.0, 1e-3), f).unwrap(), 2);
        assert_eq!(winding_number(&rectangle(0.2, 0.4, 0.0, 0.2), f).unwrap(), 1);
        assert_eq!(winding_number(&rectangle(0.6, 0.9, 0.0, 0.2), f).unwrap(), 0);
        let g = |k: C64| Ok(k.powi(5) - C64::new(0.1, 0.0));
        assert_eq!(winding_number(&rectangle(-1.0, 1.0, -1.0, 1.0), g).unwrap(), 5);
    }

    #[test]
    fn log_form_matches_direct_form() {
        let f = |k: C64| (k - C64::new(0.3, 0.1)) * (k - C64::new(0.5, -0.4)) * (k + 0.2);
        let via_log = winding_number_log(&rectangle(0.0, 1.0, -1.0, 1.0), |k| Ok(f(k).ln())).unwrap();
        assert_eq!(via_log, 2);
    }

    #[test]
    fn zero_on_contour_is_reported() {
        let f = |k: C64| Ok(k - C64::new(0.5, 0.0));
        let err = winding_number(&rectangle(0.5, 1.0, -0.5, 0.5), f).unwrap_err();
        assert!(matches!(err, Error::Contour { .. }));
    }
}
