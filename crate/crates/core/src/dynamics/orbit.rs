use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use super::{max_norm, GermMap, ParabolicFrame};
use crate::resonance::ResonanceStructure;

/// Orbits stop once `max|z_j|` drops below this.
pub const ZERO_RADIUS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitTrace {
    pub points: Vec<Vec<Complex64>>,
    pub u_track: Vec<Vec<Complex64>>,
    #[serde(rename = "U_track")]
    pub big_u_track: Vec<Complex64>,
    pub converged: bool,
    pub escaped: bool,
    pub direction_residuals: Vec<f64>,
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Calls `visit(ℓ, z_ℓ)` for `ℓ = 0, 1, …` until it returns `false`, the
/// step budget runs out, or the orbit escapes or reaches the origin.
/// Returns `(steps taken, escaped, hit zero)`.
pub(crate) fn walk(
    germ: &dyn GermMap,
    z0: &[Complex64],
    max_iter: usize,
    escape_radius: f64,
    mut visit: impl FnMut(usize, &[Complex64]) -> bool,
) -> (usize, bool, bool) {
    let mut z = z0.to_vec();
    let mut next = vec![Complex64::default(); z.len()];
    if !visit(0, &z) {
        return (0, false, false);
    }
    for step in 1..=max_iter {
        germ.apply(&z, &mut next);
        std::mem::swap(&mut z, &mut next);
        let size = max_norm(&z);
        if !size.is_finite() || size > escape_radius {
            return (step, true, false);
        }
        if !visit(step, &z) {
            return (step, false, false);
        }
        if size < ZERO_RADIUS {
            return (step, false, true);
        }
    }
    (max_iter, false, false)
}

/// Iterates `F` from `z0`, recording `z_ℓ`, `u_ℓ = π(z_ℓ)`, `U_ℓ` and the
/// projective distance of `u_ℓ` to the frame direction.
///
/// `converged` means: no escape, and either the origin was reached or
/// `|z|` shrank over both the whole orbit and its second half.
pub fn iterate_orbit(
    germ: &dyn GermMap,
    z0: &[Complex64],
    max_iter: usize,
    escape_radius: f64,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
) -> OrbitTrace {
    let mut trace = OrbitTrace {
        points: Vec::new(),
        u_track: Vec::new(),
        big_u_track: Vec::new(),
        converged: false,
        escaped: false,
        direction_residuals: Vec::new(),
    };
    let (_, escaped, hit_zero) = walk(germ, z0, max_iter, escape_radius, |_, z| {
        let u = structure.project(z);
        let (x, _) = frame.coordinates(&u);
        trace.big_u_track.push(frame.big_u(x));
        trace.direction_residuals.push(frame.direction_residual(&u));
        trace.u_track.push(u);
        trace.points.push(z.to_vec());
        true
    });
    trace.escaped = escaped;
    let sizes: Vec<f64> = trace.points.iter().map(|z| max_norm(z)).collect();
    let last = sizes.last().copied().unwrap_or(f64::INFINITY);
    let mid = sizes.get(sizes.len() / 2).copied().unwrap_or(f64::INFINITY);
    trace.converged = !escaped && (hit_zero || (sizes.len() > 2 && last < sizes[0] && last < mid));
    trace
}

/// Writes `iter, re/im z_j, re/im U, direction_residual` rows, keeping every
/// `stride`-th step and the final one.
pub fn write_orbit_csv<W: Write>(trace: &OrbitTrace, stride: usize, mut out: W) -> io::Result<()> {
    let n = trace.points.first().map_or(0, |z| z.len());
    let mut header = vec!["iter".to_string()];
    for j in 1..=n {
        header.push(format!("re_z{j}"));
        header.push(format!("im_z{j}"));
    }
    header.extend([
        "re_U".to_string(),
        "im_U".to_string(),
        "direction_residual".to_string(),
    ]);
    writeln!(out, "{}", header.join(","))?;
    let stride = stride.max(1);
    let last = trace.points.len().saturating_sub(1);
    for (k, z) in trace.points.iter().enumerate() {
        if k % stride != 0 && k != last {
            continue;
        }
        let mut row = vec![k.to_string()];
        for c in z {
            row.push(format!("{:e}", c.re));
            row.push(format!("{:e}", c.im));
        }
        let u = trace.big_u_track[k];
        row.push(format!("{:e}", u.re));
        row.push(format!("{:e}", u.im));
        row.push(format!("{:e}", trace.direction_residuals[k]));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
