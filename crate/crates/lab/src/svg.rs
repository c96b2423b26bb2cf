//! Sign-region figures on a fixed 1024-unit viewport.

use std::fmt::Write;

use nodalkk_core::nodal::{LiftedField, ZERO_THRESHOLD};
use nodalkk_core::sphere::SphereHarmonic;

pub const VIEWPORT: f64 = 1024.0;
const POSITIVE: &str = "#d95f02";
const NEGATIVE: &str = "#1b9e77";
const NODAL: &str = "#000000";

/// Renders a `rows × cols` sample grid. A sample is drawn black when it is
/// (numerically) zero or its right or lower neighbour has the opposite sign;
/// `wrap` makes the right and lower neighbours periodic.
pub fn sign_grid(rows: usize, cols: usize, wrap: bool, value: impl Fn(usize, usize) -> f64) -> String {
    let sign = |v: f64| if v >= ZERO_THRESHOLD { 1 } else if v <= -ZERO_THRESHOLD { -1 } else { 0 };
    let (w, h) = (VIEWPORT / cols as f64, VIEWPORT / rows as f64);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEWPORT} {VIEWPORT}" width="{VIEWPORT}" height="{VIEWPORT}" shape-rendering="crispEdges">"#
    );
    for r in 0..rows {
        for c in 0..cols {
            let s = sign(value(r, c));
            let mut nodal = s == 0;
            for (rr, cc) in [(r, c + 1), (r + 1, c)] {
                if (rr < rows && cc < cols) || wrap {
                    nodal |= sign(value(rr % rows, cc % cols)) == -s;
                }
            }
            let fill = if nodal { NODAL } else if s > 0 { POSITIVE } else { NEGATIVE };
            let _ = writeln!(
                out,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                c as f64 * w,
                r as f64 * h,
                w,
                h
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Slice of the lifted field at fiber index `t`, over base axes 0 and 1
/// (with the remaining base coordinate fixed to `x3`).
pub fn theta_slice(field: &LiftedField, t: usize, x3: usize) -> String {
    let n = field.n();
    let plane = if field.dim() == 3 { x3 % n } else { 0 };
    sign_grid(n, n, true, |r, c| {
        let base = if field.dim() == 3 { (r * n + c) * n + plane } else { r * n + c };
        field.value(base, t)
    })
}

/// Slice at base row `x2` of axis 1: axis 0 against the fiber angle.
/// Other base coordinates are fixed at 0. The fiber is not glued across the
/// axis-0 boundary in the picture, so the right edge shows the twist.
pub fn fiber_slice(field: &LiftedField, x2: usize) -> String {
    let n = field.n();
    let stride0 = n.pow(field.dim() as u32 - 1);
    let stride1 = n.pow(field.dim() as u32 - 2);
    sign_grid(n, field.n_theta(), false, |r, t| field.value(r * stride0 + (x2 % n) * stride1, t))
}

/// Equirectangular plot: rows are latitudes, columns the rotation angle.
pub fn sphere_plot(y: &SphereHarmonic) -> String {
    sign_grid(y.n_phi, y.n_theta, false, |r, c| y.values[r * y.n_theta + c])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_viewport_and_colors() {
        let svg = sign_grid(2, 2, false, |r, _| if r == 0 { 1.0 } else { -1.0 });
        assert!(svg.contains(r#"viewBox="0 0 1024 1024""#));
        assert_eq!(svg.matches("<rect").count(), 4);
        // top row borders the negative row, bottom row does not (no wrap)
        assert_eq!(svg.matches(NODAL).count(), 2);
        assert_eq!(svg.matches(NEGATIVE).count(), 2);
    }
}
