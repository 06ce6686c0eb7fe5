//! Saint-Venant warping of a twisted thin-walled bar.
//!
//! A bar twisted at rate `α` whose section is the curve `(x(s), y(s))` deflects
//! axially by `w(s) = α∫^s (x′y − xy′)`. On an open section this is a genuine
//! single-valued function. Around a closed section it fails to close up by
//! `α∮(x′y − xy′) = −2α·area`, the dislocation.
//!
//! Sections are polylines. On a segment from `(x_k, y_k)` to `(x_{k+1}, y_{k+1})`
//! the integrand `x′y − xy′` is constant, so the segment contributes exactly
//! `x_{k+1}y_k − x_k y_{k+1}`. The sign follows counterclockwise-positive
//! orientation, which makes the dislocation of a counterclockwise loop negative.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A polyline section with samples in arclength order.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionCurve {
    points: Vec<[f64; 2]>,
    arclength: Vec<f64>,
    closed: bool,
}

impl SectionCurve {
    /// An open section through `points`.
    pub fn open(points: Vec<[f64; 2]>) -> Result<Self> {
        Self::build(points, false)
    }

    /// A closed section through `points`. The loop is closed by appending the
    /// first sample unless the last already equals it.
    pub fn closed(mut points: Vec<[f64; 2]>) -> Result<Self> {
        if let (Some(&first), Some(&last)) = (points.first(), points.last()) {
            if points.len() > 1 && first != last {
                points.push(first);
            }
        }
        Self::build(points, true)
    }

    fn build(points: Vec<[f64; 2]>, closed: bool) -> Result<Self> {
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("section sample"));
        }
        let distinct = if closed { points.len().saturating_sub(1) } else { points.len() };
        if distinct < 2 {
            return Err(Error::SectionTooShort(distinct));
        }
        let mut arclength = Vec::with_capacity(points.len());
        arclength.push(0.0);
        for (k, seg) in points.windows(2).enumerate() {
            let len = math::hypot(seg[1][0] - seg[0][0], seg[1][1] - seg[0][1]);
            if len == 0.0 {
                return Err(Error::RepeatedSample(k));
            }
            arclength.push(arclength[k] + len);
        }
        Ok(SectionCurve { points, arclength, closed })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Arclength `s` at each sample, starting from 0.
    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// The same section traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        // reversing keeps samples distinct, so this cannot fail
        Self::build(points, self.closed).expect("reversed section is valid")
    }

    /// `∫(x′y − xy′)` over each segment.
    fn segment_integrals(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|p| p[1][0] * p[0][1] - p[0][0] * p[1][1])
    }
}

/// Warping of an open section.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpingResult {
    /// Twist rate per unit length.
    pub alpha: f64,
    /// Arclength at each sample.
    pub s: Vec<f64>,
    /// Axial warping at each sample, anchored at `w(0) = 0`.
    pub w: Vec<f64>,
}

/// `w(s) = α∫_0^s (x′y − xy′)` at every sample of an open section.
pub fn warping_function(section: &SectionCurve, alpha: f64) -> Result<WarpingResult> {
    if section.closed {
        return Err(Error::ClosedSection);
    }
    let mut w = Vec::with_capacity(section.points.len());
    w.push(0.0);
    let mut acc = 0.0;
    for seg in section.segment_integrals() {
        acc += seg;
        w.push(alpha * acc);
    }
    Ok(WarpingResult { alpha, s: section.arclength.clone(), w })
}

/// `α∮(x′y − xy′)` around a closed section.
pub fn dislocation(section: &SectionCurve, alpha: f64) -> Result<f64> {
    if !section.closed {
        return Err(Error::OpenSection);
    }
    Ok(alpha * section.segment_integrals().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::TAU;
    use proptest::prelude::*;

    fn shoelace(p: &[[f64; 2]]) -> f64 {
        let n = p.len();
        (0..n).map(|i| p[i][0] * p[(i + 1) % n][1] - p[(i + 1) % n][0] * p[i][1]).sum::<f64>() / 2.0
    }

    fn polygon(n: usize, r: f64, start: f64) -> Vec<[f64; 2]> {
        (0..n)
            .map(|k| {
                let t = start + TAU * k as f64 / n as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn unit_circle() {
        let c = SectionCurve::closed(polygon(1024, 1.0, 0.0)).unwrap();
        let d = dislocation(&c, 1.0).unwrap();
        assert!((d + TAU).abs() < 1e-3 * TAU, "{d}");
        assert!(d > -TAU, "an inscribed polygon encloses less than the disc");
    }

    #[test]
    fn unit_square() {
        let sq = alloc::vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let c = SectionCurve::closed(sq).unwrap();
        assert_eq!(dislocation(&c, 1.0).unwrap(), -2.0);
        assert_eq!(dislocation(&c.reversed(), 1.0).unwrap(), 2.0);
        assert_eq!(dislocation(&c, -0.5).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_loop_has_no_dislocation() {
        let c = SectionCurve::closed(alloc::vec![[0.0, 0.0], [1.0, 2.0], [0.0, 0.0]]).unwrap();
        assert_eq!(dislocation(&c, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn straight_segment_on_axis() {
        let s = SectionCurve::open(alloc::vec![[-1.0, 0.0], [0.5, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(warping_function(&s, 1.7).unwrap().w, alloc::vec![0.0; 3]);
    }

    #[test]
    fn l_section() {
        let (a, alpha) = (2.0, 0.3);
        let ys = [0.0, 0.25, 0.5, 1.0, 1.5];
        let mut pts = alloc::vec![[0.0, 0.0], [1.0, 0.0]];
        pts.extend(ys.iter().map(|y| [a, *y]));
        let r = warping_function(&SectionCurve::open(pts).unwrap(), alpha).unwrap();
        assert_eq!(&r.w[..3], &[0.0; 3]);
        for (w, y) in r.w[2..].iter().zip(ys) {
            assert!((w + alpha * a * y).abs() < 1e-15);
        }
        assert_eq!(r.s, alloc::vec![0.0, 1.0, 2.0, 2.25, 2.5, 3.0, 3.5]);
    }

    #[test]
    fn circular_arc() {
        let (r, theta, n) = (1.5, 2.0, 2000);
        let pts = (0..=n).map(|k| {
            let t = theta * k as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        });
        let res = warping_function(&SectionCurve::open(pts.collect()).unwrap(), 1.0).unwrap();
        let expect = -r * r * theta;
        assert!((res.w[n] - expect).abs() < 1e-6 * expect.abs());
    }

    #[test]
    fn invalid_sections() {
        assert!(matches!(SectionCurve::open(alloc::vec![[0.0, 0.0]]), Err(Error::SectionTooShort(1))));
        assert!(matches!(SectionCurve::closed(alloc::vec![[1.0, 1.0], [1.0, 1.0]]), Err(Error::SectionTooShort(1))));
        let rep = SectionCurve::open(alloc::vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
        assert!(matches!(rep, Err(Error::RepeatedSample(1))));
        let open = SectionCurve::open(alloc::vec![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let closed = SectionCurve::closed(alloc::vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(dislocation(&open, 1.0), Err(Error::OpenSection)));
        assert!(matches!(warping_function(&closed, 1.0), Err(Error::ClosedSection)));
        assert_eq!(closed.points().len(), 4);
    }

    fn points(min: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
        prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| [x, y]), min..40)
    }

    proptest! {
        #[test]
        fn dislocation_is_shoelace(pts in points(3), alpha in -3.0..3.0f64) {
            let Ok(c) = SectionCurve::closed(pts.clone()) else { return Ok(()) };
            let d = dislocation(&c, alpha).unwrap();
            let scale: f64 = pts.iter().map(|p| p[0].abs() * p[1].abs()).sum::<f64>() * alpha.abs();
            prop_assert!((d + 2.0 * alpha * shoelace(&c.points()[..c.points().len() - 1])).abs() <= 1e-13 * (1.0 + scale));
            prop_assert!((dislocation(&c.reversed(), alpha).unwrap() + d).abs() <= 1e-13 * (1.0 + scale));
        }

        #[test]
        fn densifying_segments_leaves_warping_unchanged(pts in points(2), split in 0.05..0.95f64) {
            let Ok(coarse) = SectionCurve::open(pts.clone()) else { return Ok(()) };
            let mut fine = Vec::new();
            for seg in pts.windows(2) {
                fine.push(seg[0]);
                fine.push([seg[0][0] + split * (seg[1][0] - seg[0][0]), seg[0][1] + split * (seg[1][1] - seg[0][1])]);
            }
            fine.push(*pts.last().unwrap());
            let fine = SectionCurve::open(fine).unwrap();
            let (wc, wf) = (warping_function(&coarse, 1.0).unwrap().w, warping_function(&fine, 1.0).unwrap().w);
            for (k, w) in wc.iter().enumerate() {
                prop_assert!((wf[2 * k] - w).abs() <= 1e-11 * (1.0 + w.abs()) * pts.len() as f64);
            }
        }
    }
}
