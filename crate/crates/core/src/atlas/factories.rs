use std::f64::consts::FRAC_1_SQRT_2;

use super::{Atlas, Chart, Frame, GraphFn, RegularityClass};
use crate::error::Result;
use crate::multiindex::{MultiIndex, Polynomial};

/// Atlas of the unit square `(0,1)^2`: four flat edge charts
/// (`a = 0.4`, `b = 0.5`) and four corner charts whose frames are rotated
/// by 45 degrees so that each corner is the wedge `t -> |t|`
/// (`a = 0.25`, `b = 0.3`).
pub fn unit_square_atlas() -> Atlas {
    let s = FRAC_1_SQRT_2;
    // (first axis, inward axis, offset)
    let edges: [([f64; 2], [f64; 2], [f64; 2], &str); 4] = [
        ([1.0, 0.0], [0.0, 1.0], [0.5, 0.0], "bottom"),
        ([0.0, 1.0], [-1.0, 0.0], [1.0, 0.5], "right"),
        ([-1.0, 0.0], [0.0, -1.0], [0.5, 1.0], "top"),
        ([0.0, -1.0], [1.0, 0.0], [0.0, 0.5], "left"),
    ];
    let corners: [([f64; 2], [f64; 2], [f64; 2], &str); 4] = [
        ([s, -s], [s, s], [0.0, 0.0], "corner_sw"),
        ([s, s], [-s, s], [1.0, 0.0], "corner_se"),
        ([-s, s], [-s, -s], [1.0, 1.0], "corner_ne"),
        ([-s, -s], [s, -s], [0.0, 1.0], "corner_nw"),
    ];
    let mut charts = Vec::new();
    for (e1, e2, o, label) in edges {
        let frame = Frame::new(vec![e1.to_vec(), e2.to_vec()], o.to_vec()).expect("edge frame");
        charts.push(
            Chart::new(0.4, 0.5, GraphFn::flat(1), frame, RegularityClass::SMOOTH)
                .expect("edge chart")
                .with_label(label),
        );
    }
    for (e1, e2, o, label) in corners {
        let frame = Frame::new(vec![e1.to_vec(), e2.to_vec()], o.to_vec()).expect("corner frame");
        charts.push(
            Chart::new(
                0.25,
                0.3,
                GraphFn::Wedge { slope: 1.0 },
                frame,
                RegularityClass::LIPSCHITZ,
            )
            .expect("corner chart")
            .with_label(label),
        );
    }
    Atlas::new(charts).expect("square atlas").named("unit_square")
}

/// Atlas of the disk of radius `R` centred at the origin: four charts of the
/// lower cap `t -> -sqrt(R^2 - t^2)` rotated by multiples of 90 degrees,
/// with `a = 0.85 R` and `b = 0.5 R`.
pub fn disk_atlas(radius: f64) -> Result<Atlas> {
    let mut charts = Vec::new();
    for (k, label) in ["south", "east", "north", "west"].iter().enumerate() {
        let angle = k as f64 * std::f64::consts::FRAC_PI_2;
        let frame = Frame::rotation_2d(angle, [0.0, 0.0]);
        charts.push(
            Chart::new(
                0.85 * radius,
                0.5 * radius,
                GraphFn::Circle { radius },
                frame,
                RegularityClass::SMOOTH,
            )?
            .with_label(*label),
        );
    }
    Ok(Atlas::new(charts)?.named("disk"))
}

/// Single flat chart `x_d = 0` over `(-extent, extent)^(d-1)`, the boundary of
/// the upper half-space near the origin.
pub fn halfspace_patch(dim: usize, extent: f64) -> Result<Atlas> {
    let chart = Chart::new(
        extent,
        extent,
        GraphFn::flat(dim - 1),
        Frame::identity(vec![0.0; dim]),
        RegularityClass::SMOOTH,
    )?
    .with_label("halfspace");
    Ok(Atlas::new(vec![chart])?.named("halfspace"))
}

pub fn single_chart_atlas(chart: Chart) -> Atlas {
    Atlas::new(vec![chart]).expect("one chart").named("single_chart")
}

/// Four flat charts over `(-1/2, 1/2)`, one per edge of the unit square.
///
/// The charts meet only at the corners, so this atlas is meant for the
/// chart-sum boundary norms, which never consult the partition of unity.
pub fn flat_atlas() -> Atlas {
    let square = unit_square_atlas();
    let charts = square.charts()[..4]
        .iter()
        .map(|c| {
            Chart::new(0.5, 0.5, GraphFn::flat(1), c.frame().clone(), RegularityClass::SMOOTH)
                .expect("flat chart")
                .with_label(c.label())
        })
        .collect();
    Atlas::new(charts).expect("flat atlas").named("flat")
}

/// Four disjoint parabolic charts `t -> t^2/2` over `(-1, 1)`.
///
/// Like [`flat_atlas`] this is a chart-sum atlas: its charts do not glue into
/// a closed curve.
pub fn curved_atlas() -> Atlas {
    let parabola = Polynomial::from_terms(1, [(MultiIndex::new(vec![2]).expect("index"), 0.5)])
        .expect("parabola");
    let charts = (0..4)
        .map(|k| {
            let angle = k as f64 * std::f64::consts::FRAC_PI_2;
            let (s, c) = angle.sin_cos();
            let offset = [3.0 * s, -3.0 * c];
            Chart::new(
                1.0,
                0.5,
                GraphFn::Polynomial(parabola.clone()),
                Frame::rotation_2d(angle, offset),
                RegularityClass::SMOOTH,
            )
            .expect("parabola chart")
            .with_label(format!("parabola_{k}"))
        })
        .collect();
    Atlas::new(charts).expect("curved atlas").named("curved")
}
