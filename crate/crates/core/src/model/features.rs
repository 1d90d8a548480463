//! Local-region observations.
//!
//! Layout for window size `K` (patch side `2K + 1`, row-major, the state's
//! cell at the centre):
//!
//! 1. occupancy patch, 1.0 for obstacles and out-of-bounds cells;
//! 2. `(h_g(cell centre) - h_g(s)) / K` patch;
//! 3. domain tail (heading and velocity one-hots for the car);
//! 4. constant bias 1.0.

use crate::statespace::{DomainKind, GridDomain, HEADINGS};

pub fn patch_len(k: u32) -> usize {
    let side = 2 * k as usize + 1;
    side * side
}

/// Length of the position-dependent prefix (both patches).
pub fn spatial_len(k: u32) -> usize {
    2 * patch_len(k)
}

pub fn feature_len<'g, D: GridDomain<'g>>(domain: &D, k: u32) -> usize {
    spatial_len(k) + domain.extra_feature_len() + 1
}

/// Appends the feature vector of `s` to `out`.
pub fn featurize_into<'g, D: GridDomain<'g>>(
    domain: &D,
    s: &D::State,
    goal: &D::State,
    k: u32,
    out: &mut Vec<f64>,
) {
    push_spatial(domain, s, goal, k, out);
    domain.push_extra_features(s, out);
    out.push(1.0);
}

pub fn featurize<'g, D: GridDomain<'g>>(
    domain: &D,
    s: &D::State,
    goal: &D::State,
    k: u32,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(feature_len(domain, k));
    featurize_into(domain, s, goal, k, &mut out);
    out
}

pub(crate) fn push_spatial<'g, D: GridDomain<'g>>(
    domain: &D,
    s: &D::State,
    goal: &D::State,
    k: u32,
    out: &mut Vec<f64>,
) {
    let grid = domain.grid();
    let (cx, cy) = domain.anchor_cell(s);
    let r = k as i64;
    for dy in -r..=r {
        for dx in -r..=r {
            out.push(if grid.is_blocked(cx + dx, cy + dy) {
                1.0
            } else {
                0.0
            });
        }
    }
    let h_s = domain.h_g(s, goal);
    let scale = 1.0 / k as f64;
    for dy in -r..=r {
        for dx in -r..=r {
            out.push((domain.cell_h_g(cx + dx, cy + dy, goal) - h_s) * scale);
        }
    }
}

/// The eight symmetries of the square as integer matrices `[[a, b], [c, d]]`
/// acting on `(dx, dy)`. The identity comes first.
pub const SQUARE_SYMMETRIES: [[i64; 4]; 8] = [
    [1, 0, 0, 1],
    [0, -1, 1, 0],
    [-1, 0, 0, -1],
    [0, 1, -1, 0],
    [1, 0, 0, -1],
    [-1, 0, 0, 1],
    [0, 1, 1, 0],
    [0, -1, -1, 0],
];

/// Maps a feature vector through symmetry `t` of [`SQUARE_SYMMETRIES`]:
/// both patches are rotated or reflected about the centre cell and, for the
/// car, the heading one-hot follows the transformed direction.
pub fn transform_features(x: &[f64], k: u32, domain: DomainKind, t: usize) -> Vec<f64> {
    let m = SQUARE_SYMMETRIES[t];
    let r = k as i64;
    let side = (2 * r + 1) as usize;
    let patch = side * side;
    let mut out = x.to_vec();
    for dy in -r..=r {
        for dx in -r..=r {
            let (tx, ty) = (m[0] * dx + m[1] * dy, m[2] * dx + m[3] * dy);
            let src = ((dy + r) as usize) * side + (dx + r) as usize;
            let dst = ((ty + r) as usize) * side + (tx + r) as usize;
            out[dst] = x[src];
            out[patch + dst] = x[patch + src];
        }
    }
    if domain == DomainKind::Car4d {
        let base = 2 * patch;
        let n = HEADINGS as usize;
        for theta in 0..n {
            out[base + heading_image(theta, m)] = x[base + theta];
        }
    }
    out
}

fn heading_image(theta: usize, m: [i64; 4]) -> usize {
    let n = HEADINGS as usize;
    let a = theta as f64 * std::f64::consts::TAU / n as f64;
    let (c, s) = (a.cos(), a.sin());
    let (x, y) = (
        m[0] as f64 * c + m[1] as f64 * s,
        m[2] as f64 * c + m[3] as f64 * s,
    );
    let turns = y.atan2(x).rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU;
    ((turns * n as f64).round() as usize) % n
}
