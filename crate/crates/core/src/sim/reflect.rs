//! One step of the discrete Skorokhod problem in the quadrant.

use thiserror::Error;

use crate::model::{Mat2, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("no complementary solution for w = {w:?}")]
pub struct NoComplementarySolution {
    pub w: Vec2,
}

/// Finds `dL >= 0` with `z = w + R dL >= 0` and `z_i dL_i = 0`.
///
/// With positive diagonal and positive determinant `R` is a P-matrix, so
/// exactly one of the four push patterns is complementary. Pushed
/// coordinates are set to exactly zero.
#[inline]
pub fn reflect_step(w: Vec2, r: &Mat2) -> Result<(Vec2, Vec2), NoComplementarySolution> {
    let [w1, w2] = w;
    if w1 >= 0.0 && w2 >= 0.0 {
        return Ok((w, [0.0, 0.0]));
    }
    if w1 < 0.0 {
        let d1 = -w1 / r[0][0];
        let z2 = w2 + r[1][0] * d1;
        if z2 >= 0.0 {
            return Ok(([0.0, z2], [d1, 0.0]));
        }
    }
    if w2 < 0.0 {
        let d2 = -w2 / r[1][1];
        let z1 = w1 + r[0][1] * d2;
        if z1 >= 0.0 {
            return Ok(([z1, 0.0], [0.0, d2]));
        }
    }
    let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    let d1 = (-w1 * r[1][1] + w2 * r[0][1]) / det;
    let d2 = (-w2 * r[0][0] + w1 * r[1][0]) / det;
    if d1 >= 0.0 && d2 >= 0.0 {
        return Ok(([0.0, 0.0], [d1, d2]));
    }
    Err(NoComplementarySolution { w })
}
