//! Equivariance defect of a grid field under a joint rotation of the domain
//! and a linear map of the range.

use serde::{Deserialize, Serialize};

use crate::{Mat3, Vec3};

use super::GridField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub angle: f64,
    /// sup over nodes `x` with `Rx` in the grid of `|u(Rx) − Q u(x)|`.
    pub max_defect: f64,
    /// `max_defect / h²`.
    pub defect_per_h2: f64,
    pub nodes: usize,
}

/// Compares `u(R_angle x)` (bilinear) with `Q u(x)` at every node.
pub fn equivariance_defect(field: &GridField, angle: f64, q: &Mat3) -> EquivarianceReport {
    let (s, c) = angle.sin_cos();
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    for j in 0..field.n {
        for i in 0..field.n {
            let (x, y) = field.position(i, j);
            let Some(v) = field.interpolate(c * x - s * y, s * x + c * y) else {
                continue;
            };
            let d: Vec3 = v - q * field.at(i, j);
            worst = worst.max(d.norm());
            nodes += 1;
        }
    }
    EquivarianceReport {
        angle,
        max_defect: worst,
        defect_per_h2: worst / (field.spacing * field.spacing),
        nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connect::{cyclic_symmetry, solve_triple, ConnectionParams};
    use crate::field::{init_triod, TubeParams};
    use crate::potential::{rotation_z, TripleWellSpec};
    use std::f64::consts::PI;

    #[test]
    fn symmetric_triod_is_equivariant_to_second_order() {
        let spec = TripleWellSpec::equilateral();
        let c = solve_triple(&spec, &ConnectionParams { samples: 401, ..Default::default() }).unwrap();
        let rays = [90f64, 210.0, 330.0].map(f64::to_radians);
        let q = cyclic_symmetry(&spec).unwrap();
        let mut defects = Vec::new();
        for (n, h) in [(65, 0.4), (129, 0.2)] {
            let (f, _) = init_triod(&spec, &c, rays, n, h, TubeParams::default()).unwrap();
            let rep = equivariance_defect(&f, 2.0 * PI / 3.0, &q);
            assert!(rep.defect_per_h2 <= 10.0, "{rep:?}");
            assert!(rep.nodes > n * n / 2);
            defects.push(rep.max_defect);
        }
        assert!(defects[1] < 0.4 * defects[0], "{defects:?}");
    }

    #[test]
    fn wrong_range_map_is_detected() {
        let spec = TripleWellSpec::equilateral();
        let c = solve_triple(&spec, &ConnectionParams { samples: 401, ..Default::default() }).unwrap();
        let rays = [90f64, 210.0, 330.0].map(f64::to_radians);
        let (f, _) = init_triod(&spec, &c, rays, 65, 0.4, TubeParams::default()).unwrap();
        let rep = equivariance_defect(&f, 2.0 * PI / 3.0, &rotation_z(-2.0 * PI / 3.0));
        assert!(rep.max_defect > 0.5, "{rep:?}");
    }
}
