use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// μ0/4π in T·m/A.
pub const MU0_OVER_4PI: f64 = 1e-7;
const TESLA_TO_UT: f64 = 1e6;
/// Separation below which the field is treated as singular (m).
pub const MIN_SEPARATION_M: f64 = 1e-9;

/// Static dipole field in µT at offset `r = sensor − source` (m) for moment `m` (A·m²).
pub fn dipole_field(m: [f64; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let d2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let d = d2.sqrt();
    if !(d > MIN_SEPARATION_M) {
        return None;
    }
    let u = [r[0] / d, r[1] / d, r[2] / d];
    let mu = m[0] * u[0] + m[1] * u[1] + m[2] * u[2];
    let k = MU0_OVER_4PI * TESLA_TO_UT / (d2 * d);
    Some([
        k * (3.0 * u[0] * mu - m[0]),
        k * (3.0 * u[1] * mu - m[1]),
        k * (3.0 * u[2] * mu - m[2]),
    ])
}

/// Source position at a time offset from the scene start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t_s: f64,
    pub position_m: [f64; 3],
}

/// Piecewise-linear position, held constant outside the path span.
pub fn path_position(path: &[PathPoint], t: f64) -> [f64; 3] {
    let i = path.partition_point(|p| p.t_s <= t);
    if i == 0 {
        return path[0].position_m;
    }
    if i == path.len() {
        return path[path.len() - 1].position_m;
    }
    let (a, b) = (&path[i - 1], &path[i]);
    let f = (t - a.t_s) / (b.t_s - a.t_s);
    std::array::from_fn(|k| a.position_m[k] + f * (b.position_m[k] - a.position_m[k]))
}

pub fn validate_path(path: &[PathPoint]) -> Result<()> {
    if path.is_empty() {
        return Err(Error::InvalidParameter("dipole path needs at least one point".into()));
    }
    if path.windows(2).any(|w| !(w[1].t_s > w[0].t_s)) {
        return Err(Error::InvalidParameter("dipole path times must increase strictly".into()));
    }
    if path.iter().any(|p| !p.t_s.is_finite() || p.position_m.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidParameter("dipole path must be finite".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(v: [f64; 3]) -> f64 {
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }

    #[test]
    fn axial_inverse_cube() {
        let m = [0.0, 0.0, 500.0];
        let near = dipole_field(m, [0.0, 0.0, 10.0]).unwrap();
        let far = dipole_field(m, [0.0, 0.0, 20.0]).unwrap();
        assert!((norm(near) / norm(far) - 8.0).abs() < 1e-12);
        // on-axis magnitude 2·μ0/4π·m/r³
        assert!((near[2] - 2.0 * 1e-7 * 500.0 / 1000.0 * 1e6).abs() < 1e-12);
        assert!(dipole_field(m, [0.0; 3]).is_none());
    }

    #[test]
    fn path_interpolation() {
        let path = [
            PathPoint { t_s: 0.0, position_m: [0.0, 0.0, 0.0] },
            PathPoint { t_s: 10.0, position_m: [10.0, -20.0, 0.0] },
        ];
        assert_eq!(path_position(&path, -5.0), [0.0, 0.0, 0.0]);
        assert_eq!(path_position(&path, 5.0), [5.0, -10.0, 0.0]);
        assert_eq!(path_position(&path, 50.0), [10.0, -20.0, 0.0]);
        assert!(validate_path(&[path[1], path[0]]).is_err());
        assert!(validate_path(&[]).is_err());
    }

    proptest! {
        #[test]
        fn divergence_free(
            m in proptest::array::uniform3(-1e3f64..1e3),
            r in proptest::array::uniform3(-50.0f64..50.0),
        ) {
            prop_assume!(norm(r) > 1.0 && norm(m) > 1.0);
            let h = 1e-4 * norm(r);
            let mut div = 0.0;
            for k in 0..3 {
                let (mut a, mut b) = (r, r);
                a[k] += h;
                b[k] -= h;
                div += (dipole_field(m, a).unwrap()[k] - dipole_field(m, b).unwrap()[k]) / (2.0 * h);
            }
            let local = norm(dipole_field(m, r).unwrap()) / norm(r);
            prop_assert!(div.abs() < 1e-6 * local, "div {} vs {}", div, local);
        }
    }
}
