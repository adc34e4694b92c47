use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relation defect above which a group element is re-projected.
pub const PROJECTION_THRESHOLD: f64 = 1e-12;

/// The built-in matrix groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixGroup {
    /// Rotations of ℝ³; algebra coordinates in the basis `L_x, L_y, L_z`.
    #[serde(rename = "SO3")]
    So3,
    /// SU(2) realified to 4×4 real matrices; basis `e_k = −(i/2)σ_k`.
    #[serde(rename = "SU2")]
    Su2,
    /// 2×2 upper triangular matrices with positive diagonal; algebra
    /// coordinates `(x, y, z)` of `[[x, y], [0, z]]`.
    #[serde(rename = "UT2")]
    Ut2,
}

fn realify(z: &[[Complex64; 2]; 2]) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            let (a, b) = (z[i][j].re, z[i][j].im);
            r[(2 * i, 2 * j)] = a;
            r[(2 * i, 2 * j + 1)] = -b;
            r[(2 * i + 1, 2 * j)] = b;
            r[(2 * i + 1, 2 * j + 1)] = a;
        }
    }
    r
}

fn complexify(r: &DMatrix<f64>) -> [[Complex64; 2]; 2] {
    let z = |i: usize, j: usize| Complex64::new(r[(2 * i, 2 * j)], r[(2 * i + 1, 2 * j)]);
    [[z(0, 0), z(0, 1)], [z(1, 0), z(1, 1)]]
}

fn su2_from(alpha: Complex64, beta: Complex64) -> DMatrix<f64> {
    realify(&[[alpha, -beta.conj()], [beta, alpha.conj()]])
}

/// `(e^x − e^z)/(x − z)`, stable near `x = z`.
fn exp_divided_difference(x: f64, z: f64) -> f64 {
    let d = x - z;
    if d.abs() < 1e-8 {
        z.exp() * (1.0 + 0.5 * d + d * d / 6.0)
    } else {
        z.exp() * d.exp_m1() / d
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl MatrixGroup {
    pub const ALL: [MatrixGroup; 3] = [MatrixGroup::So3, MatrixGroup::Su2, MatrixGroup::Ut2];

    pub fn name(self) -> &'static str {
        match self {
            MatrixGroup::So3 => "SO3",
            MatrixGroup::Su2 => "SU2",
            MatrixGroup::Ut2 => "UT2",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "so3" => Ok(MatrixGroup::So3),
            "su2" | "su2-as-real" => Ok(MatrixGroup::Su2),
            "ut2" | "upper-triangular-2" => Ok(MatrixGroup::Ut2),
            _ => Err(Error::Input(format!("unknown group '{name}' (expected SO3, SU2 or UT2)"))),
        }
    }

    /// Matrix size `d`.
    pub fn matrix_dim(self) -> usize {
        match self {
            MatrixGroup::So3 => 3,
            MatrixGroup::Su2 => 4,
            MatrixGroup::Ut2 => 2,
        }
    }

    pub fn algebra_dim(self) -> usize {
        3
    }

    /// Radius of the ball `Q` on which `exp` is a diffeomorphism onto `P`.
    pub fn q_radius(self) -> f64 {
        match self {
            MatrixGroup::So3 => PI - 0.1,
            MatrixGroup::Su2 => 2.0 * PI - 0.1,
            MatrixGroup::Ut2 => 6.0,
        }
    }

    /// Radius of `V` with `exp(V)·exp(V) ⊆ exp(Q)`.
    pub fn v_radius(self) -> f64 {
        match self {
            MatrixGroup::So3 | MatrixGroup::Su2 => 0.5 * self.q_radius(),
            MatrixGroup::Ut2 => 1.5,
        }
    }

    pub fn identity(self) -> DMatrix<f64> {
        DMatrix::identity(self.matrix_dim(), self.matrix_dim())
    }

    /// Algebra element with coordinates `v`.
    pub fn hat(self, v: &[f64]) -> DMatrix<f64> {
        match self {
            MatrixGroup::So3 => DMatrix::from_row_slice(3, 3, &[0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0]),
            MatrixGroup::Su2 => {
                let h = 0.5;
                realify(&[
                    [Complex64::new(0.0, -h * v[2]), Complex64::new(-h * v[1], -h * v[0])],
                    [Complex64::new(h * v[1], -h * v[0]), Complex64::new(0.0, h * v[2])],
                ])
            }
            MatrixGroup::Ut2 => DMatrix::from_row_slice(2, 2, &[v[0], v[1], 0.0, v[2]]),
        }
    }

    /// Coordinates of an algebra element.
    pub fn vee(self, a: &DMatrix<f64>) -> Vec<f64> {
        match self {
            MatrixGroup::So3 => vec![a[(2, 1)], a[(0, 2)], a[(1, 0)]],
            MatrixGroup::Su2 => {
                let z = complexify(a);
                vec![-2.0 * z[1][0].im, 2.0 * z[1][0].re, -2.0 * z[0][0].im]
            }
            MatrixGroup::Ut2 => vec![a[(0, 0)], a[(0, 1)], a[(1, 1)]],
        }
    }

    pub fn basis(self, k: usize) -> DMatrix<f64> {
        let mut v = vec![0.0; self.algebra_dim()];
        v[k] = 1.0;
        self.hat(&v)
    }

    /// Closed-form exponential.
    pub fn exp(self, v: &[f64]) -> DMatrix<f64> {
        match self {
            MatrixGroup::So3 => {
                let theta = norm(v);
                let k = self.hat(v);
                let (a, b) = if theta < 1e-6 {
                    let t2 = theta * theta;
                    (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
                } else {
                    (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
                };
                let k2 = &k * &k;
                self.identity() + k * a + k2 * b
            }
            MatrixGroup::Su2 => {
                let theta = norm(v);
                let c = (0.5 * theta).cos();
                let f = if theta < 1e-6 { 1.0 - theta * theta / 24.0 } else { 2.0 * (0.5 * theta).sin() / theta };
                self.identity() * c + self.hat(v) * f
            }
            MatrixGroup::Ut2 => {
                let (x, y, z) = (v[0], v[1], v[2]);
                DMatrix::from_row_slice(2, 2, &[x.exp(), y * exp_divided_difference(x, z), 0.0, z.exp()])
            }
        }
    }

    /// Closed-form logarithm on `exp(Q)`; `Err(reason)` outside the chart.
    pub fn try_log(self, g: &DMatrix<f64>) -> std::result::Result<Vec<f64>, String> {
        let v = match self {
            MatrixGroup::So3 => {
                let w = [g[(2, 1)] - g[(1, 2)], g[(0, 2)] - g[(2, 0)], g[(1, 0)] - g[(0, 1)]];
                let s = 0.5 * norm(&w);
                let c = 0.5 * (g.trace() - 1.0);
                let theta = s.atan2(c);
                let f = if s < 1e-8 {
                    if c < 0.0 {
                        return Err("rotation by π has no unique logarithm".into());
                    }
                    0.5 * (1.0 + theta * theta / 6.0)
                } else {
                    0.5 * theta / s
                };
                w.iter().map(|x| f * x).collect::<Vec<_>>()
            }
            MatrixGroup::Su2 => {
                let w = self.vee(g);
                let wn = norm(&w);
                let c = complexify(g)[0][0].re;
                let theta = 2.0 * (0.5 * wn).atan2(c);
                if wn == 0.0 {
                    if c < 0.0 {
                        return Err("−1 has no unique logarithm".into());
                    }
                    vec![0.0; 3]
                } else {
                    w.iter().map(|x| theta / wn * x).collect()
                }
            }
            MatrixGroup::Ut2 => {
                let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
                if !(a > 0.0 && c > 0.0) {
                    return Err("diagonal is not positive".into());
                }
                let (x, z) = (a.ln(), c.ln());
                vec![x, b / exp_divided_difference(x, z), z]
            }
        };
        let r = norm(&v);
        if !(r < self.q_radius()) {
            return Err(format!("logarithm norm {r:.6} is outside the chart radius {:.6}", self.q_radius()));
        }
        Ok(v)
    }

    pub fn log(self, g: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.try_log(g).map_err(Error::Domain)
    }

    pub fn inverse(self, g: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            MatrixGroup::So3 | MatrixGroup::Su2 => g.transpose(),
            MatrixGroup::Ut2 => {
                let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
                DMatrix::from_row_slice(2, 2, &[1.0 / a, -b / (a * c), 0.0, 1.0 / c])
            }
        }
    }

    /// `Ad_g v`, closed form.
    pub fn adjoint(self, g: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
        match self {
            MatrixGroup::So3 => {
                let r = Matrix3::from_fn(|i, j| g[(i, j)]);
                (r * Vector3::new(v[0], v[1], v[2])).iter().copied().collect()
            }
            MatrixGroup::Su2 => {
                let z = complexify(g);
                let (alpha, beta) = (z[0][0], z[1][0]);
                let (w, qx, qy, qz) = (alpha.re, -beta.im, beta.re, -alpha.im);
                let r = Matrix3::new(
                    1.0 - 2.0 * (qy * qy + qz * qz),
                    2.0 * (qx * qy - w * qz),
                    2.0 * (qx * qz + w * qy),
                    2.0 * (qx * qy + w * qz),
                    1.0 - 2.0 * (qx * qx + qz * qz),
                    2.0 * (qy * qz - w * qx),
                    2.0 * (qx * qz - w * qy),
                    2.0 * (qy * qz + w * qx),
                    1.0 - 2.0 * (qx * qx + qy * qy),
                );
                (r * Vector3::new(v[0], v[1], v[2])).iter().copied().collect()
            }
            MatrixGroup::Ut2 => {
                let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
                let (x, y, z) = (v[0], v[1], v[2]);
                vec![x, (a * y + b * (z - x)) / c, z]
            }
        }
    }

    /// `[u, v]`, the matrix commutator in coordinates.
    pub fn bracket(self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let (a, b) = (self.hat(u), self.hat(v));
        self.vee(&(&a * &b - &b * &a))
    }

    /// Size of the violation of the defining relations.
    pub fn relation_defect(self, g: &DMatrix<f64>) -> f64 {
        match self {
            MatrixGroup::So3 => {
                let o = (g.transpose() * g - self.identity()).amax();
                o.max((g.determinant() - 1.0).abs())
            }
            MatrixGroup::Su2 => {
                let z = complexify(g);
                let structure = (realify(&z) - g).amax();
                let unitary = (g.transpose() * g - self.identity()).amax();
                let det = (z[0][0] * z[1][1] - z[0][1] * z[1][0] - 1.0).norm();
                structure.max(unitary).max(det)
            }
            MatrixGroup::Ut2 => {
                let sign = (-g[(0, 0)]).max(-g[(1, 1)]).max(0.0);
                g[(1, 0)].abs().max(sign)
            }
        }
    }

    /// Nearest group element (polar factor, quaternion normalisation, or
    /// triangular truncation).
    pub fn project(self, g: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            MatrixGroup::So3 => {
                let svd = g.clone().svd(true, true);
                let (u, vt) = (svd.u.expect("U"), svd.v_t.expect("Vᵀ"));
                let mut r = &u * &vt;
                if r.determinant() < 0.0 {
                    let mut u = u.clone();
                    u.column_mut(2).neg_mut();
                    r = u * vt;
                }
                r
            }
            MatrixGroup::Su2 => {
                let z = complexify(g);
                let alpha = 0.5 * (z[0][0] + z[1][1].conj());
                let beta = 0.5 * (z[1][0] - z[0][1].conj());
                let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
                su2_from(alpha / n, beta / n)
            }
            MatrixGroup::Ut2 => {
                let mut p = g.clone();
                p[(1, 0)] = 0.0;
                p[(0, 0)] = p[(0, 0)].abs().max(f64::MIN_POSITIVE);
                p[(1, 1)] = p[(1, 1)].abs().max(f64::MIN_POSITIVE);
                p
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::suite_rng;
    use rand::Rng;

    fn random_v<R: Rng>(rng: &mut R, radius: f64) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-radius..radius)).collect();
            if norm(&v) < radius {
                return v;
            }
        }
    }

    #[test]
    fn hat_vee_and_brackets() {
        for g in MatrixGroup::ALL {
            let v = vec![0.3, -1.1, 0.7];
            assert_eq!(g.vee(&g.hat(&v)), v);
        }
        let so3 = MatrixGroup::So3;
        assert_eq!(so3.bracket(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), vec![0.0, 0.0, 1.0]);
        // su(2) with e_k = −(i/2)σ_k has the same structure constants.
        let su2 = MatrixGroup::Su2;
        let b = su2.bracket(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!((b[2] - 1.0).abs() < 1e-15 && b[0].abs() < 1e-15 && b[1].abs() < 1e-15);
    }

    #[test]
    fn rodrigues_quarter_turn() {
        let r = MatrixGroup::So3.exp(&[0.0, 0.0, PI / 2.0]);
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((r - expected).amax() < 1e-15);
    }

    #[test]
    fn exp_matches_series_and_relations() {
        let mut rng = suite_rng(8, "lie-exp");
        for g in MatrixGroup::ALL {
            for _ in 0..20 {
                let v = random_v(&mut rng, 2.0);
                let e = g.exp(&v);
                // Scaling and squaring with a truncated series.
                let a = g.hat(&v) / 1024.0;
                let mut term = g.identity();
                let mut sum = g.identity();
                for k in 1..20 {
                    term = &term * &a / k as f64;
                    sum += &term;
                }
                for _ in 0..10 {
                    sum = &sum * &sum;
                }
                assert!((&e - sum).amax() < 1e-11, "{}", g.name());
                assert!(g.relation_defect(&e) < 1e-13, "{}", g.name());
            }
        }
    }

    #[test]
    fn log_round_trip_inside_chart() {
        let mut rng = suite_rng(9, "lie-log");
        for g in MatrixGroup::ALL {
            for _ in 0..200 {
                let v = random_v(&mut rng, g.q_radius() - 0.1);
                let w = g.log(&g.exp(&v)).unwrap();
                assert!(norm(&v.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-9, "{} {v:?}", g.name());
            }
        }
        assert!(MatrixGroup::So3.log(&MatrixGroup::So3.exp(&[PI, 0.0, 0.0])).is_err());
        assert!(MatrixGroup::So3.log(&MatrixGroup::So3.exp(&[0.0, PI - 0.05, 0.0])).is_err());
    }

    #[test]
    fn adjoint_is_conjugation() {
        let mut rng = suite_rng(10, "lie-ad");
        for g in MatrixGroup::ALL {
            for _ in 0..50 {
                let x = g.exp(&random_v(&mut rng, 2.0));
                let v = random_v(&mut rng, 1.0);
                let closed = g.adjoint(&x, &v);
                let conj = g.vee(&(&x * g.hat(&v) * g.inverse(&x)));
                for (a, b) in closed.iter().zip(&conj) {
                    assert!((a - b).abs() < 1e-12, "{}", g.name());
                }
            }
        }
    }

    #[test]
    fn projection_restores_relations() {
        let mut rng = suite_rng(11, "lie-project");
        for g in MatrixGroup::ALL {
            let x = g.exp(&random_v(&mut rng, 1.0));
            let noisy = x.map(|v| v + 1e-6);
            let p = g.project(&noisy);
            assert!(g.relation_defect(&p) < 1e-13, "{}", g.name());
            assert!((p - x).amax() < 1e-5);
        }
    }

    #[test]
    fn products_of_small_elements_stay_in_chart() {
        let mut rng = suite_rng(12, "lie-uu");
        for g in MatrixGroup::ALL {
            for _ in 0..2000 {
                let a = g.exp(&random_v(&mut rng, g.v_radius()));
                let b = g.exp(&random_v(&mut rng, g.v_radius()));
                assert!(g.log(&(a * b)).is_ok(), "{}", g.name());
            }
        }
    }
}
